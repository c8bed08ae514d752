#include "photostat/conditioning.hpp"

#include <cmath>
#include <string>

#include "photostat/errors.hpp"
#include "photostat/special.hpp"

namespace photostat {
namespace {

void require_support(double success, double floor, const std::string& what) {
  if (!(success >= floor)) {
    throw NoSupportError(what + ": success probability " + std::to_string(success) + " below floor");
  }
}

void require_normalized(double mass, const char* what) {
  if (std::abs(mass - 1.0) > 1e-6) throw InvalidArgument(std::string(what) + " must be normalized");
}

// W(n, m) = T(cbar, m - n) Bi(n; m, t): probability that m photons leave n
// transmitted and register cbar photocounts in the reflected arm.
Eigen::MatrixXd subtraction_kernel(int cutoff, double t, const DetectorSpec& det, int cbar) {
  const auto matrix = detection_matrix(det, cutoff);
  const Eigen::VectorXd herald = matrix->row(cbar);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1);
  for (int m = 0; m <= cutoff; ++m) {
    for (int n = 0; n <= m; ++n) {
      const double h = herald[m - n];
      if (h != 0.0) w(n, m) = h * binomial_pmf(n, m, t);
    }
  }
  return w;
}

}  // namespace

void BeamSplitter::validate() const {
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
    throw InvalidArgument("beam-splitter transmissivity must lie in [0, 1]");
  }
}

PhotonNumberDistribution ConditionedState::normalized() const { return joint.normalized(); }

JointPhotonNumberDistribution ConditionedJoint::normalized() const { return joint.normalized(); }

ConditionedState condition_on_counts(const JointPhotonNumberDistribution& joint, const DetectorSpec& det, int c,
                                     Axis detected, double floor) {
  if (c < 0) throw InvalidArgument("photocount must be non-negative");
  const auto matrix = detection_matrix(det, joint.cutoff(detected));
  const Eigen::VectorXd herald = matrix->row(c);
  Eigen::VectorXd out = detected == Axis::Idler ? Eigen::VectorXd(joint.probs() * herald)
                                                : Eigen::VectorXd(joint.probs().transpose() * herald);
  PhotonNumberDistribution state(std::move(out));
  const double success = state.total_mass();
  require_support(success, floor, "conditioning on " + std::to_string(c) + " photocounts");
  return {std::move(state), success, "conditioned", c};
}

ConditionedState subtract(const PhotonNumberDistribution& p, const BeamSplitter& bs, const DetectorSpec& det,
                          int cbar, double floor) {
  bs.validate();
  if (cbar < 0) throw InvalidArgument("subtracted photocount must be non-negative");
  const Eigen::MatrixXd w = subtraction_kernel(p.cutoff(), bs.transmissivity, det, cbar);
  PhotonNumberDistribution state(Eigen::VectorXd(w * p.probs()));
  const double success = state.total_mass();
  require_support(success, floor, "subtraction of " + std::to_string(cbar) + " photocounts");
  return {std::move(state), success, "subtracted", cbar};
}

Eigen::VectorXd subtraction_outcome_probabilities(const PhotonNumberDistribution& p, const BeamSplitter& bs,
                                                  const DetectorSpec& det, int c_max) {
  bs.validate();
  if (c_max < 0) throw InvalidArgument("c_max must be non-negative");
  const PhotonNumberDistribution reflected = bernoulli_thin(p, 1.0 - bs.transmissivity);
  const PhotonNumberDistribution counts = apply_detector(reflected, *detection_matrix(det, reflected.cutoff()));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(c_max + 1);
  const Eigen::Index k = std::min<Eigen::Index>(c_max + 1, counts.probs().size());
  out.head(k) = counts.probs().head(k);
  return out;
}

ConditionedState add(const PhotonNumberDistribution& p, const ConditionedState& added) {
  require_normalized(p.total_mass(), "input state");
  return {convolve(p, added.joint), added.success_prob, "added", added.cbar};
}

ConditionedJoint subtract_joint(const JointPhotonNumberDistribution& joint, const BeamSplitter& bs,
                                const DetectorSpec& det, int cbar, Axis axis, double floor) {
  bs.validate();
  if (cbar < 0) throw InvalidArgument("subtracted photocount must be non-negative");
  const Eigen::MatrixXd w = subtraction_kernel(joint.cutoff(axis), bs.transmissivity, det, cbar);
  Eigen::MatrixXd out = axis == Axis::Signal ? Eigen::MatrixXd(w * joint.probs())
                                             : Eigen::MatrixXd(joint.probs() * w.transpose());
  JointPhotonNumberDistribution state(std::move(out));
  const double success = state.total_mass();
  require_support(success, floor, "subtraction of " + std::to_string(cbar) + " photocounts");
  return {std::move(state), success, "subtracted", cbar};
}

ConditionedJoint add_joint(const JointPhotonNumberDistribution& joint, const ConditionedState& added, Axis axis) {
  require_normalized(joint.total_mass(), "input joint state");
  const Eigen::VectorXd& a = added.joint.probs();
  const Eigen::MatrixXd& j = joint.probs();
  const Eigen::Index shift = a.size() - 1;
  Eigen::MatrixXd out = axis == Axis::Signal ? Eigen::MatrixXd::Zero(j.rows() + shift, j.cols())
                                             : Eigen::MatrixXd::Zero(j.rows(), j.cols() + shift);
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a[k] == 0.0) continue;
    if (axis == Axis::Signal) {
      out.block(k, 0, j.rows(), j.cols()) += a[k] * j;
    } else {
      out.block(0, k, j.rows(), j.cols()) += a[k] * j;
    }
  }
  return {JointPhotonNumberDistribution(std::move(out)), added.success_prob, "added", added.cbar};
}

ConditionedState sc_added_state(const TwinBeamParams& params, double eta_pair, int cbar, const Truncation& truncation,
                                double floor) {
  if (!(eta_pair > 0.0 && eta_pair <= 1.0)) throw InvalidArgument("pair efficiency must lie in (0, 1]");
  if (cbar < 0) throw InvalidArgument("added photon number must be non-negative");
  params.validate();
  const PhotonNumberDistribution coincidences = bernoulli_thin(mandel_rice(params.pairs, truncation), eta_pair);
  const double success = coincidences[cbar];
  require_support(success, floor, "pair-coincidence heralding of " + std::to_string(cbar));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(cbar + 1);
  v[cbar] = success;
  return {PhotonNumberDistribution(std::move(v)), success, "sc", cbar};
}

double pst_mean_closed_form(double modes, double mean_per_mode, double t, double eta, int cbar) {
  return t * mean_per_mode * (modes + cbar) / (1.0 + (1.0 - t) * eta * mean_per_mode);
}

double pst_fano_closed_form(double modes, double mean_per_mode, double t, double eta, int cbar) {
  (void)modes;
  (void)cbar;
  return 1.0 + t * mean_per_mode / (1.0 + (1.0 - t) * eta * mean_per_mode);
}

}  // namespace photostat
