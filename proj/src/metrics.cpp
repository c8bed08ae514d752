#include "photostat/metrics.hpp"

#include <cmath>
#include <limits>

#include "photostat/errors.hpp"
#include "photostat/special.hpp"

namespace photostat {

double fano(const PhotonNumberDistribution& p) {
  const double m = p.mean();
  if (!(m > 0.0)) throw InvalidArgument("Fano factor undefined for zero mean");
  return p.variance() / m;
}

double noise_reduction(const JointPhotonNumberDistribution& joint) {
  const double mass = joint.total_mass();
  if (!(mass > 0.0)) throw InvalidArgument("noise reduction undefined for zero mass");
  const Eigen::MatrixXd& j = joint.probs();
  const Eigen::VectorXd ns = Eigen::VectorXd::LinSpaced(j.rows(), 0.0, static_cast<double>(j.rows() - 1));
  const Eigen::VectorXd ni = Eigen::VectorXd::LinSpaced(j.cols(), 0.0, static_cast<double>(j.cols() - 1));
  const double mean_s = ns.dot(j.rowwise().sum()) / mass;
  const double mean_i = ni.dot(j.colwise().sum().transpose()) / mass;
  if (!(mean_s + mean_i > 0.0)) throw InvalidArgument("noise reduction undefined for zero total mean");
  const double mean_d = mean_s - mean_i;
  double var = 0.0;
  for (Eigen::Index c = 0; c < j.cols(); ++c) {
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
      const double d = static_cast<double>(r - c) - mean_d;
      var += d * d * j(r, c);
    }
  }
  return var / mass / (mean_s + mean_i);
}

const char* to_string(GaussianReferencePolicy::Mode mode) {
  switch (mode) {
    case GaussianReferencePolicy::Mode::MatchMeanAndFano:
      return "match-mean-and-fano";
    case GaussianReferencePolicy::Mode::MatchMeanFixedM:
      return "match-mean-fixed-modes";
    case GaussianReferencePolicy::Mode::PoissonLimit:
      return "poisson-limit";
  }
  return "unknown";
}

NonGaussianity non_gaussianity(const PhotonNumberDistribution& p, const GaussianReferencePolicy& policy) {
  const PhotonNumberDistribution q = p.normalized();
  const double mean = q.mean();
  if (!(mean > 0.0)) throw InvalidArgument("non-Gaussianity undefined for zero mean");

  NonGaussianity result;
  result.used = policy.mode;
  if (policy.mode == GaussianReferencePolicy::Mode::MatchMeanAndFano) {
    const double f = q.variance() / mean;
    if (f > 1.0 + 1e-9) {
      result.ref_mean_per_mode = f - 1.0;
      result.ref_modes = mean / (f - 1.0);
    } else {
      result.used = GaussianReferencePolicy::Mode::PoissonLimit;
    }
  } else if (policy.mode == GaussianReferencePolicy::Mode::MatchMeanFixedM) {
    if (!(policy.modes > 0.0)) throw InvalidArgument("reference mode number must be positive");
    result.ref_modes = policy.modes;
    result.ref_mean_per_mode = mean / policy.modes;
  }
  if (result.used == GaussianReferencePolicy::Mode::PoissonLimit) {
    result.ref_modes = std::numeric_limits<double>::infinity();
    result.ref_mean_per_mode = 0.0;
  }

  CompensatedSum<double> g;
  const double log_mean = std::log(mean);
  for (int n = 0; n <= q.cutoff(); ++n) {
    const double pn = q[n];
    if (pn <= 0.0) continue;
    const double log_ref = result.used == GaussianReferencePolicy::Mode::PoissonLimit
                               ? n * log_mean - mean - log_factorial(n)
                               : log_mandel_rice(n, result.ref_modes, result.ref_mean_per_mode);
    g += pn * (std::log(pn) - log_ref);
  }
  result.value = g.value();
  return result;
}

}  // namespace photostat
