#include "photostat/core_dist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "photostat/errors.hpp"
#include "photostat/special.hpp"

namespace photostat {
namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be finite");
}

int apply_scale(int minimal_cutoff, const Truncation& truncation) {
  int cutoff = minimal_cutoff;
  if (truncation.cutoff_scale > 1.0) {
    cutoff = std::max(minimal_cutoff + 1,
                      static_cast<int>(std::ceil(minimal_cutoff * truncation.cutoff_scale)));
  }
  if (cutoff > truncation.hard_limit) {
    throw PrecisionError("distribution cutoff " + std::to_string(cutoff) + " exceeds hard limit " +
                         std::to_string(truncation.hard_limit) + " (divergent input?)");
  }
  return cutoff;
}

bool is_vacuum(const MandelRiceParams& p) { return p.modes == 0.0 || p.mean_per_mode == 0.0; }

}  // namespace

void Truncation::validate() const {
  if (!(tail_tolerance > 0.0 && tail_tolerance <= 1e-6)) {
    throw InvalidArgument("tail tolerance must lie in (0, 1e-6]");
  }
  if (!(cutoff_scale >= 1.0) || !std::isfinite(cutoff_scale)) {
    throw InvalidArgument("cutoff scale must be >= 1");
  }
  if (hard_limit < 1) throw InvalidArgument("hard limit must be positive");
}

Truncation Truncation::scaled(double factor) const {
  Truncation t = *this;
  t.cutoff_scale *= factor;
  return t;
}

// --- PhotonNumberDistribution ------------------------------------------------

PhotonNumberDistribution::PhotonNumberDistribution() : probs_(Eigen::VectorXd::Ones(1)), mass_(1.0) {}

PhotonNumberDistribution::PhotonNumberDistribution(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw InvalidArgument("distribution must have at least one entry");
  for (Eigen::Index n = 0; n < probs_.size(); ++n) {
    const double v = probs_[n];
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument("distribution entry " + std::to_string(n) + " is negative or not finite");
    }
  }
  mass_ = probs_.sum();
}

PhotonNumberDistribution PhotonNumberDistribution::vacuum() { return PhotonNumberDistribution(); }

PhotonNumberDistribution PhotonNumberDistribution::fock(int n) {
  if (n < 0) throw InvalidArgument("Fock state photon number must be non-negative");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);
  v[n] = 1.0;
  return PhotonNumberDistribution(std::move(v));
}

double PhotonNumberDistribution::operator[](int n) const {
  if (n < 0 || n > cutoff()) return 0.0;
  return probs_[n];
}

double PhotonNumberDistribution::mean() const {
  if (mass_ <= 0.0) throw InvalidArgument("distribution has zero mass");
  const Eigen::VectorXd n = Eigen::VectorXd::LinSpaced(probs_.size(), 0.0, static_cast<double>(cutoff()));
  return n.dot(probs_) / mass_;
}

double PhotonNumberDistribution::variance() const {
  const double m = mean();
  const Eigen::ArrayXd d = Eigen::ArrayXd::LinSpaced(probs_.size(), 0.0, static_cast<double>(cutoff())) - m;
  return (d.square() * probs_.array()).sum() / mass_;
}

PhotonNumberDistribution PhotonNumberDistribution::normalized() const {
  if (mass_ <= 0.0) throw InvalidArgument("cannot normalize a zero-mass distribution");
  return PhotonNumberDistribution(probs_ / mass_);
}

// --- JointPhotonNumberDistribution -------------------------------------------

JointPhotonNumberDistribution::JointPhotonNumberDistribution()
    : probs_(Eigen::MatrixXd::Ones(1, 1)), mass_(1.0) {}

JointPhotonNumberDistribution::JointPhotonNumberDistribution(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw InvalidArgument("joint distribution must be non-empty");
  if (!probs_.allFinite() || (probs_.array() < 0.0).any()) {
    throw InvalidArgument("joint distribution has negative or non-finite entries");
  }
  mass_ = probs_.sum();
}

int JointPhotonNumberDistribution::cutoff(Axis axis) const {
  return static_cast<int>(axis == Axis::Signal ? probs_.rows() : probs_.cols()) - 1;
}

double JointPhotonNumberDistribution::operator()(int n_s, int n_i) const {
  if (n_s < 0 || n_i < 0 || n_s >= probs_.rows() || n_i >= probs_.cols()) return 0.0;
  return probs_(n_s, n_i);
}

JointPhotonNumberDistribution JointPhotonNumberDistribution::normalized() const {
  if (mass_ <= 0.0) throw InvalidArgument("cannot normalize a zero-mass joint distribution");
  return JointPhotonNumberDistribution(probs_ / mass_);
}

JointPhotonNumberDistribution JointPhotonNumberDistribution::transposed() const {
  return JointPhotonNumberDistribution(probs_.transpose());
}

// --- parameters ---------------------------------------------------------------

void MandelRiceParams::validate() const {
  require_finite(modes, "mode number");
  require_finite(mean_per_mode, "mean photon number per mode");
  if (modes < 0.0 || mean_per_mode < 0.0) {
    throw InvalidArgument("Mandel-Rice parameters must be non-negative");
  }
}

void TwinBeamParams::validate() const {
  pairs.validate();
  signal_noise.validate();
  idler_noise.validate();
}

TwinBeamParams TwinBeamParams::mirrored() const { return {pairs, idler_noise, signal_noise}; }

// --- constructors ----------------------------------------------------------------

double log_mandel_rice(int n, double modes, double mean_per_mode) {
  // Long double keeps the cancellation between the lgamma terms below double rounding.
  using R = long double;
  const R m = modes;
  const R b = mean_per_mode;
  return static_cast<double>(std::lgamma(R(n) + m) - std::lgamma(m) - std::lgamma(R(n) + 1) + R(n) * std::log(b) -
                             (R(n) + m) * std::log1p(b));
}

int mandel_rice_cutoff(const MandelRiceParams& params, double tail_tolerance, int hard_limit) {
  if (is_vacuum(params)) return 0;
  const double m = params.modes;
  const double b = params.mean_per_mode;
  const double q = b / (1.0 + b);
  const double log_tol = std::log(tail_tolerance);
  // Ratio p(n+1)/p(n) = q (n+M)/(n+1); beyond K it is bounded by rho = q max(1, (K+M)/(K+1)),
  // so the tail past K is at most p(K) rho / (1 - rho).
  double log_p = -m * std::log1p(b);
  for (int k = 0; k <= hard_limit; ++k) {
    const double rho = q * std::max(1.0, (k + m) / (k + 1.0));
    if (rho < 1.0 && log_p + std::log(rho) - std::log1p(-rho) < log_tol) return k;
    log_p += std::log((k + m) / (k + 1.0)) + std::log(q);
  }
  throw PrecisionError("Mandel-Rice tail does not fall below tolerance within the hard limit");
}

PhotonNumberDistribution mandel_rice(const MandelRiceParams& params, const Truncation& truncation) {
  params.validate();
  truncation.validate();
  if (is_vacuum(params)) return PhotonNumberDistribution::vacuum();
  const int k_min = mandel_rice_cutoff(params, truncation.tail_tolerance, truncation.hard_limit);
  const int cutoff = apply_scale(k_min, truncation);
  Eigen::VectorXd v(cutoff + 1);
  for (int n = 0; n <= cutoff; ++n) {
    v[n] = std::exp(log_mandel_rice(n, params.modes, params.mean_per_mode));
  }
  return PhotonNumberDistribution(std::move(v));
}

PhotonNumberDistribution poisson(double mean, const Truncation& truncation) {
  require_finite(mean, "Poisson mean");
  if (mean < 0.0) throw InvalidArgument("Poisson mean must be non-negative");
  truncation.validate();
  if (mean == 0.0) return PhotonNumberDistribution::vacuum();
  const double log_tol = std::log(truncation.tail_tolerance);
  int k_min = -1;
  for (int k = 0; k <= truncation.hard_limit; ++k) {
    const double rho = mean / (k + 1.0);
    const double log_pk = k * std::log(mean) - mean - log_factorial(k);
    if (rho < 1.0 && log_pk + std::log(rho) - std::log1p(-rho) < log_tol) {
      k_min = k;
      break;
    }
  }
  if (k_min < 0) throw PrecisionError("Poisson tail does not fall below tolerance within the hard limit");
  const int cutoff = apply_scale(k_min, truncation);
  Eigen::VectorXd v(cutoff + 1);
  for (int n = 0; n <= cutoff; ++n) v[n] = std::exp(n * std::log(mean) - mean - log_factorial(n));
  return PhotonNumberDistribution(std::move(v));
}

PhotonNumberDistribution convolve(const PhotonNumberDistribution& p, const PhotonNumberDistribution& q) {
  const auto& a = p.probs();
  const auto& b = q.probs();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    out.segment(i, b.size()) += a[i] * b;
  }
  return PhotonNumberDistribution(std::move(out));
}

PhotonNumberDistribution bernoulli_thin(const PhotonNumberDistribution& p, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("transmission must lie in [0, 1]");
  const auto& in = p.probs();
  const int cutoff = p.cutoff();
  if (tau == 1.0) return p;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cutoff + 1);
  for (int m = 0; m <= cutoff; ++m) {
    if (in[m] == 0.0) continue;
    for (int n = 0; n <= m; ++n) out[n] += in[m] * binomial_pmf(n, m, tau);
  }
  return PhotonNumberDistribution(std::move(out));
}

JointPhotonNumberDistribution ideal_twb(const MandelRiceParams& pairs, const Truncation& truncation) {
  const PhotonNumberDistribution p = mandel_rice(pairs, truncation);
  return JointPhotonNumberDistribution(p.probs().asDiagonal().toDenseMatrix());
}

JointPhotonNumberDistribution twb_model(const TwinBeamParams& params, const Truncation& truncation) {
  params.validate();
  truncation.validate();
  Truncation per_component = truncation;
  per_component.tail_tolerance = truncation.tail_tolerance / 3.0;
  const Eigen::VectorXd pairs = mandel_rice(params.pairs, per_component).probs();
  const Eigen::VectorXd signal = mandel_rice(params.signal_noise, per_component).probs();
  const Eigen::VectorXd idler = mandel_rice(params.idler_noise, per_component).probs();

  const Eigen::Index rows = pairs.size() + signal.size() - 1;
  const Eigen::Index cols = pairs.size() + idler.size() - 1;
  if (rows > truncation.hard_limit + 1 || cols > truncation.hard_limit + 1) {
    throw PrecisionError("twin-beam cutoff exceeds hard limit");
  }
  const Eigen::MatrixXd noise = signal * idler.transpose();
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index n = 0; n < pairs.size(); ++n) {
    joint.block(n, n, signal.size(), idler.size()) += pairs[n] * noise;
  }
  return JointPhotonNumberDistribution(std::move(joint));
}

PhotonNumberDistribution marginal(const JointPhotonNumberDistribution& joint, Axis axis) {
  if (axis == Axis::Signal) return PhotonNumberDistribution(joint.probs().rowwise().sum());
  return PhotonNumberDistribution(joint.probs().colwise().sum().transpose());
}

JointPhotonNumberDistribution product(const PhotonNumberDistribution& signal, const PhotonNumberDistribution& idler) {
  return JointPhotonNumberDistribution(signal.probs() * idler.probs().transpose());
}

}  // namespace photostat
