#pragma once

#include <Eigen/Dense>

namespace photostat {

/// Truncation policy shared by all distribution constructors.
///
/// Constructors pick the smallest cutoff whose (rigorously bounded) tail mass
/// is below `tail_tolerance`, then scale it by `cutoff_scale`. Needing more
/// than `hard_limit` entries signals divergent input.
struct Truncation {
  double tail_tolerance = 1e-12;
  double cutoff_scale = 1.0;
  int hard_limit = 4096;

  void validate() const;
  /// Same policy with every cutoff multiplied by `factor`.
  Truncation scaled(double factor) const;
};

/// Photon-number distribution p(n), n = 0..cutoff.
///
/// Immutable value type. Entries are non-negative; the distribution need not
/// be normalized (conditioned states carry their success probability as mass).
class PhotonNumberDistribution {
 public:
  /// Vacuum.
  PhotonNumberDistribution();
  explicit PhotonNumberDistribution(Eigen::VectorXd probs);

  static PhotonNumberDistribution vacuum();
  static PhotonNumberDistribution fock(int n);

  const Eigen::VectorXd& probs() const { return probs_; }
  int cutoff() const { return static_cast<int>(probs_.size()) - 1; }
  double total_mass() const { return mass_; }
  /// p(n); zero beyond the cutoff.
  double operator[](int n) const;

  /// Moments of the normalized distribution.
  double mean() const;
  double variance() const;

  PhotonNumberDistribution normalized() const;

 private:
  Eigen::VectorXd probs_;
  double mass_ = 0.0;
};

enum class Axis { Signal, Idler };

/// Joint distribution p(n_s, n_i); rows index the signal beam, columns the idler.
class JointPhotonNumberDistribution {
 public:
  JointPhotonNumberDistribution();
  explicit JointPhotonNumberDistribution(Eigen::MatrixXd probs);

  const Eigen::MatrixXd& probs() const { return probs_; }
  int cutoff(Axis axis) const;
  double total_mass() const { return mass_; }
  double operator()(int n_s, int n_i) const;

  JointPhotonNumberDistribution normalized() const;
  JointPhotonNumberDistribution transposed() const;

 private:
  Eigen::MatrixXd probs_;
  double mass_ = 0.0;
};

/// Mandel-Rice (negative binomial) parameters: M modes, B mean photons per mode.
/// M = 0 or B = 0 is the vacuum.
struct MandelRiceParams {
  double modes = 0.0;
  double mean_per_mode = 0.0;

  void validate() const;
  double mean() const { return modes * mean_per_mode; }
};

/// Three-component twin beam: photon pairs, signal noise, idler noise.
struct TwinBeamParams {
  MandelRiceParams pairs;
  MandelRiceParams signal_noise;
  MandelRiceParams idler_noise;

  void validate() const;
  /// Swaps the two noise components.
  TwinBeamParams mirrored() const;
};

/// p(n) = Gamma(n+M) / (n! Gamma(M)) B^n / (1+B)^(n+M).
PhotonNumberDistribution mandel_rice(const MandelRiceParams& params, const Truncation& truncation = {});

/// Poisson distribution with the given mean.
PhotonNumberDistribution poisson(double mean, const Truncation& truncation = {});

/// out[n] = sum_k p[k] q[n-k].
PhotonNumberDistribution convolve(const PhotonNumberDistribution& p, const PhotonNumberDistribution& q);

/// Binomial loss channel with transmission `tau`.
PhotonNumberDistribution bernoulli_thin(const PhotonNumberDistribution& p, double tau);

/// Noiseless twin beam: diagonal joint with Mandel-Rice pair statistics.
JointPhotonNumberDistribution ideal_twb(const MandelRiceParams& pairs, const Truncation& truncation = {});

/// Twin beam built from twofold convolution of pair and noise components.
JointPhotonNumberDistribution twb_model(const TwinBeamParams& params, const Truncation& truncation = {});

PhotonNumberDistribution marginal(const JointPhotonNumberDistribution& joint, Axis axis);

/// p(n_s) q(n_i).
JointPhotonNumberDistribution product(const PhotonNumberDistribution& signal, const PhotonNumberDistribution& idler);

/// Smallest cutoff K with sum_{n>K} MR(n; M, B) < tail_tolerance (before scaling).
int mandel_rice_cutoff(const MandelRiceParams& params, double tail_tolerance, int hard_limit);

/// ln p^MR(n; M, B) for B > 0, M > 0.
double log_mandel_rice(int n, double modes, double mean_per_mode);

}  // namespace photostat
