#pragma once

#include "photostat/core_dist.hpp"

namespace photostat {

/// Variance-to-mean ratio of the normalized distribution.
double fano(const PhotonNumberDistribution& p);

/// Var(n_s - n_i) / (<n_s> + <n_i>).
double noise_reduction(const JointPhotonNumberDistribution& joint);

/// Choice of the Mandel-Rice reference in the non-Gaussianity.
struct GaussianReferencePolicy {
  enum class Mode { MatchMeanAndFano, MatchMeanFixedM, PoissonLimit };

  Mode mode = Mode::MatchMeanAndFano;
  /// Mode number used by MatchMeanFixedM.
  double modes = 1.0;

  static GaussianReferencePolicy match_mean_and_fano() { return {}; }
  static GaussianReferencePolicy fixed_modes(double m) { return {Mode::MatchMeanFixedM, m}; }
  static GaussianReferencePolicy poisson_limit() { return {Mode::PoissonLimit, 1.0}; }
};

const char* to_string(GaussianReferencePolicy::Mode mode);

struct NonGaussianity {
  double value = 0.0;
  /// Policy actually applied (MatchMeanAndFano falls back to PoissonLimit for F <= 1).
  GaussianReferencePolicy::Mode used = GaussianReferencePolicy::Mode::MatchMeanAndFano;
  /// Reference parameters; modes is +inf for the Poisson limit.
  double ref_modes = 0.0;
  double ref_mean_per_mode = 0.0;
};

/// Relative entropy sum_n p(n) ln[p(n) / p_ref(n)] against a Mandel-Rice reference.
NonGaussianity non_gaussianity(const PhotonNumberDistribution& p,
                               const GaussianReferencePolicy& policy = GaussianReferencePolicy::match_mean_and_fano());

}  // namespace photostat
