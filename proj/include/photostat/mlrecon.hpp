#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "photostat/core_dist.hpp"
#include "photostat/detection.hpp"

namespace photostat {

/// Observed photocount frequencies f(c).
struct PhotocountHistogram {
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const;
  int c_max() const { return static_cast<int>(counts.size()) - 1; }
  /// Relative frequencies f(c) / total.
  Eigen::VectorXd frequencies() const;
  void validate() const;
};

struct EmOptions {
  /// Stop once the relative log-likelihood change falls below this.
  double tolerance = 1e-10;
  int max_iterations = 100000;
  /// Throw if the log-likelihood ever decreases.
  bool check_monotone = false;
  /// Keep the log-likelihood of every iteration.
  bool record_trace = false;
};

struct EmResult {
  PhotonNumberDistribution distribution;
  int iterations = 0;
  bool converged = false;
  /// Per-count log-likelihood sum_c fhat(c) ln (T p)(c) at the result.
  double log_likelihood = 0.0;
  /// Iterations at which the likelihood decreased (beyond rounding).
  int decreases = 0;
  std::vector<double> trace;
};

/// Expectation-maximization estimate of p(n), n = 0..n_max, from a histogram
/// and a column-stochastic detection matrix. Starts from the uniform distribution.
EmResult em_reconstruct(const PhotocountHistogram& histogram, const DetectionMatrix& matrix, int n_max,
                        const EmOptions& options = {});

/// sum_c f(c) ln (T p)(c).
double log_likelihood(const PhotocountHistogram& histogram, const DetectionMatrix& matrix,
                      const PhotonNumberDistribution& p);

/// Photon-number range placing < 1e-9 tail mass under a Mandel-Rice (or
/// Poisson) fit to the moments inferred from the histogram.
int default_n_max(const PhotocountHistogram& histogram, const DetectorSpec& spec);

/// Histogram of `samples` photocounts drawn through the detector.
PhotocountHistogram synth_histogram(const PhotonNumberDistribution& p, const DetectorSpec& spec,
                                    std::uint64_t samples, std::uint64_t seed);

/// Two-column CSV `c,count`.
PhotocountHistogram read_histogram_csv(const std::string& path);
void write_histogram_csv(const std::string& path, const PhotocountHistogram& histogram);

}  // namespace photostat
