#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "photostat/core_dist.hpp"

namespace photostat {

/// Laguerre polynomial L_n(x) by the three-term recurrence.
double laguerre(int n, double x);

/// L_k^(alpha)(x) for k = 0..n_max.
template <class Scalar>
std::vector<Scalar> laguerre_all(int n_max, Scalar alpha, Scalar x) {
  std::vector<Scalar> l(static_cast<std::size_t>(n_max) + 1);
  l[0] = Scalar(1);
  if (n_max >= 1) l[1] = Scalar(1) + alpha - x;
  for (int k = 1; k < n_max; ++k) {
    l[k + 1] = ((Scalar(2 * k + 1) + alpha - x) * l[k] - (Scalar(k) + alpha) * l[k - 1]) / Scalar(k + 1);
  }
  return l;
}

struct QuasiOptions {
  /// Mode number of the kernel; 1 gives the single-mode intensity kernel.
  double modes = 1.0;
  /// Relative size of an increment counted as negligible.
  double tolerance = 1e-12;
  /// Consecutive negligible increments that end the summation.
  int quiet_terms = 20;
  int max_terms = 4096;
  /// Largest accepted error estimate, relative to sup |P|.
  double max_error = 1e-6;
};

/// s-ordered intensity quasi-distribution P(W; s) sampled on a grid.
struct QuasiDistribution {
  Eigen::VectorXd grid;
  Eigen::VectorXd values;
  /// Estimated absolute error per grid point.
  Eigen::VectorXd error;
  double s = 0.0;
  double modes = 1.0;

  /// Trapezoidal integral over the grid.
  double integral() const;
};

/// P(W_s, W_i; s); rows follow grid_s.
struct JointQuasiDistribution {
  Eigen::VectorXd grid_s;
  Eigen::VectorXd grid_i;
  Eigen::MatrixXd values;
  double s = 0.0;
  double modes = 1.0;

  double integral() const;
};

/// W in [0, mean + 10 sqrt(mean + 1)] with `points` uniform nodes.
Eigen::VectorXd default_grid(const PhotonNumberDistribution& p, int points = 512);

/// Inverts the photon-number distribution into P(W; s), s in (-1, 1).
///
/// The Laguerre series is summed with Euler (binomial) tapering, which equals
/// the plain partial sums whenever those converge and continues them when the
/// geometric factor ((s+1)/(s-1))^n outgrows the decay of p(n).
QuasiDistribution quasi_from_pnd(const PhotonNumberDistribution& p, double s, const Eigen::VectorXd& grid,
                                 const QuasiOptions& options = {});

JointQuasiDistribution joint_quasi_from_pnd(const JointPhotonNumberDistribution& joint, double s,
                                            const Eigen::VectorXd& grid_s, const Eigen::VectorXd& grid_i,
                                            const QuasiOptions& options = {});

/// p(n) = (1/n!) int W^n e^{-W} P(W) dW for a normally ordered (s = 1) density.
/// Optional breakpoints split the integration range at known features.
PhotonNumberDistribution pnd_from_quasi(const std::function<double(double)>& density, int n_max,
                                        const std::vector<double>& breakpoints = {});

/// Same for a sampled s = 1 distribution, linearly interpolated and zero beyond the grid.
PhotonNumberDistribution pnd_from_quasi(const QuasiDistribution& q, int n_max);

struct NegativityReport {
  double min_value = 0.0;
  /// Location of the minimum (second coordinate unused for 1D input).
  double argmin_s = 0.0;
  double argmin_i = 0.0;
  /// Integral of the negative part (a non-positive number).
  double negative_mass = 0.0;
};

NegativityReport negativity_scan(const QuasiDistribution& q);
NegativityReport negativity_scan(const JointQuasiDistribution& q);

}  // namespace photostat
