#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "photostat/core_dist.hpp"

namespace photostat::test {

inline double max_abs_diff(const PhotonNumberDistribution& a, const PhotonNumberDistribution& b) {
  const int top = std::max(a.cutoff(), b.cutoff());
  double worst = 0.0;
  for (int n = 0; n <= top; ++n) {
    const double x = n <= a.cutoff() ? a[n] : 0.0;
    const double y = n <= b.cutoff() ? b[n] : 0.0;
    worst = std::max(worst, std::abs(x - y));
  }
  return worst;
}

inline double total_variation(const PhotonNumberDistribution& a, const PhotonNumberDistribution& b) {
  const int top = std::max(a.cutoff(), b.cutoff());
  double sum = 0.0;
  for (int n = 0; n <= top; ++n) {
    const double x = n <= a.cutoff() ? a[n] : 0.0;
    const double y = n <= b.cutoff() ? b[n] : 0.0;
    sum += std::abs(x - y);
  }
  return 0.5 * sum;
}

inline double max_abs_diff(const JointPhotonNumberDistribution& a, const JointPhotonNumberDistribution& b) {
  const int ts = std::max(a.cutoff(Axis::Signal), b.cutoff(Axis::Signal));
  const int ti = std::max(a.cutoff(Axis::Idler), b.cutoff(Axis::Idler));
  double worst = 0.0;
  for (int s = 0; s <= ts; ++s) {
    for (int i = 0; i <= ti; ++i) worst = std::max(worst, std::abs(a(s, i) - b(s, i)));
  }
  return worst;
}

// Normalized random distribution with the given support size.
inline PhotonNumberDistribution random_distribution(std::mt19937_64& rng, int size) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd v(size);
  for (int n = 0; n < size; ++n) v[n] = u(rng);
  v /= v.sum();
  return PhotonNumberDistribution(v);
}

}  // namespace photostat::test
