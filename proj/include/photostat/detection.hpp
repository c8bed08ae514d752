#pragma once

#include <cstdint>
#include <memory>
#include <random>

#include <Eigen/Dense>

#include "photostat/core_dist.hpp"

namespace photostat {

/// Photon-counting detector: ideal photon-number-resolving (efficiency only)
/// or an iCCD detection area with N pixels and per-pixel dark probability d.
struct DetectorSpec {
  enum class Kind { IdealPNR, ICCD };

  Kind kind = Kind::IdealPNR;
  double efficiency = 1.0;
  int pixels = 0;
  double dark = 0.0;

  static DetectorSpec ideal(double efficiency);
  static DetectorSpec iccd(double efficiency, int pixels, double dark);

  void validate() const;
  /// Largest photocount the detector can register, given n incident photons.
  int max_counts(int n) const;

  friend bool operator==(const DetectorSpec&, const DetectorSpec&) = default;
};

/// T(c, n): probability of c photocounts given n photons. Rows are photocounts.
class DetectionMatrix {
 public:
  DetectionMatrix() = default;
  explicit DetectionMatrix(Eigen::MatrixXd entries);

  const Eigen::MatrixXd& matrix() const { return entries_; }
  int c_max() const { return static_cast<int>(entries_.rows()) - 1; }
  int n_max() const { return static_cast<int>(entries_.cols()) - 1; }
  /// Zero outside the stored range.
  double operator()(int c, int n) const;
  /// T(c, .) over n = 0..n_max; zero vector if c is beyond the stored range.
  Eigen::VectorXd row(int c) const;

 private:
  Eigen::MatrixXd entries_;
};

/// K(c, n) = C(n, c) eta^c (1-eta)^(n-c). c_max < 0 selects c_max = n_max.
DetectionMatrix ideal_pnr_matrix(double efficiency, int n_max, int c_max = -1);

/// iCCD response. c_max < 0 selects the smallest range holding every column
/// to within 1e-15 (at most N).
DetectionMatrix iccd_matrix(const DetectorSpec& spec, int n_max, int c_max = -1);

/// Matrix for any detector kind, memoized per (spec, n_max). Thread-safe.
std::shared_ptr<const DetectionMatrix> detection_matrix(const DetectorSpec& spec, int n_max);

/// Single iCCD entry from the closed alternating sum, in double-double
/// arithmetic. Throws PrecisionError when the bound on the cancellation error
/// exceeds `max_error` times the entry.
double iccd_entry_alternating(const DetectorSpec& spec, int c, int n, double max_error = 1e-10);

/// Photocount distribution out[c] = sum_n T(c, n) p[n].
PhotonNumberDistribution apply_detector(const PhotonNumberDistribution& p, const DetectionMatrix& matrix);

/// Draws one photocount for n incident photons.
int sample_detector(int n, const DetectorSpec& spec, std::mt19937_64& rng);
int sample_detector(int n, const DetectorSpec& spec, std::uint64_t seed);

}  // namespace photostat
