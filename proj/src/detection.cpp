#include "photostat/detection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "photostat/errors.hpp"
#include "photostat/special.hpp"

namespace photostat {
namespace {

// Dark-count extent: beyond this many dark-fired pixels the binomial tail is negligible.
constexpr double kDarkTail = 1e-17;

int dark_extent(int pixels, double dark) {
  if (dark == 0.0) return 0;
  for (int j = 0; j < pixels; ++j) {
    const double ratio = (pixels - j) / (j + 1.0) * dark / (1.0 - dark);
    if (ratio < 1.0 && binomial_pmf(j, pixels, dark) * ratio / (1.0 - ratio) < kDarkTail) return j;
  }
  return pixels;
}

}  // namespace

DetectorSpec DetectorSpec::ideal(double efficiency) {
  DetectorSpec s;
  s.kind = Kind::IdealPNR;
  s.efficiency = efficiency;
  s.validate();
  return s;
}

DetectorSpec DetectorSpec::iccd(double efficiency, int pixels, double dark) {
  DetectorSpec s;
  s.kind = Kind::ICCD;
  s.efficiency = efficiency;
  s.pixels = pixels;
  s.dark = dark;
  s.validate();
  return s;
}

void DetectorSpec::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw InvalidArgument("detector efficiency must lie in [0, 1]");
  if (kind == Kind::ICCD) {
    if (pixels < 1) throw InvalidArgument("iCCD pixel count must be positive");
    if (!(dark >= 0.0 && dark < 1.0)) throw InvalidArgument("dark-count probability must lie in [0, 1)");
  }
}

int DetectorSpec::max_counts(int n) const {
  if (kind == Kind::IdealPNR) return n;
  return std::min(pixels, n + dark_extent(pixels, dark));
}

DetectionMatrix::DetectionMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (!entries_.allFinite() || (entries_.array() < 0.0).any()) {
    throw InvalidArgument("detection matrix entries must be finite and non-negative");
  }
}

double DetectionMatrix::operator()(int c, int n) const {
  if (c < 0 || n < 0 || c > c_max() || n > n_max()) return 0.0;
  return entries_(c, n);
}

Eigen::VectorXd DetectionMatrix::row(int c) const {
  if (c < 0 || c > c_max()) return Eigen::VectorXd::Zero(entries_.cols());
  return entries_.row(c).transpose();
}

DetectionMatrix ideal_pnr_matrix(double efficiency, int n_max, int c_max) {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw InvalidArgument("detector efficiency must lie in [0, 1]");
  if (n_max < 0) throw InvalidArgument("n_max must be non-negative");
  if (c_max < 0) c_max = n_max;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(c_max + 1, n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    for (int c = 0; c <= std::min(n, c_max); ++c) k(c, n) = binomial_pmf(c, n, efficiency);
  }
  return DetectionMatrix(std::move(k));
}

DetectionMatrix iccd_matrix(const DetectorSpec& spec, int n_max, int c_max) {
  if (spec.kind != DetectorSpec::Kind::ICCD) throw InvalidArgument("iccd_matrix needs an iCCD detector");
  spec.validate();
  if (n_max < 0) throw InvalidArgument("n_max must be non-negative");
  if (c_max > spec.pixels) throw InvalidArgument("c_max cannot exceed the pixel count");

  const int pixels = spec.pixels;
  const double eta = spec.efficiency;
  const int range = spec.max_counts(n_max);

  // occ(j): probability that j pixels have fired. Dark counts seed the
  // occupancy; each photon is then lost, hits a fired pixel or fires a new one.
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(range + 1);
  const int dark_top = std::min(range, dark_extent(pixels, spec.dark));
  for (int j = 0; j <= dark_top; ++j) occ[j] = binomial_pmf(j, pixels, spec.dark);

  Eigen::VectorXd stay(range + 1);
  Eigen::VectorXd move(range + 1);
  for (int j = 0; j <= range; ++j) {
    stay[j] = 1.0 - eta + eta * j / pixels;
    move[j] = eta * (pixels - j) / static_cast<double>(pixels);
  }

  Eigen::MatrixXd t(range + 1, n_max + 1);
  t.col(0) = occ;
  for (int n = 1; n <= n_max; ++n) {
    Eigen::VectorXd next = occ.cwiseProduct(stay);
    next.tail(range) += occ.head(range).cwiseProduct(move.head(range));
    occ = std::move(next);
    t.col(n) = occ;
  }

  if (c_max < 0) return DetectionMatrix(std::move(t));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(c_max + 1, n_max + 1);
  const int rows = std::min(c_max, range) + 1;
  out.topRows(rows) = t.topRows(rows);
  return DetectionMatrix(std::move(out));
}

std::shared_ptr<const DetectionMatrix> detection_matrix(const DetectorSpec& spec, int n_max) {
  using Key = std::tuple<int, double, int, double, int>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const DetectionMatrix>> cache;

  spec.validate();
  const Key key{static_cast<int>(spec.kind), spec.efficiency, spec.pixels, spec.dark, n_max};
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto m = std::make_shared<const DetectionMatrix>(spec.kind == DetectorSpec::Kind::ICCD
                                                       ? iccd_matrix(spec, n_max)
                                                       : ideal_pnr_matrix(spec.efficiency, n_max));
  cache.emplace(key, m);
  return m;
}

double iccd_entry_alternating(const DetectorSpec& spec, int c, int n, double max_error) {
  if (spec.kind != DetectorSpec::Kind::ICCD) throw InvalidArgument("alternating form needs an iCCD detector");
  spec.validate();
  if (c < 0 || n < 0) throw InvalidArgument("photocount and photon number must be non-negative");
  if (c > spec.pixels) return 0.0;
  if (spec.efficiency >= 1.0) throw InvalidArgument("alternating form requires efficiency < 1");

  const DoubleDouble ratio = DoubleDouble(spec.efficiency) / DoubleDouble(1.0 - spec.efficiency);
  const DoubleDouble inv_bright = DoubleDouble(1.0) / DoubleDouble(1.0 - spec.dark);
  const DoubleDouble pixels(static_cast<double>(spec.pixels));

  DoubleDouble sum(0.0);
  double magnitude = 0.0;
  DoubleDouble binom(1.0);
  DoubleDouble inv_pow(1.0);
  for (int l = 0; l <= c; ++l) {
    const DoubleDouble base = DoubleDouble(1.0) + DoubleDouble(static_cast<double>(l)) * ratio / pixels;
    const DoubleDouble term = binom * inv_pow * pow(base, n);
    sum = (l % 2 == 0) ? sum + term : sum - term;
    magnitude += abs(term);
    binom = binom * DoubleDouble(static_cast<double>(c - l)) / DoubleDouble(static_cast<double>(l + 1));
    inv_pow = inv_pow * inv_bright;
  }

  const double prefactor = std::exp(log_binomial(spec.pixels, c) + spec.pixels * std::log1p(-spec.dark) +
                                    n * std::log1p(-spec.efficiency));
  const double value = (c % 2 == 0 ? 1.0 : -1.0) * prefactor * sum.to_double();
  // Each term carries O(n + c) double-double roundings.
  const double bound = prefactor * magnitude * (2.0 * n + c + 16.0) * std::ldexp(1.0, -104) +
                       std::abs(value) * 4e-16;
  if (!(bound <= max_error * std::max(std::abs(value), std::numeric_limits<double>::min()))) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "alternating iCCD sum loses precision at c=%d, n=%d (error bound %.3g on %.3g)", c,
                  n, bound, value);
    throw PrecisionError(buf);
  }
  return value;
}

PhotonNumberDistribution apply_detector(const PhotonNumberDistribution& p, const DetectionMatrix& matrix) {
  const Eigen::VectorXd& v = p.probs();
  const Eigen::Index k = std::min<Eigen::Index>(v.size(), matrix.matrix().cols());
  if (k < v.size() && v.tail(v.size() - k).sum() > 1e-12) {
    throw InvalidArgument("detection matrix photon range (" + std::to_string(matrix.n_max()) +
                          ") does not cover the distribution support (" + std::to_string(p.cutoff()) + ")");
  }
  Eigen::VectorXd out = matrix.matrix().leftCols(k) * v.head(k);
  return PhotonNumberDistribution(std::move(out));
}

int sample_detector(int n, const DetectorSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  if (n < 0) throw InvalidArgument("photon number must be non-negative");
  if (spec.kind == DetectorSpec::Kind::IdealPNR) {
    return std::binomial_distribution<int>(n, spec.efficiency)(rng);
  }

  std::vector<int> fired;
  if (spec.dark > 0.0) {
    std::geometric_distribution<long long> skip(spec.dark);
    for (long long pos = skip(rng); pos < spec.pixels; pos += 1 + skip(rng)) {
      fired.push_back(static_cast<int>(pos));
    }
  }
  std::bernoulli_distribution detected(spec.efficiency);
  std::uniform_int_distribution<int> pixel(0, spec.pixels - 1);
  for (int k = 0; k < n; ++k) {
    if (detected(rng)) fired.push_back(pixel(rng));
  }
  std::sort(fired.begin(), fired.end());
  return static_cast<int>(std::unique(fired.begin(), fired.end()) - fired.begin());
}

int sample_detector(int n, const DetectorSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_detector(n, spec, rng);
}

}  // namespace photostat
