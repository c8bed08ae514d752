#include "photostat/mlrecon.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "photostat/errors.hpp"

namespace photostat {
namespace {

constexpr double kTailMass = 1e-9;

// Matrix restricted to the histogram's photocounts and n = 0..n_max.
Eigen::MatrixXd restrict(const DetectionMatrix& matrix, int c_max, int n_max) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(c_max + 1, n_max + 1);
  const int rows = std::min(c_max, matrix.c_max()) + 1;
  t.topRows(rows) = matrix.matrix().block(0, 0, rows, n_max + 1);
  return t;
}

double weighted_log(const Eigen::VectorXd& f, const Eigen::VectorXd& tp) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < f.size(); ++c) {
    if (f[c] == 0.0) continue;
    if (!(tp[c] > 0.0)) throw InvalidArgument("photocount " + std::to_string(c) + " observed but predicted impossible");
    total += f[c] * std::log(tp[c]);
  }
  return total;
}

}  // namespace

std::uint64_t PhotocountHistogram::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

Eigen::VectorXd PhotocountHistogram::frequencies() const {
  const double n = static_cast<double>(total());
  Eigen::VectorXd f(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) f[static_cast<Eigen::Index>(c)] = counts[c] / n;
  return f;
}

void PhotocountHistogram::validate() const {
  if (counts.empty() || total() == 0) throw InvalidArgument("histogram is empty");
}

EmResult em_reconstruct(const PhotocountHistogram& histogram, const DetectionMatrix& matrix, int n_max,
                        const EmOptions& options) {
  histogram.validate();
  if (n_max < 0 || n_max > matrix.n_max()) throw InvalidArgument("n_max outside the detection matrix range");
  if (histogram.c_max() > matrix.c_max()) {
    for (int c = matrix.c_max() + 1; c <= histogram.c_max(); ++c) {
      if (histogram.counts[c] != 0) throw InvalidArgument("histogram has counts beyond the detection matrix range");
    }
  }
  const Eigen::VectorXd sums = matrix.matrix().leftCols(n_max + 1).colwise().sum();
  if ((sums.array() - 1.0).abs().maxCoeff() > 1e-6) throw InvalidArgument("detection matrix is not column-stochastic");

  const Eigen::VectorXd f = histogram.frequencies();
  const Eigen::MatrixXd t = restrict(matrix, histogram.c_max(), n_max);
  // Columns renormalized over the observed range keep the update mass-preserving.
  const Eigen::VectorXd col = t.colwise().sum().transpose();

  Eigen::VectorXd p = Eigen::VectorXd::Constant(n_max + 1, 1.0 / (n_max + 1));
  Eigen::VectorXd tp = t * p;
  double ll = weighted_log(f, tp);
  EmResult result;
  if (options.record_trace) result.trace.push_back(ll);

  Eigen::VectorXd ratio(f.size());
  for (int it = 1; it <= options.max_iterations; ++it) {
    for (Eigen::Index c = 0; c < f.size(); ++c) ratio[c] = f[c] == 0.0 ? 0.0 : f[c] / tp[c];
    p = p.cwiseProduct(t.transpose() * ratio).cwiseQuotient(col);
    p /= p.sum();
    tp = t * p;
    const double next = weighted_log(f, tp);
    if (options.record_trace) result.trace.push_back(next);
    if (next < ll - 1e-13 * std::abs(ll)) {
      ++result.decreases;
      if (options.check_monotone) throw PrecisionError("log-likelihood decreased at iteration " + std::to_string(it));
    }
    const double change = std::abs(next - ll) / std::max(std::abs(next), 1e-300);
    ll = next;
    result.iterations = it;
    if (change < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.distribution = PhotonNumberDistribution(p.cwiseMax(0.0));
  result.log_likelihood = ll;
  return result;
}

double log_likelihood(const PhotocountHistogram& histogram, const DetectionMatrix& matrix,
                      const PhotonNumberDistribution& p) {
  histogram.validate();
  const Eigen::VectorXd tp = apply_detector(p, matrix).probs();
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(histogram.counts.size());
  const Eigen::Index k = std::min<Eigen::Index>(padded.size(), tp.size());
  padded.head(k) = tp.head(k);
  Eigen::VectorXd f(histogram.counts.size());
  for (std::size_t c = 0; c < histogram.counts.size(); ++c) f[c] = static_cast<double>(histogram.counts[c]);
  return weighted_log(f, padded);
}

int default_n_max(const PhotocountHistogram& histogram, const DetectorSpec& spec) {
  histogram.validate();
  spec.validate();
  const Eigen::VectorXd f = histogram.frequencies();
  const Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(f.size(), 0.0, static_cast<double>(f.size() - 1));
  const double mean_c = c.dot(f);
  const double var_c = (c.array() - mean_c).square().matrix().dot(f);
  const double eta = std::max(spec.efficiency, 1e-6);
  const double dark = spec.kind == DetectorSpec::Kind::ICCD ? spec.pixels * spec.dark : 0.0;

  const double mean = std::max((mean_c - dark) / eta, 0.0);
  const double var = std::max((var_c - dark - mean_c * (1.0 - eta)) / (eta * eta), 0.0);
  Truncation trunc;
  trunc.tail_tolerance = kTailMass;
  int cutoff = 0;
  if (mean > 0.0) {
    const double fano = var / mean;
    cutoff = fano > 1.0 + 1e-9 ? mandel_rice(MandelRiceParams{mean / (fano - 1.0), fano - 1.0}, trunc).cutoff()
                               : poisson(mean, trunc).cutoff();
  }
  return std::max(cutoff, histogram.c_max());
}

PhotocountHistogram synth_histogram(const PhotonNumberDistribution& p, const DetectorSpec& spec,
                                    std::uint64_t samples, std::uint64_t seed) {
  spec.validate();
  if (samples < 1) throw InvalidArgument("need at least one sample");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> photons(p.probs().data(), p.probs().data() + p.probs().size());
  PhotocountHistogram h;
  h.counts.assign(static_cast<std::size_t>(spec.max_counts(p.cutoff())) + 1, 0);
  for (std::uint64_t k = 0; k < samples; ++k) {
    const int c = sample_detector(photons(rng), spec, rng);
    if (static_cast<std::size_t>(c) >= h.counts.size()) h.counts.resize(c + 1, 0);
    ++h.counts[c];
  }
  return h;
}

PhotocountHistogram read_histogram_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open histogram file " + path);
  PhotocountHistogram h;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.rfind("c,", 0) == 0) continue;
    std::istringstream fields(line);
    long long c = -1;
    long long count = -1;
    char comma = 0;
    if (!(fields >> c >> comma >> count) || comma != ',' || c < 0 || count < 0) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'c,count'");
    }
    if (static_cast<std::size_t>(c) >= h.counts.size()) h.counts.resize(c + 1, 0);
    h.counts[c] += static_cast<std::uint64_t>(count);
  }
  if (h.counts.empty()) throw ConfigError("histogram file " + path + " has no data");
  return h;
}

void write_histogram_csv(const std::string& path, const PhotocountHistogram& histogram) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "c,count\n";
  for (std::size_t c = 0; c < histogram.counts.size(); ++c) out << c << ',' << histogram.counts[c] << '\n';
}

}  // namespace photostat
