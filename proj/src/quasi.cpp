#include "photostat/quasi.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "photostat/errors.hpp"
#include "photostat/parallel.hpp"
#include "photostat/special.hpp"

namespace photostat {
namespace {

using Real = long double;
using MatrixXr = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

// Smallest n whose tail mass falls below this fraction counts as the effective support.
constexpr double kSupportTail = 1e-12;

void validate(double s, const QuasiOptions& options) {
  if (!(s > -1.0 && s < 1.0)) throw InvalidArgument("ordering parameter must lie in (-1, 1)");
  if (!(options.modes > 0.0) || !std::isfinite(options.modes)) throw InvalidArgument("kernel mode number must be positive");
  if (!(options.tolerance > 0.0) || options.quiet_terms < 1 || options.max_terms < 1) {
    throw InvalidArgument("invalid series options");
  }
}

void validate_grid(const Eigen::VectorXd& grid) {
  if (grid.size() == 0) throw InvalidArgument("grid must be non-empty");
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    if (!(grid[k] >= 0.0) || !std::isfinite(grid[k]) || (k > 0 && !(grid[k] > grid[k - 1]))) {
      throw InvalidArgument("grid must be finite, non-negative and strictly increasing");
    }
  }
}

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  double total = 0.0;
  for (Eigen::Index k = 1; k < x.size(); ++k) total += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
  return total;
}

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& x) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index k = 1; k < x.size(); ++k) {
    const double h = 0.5 * (x[k] - x[k - 1]);
    w[k - 1] += h;
    w[k] += h;
  }
  return w;
}

// Laguerre series of one distribution, summed point by point.
//
// Partial sums are S_K = sum_n b_n tau_{n,K} with b_n = p(n) g_n a^n L_n^(M-1)(x)
// and tau_{n,K} the probability of at most K-n failures before the n-th
// success (success probability pi). The increment at step K is
// sum_n b_n f_n(K), f_n(K) the negative-binomial pmf, updated in place.
class LaguerreSeries {
 public:
  struct Result {
    Real sum = 0;
    double error = 0.0;
    int terms = 0;
  };

  LaguerreSeries(const Eigen::VectorXd& p, double s, const QuasiOptions& options, double pi_scale = 1.0)
      : s_(s), options_(options), support_(static_cast<int>(p.size()) - 1) {
    const Real a = (Real(s) + 1) / (Real(s) - 1);
    coef_.resize(support_ + 1);
    Real a_pow = 1;
    for (int n = 0; n <= support_; ++n) {
      const Real weight =
          options.modes == 1.0 ? Real(1) : std::exp(Real(log_factorial(n)) - std::lgamma(Real(n) + Real(options.modes)));
      coef_[n] = Real(p[n]) * weight * a_pow;
      a_pow *= a;
    }
    const double mass = p.sum();
    double tail = 0.0;
    effective_support_ = support_;
    while (effective_support_ > 0 && tail + p[effective_support_] < kSupportTail * mass) {
      tail += p[effective_support_];
      --effective_support_;
    }
    pi_ = (1.0L - Real(s)) / 2 * Real(pi_scale);
    log_abs_a_ = std::log(std::abs(a));
    a_negative_ = a < 0;

    last_ = support_;
    while (last_ > 0 && p[last_] == 0.0) --last_;
    if (last_ >= 1 && p[last_ - 1] > 0.0) {
      Real ratio = 0;
      for (int n = std::max(1, last_ - 2); n <= last_; ++n) {
        if (p[n - 1] > 0.0) ratio = std::max(ratio, Real(p[n]) / Real(p[n - 1]));
      }
      // A non-decaying end cannot be the start of a normalizable geometric tail.
      if (ratio > 0 && ratio < 1) {
        log_tail_ratio_ = std::log(ratio);
        log_last_ = std::log(Real(p[last_]));
      }
    }
    term_limit_ = static_cast<int>(
        std::min<double>(options.max_terms, 2.5 * (support_ + 1) / ((1.0 - s) * pi_scale) + 100.0));
  }

  double prefactor(double w) const {
    const double m = options_.modes;
    const double scale = 2.0 / (1.0 - s_);
    double value = std::pow(scale, m) * std::exp(-scale * w);
    if (m != 1.0) value *= std::pow(w, m - 1.0);
    return value;
  }

  // Sums the series at intensity w. If taper is non-null it receives tau_{n,K}
  // for the selected K.
  Result run(double w, std::vector<Real>* taper) const {
    const Real x = 4.0L * Real(w) / (1.0L - Real(s_) * Real(s_));
    const std::vector<Real> lag = laguerre_all<Real>(support_, Real(options_.modes) - 1, x);
    std::vector<Real> b(support_ + 1);
    for (int n = 0; n <= support_; ++n) b[n] = coef_[n] * lag[n];

    std::vector<Real> pmf(support_ + 1, 0);
    std::vector<Real> tau(support_ + 1, 0);
    tau[0] = 1;
    CompensatedSum<Real> sum;
    sum += b[0];

    const Real fail = 1 - pi_;
    Real pi_pow = 1;
    int quiet = 0;
    Real window_max = 0;
    int coarse_quiet = 0;
    Real coarse_low = 0;
    Real coarse_high = 0;
    Real noise = 0;
    // Flatness over a trailing window guards the fallback against isolated
    // sign changes of the increments.
    constexpr int kWindow = 5;
    std::vector<Real> recent(kWindow, std::numeric_limits<Real>::infinity());
    Real best_flat = std::numeric_limits<Real>::infinity();
    Real best_sum = b[0];
    Real best_noise = 0;
    int best_terms = 0;
    std::vector<Real> best_tau;
    // First plateau at the level of the amplified input rounding. Waiting for
    // a finer plateau only pays while that rounding stays below its error.
    bool have_coarse = false;
    Result coarse;
    std::vector<Real> coarse_tau;

    for (int k = 1; k <= term_limit_; ++k) {
      const int top = std::min(k - 1, support_);
      for (int n = 1; n <= top; ++n) pmf[n] *= Real(k - 1) / Real(k - n) * fail;
      pi_pow *= pi_;
      if (k <= support_) pmf[k] = pi_pow;

      CompensatedSum<Real> inc_sum;
      Real magnitude = 0;
      const int upto = std::min(k, support_);
      for (int n = 1; n <= upto; ++n) {
        const Real t = b[n] * pmf[n];
        inc_sum += t;
        magnitude += std::abs(t);
        tau[n] += pmf[n];
      }
      const Real inc = inc_sum.value();
      sum += inc;
      noise += magnitude * Real(4) * LDBL_EPSILON;
      recent[k % kWindow] = std::abs(inc);
      if (k <= effective_support_) continue;

      const Real current = sum.value();
      const Real relative = Real(options_.tolerance) * std::abs(current);
      if (std::abs(inc) < std::max(relative, Real(8) * LDBL_EPSILON * magnitude)) {
        ++quiet;
        window_max = std::max(window_max, std::abs(inc));
      } else {
        quiet = 0;
        window_max = 0;
      }
      if (std::abs(inc) < std::max(relative, Real(8 * DBL_EPSILON) * magnitude)) {
        if (coarse_quiet++ == 0) coarse_low = coarse_high = current;
        coarse_low = std::min(coarse_low, current);
        coarse_high = std::max(coarse_high, current);
      } else {
        coarse_quiet = 0;
      }
      const Real flat = *std::max_element(recent.begin(), recent.end()) / std::abs(current);
      if (flat < best_flat) {
        best_flat = flat;
        best_sum = current;
        best_noise = noise;
        best_terms = k;
        if (taper != nullptr) best_tau = tau;
      }
      if (quiet >= options_.quiet_terms) {
        const Real err = window_max * options_.quiet_terms + noise + rounding(b, tau) + tail_estimate(k, x);
        if (have_coarse && coarse.error < static_cast<double>(err)) break;
        if (taper != nullptr) *taper = tau;
        return {current, static_cast<double>(err), k};
      }
      if (!have_coarse && coarse_quiet >= options_.quiet_terms) {
        // Below the input rounding the partial sums wander rather than drift;
        // their spread over the quiet stretch bounds what remains.
        const Real err = (coarse_high - coarse_low) + noise + rounding(b, tau) + tail_estimate(k, x);
        coarse = {current, static_cast<double>(err), k};
        if (taper != nullptr) coarse_tau = tau;
        have_coarse = true;
      }
      if (have_coarse && k % 8 == 0 && static_cast<double>(noise + rounding(b, tau)) > coarse.error) break;
      // Once the missing tail of a truncated input starts to leak into the
      // taper, later partial sums cannot beat the flattest one seen so far.
      if (k > last_ && k % 4 == 0 &&
          tail_estimate(k, x) > 10 * std::max(best_flat, Real(options_.tolerance)) * std::abs(current)) {
        break;
      }
    }
    // No plateau of the requested flatness: fall back to the flattest stretch
    // unless the coarse plateau is tighter.
    Result flattest{sum.value(), std::numeric_limits<double>::infinity(), term_limit_};
    if (best_terms > 0) {
      const Real err = best_flat * std::abs(best_sum) * options_.quiet_terms + best_noise +
                       tail_estimate(best_terms, x) + (best_tau.empty() ? Real(0) : rounding(b, best_tau));
      flattest = {best_sum, static_cast<double>(err), best_terms};
    }
    if (have_coarse && coarse.error <= flattest.error) {
      if (taper != nullptr) *taper = std::move(coarse_tau);
      return coarse;
    }
    if (taper != nullptr) *taper = best_terms > 0 ? best_tau : tau;
    return flattest;
  }

  int support() const { return support_; }

 private:
  // Arithmetic rounding plus the amplified rounding of the double-precision
  // input; input errors are independent, so they add in quadrature.
  Real rounding(const std::vector<Real>& b, const std::vector<Real>& tau) const {
    Real arithmetic = 0;
    Real input = 0;
    for (int n = 0; n <= support_; ++n) {
      const Real term = std::abs(b[n]) * tau[n];
      arithmetic += term * Real(n + 4);
      input += term * term;
    }
    return arithmetic * LDBL_EPSILON + std::sqrt(input) * Real(8 * DBL_EPSILON);
  }

  // Contribution at step k of the terms a truncated distribution leaves out,
  // assuming its tail continues geometrically with the ratio of its last entries.
  Real tail_estimate(int k, Real x) const {
    if (log_tail_ratio_ == -std::numeric_limits<Real>::infinity() || k <= last_) return 0;
    // reach[n] = P[Bin(k, pi) >= n] = tau_{n,k}.
    std::vector<Real> reach(k + 2, 0);
    const Real log_pi = std::log(pi_);
    const Real log_fail = std::log1p(-pi_);
    for (int j = k; j >= 0; --j) {
      reach[j] = reach[j + 1] + std::exp(Real(log_binomial(k, j)) + j * log_pi + (k - j) * log_fail);
    }
    const std::vector<Real> lag = laguerre_all<Real>(k, Real(options_.modes) - 1, x);
    Real total = 0;
    for (int n = last_ + 1; n <= k; ++n) {
      Real log_term = log_last_ + (n - last_) * log_tail_ratio_ + n * log_abs_a_;
      if (options_.modes != 1.0) log_term += Real(log_factorial(n)) - std::lgamma(Real(n) + Real(options_.modes));
      const Real sign = (n % 2 == 1 && a_negative_) ? -1 : 1;
      total += sign * std::exp(log_term) * lag[n] * reach[n];
    }
    return std::abs(total);
  }

  double s_;
  QuasiOptions options_;
  int last_ = 0;
  Real log_tail_ratio_ = -std::numeric_limits<Real>::infinity();
  Real log_last_ = 0;
  Real log_abs_a_ = 0;
  bool a_negative_ = false;
  int support_;
  int effective_support_ = 0;
  int term_limit_ = 0;
  Real pi_ = 0.5;
  std::vector<Real> coef_;
};

// A truncated or slowly decaying input can make the Euler means settle on a
// spurious plateau (the plain finite sum). Such plateaus move with the Euler
// parameter while the true value does not, so adjacent parameters must agree.
constexpr double kPiScales[] = {1.0, 0.75, 0.5, 0.35};

class CheckedSeries {
 public:
  CheckedSeries(const Eigen::VectorXd& p, double s, const QuasiOptions& options) {
    for (double scale : kPiScales) series_.emplace_back(p, s, options, scale);
  }

  LaguerreSeries::Result run(double w, std::vector<Real>* taper) const {
    std::vector<Real> tau_prev;
    std::vector<Real> tau_next;
    auto prev = series_[0].run(w, taper != nullptr ? &tau_prev : nullptr);
    for (std::size_t k = 1; k < series_.size(); ++k) {
      const auto next = series_[k].run(w, taper != nullptr ? &tau_next : nullptr);
      const Real gap = std::abs(prev.sum - next.sum);
      const Real allowed = Real(prev.error) + Real(next.error) +
                           Real(1e-9) * std::max(std::abs(prev.sum), std::abs(next.sum)) + LDBL_MIN;
      if (gap <= allowed) {
        // Both intervals hold the value; keep the tighter one.
        if (next.error < prev.error) {
          if (taper != nullptr) *taper = std::move(tau_next);
          return next;
        }
        if (taper != nullptr) *taper = std::move(tau_prev);
        return prev;
      }
      prev = next;
      tau_prev.swap(tau_next);
    }
    if (taper != nullptr) *taper = std::move(tau_prev);
    return {prev.sum, std::numeric_limits<double>::infinity(), prev.terms};
  }

  double prefactor(double w) const { return series_.front().prefactor(w); }
  int support() const { return series_.front().support(); }

 private:
  std::vector<LaguerreSeries> series_;
};

void check_error(const Eigen::VectorXd& values, const Eigen::VectorXd& error, double max_error) {
  const double scale = values.cwiseAbs().maxCoeff();
  const double worst = error.maxCoeff();
  if (!(worst <= max_error * std::max(scale, std::numeric_limits<double>::min()))) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "quasi-distribution series did not settle: error estimate %.3g against sup |P| = %.3g",
                  worst, scale);
    throw PrecisionError(buf);
  }
}

// Kernel matrix k_n(W_j) (rows = grid points) for one beam.
MatrixXr kernel_matrix(const Eigen::VectorXd& marginal, double s, const Eigen::VectorXd& grid,
                       const QuasiOptions& options, Eigen::VectorXd* error) {
  const Real a = (Real(s) + 1) / (Real(s) - 1);
  // Kernel weights n!/Gamma(n+M) a^n; the series object is built on the
  // marginal so the taper length follows the marginal's convergence.
  const CheckedSeries series(marginal, s, options);
  const int support = series.support();
  std::vector<Real> weight(support + 1);
  Real a_pow = 1;
  for (int n = 0; n <= support; ++n) {
    weight[n] = (options.modes == 1.0 ? Real(1)
                                      : std::exp(Real(log_factorial(n)) - std::lgamma(Real(n) + Real(options.modes)))) *
                a_pow;
    a_pow *= a;
  }
  MatrixXr k(grid.size(), support + 1);
  error->resize(grid.size());
  parallel_for(static_cast<std::size_t>(grid.size()), [&](std::size_t j) {
    double err = 0.0;
    std::vector<Real> tau;
    const auto r = series.run(grid[j], &tau);
    err = r.error * series.prefactor(grid[j]);
    const Real x = 4.0L * Real(grid[j]) / (1.0L - Real(s) * Real(s));
    const std::vector<Real> lag = laguerre_all<Real>(support, Real(options.modes) - 1, x);
    const Real pre = series.prefactor(grid[j]);
    for (int n = 0; n <= support; ++n) k(j, n) = pre * weight[n] * lag[n] * tau[n];
    (*error)[j] = err;
  });
  return k;
}

}  // namespace

double laguerre(int n, double x) {
  if (n < 0) throw InvalidArgument("Laguerre degree must be non-negative");
  return laguerre_all<double>(n, 0.0, x)[n];
}

double QuasiDistribution::integral() const { return trapezoid(grid, values); }

double JointQuasiDistribution::integral() const {
  return trapezoid_weights(grid_s).dot(values * trapezoid_weights(grid_i));
}

Eigen::VectorXd default_grid(const PhotonNumberDistribution& p, int points) {
  if (points < 2) throw InvalidArgument("grid needs at least two points");
  const double mean = p.mean();
  return Eigen::VectorXd::LinSpaced(points, 0.0, mean + 10.0 * std::sqrt(mean + 1.0));
}

QuasiDistribution quasi_from_pnd(const PhotonNumberDistribution& p, double s, const Eigen::VectorXd& grid,
                                 const QuasiOptions& options) {
  validate(s, options);
  validate_grid(grid);
  if (std::abs(p.total_mass() - 1.0) > 1e-6) throw InvalidArgument("quasi-distribution input must be normalized");

  const CheckedSeries series(p.probs(), s, options);
  QuasiDistribution q;
  q.grid = grid;
  q.values.resize(grid.size());
  q.error.resize(grid.size());
  q.s = s;
  q.modes = options.modes;
  parallel_for(static_cast<std::size_t>(grid.size()), [&](std::size_t j) {
    const auto r = series.run(grid[j], nullptr);
    const double pre = series.prefactor(grid[j]);
    q.values[j] = static_cast<double>(pre * r.sum);
    q.error[j] = pre * r.error;
  });
  check_error(q.values, q.error, options.max_error);
  return q;
}

JointQuasiDistribution joint_quasi_from_pnd(const JointPhotonNumberDistribution& joint, double s,
                                            const Eigen::VectorXd& grid_s, const Eigen::VectorXd& grid_i,
                                            const QuasiOptions& options) {
  validate(s, options);
  validate_grid(grid_s);
  validate_grid(grid_i);
  if (std::abs(joint.total_mass() - 1.0) > 1e-6) throw InvalidArgument("quasi-distribution input must be normalized");

  Eigen::VectorXd err_s;
  Eigen::VectorXd err_i;
  const MatrixXr ks = kernel_matrix(marginal(joint, Axis::Signal).probs(), s, grid_s, options, &err_s);
  const MatrixXr ki = kernel_matrix(marginal(joint, Axis::Idler).probs(), s, grid_i, options, &err_i);
  const MatrixXr values = ks * joint.probs().cast<Real>() * ki.transpose();

  JointQuasiDistribution q;
  q.grid_s = grid_s;
  q.grid_i = grid_i;
  q.values = values.cast<double>();
  q.s = s;
  q.modes = options.modes;
  const double scale = q.values.cwiseAbs().maxCoeff();
  const double worst = std::max(err_s.maxCoeff(), err_i.maxCoeff());
  if (!(worst <= options.max_error * std::max(scale, 1.0))) {
    throw PrecisionError("joint quasi-distribution series did not settle: error estimate " + std::to_string(worst));
  }
  return q;
}

namespace {

PhotonNumberDistribution integrate_mandel(const std::function<double(double)>& density, int n_max,
                                          const std::vector<double>& edges, bool open_end) {
  if (n_max < 0) throw InvalidArgument("n_max must be non-negative");
  using boost::math::quadrature::gauss_kronrod;
  Eigen::VectorXd out(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    const double log_norm = log_factorial(n);
    auto integrand = [&](double w) {
      const double value = density(w);
      if (value < 0.0) throw InvalidArgument("normally ordered density must be non-negative");
      if (value == 0.0) return 0.0;
      if (w == 0.0) return n == 0 ? value : 0.0;
      return value * std::exp(n * std::log(w) - w - log_norm);
    };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
      total += gauss_kronrod<double, 15>::integrate(integrand, edges[k], edges[k + 1], 15, 1e-13);
    }
    if (open_end) {
      total += gauss_kronrod<double, 15>::integrate(integrand, edges.back(), std::numeric_limits<double>::infinity(),
                                                    15, 1e-13);
    }
    if (!std::isfinite(total)) throw PrecisionError("Mandel integral did not converge");
    out[n] = std::max(total, 0.0);
  }
  PhotonNumberDistribution p(std::move(out));
  if (std::abs(p.total_mass() - 1.0) > 1e-6) {
    throw PrecisionError("Mandel integral yields mass " + std::to_string(p.total_mass()) +
                         "; increase n_max or extend the density's support");
  }
  return p;
}

}  // namespace

PhotonNumberDistribution pnd_from_quasi(const std::function<double(double)>& density, int n_max,
                                        const std::vector<double>& breakpoints) {
  std::vector<double> edges{0.0};
  for (double b : breakpoints) {
    if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("breakpoints must be positive and finite");
    edges.push_back(b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return integrate_mandel(density, n_max, edges, true);
}

PhotonNumberDistribution pnd_from_quasi(const QuasiDistribution& q, int n_max) {
  if (q.s != 1.0) throw InvalidArgument("the Mandel map needs a normally ordered (s = 1) distribution");
  validate_grid(q.grid);
  if (q.values.size() != q.grid.size()) throw InvalidArgument("grid and values differ in length");
  if ((q.values.array() < 0.0).any()) throw InvalidArgument("normally ordered density must be non-negative");
  const Eigen::VectorXd& g = q.grid;
  const Eigen::VectorXd& v = q.values;
  auto density = [&](double w) {
    if (w < g[0] || w > g[g.size() - 1]) return 0.0;
    const auto* it = std::upper_bound(g.data(), g.data() + g.size(), w);
    const Eigen::Index k = std::min<Eigen::Index>(std::max<Eigen::Index>(it - g.data(), 1), g.size() - 1);
    const double f = (w - g[k - 1]) / (g[k] - g[k - 1]);
    return (1.0 - f) * v[k - 1] + f * v[k];
  };
  std::vector<double> edges(g.data(), g.data() + g.size());
  if (edges.size() < 2) throw InvalidArgument("grid needs at least two points");
  return integrate_mandel(density, n_max, edges, false);
}

NegativityReport negativity_scan(const QuasiDistribution& q) {
  NegativityReport r;
  Eigen::Index k = 0;
  r.min_value = q.values.minCoeff(&k);
  r.argmin_s = q.grid[k];
  r.negative_mass = trapezoid(q.grid, q.values.cwiseMin(0.0));
  return r;
}

NegativityReport negativity_scan(const JointQuasiDistribution& q) {
  NegativityReport r;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  r.min_value = q.values.minCoeff(&row, &col);
  r.argmin_s = q.grid_s[row];
  r.argmin_i = q.grid_i[col];
  r.negative_mass = trapezoid_weights(q.grid_s).dot(q.values.cwiseMin(0.0) * trapezoid_weights(q.grid_i));
  return r;
}

}  // namespace photostat
