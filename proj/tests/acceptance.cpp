// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "photostat/commands.hpp"
#include "photostat/conditioning.hpp"
#include "photostat/config.hpp"
#include "photostat/core_dist.hpp"
#include "photostat/detection.hpp"
#include "photostat/errors.hpp"
#include "photostat/metrics.hpp"
#include "photostat/mlrecon.hpp"
#include "photostat/model.hpp"
#include "photostat/quasi.hpp"

using namespace photostat;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const Table& find_table(const CommandResult& r, const std::string& name) {
  for (const auto& t : r.tables) {
    if (t.name == name) return t;
  }
  throw Error("missing table " + name);
}

std::size_t column(const Table& t, const std::string& name) {
  const auto it = std::find(t.columns.begin(), t.columns.end(), name);
  if (it == t.columns.end()) throw Error("missing column " + name);
  return static_cast<std::size_t>(it - t.columns.begin());
}

double num(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? 1.0 : 0.0;
  throw Error("non-numeric cell");
}

std::string str(const Cell& c) { return std::get<std::string>(c); }

double gamma_density(double w, double m, double theta) {
  if (w == 0.0) return m == 1.0 ? 1.0 / theta : 0.0;
  return std::exp((m - 1.0) * std::log(w) - w / theta - std::lgamma(m) - m * std::log(theta));
}

RunConfig shipped() { return load_config(PHOTOSTAT_CONFIG); }

Outcome closed_forms() {
  const auto start = std::chrono::steady_clock::now();
  double mean_err = 0.0;
  double fano_err = 0.0;
  double spread = 0.0;
  for (double m : {1.0, 5.0, 46.8}) {
    for (double b : {0.1, 1.0}) {
      const auto p = mandel_rice({m, b}, Truncation{1e-16});
      for (double t : {0.5, 0.7, 0.9}) {
        for (double eta : {0.5, 1.0}) {
          double lo = 1e300;
          double hi = -1e300;
          for (int c = 0; c <= 3; ++c) {
            const auto s = subtract(p, BeamSplitter{t}, DetectorSpec::ideal(eta), c).normalized();
            const double f = fano(s);
            mean_err = std::max(mean_err, std::abs(s.mean() - pst_mean_closed_form(m, b, t, eta, c)) /
                                              pst_mean_closed_form(m, b, t, eta, c));
            fano_err = std::max(fano_err, std::abs(f - pst_fano_closed_form(m, b, t, eta, c)));
            lo = std::min(lo, f);
            hi = std::max(hi, f);
          }
          spread = std::max(spread, hi - lo);
        }
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {mean_err < 1e-6 && fano_err < 1e-6 && spread < 1e-6 && secs < 10.0,
          fmt("mean rel err %.3g, Fano err %.3g, Fano spread over cbar %.3g, %.2f s", mean_err, fano_err, spread, secs)};
}

Outcome fano_identities() {
  double mr_err = 0.0;
  for (double m : {1.0, 3.5, 46.8}) {
    for (double b : {0.05, 0.5, 2.0}) {
      mr_err = std::max(mr_err, std::abs(fano(mandel_rice({m, b}, Truncation{1e-16})) - (1.0 + b)));
    }
  }
  const PaperModel model(shipped());
  double add_err = 0.0;
  for (const auto& p : {model.ts().normalized(), model.sps().normalized()}) {
    const double mean = p.mean();
    const double f = fano(p);
    for (int c = 1; c <= 3; ++c) {
      ConditionedState fock{PhotonNumberDistribution::fock(c), 1.0, "fock", c};
      const auto added = add(p, fock).normalized();
      add_err = std::max(add_err, std::abs(fano(added) - f * mean / (mean + c)));
    }
  }
  return {mr_err < 1e-9 && add_err < 1e-12, fmt("|F(MR) - (1+B)| %.3g, Fock-addition Fano err %.3g", mr_err, add_err)};
}

Outcome success_table(const CommandResult& s2, bool subtraction) {
  const Table& t = find_table(s2, "table_s2");
  const std::size_t is = column(t, "state");
  const std::size_t idev = column(t, "abs_dev");
  double worst_psts = 0.0;
  double worst_pssps = 0.0;
  double worst_add = 0.0;
  for (const auto& row : t.rows) {
    const std::string k = str(row[is]);
    const double dev = num(row[idev]);
    if (k == "PSTS") worst_psts = std::max(worst_psts, dev);
    if (k == "PSSPS") worst_pssps = std::max(worst_pssps, dev);
    if (k == "PATS" || k == "PASPS") worst_add = std::max(worst_add, dev);
  }
  if (subtraction) {
    return {worst_psts <= 1.5 && worst_pssps <= 2.0,
            fmt("max |dev| PSTS %.3f pp (tol 1.5), PSSPS %.3f pp (tol 2)", worst_psts, worst_pssps)};
  }
  if (worst_add <= 2.0) return {true, fmt("max |dev| PATS/PASPS %.3f pp (tol 2)", worst_add)};
  const Table& sum = find_table(s2, "table_s2_sensitivity_summary");
  const std::size_t ishift = column(sum, "cutoff_shift");
  const std::size_t iin = column(sum, "paper_in_range");
  double shift = 0.0;
  int in_range = 0;
  for (const auto& row : sum.rows) {
    shift = std::max(shift, std::abs(num(row[ishift])));
    in_range += num(row[iin]) != 0.0;
  }
  return {!sum.rows.empty() && shift <= 0.01,
          fmt("max |dev| PATS/PASPS %.3f pp > 2; sensitivity report: %.0f/%.0f rows bracket the reference, "
              "max cutoff shift %.3g pp",
              worst_add, in_range, static_cast<double>(sum.rows.size()), shift)};
}

Outcome monte_carlo(const RunConfig& cfg) {
  const auto spec = DetectorSpec::iccd(0.234, 1512, 0.22 / 4536);
  const std::vector<int> ns = {0, 1, 2, 5, 10, 20};
  const int trials = 1000000;
  const auto matrix = iccd_matrix(spec, 20);
  std::mt19937_64 rng(cfg.seed);
  double worst_z = 0.0;
  for (int n : ns) {
    std::vector<double> hits(6, 0.0);
    for (int k = 0; k < trials; ++k) {
      const int c = sample_detector(n, spec, rng);
      if (c <= 5) hits[c] += 1.0;
    }
    for (int c = 0; c <= 5; ++c) {
      const double p = matrix(c, n);
      const double se = std::max(std::sqrt(p * (1.0 - p) / trials), 1.0 / trials);
      worst_z = std::max(worst_z, std::abs(hits[c] / trials - p) / se);
    }
  }
  double col_err = 0.0;
  for (const auto& [name, det] : cfg.detectors) {
    const auto m = detection_matrix(det, 200);
    col_err = std::max(col_err, (m->matrix().colwise().sum().array() - 1.0).abs().maxCoeff());
  }
  return {worst_z <= 3.0 && col_err <= 1e-9,
          fmt("max |MC - T| %.2f SE over 36 cells (tol 3), max column-sum err %.3g", worst_z, col_err)};
}

Outcome thermal_quasi() {
  double worst_rel = 0.0;
  double worst_int = 0.0;
  for (double m : {1.0, 2.0, 5.0}) {
    for (double b : {0.5, 1.0}) {
      const auto p = mandel_rice({m, b}, Truncation{1e-30});
      const auto grid = default_grid(p, 256);
      for (double s : {0.0, 0.1, 0.5}) {
        QuasiOptions opts;
        opts.modes = m;
        const auto q = quasi_from_pnd(p, s, grid, opts);
        const double theta = b + (1.0 - s) / 2.0;
        double peak = 0.0;
        double err = 0.0;
        for (Eigen::Index k = 0; k < grid.size(); ++k) {
          const double g = gamma_density(grid[k], m, theta);
          peak = std::max(peak, g);
          err = std::max(err, std::abs(q.values[k] - g));
        }
        worst_rel = std::max(worst_rel, err / peak);
        worst_int = std::max(worst_int, std::abs(q.integral() - 1.0));
      }
    }
  }
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(401, 0.0, 8.0);
  const auto f = quasi_from_pnd(PhotonNumberDistribution::fock(1), 0.0, grid);
  const auto scan = negativity_scan(f);
  worst_int = std::max(worst_int, std::abs(f.integral() - 1.0));
  const bool fock_ok = std::abs(scan.min_value + 2.0) < 1e-9 && scan.argmin_s == 0.0;
  return {worst_rel < 1e-6 && fock_ok && worst_int < 1e-3,
          fmt("thermal max rel err %.3g, Fock(1) min %.12g at W=%.3g, max |integral-1| %.3g", worst_rel,
              scan.min_value, scan.argmin_s, worst_int)};
}

Outcome sc_negativity(const RunConfig& cfg) {
  const auto min_of = [&](StateKind kind) {
    const auto r = run_quasi(cfg, QuasiRequest{kind, 2, 0.1, 0});
    const Table& t = r.tables.back();
    return num(t.rows.at(0)[column(t, "min_value")]);
  };
  const double pasps = min_of(StateKind::PASPSsc);
  const double pats = min_of(StateKind::PATSsc);
  return {pasps < 0.0 && pats >= -1e-6,
          fmt("s=0.1: min P(2-PASPSsc) %.4g (want < 0), min P(2-PATSsc) %.4g (want >= -1e-6)", pasps, pats)};
}

Outcome em(const RunConfig& cfg) {
  const DetectorSpec& dt = cfg.detector(cfg.roles.thermal);
  const auto truth = mandel_rice({46.8, 0.12}, Truncation{1e-14});
  const int n_max = std::max(truth.cutoff(), 40);
  const auto matrix = detection_matrix(dt, n_max);
  const auto counts = apply_detector(truth, *matrix);
  PhotocountHistogram h;
  for (int c = 0; c <= counts.cutoff(); ++c) h.counts.push_back(static_cast<std::uint64_t>(std::llround(1e9 * counts[c])));
  EmOptions opts;
  opts.tolerance = 1e-13;
  const auto exact = em_reconstruct(h, *matrix, n_max, opts);
  double tv = 0.0;
  for (int n = 0; n <= n_max; ++n) tv += 0.5 * std::abs(exact.distribution[n] - truth[n]);

  const PaperModel model(cfg);
  const auto spec = DetectorSpec::iccd(0.234, 3024, 0.22 / 4536);
  const auto sampled = synth_histogram(model.ts(), spec, 1000000, cfg.seed);
  const int nm = default_n_max(sampled, spec);
  const auto r = em_reconstruct(sampled, *detection_matrix(spec, nm), nm, opts);
  const double f_true = fano(model.ts().normalized());
  const double f_rec = fano(r.distribution);
  const int decreases = exact.decreases + r.decreases;
  return {tv < 0.005 && std::abs(f_rec - f_true) <= 0.05 && decreases == 0,
          fmt("exact-histogram TV %.3g (tol 0.005), sampled Fano %.4f vs %.4f (tol 0.05), decreases %.0f", tv, f_rec,
              f_true, decreases)};
}

Outcome trends(const RunConfig& cfg) {
  const PaperModel model(cfg);
  std::vector<std::string> failures;
  const auto series = [&](const std::function<PhotonNumberDistribution(int)>& f) {
    std::vector<std::pair<double, double>> v;
    for (int c = 0; c <= cfg.cbar_max; ++c) {
      const auto p = f(c);
      v.emplace_back(p.mean(), fano(p));
    }
    return v;
  };
  const auto monotone = [&](const std::string& what, const std::vector<std::pair<double, double>>& v, bool use_fano,
                            bool rising) {
    for (std::size_t k = 1; k < v.size(); ++k) {
      const double a = use_fano ? v[k - 1].second : v[k - 1].first;
      const double b = use_fano ? v[k].second : v[k].first;
      if (rising ? !(b > a) : !(b < a)) {
        failures.push_back(what);
        return;
      }
    }
  };
  monotone("PSTS mean", series([&](int c) { return model.psts(c).normalized(); }), false, true);
  const auto pssps = series([&](int c) { return model.pssps(c).normalized(); });
  monotone("PSSPS mean", pssps, false, false);
  monotone("PSSPS Fano", pssps, true, true);
  monotone("PATS Fano", series([&](int c) { return model.pats(c).normalized(); }), true, false);
  monotone("PASPS Fano", series([&](int c) { return model.pasps(c).normalized(); }), true, false);
  monotone("PSTWB idler mean",
           series([&](int c) { return marginal(model.pstwb(c).normalized(), Axis::Idler); }), false, true);

  const auto ideal = DetectorSpec::ideal(cfg.detector(cfg.roles.subtraction).efficiency);
  const auto ref = mandel_rice(cfg.reference_ts, cfg.truncation);
  const auto ideal_series = series([&](int c) { return subtract(ref, BeamSplitter{cfg.t}, ideal, c).normalized(); });
  double spread = 0.0;
  for (const auto& [m, f] : ideal_series) spread = std::max(spread, std::abs(f - ideal_series[0].second));
  if (spread > 1e-6) failures.push_back("PSTS-ideal Fano");

  const auto idler = marginal(model.twb_p(), Axis::Idler).normalized();
  for (int c = 0; c <= cfg.cbar_max; ++c) {
    const auto m = marginal(model.patwb(c).normalized(), Axis::Idler);
    if ((m.probs() - idler.probs()).cwiseAbs().maxCoeff() > 1e-15) {
      failures.push_back("PATWB idler marginal");
      break;
    }
  }
  for (int c = 1; c <= 3; ++c) {
    if (noise_reduction(model.patwb(c).normalized()) > noise_reduction(model.pstwb(c).normalized())) {
      failures.push_back("R(PATWB) <= R(PSTWB)");
      break;
    }
  }
  std::string details = fmt("PSTS-ideal Fano spread %.3g", spread);
  if (failures.empty()) return {true, details + "; all trends hold"};
  details += "; failed:";
  for (const auto& f : failures) details += " [" + f + "]";
  return {false, details};
}

Outcome sps_fano(const RunConfig& cfg) {
  const double f = fano(PaperModel(cfg).sps().normalized());
  return {f >= 0.74 && f <= 0.94, fmt("F(SPS) %.4f (range [0.74, 0.94])", f)};
}

}  // namespace

int main() {
  const RunConfig cfg = shipped();
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
  CommandResult s2;
  bool s2_ready = false;
  const auto table = [&]() -> const CommandResult& {
    if (!s2_ready) {
      s2 = run_table_s2(cfg);
      s2_ready = true;
    }
    return s2;
  };
  criteria.emplace_back("subtracted thermal closed forms", closed_forms);
  criteria.emplace_back("Fano identities", fano_identities);
  criteria.emplace_back("subtraction success probabilities", [&] { return success_table(table(), true); });
  criteria.emplace_back("addition success probabilities", [&] { return success_table(table(), false); });
  criteria.emplace_back("iCCD matrix vs Monte Carlo", [&] { return monte_carlo(cfg); });
  criteria.emplace_back("quasi-distribution oracles", thermal_quasi);
  criteria.emplace_back("sc-added negativity at s=0.1", [&] { return sc_negativity(cfg); });
  criteria.emplace_back("EM reconstruction", [&] { return em(cfg); });
  criteria.emplace_back("conditioning trends", [&] { return trends(cfg); });
  criteria.emplace_back("SPS Fano range", [&] { return sps_fano(cfg); });

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("[%s] %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.details.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
