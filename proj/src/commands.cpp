#include "photostat/commands.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "photostat/conditioning.hpp"
#include "photostat/errors.hpp"
#include "photostat/metrics.hpp"
#include "photostat/mlrecon.hpp"
#include "photostat/parallel.hpp"
#include "photostat/quasi.hpp"

namespace photostat {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string tag(const ModelState& s) {
  std::string out = to_string(s.kind);
  if (is_conditioned(s.kind)) out += "_c" + std::to_string(s.cbar);
  return out;
}

double safe_fano(const PhotonNumberDistribution& p) {
  try {
    return fano(p);
  } catch (const InvalidArgument&) {
    return kNaN;
  }
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

Table single_metrics_table(const std::string& name) {
  return {name,
          {"state", "cbar", "success_prob", "mean", "fano", "non_gaussianity", "reference_policy", "ref_modes",
           "ref_mean_per_mode"},
          {}};
}

Table joint_metrics_table(const std::string& name) {
  return {name, {"state", "cbar", "success_prob", "mean_s", "mean_i", "fano_s", "fano_i", "noise_reduction"}, {}};
}

void add_single_metrics(Table& t, const std::string& state, int cbar, double success,
                        const PhotonNumberDistribution& p) {
  const PhotonNumberDistribution q = p.normalized();
  double g = kNaN;
  std::string policy = "none";
  double ref_m = kNaN;
  double ref_b = kNaN;
  if (q.mean() > 0.0) {
    const NonGaussianity ng = non_gaussianity(q);
    g = ng.value;
    policy = to_string(ng.used);
    ref_m = ng.ref_modes;
    ref_b = ng.ref_mean_per_mode;
  }
  t.add_row({state, std::int64_t{cbar}, success, q.mean(), safe_fano(q), g, policy, ref_m, ref_b});
}

void add_joint_metrics(Table& t, const std::string& state, int cbar, double success,
                       const JointPhotonNumberDistribution& j) {
  const JointPhotonNumberDistribution q = j.normalized();
  const PhotonNumberDistribution ps = marginal(q, Axis::Signal);
  const PhotonNumberDistribution pi = marginal(q, Axis::Idler);
  double r = kNaN;
  if (ps.mean() + pi.mean() > 0.0) r = noise_reduction(q);
  t.add_row({state, std::int64_t{cbar}, success, ps.mean(), pi.mean(), safe_fano(ps), safe_fano(pi), r});
}

void add_metrics(Table& single, Table& joint, const ModelState& s) {
  const std::string state = to_string(s.kind);
  if (s.single) add_single_metrics(single, state, s.cbar, s.single->success_prob, s.single->joint);
  if (s.pair) add_joint_metrics(joint, state, s.cbar, s.pair->success_prob, s.pair->joint);
}

Eigen::VectorXd grid_for(const PhotonNumberDistribution& p, const QuasiSettings& q, int points) {
  if (q.w_max > 0.0) return Eigen::VectorXd::LinSpaced(points, 0.0, q.w_max);
  return default_grid(p, points);
}

// Success probabilities of heralding cbar = 0..c_max on the idler of TWB_a.
std::vector<double> addition_success(const TwinBeamParams& twb_a, const DetectorSpec& det, const Truncation& trunc,
                                     int c_max) {
  const JointPhotonNumberDistribution j = twb_model(twb_a, trunc);
  std::vector<double> out;
  for (int c = 0; c <= c_max; ++c) out.push_back(condition_on_counts(j, det, c, Axis::Idler).success_prob);
  return out;
}

double* twb_field(TwinBeamParams& t, int k) {
  switch (k) {
    case 0:
      return &t.pairs.modes;
    case 1:
      return &t.pairs.mean_per_mode;
    case 2:
      return &t.signal_noise.modes;
    case 3:
      return &t.signal_noise.mean_per_mode;
    case 4:
      return &t.idler_noise.modes;
    default:
      return &t.idler_noise.mean_per_mode;
  }
}

constexpr const char* kTwbFieldNames[6] = {"M_p", "B_p", "M_s", "B_s", "M_i", "B_i"};

// One Fano-map point; empty when the heralding outcome has no support or the
// state has zero mean.
struct MapPoint {
  bool ok = false;
  double success = 0.0;
  double mean = 0.0;
  double fano = 0.0;
};

MapPoint map_point(const ConditionedState& s) {
  MapPoint m;
  const PhotonNumberDistribution p = s.normalized();
  if (!(p.mean() > 0.0)) return m;
  m.ok = true;
  m.success = s.success_prob;
  m.mean = p.mean();
  m.fano = fano(p);
  return m;
}

template <class Fn>
MapPoint guarded(Fn&& fn) {
  try {
    return map_point(fn());
  } catch (const NoSupportError&) {
    return {};
  }
}

}  // namespace

CommandResult run_state(const RunConfig& config, StateKind kind, int cbar) {
  const PaperModel model(config);
  const ModelState s = model.build(kind, cbar);
  CommandResult r;
  const std::string name = "state_" + tag(s);
  if (s.single) r.tables.push_back(distribution_table(name, s.single->normalized()));
  if (s.pair) r.tables.push_back(joint_table(name, s.pair->normalized()));
  r.notes.push_back(s.label() + ": success probability " + fmt("%.6g", s.success_prob()));
  return r;
}

CommandResult run_metrics(const RunConfig& config, StateKind kind, std::optional<int> cbar) {
  const PaperModel model(config);
  std::vector<int> cbars;
  if (!is_conditioned(kind)) {
    cbars = {0};
  } else if (cbar) {
    cbars = {*cbar};
  } else {
    for (int c = 0; c <= config.cbar_max; ++c) cbars.push_back(c);
  }
  Table single = single_metrics_table(std::string("metrics_") + to_string(kind));
  Table joint = joint_metrics_table(std::string("metrics_") + to_string(kind));
  for (int c : cbars) add_metrics(single, joint, model.build(kind, c));
  CommandResult r;
  r.tables.push_back(is_joint(kind) ? joint : single);
  return r;
}

CommandResult run_quasi(const RunConfig& config, const QuasiRequest& req) {
  if (!(req.s > -1.0 && req.s < 1.0)) throw InvalidArgument("ordering parameter s must lie in (-1, 1)");
  Truncation trunc = config.truncation;
  trunc.tail_tolerance = config.quasi.tail_tolerance;
  const PaperModel model(config, trunc);
  const ModelState s = model.build(req.kind, req.cbar);
  QuasiOptions opts;
  opts.modes = config.quasi.modes;
  const std::string name = "quasi_" + tag(s);
  CommandResult r;
  if (s.single) {
    const int points = req.points > 0 ? req.points : config.quasi.points;
    const PhotonNumberDistribution p = s.single->normalized();
    const QuasiDistribution q = quasi_from_pnd(p, req.s, grid_for(p, config.quasi, points), opts);
    const NegativityReport neg = negativity_scan(q);
    r.tables.push_back(quasi_table(name, q));
    Table sum{name + "_summary",
              {"state", "cbar", "s", "min_value", "argmin_W", "negative_mass", "integral", "max_error"},
              {}};
    sum.add_row({std::string(to_string(s.kind)), std::int64_t{s.cbar}, req.s, neg.min_value, neg.argmin_s,
                 neg.negative_mass, q.integral(), q.error.maxCoeff()});
    r.tables.push_back(sum);
    r.notes.push_back(s.label() + fmt(": min P = %.6g at W = %.6g, integral %.9g", neg.min_value, neg.argmin_s,
                                      q.integral()));
  } else {
    const int points = req.points > 0 ? req.points : 128;
    const JointPhotonNumberDistribution j = s.pair->normalized();
    const JointQuasiDistribution q =
        joint_quasi_from_pnd(j, req.s, grid_for(marginal(j, Axis::Signal), config.quasi, points),
                             grid_for(marginal(j, Axis::Idler), config.quasi, points), opts);
    const NegativityReport neg = negativity_scan(q);
    r.tables.push_back(joint_quasi_table(name, q));
    Table sum{name + "_summary",
              {"state", "cbar", "s", "min_value", "argmin_W_s", "argmin_W_i", "negative_mass", "integral"},
              {}};
    sum.add_row({std::string(to_string(s.kind)), std::int64_t{s.cbar}, req.s, neg.min_value, neg.argmin_s,
                 neg.argmin_i, neg.negative_mass, q.integral()});
    r.tables.push_back(sum);
    r.notes.push_back(s.label() + fmt(": min P = %.6g, integral %.9g", neg.min_value, q.integral()));
  }
  return r;
}

CommandResult run_reconstruct(const RunConfig& config, const ReconstructRequest& req) {
  const std::string det_name = req.detector.empty() ? config.roles.thermal : req.detector;
  const DetectorSpec& spec = config.detector(det_name);
  CommandResult r;
  PhotocountHistogram h;
  std::optional<PhotonNumberDistribution> truth;
  std::string source;
  if (!req.histogram_path.empty()) {
    h = read_histogram_csv(req.histogram_path);
    source = req.histogram_path;
  } else {
    const PaperModel model(config);
    const ModelState s = model.build(req.kind, req.cbar);
    if (!s.single) throw ConfigError("reconstruction needs a single-beam state");
    truth = s.single->normalized();
    h = synth_histogram(*truth, spec, req.samples, config.seed);
    source = "synthetic " + s.label();
    r.tables.push_back(histogram_table("histogram", h));
  }
  h.validate();
  const int n_max = req.n_max > 0 ? req.n_max : config.n_max > 0 ? config.n_max : default_n_max(h, spec);
  const auto matrix = detection_matrix(spec, n_max);
  EmOptions opts;
  const EmResult em = em_reconstruct(h, *matrix, n_max, opts);
  r.tables.push_back(distribution_table("reconstruction", em.distribution));
  Table sum{"reconstruction_summary",
            {"source", "detector", "samples", "n_max", "iterations", "converged", "decreases", "log_likelihood",
             "mean", "fano", "model_mean", "model_fano"},
            {}};
  sum.add_row({source, det_name, static_cast<std::int64_t>(h.total()), std::int64_t{n_max},
               std::int64_t{em.iterations}, em.converged, std::int64_t{em.decreases}, em.log_likelihood,
               em.distribution.mean(), safe_fano(em.distribution), truth ? truth->mean() : kNaN,
               truth ? safe_fano(*truth) : kNaN});
  r.tables.push_back(sum);
  r.notes.push_back(fmt("EM: %g iterations, mean %.6g, Fano %.6g", em.iterations, em.distribution.mean(),
                        safe_fano(em.distribution)));
  if (!em.converged) r.notes.push_back("EM stopped at the iteration limit before reaching the tolerance");
  return r;
}

CommandResult run_fano_map(const RunConfig& config, const std::string& panels) {
  for (char c : panels) {
    if (c < 'a' || c > 'd') throw ConfigError(std::string("unknown panel '") + c + "'");
  }
  const FanoMapSettings& f = config.fano_map;
  const Truncation& trunc = config.truncation;
  const DetectorSpec sub_det = DetectorSpec::ideal(f.subtraction_efficiency);
  const int nc = f.cbar_max + 1;
  CommandResult r;
  auto has = [&](char p) { return panels.find(p) != std::string::npos; };

  if (has('a')) {
    const std::size_t nm = f.modes_grid.size();
    const std::size_t nt = f.transmissivities.size();
    std::vector<MapPoint> pts(nm * nt * nc);
    parallel_for(pts.size(), [&](std::size_t k) {
      const double m = f.modes_grid[k / (nt * nc)];
      const double t = f.transmissivities[(k / nc) % nt];
      const int c = static_cast<int>(k % nc);
      const PhotonNumberDistribution ts = mandel_rice({m, f.ts_mean / m}, trunc);
      pts[k] = guarded([&] { return subtract(ts, BeamSplitter{t}, sub_det, c); });
    });
    Table t{"fig_s1_a", {"M_th", "t", "cbar", "success_prob", "mean", "fano", "fano_closed_form"}, {}};
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (!pts[k].ok) continue;
      const double m = f.modes_grid[k / (nt * nc)];
      const double tt = f.transmissivities[(k / nc) % nt];
      const int c = static_cast<int>(k % nc);
      t.add_row({m, tt, std::int64_t{c}, pts[k].success, pts[k].mean, pts[k].fano,
                 pst_fano_closed_form(m, f.ts_mean / m, tt, f.subtraction_efficiency, c)});
    }
    r.tables.push_back(t);
  }

  if (has('b')) {
    const JointPhotonNumberDistribution source = ideal_twb(f.added_pairs, trunc);
    const DetectorSpec herald = DetectorSpec::ideal(f.addition_efficiency);
    std::vector<ConditionedState> added;
    std::vector<bool> supported;
    for (int c = 0; c < nc; ++c) {
      try {
        added.push_back(condition_on_counts(source, herald, c, Axis::Idler));
        supported.push_back(true);
      } catch (const NoSupportError&) {
        added.emplace_back();
        supported.push_back(false);
      }
    }
    std::vector<MapPoint> pts(f.modes_grid.size() * nc);
    parallel_for(pts.size(), [&](std::size_t k) {
      const double m = f.modes_grid[k / nc];
      const int c = static_cast<int>(k % nc);
      if (!supported[c]) return;
      const PhotonNumberDistribution ts = mandel_rice({m, f.ts_mean / m}, trunc).normalized();
      pts[k] = guarded([&] { return add(ts, added[c]); });
    });
    Table t{"fig_s1_b", {"M_th", "cbar", "success_prob", "mean", "fano"}, {}};
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (!pts[k].ok) continue;
      t.add_row({f.modes_grid[k / nc], static_cast<std::int64_t>(k % nc), pts[k].success, pts[k].mean, pts[k].fano});
    }
    r.tables.push_back(t);
  }

  if (has('c') || has('d')) {
    const JointPhotonNumberDistribution sps_source = ideal_twb(f.sps_pairs, trunc);
    const JointPhotonNumberDistribution add_source = ideal_twb(f.added_pairs, trunc);
    const std::size_t ne = f.efficiency_grid.size();
    std::vector<MapPoint> pc(ne * nc);
    std::vector<MapPoint> pd(ne * nc);
    parallel_for(ne * nc, [&](std::size_t k) {
      const double eta = f.efficiency_grid[k / nc];
      const int c = static_cast<int>(k % nc);
      const DetectorSpec herald = DetectorSpec::ideal(eta);
      PhotonNumberDistribution sps;
      try {
        sps = condition_on_counts(sps_source, herald, f.sps_counts, Axis::Idler).normalized();
      } catch (const NoSupportError&) {
        return;
      }
      if (has('c')) pc[k] = guarded([&] { return subtract(sps, BeamSplitter{f.t}, sub_det, c); });
      if (has('d')) {
        pd[k] = guarded([&] { return add(sps, condition_on_counts(add_source, herald, c, Axis::Idler)); });
      }
    });
    for (char panel : {'c', 'd'}) {
      if (!has(panel)) continue;
      const auto& pts = panel == 'c' ? pc : pd;
      Table t{std::string("fig_s1_") + panel, {"eta", "cbar", "success_prob", "mean", "fano"}, {}};
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (!pts[k].ok) continue;
        t.add_row({f.efficiency_grid[k / nc], static_cast<std::int64_t>(k % nc), pts[k].success, pts[k].mean,
                   pts[k].fano});
      }
      r.tables.push_back(t);
    }
  }
  return r;
}

const std::vector<SuccessReference>& success_references() {
  static const std::vector<SuccessReference> refs = {
      {StateKind::PSTS, {51.95, 33.76, 11.23, 2.55}},  {StateKind::PATS, {51.58, 33.84, 11.37, 2.63}},
      {StateKind::PSSPS, {48.14, 35.59, 12.71, 2.96}}, {StateKind::PASPS, {51.58, 33.84, 11.37, 2.64}},
      {StateKind::PATSsc, {89.49, 9.94, 0.55, -1.0}},  {StateKind::PASPSsc, {89.50, 9.93, 0.55, -1.0}},
  };
  return refs;
}

CommandResult run_table_s2(const RunConfig& config) {
  const PaperModel model(config);
  const auto& refs = success_references();
  CommandResult r;

  Table main{"table_s2", {"state", "cbar", "model_percent", "paper_percent", "abs_dev"}, {}};
  for (const auto& ref : refs) {
    for (int c = 0; c < 4; ++c) {
      if (ref.percent[c] < 0.0) continue;
      const double model_pct = 100.0 * model.build(ref.kind, c).success_prob();
      main.add_row({std::string(to_string(ref.kind)), std::int64_t{c}, model_pct, ref.percent[c],
                    std::abs(model_pct - ref.percent[c])});
    }
  }
  r.tables.push_back(main);

  // +-10% on each TWB_a parameter alone, then all 64 sign corners.
  const DetectorSpec& herald = config.detector(config.roles.addition_herald);
  struct Scan {
    std::string name;
    TwinBeamParams params;
  };
  std::vector<Scan> scans{{"baseline", config.twb_a}};
  for (int k = 0; k < 6; ++k) {
    for (double factor : {0.9, 1.1}) {
      Scan s{std::string(kTwbFieldNames[k]) + (factor < 1.0 ? "-10%" : "+10%"), config.twb_a};
      *twb_field(s.params, k) *= factor;
      scans.push_back(s);
    }
  }
  for (int mask = 0; mask < 64; ++mask) {
    Scan s{"corner", config.twb_a};
    for (int k = 0; k < 6; ++k) {
      const bool up = (mask >> k) & 1;
      *twb_field(s.params, k) *= up ? 1.1 : 0.9;
      s.name += up ? '+' : '-';
    }
    scans.push_back(s);
  }
  std::vector<std::vector<double>> success(scans.size());
  parallel_for(scans.size(), [&](std::size_t k) {
    success[k] = addition_success(scans[k].params, herald, config.truncation, 3);
  });
  const std::vector<double> doubled = addition_success(config.twb_a, herald, config.truncation.scaled(2.0), 3);

  Table scan{"table_s2_sensitivity", {"scan", "M_p", "B_p", "M_s", "B_s", "M_i", "B_i", "cbar", "model_percent"}, {}};
  for (std::size_t k = 0; k < scans.size(); ++k) {
    TwinBeamParams p = scans[k].params;
    for (int c = 0; c < 4; ++c) {
      scan.add_row({scans[k].name, *twb_field(p, 0), *twb_field(p, 1), *twb_field(p, 2), *twb_field(p, 3),
                    *twb_field(p, 4), *twb_field(p, 5), std::int64_t{c}, 100.0 * success[k][c]});
    }
  }
  r.tables.push_back(scan);

  Table summary{"table_s2_sensitivity_summary",
                {"state", "cbar", "baseline_percent", "min_percent", "max_percent", "paper_percent", "paper_in_range",
                 "doubled_cutoff_percent", "cutoff_shift"},
                {}};
  for (const auto& ref : refs) {
    if (ref.kind != StateKind::PATS && ref.kind != StateKind::PASPS) continue;
    for (int c = 0; c < 4; ++c) {
      double lo = success[0][c];
      double hi = success[0][c];
      for (const auto& s : success) {
        lo = std::min(lo, s[c]);
        hi = std::max(hi, s[c]);
      }
      const double base = 100.0 * success[0][c];
      const bool in = ref.percent[c] >= 100.0 * lo && ref.percent[c] <= 100.0 * hi;
      summary.add_row({std::string(to_string(ref.kind)), std::int64_t{c}, base, 100.0 * lo, 100.0 * hi,
                       ref.percent[c], in, 100.0 * doubled[c], 100.0 * (doubled[c] - success[0][c])});
    }
  }
  r.tables.push_back(summary);
  r.notes.push_back("addition success depends only on TWB_a and the addition herald; PATS and PASPS share it");
  return r;
}

CommandResult run_trends(const RunConfig& config) {
  const PaperModel model(config);
  const int nc = config.cbar_max + 1;
  const std::vector<StateKind> kinds = {StateKind::PSTS,  StateKind::PATS,   StateKind::PSSPS, StateKind::PASPS,
                                        StateKind::PATSsc, StateKind::PASPSsc, StateKind::PSTWB, StateKind::PATWB};
  std::vector<ModelState> states(kinds.size() * nc);
  parallel_for(states.size(), [&](std::size_t k) { states[k] = model.build(kinds[k / nc], static_cast<int>(k % nc)); });

  Table single = single_metrics_table("trends_single");
  Table joint = joint_metrics_table("trends_joint");
  for (const auto& s : states) add_metrics(single, joint, s);

  // Ideal-detector reference: the thermal state of the main text.
  const PhotonNumberDistribution ts = mandel_rice(config.reference_ts, config.truncation);
  const DetectorSpec ideal = DetectorSpec::ideal(config.detector(config.roles.subtraction).efficiency);
  for (int c = 0; c < nc; ++c) {
    const ConditionedState ps = subtract(ts, BeamSplitter{config.t}, ideal, c);
    add_single_metrics(single, "PSTS-ideal", c, ps.success_prob, ps.joint);
  }
  for (int c = 0; c < nc; ++c) {
    const ConditionedState pa = add(ts.normalized(), ConditionedState{PhotonNumberDistribution::fock(c), 1.0, "", c});
    add_single_metrics(single, "PATS-fock", c, pa.success_prob, pa.joint);
  }
  CommandResult r;
  r.tables.push_back(single);
  r.tables.push_back(joint);
  return r;
}

}  // namespace photostat
