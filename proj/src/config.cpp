#include "photostat/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "photostat/conditioning.hpp"
#include "photostat/errors.hpp"

namespace photostat {

using nlohmann::json;

namespace {

constexpr double kPaperDark = 0.22 / 4536.0;

RunConfig builtin() {
  RunConfig c;
  c.twb_p = {{60.6, 0.084}, {0.001, 14.4}, {0.04, 0.75}};
  c.twb_a = {{1740.0, 0.001}, {0.23, 1.28}, {0.34, 0.94}};
  c.detectors = {
      {"D_t", DetectorSpec::iccd(0.234, 1512, kPaperDark)},
      {"Dprime_s", DetectorSpec::iccd(0.234, 1512, kPaperDark)},
      {"Dbar_s", DetectorSpec::iccd(0.234, 1512, kPaperDark)},
      {"D_i", DetectorSpec::iccd(0.227, 3024, kPaperDark)},
      {"Dbar_a", DetectorSpec::iccd(0.227, 1512, kPaperDark)},
  };
  c.fano_map.modes_grid = {1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 40, 50, 60, 80, 100};
  c.fano_map.efficiency_grid = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5,
                                0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0};
  c.fano_map.transmissivities = {1.0, 0.9, 0.7, 0.5};
  return c;
}

[[noreturn]] void fail(const std::string& what) { throw ConfigError("config: " + what); }

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) fail(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) fail("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    fail(where + "." + key + " has the wrong type");
  }
}

void read_mr(const json& obj, MandelRiceParams& mr, const std::string& where) {
  check_keys(obj, {"M", "B"}, where);
  read(obj, "M", mr.modes, where);
  read(obj, "B", mr.mean_per_mode, where);
}

void read_twb(const json& obj, TwinBeamParams& twb, const std::string& where) {
  check_keys(obj, {"pairs", "signal_noise", "idler_noise"}, where);
  if (obj.contains("pairs")) read_mr(obj["pairs"], twb.pairs, where + ".pairs");
  if (obj.contains("signal_noise")) read_mr(obj["signal_noise"], twb.signal_noise, where + ".signal_noise");
  if (obj.contains("idler_noise")) read_mr(obj["idler_noise"], twb.idler_noise, where + ".idler_noise");
}

DetectorSpec read_detector(const json& obj, const std::string& where) {
  check_keys(obj, {"kind", "efficiency", "pixels", "dark"}, where);
  std::string kind = "iccd";
  read(obj, "kind", kind, where);
  DetectorSpec d;
  if (kind == "iccd") {
    d.kind = DetectorSpec::Kind::ICCD;
  } else if (kind == "ideal") {
    d.kind = DetectorSpec::Kind::IdealPNR;
  } else {
    fail(where + ".kind must be 'iccd' or 'ideal'");
  }
  read(obj, "efficiency", d.efficiency, where);
  read(obj, "pixels", d.pixels, where);
  read(obj, "dark", d.dark, where);
  return d;
}

json mr_json(const MandelRiceParams& mr) { return {{"M", mr.modes}, {"B", mr.mean_per_mode}}; }

json twb_json(const TwinBeamParams& t) {
  return {{"pairs", mr_json(t.pairs)}, {"signal_noise", mr_json(t.signal_noise)}, {"idler_noise", mr_json(t.idler_noise)}};
}

}  // namespace

const DetectorSpec& RunConfig::detector(const std::string& name) const {
  auto it = detectors.find(name);
  if (it == detectors.end()) fail("unknown detector '" + name + "'");
  return it->second;
}

double RunConfig::pair_efficiency() const {
  if (sc_pair_efficiency >= 0.0) return sc_pair_efficiency;
  return detector(roles.added_signal).efficiency * detector(roles.addition_herald).efficiency;
}

void RunConfig::validate() const {
  try {
    twb_p.validate();
    twb_a.validate();
    for (const auto& [name, d] : detectors) d.validate();
    BeamSplitter{t}.validate();
    truncation.validate();
    reference_ts.validate();
    fano_map.sps_pairs.validate();
    fano_map.added_pairs.validate();
  } catch (const InvalidArgument& e) {
    fail(e.what());
  }
  for (const std::string* role : {&roles.subtraction, &roles.sps_herald, &roles.addition_herald,
                                  &roles.added_signal, &roles.thermal}) {
    detector(*role);
  }
  if (format != "csv" && format != "json") fail("format must be 'csv' or 'json'");
  if (n_max < 0) fail("n_max must be >= 0");
  if (sps_counts < 0 || cbar_max < 0) fail("photocount numbers must be >= 0");
  if (sc_pair_efficiency > 1.0) fail("sc_pair_efficiency must be <= 1");
  if (!(quasi.s > -1.0 && quasi.s < 1.0)) fail("quasi.s must lie in (-1, 1)");
  if (quasi.points < 2) fail("quasi.points must be >= 2");
  if (quasi.w_max < 0.0) fail("quasi.w_max must be >= 0");
  if (!(quasi.modes > 0.0)) fail("quasi.modes must be > 0");
  if (!(quasi.tail_tolerance > 0.0 && quasi.tail_tolerance <= 1e-6)) fail("quasi.tail_tolerance must lie in (0, 1e-6]");
  const auto& f = fano_map;
  if (!(f.ts_mean > 0.0)) fail("fano_map.ts_mean must be > 0");
  for (double m : f.modes_grid) {
    if (!(m > 0.0)) fail("fano_map.modes_grid entries must be > 0");
  }
  for (double e : f.efficiency_grid) {
    if (!(e > 0.0 && e <= 1.0)) fail("fano_map.efficiency_grid entries must lie in (0, 1]");
  }
  for (double x : f.transmissivities) {
    if (!(x >= 0.0 && x <= 1.0)) fail("fano_map.transmissivities must lie in [0, 1]");
  }
  if (!(f.t >= 0.0 && f.t <= 1.0)) fail("fano_map.t must lie in [0, 1]");
  if (f.cbar_max < 0 || f.sps_counts < 0) fail("fano_map photocount numbers must be >= 0");
  for (double e : {f.subtraction_efficiency, f.addition_efficiency}) {
    if (!(e > 0.0 && e <= 1.0)) fail("fano_map efficiencies must lie in (0, 1]");
  }
}

RunConfig default_config() { return builtin(); }

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(std::string("parse error: ") + e.what());
  }
  RunConfig c = builtin();
  check_keys(root,
             {"twb_p", "twb_a", "detectors", "roles", "t", "truncation", "n_max", "seed", "format", "sps_counts",
              "sc_pair_efficiency", "cbar_max", "reference_ts", "quasi", "fano_map"},
             "root");
  if (root.contains("twb_p")) read_twb(root["twb_p"], c.twb_p, "twb_p");
  if (root.contains("twb_a")) read_twb(root["twb_a"], c.twb_a, "twb_a");
  if (root.contains("detectors")) {
    const json& d = root["detectors"];
    if (!d.is_object()) fail("detectors must be an object");
    c.detectors.clear();
    for (auto it = d.begin(); it != d.end(); ++it) c.detectors[it.key()] = read_detector(*it, "detectors." + it.key());
  }
  if (root.contains("roles")) {
    const json& r = root["roles"];
    check_keys(r, {"subtraction", "sps_herald", "addition_herald", "added_signal", "thermal"}, "roles");
    read(r, "subtraction", c.roles.subtraction, "roles");
    read(r, "sps_herald", c.roles.sps_herald, "roles");
    read(r, "addition_herald", c.roles.addition_herald, "roles");
    read(r, "added_signal", c.roles.added_signal, "roles");
    read(r, "thermal", c.roles.thermal, "roles");
  }
  read(root, "t", c.t, "root");
  if (root.contains("truncation")) {
    const json& tr = root["truncation"];
    check_keys(tr, {"tail_tolerance", "cutoff_scale", "hard_limit"}, "truncation");
    read(tr, "tail_tolerance", c.truncation.tail_tolerance, "truncation");
    read(tr, "cutoff_scale", c.truncation.cutoff_scale, "truncation");
    read(tr, "hard_limit", c.truncation.hard_limit, "truncation");
  }
  read(root, "n_max", c.n_max, "root");
  read(root, "seed", c.seed, "root");
  read(root, "format", c.format, "root");
  read(root, "sps_counts", c.sps_counts, "root");
  read(root, "sc_pair_efficiency", c.sc_pair_efficiency, "root");
  read(root, "cbar_max", c.cbar_max, "root");
  if (root.contains("reference_ts")) read_mr(root["reference_ts"], c.reference_ts, "reference_ts");
  if (root.contains("quasi")) {
    const json& q = root["quasi"];
    check_keys(q, {"s", "points", "w_max", "modes", "tail_tolerance"}, "quasi");
    read(q, "s", c.quasi.s, "quasi");
    read(q, "points", c.quasi.points, "quasi");
    read(q, "w_max", c.quasi.w_max, "quasi");
    read(q, "modes", c.quasi.modes, "quasi");
    read(q, "tail_tolerance", c.quasi.tail_tolerance, "quasi");
  }
  if (root.contains("fano_map")) {
    const json& f = root["fano_map"];
    check_keys(f,
               {"ts_mean", "modes_grid", "efficiency_grid", "transmissivities", "t", "cbar_max",
                "subtraction_efficiency", "addition_efficiency", "sps_pairs", "sps_counts", "added_pairs"},
               "fano_map");
    auto& m = c.fano_map;
    read(f, "ts_mean", m.ts_mean, "fano_map");
    read(f, "modes_grid", m.modes_grid, "fano_map");
    read(f, "efficiency_grid", m.efficiency_grid, "fano_map");
    read(f, "transmissivities", m.transmissivities, "fano_map");
    read(f, "t", m.t, "fano_map");
    read(f, "cbar_max", m.cbar_max, "fano_map");
    read(f, "subtraction_efficiency", m.subtraction_efficiency, "fano_map");
    read(f, "addition_efficiency", m.addition_efficiency, "fano_map");
    read(f, "sps_counts", m.sps_counts, "fano_map");
    if (f.contains("sps_pairs")) read_mr(f["sps_pairs"], m.sps_pairs, "fano_map.sps_pairs");
    if (f.contains("added_pairs")) read_mr(f["added_pairs"], m.added_pairs, "fano_map.added_pairs");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  json dets = json::object();
  for (const auto& [name, d] : c.detectors) {
    if (d.kind == DetectorSpec::Kind::ICCD) {
      dets[name] = {{"kind", "iccd"}, {"efficiency", d.efficiency}, {"pixels", d.pixels}, {"dark", d.dark}};
    } else {
      dets[name] = {{"kind", "ideal"}, {"efficiency", d.efficiency}};
    }
  }
  const auto& f = c.fano_map;
  json root = {
      {"twb_p", twb_json(c.twb_p)},
      {"twb_a", twb_json(c.twb_a)},
      {"detectors", dets},
      {"roles",
       {{"subtraction", c.roles.subtraction},
        {"sps_herald", c.roles.sps_herald},
        {"addition_herald", c.roles.addition_herald},
        {"added_signal", c.roles.added_signal},
        {"thermal", c.roles.thermal}}},
      {"t", c.t},
      {"truncation",
       {{"tail_tolerance", c.truncation.tail_tolerance},
        {"cutoff_scale", c.truncation.cutoff_scale},
        {"hard_limit", c.truncation.hard_limit}}},
      {"n_max", c.n_max},
      {"seed", c.seed},
      {"format", c.format},
      {"sps_counts", c.sps_counts},
      {"sc_pair_efficiency", c.sc_pair_efficiency},
      {"cbar_max", c.cbar_max},
      {"reference_ts", mr_json(c.reference_ts)},
      {"quasi",
       {{"s", c.quasi.s},
        {"points", c.quasi.points},
        {"w_max", c.quasi.w_max},
        {"modes", c.quasi.modes},
        {"tail_tolerance", c.quasi.tail_tolerance}}},
      {"fano_map",
       {{"ts_mean", f.ts_mean},
        {"modes_grid", f.modes_grid},
        {"efficiency_grid", f.efficiency_grid},
        {"transmissivities", f.transmissivities},
        {"t", f.t},
        {"cbar_max", f.cbar_max},
        {"subtraction_efficiency", f.subtraction_efficiency},
        {"addition_efficiency", f.addition_efficiency},
        {"sps_pairs", mr_json(f.sps_pairs)},
        {"sps_counts", f.sps_counts},
        {"added_pairs", mr_json(f.added_pairs)}}},
  };
  return root.dump(2);
}

}  // namespace photostat
