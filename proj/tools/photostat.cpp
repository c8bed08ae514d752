#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "photostat/commands.hpp"
#include "photostat/config.hpp"
#include "photostat/errors.hpp"

using namespace photostat;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPrecision = 3;

struct Common {
  std::string config_path;
  std::string out_dir;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::optional<double> t;
};

RunConfig load(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? default_config() : load_config(c.config_path);
  if (!c.format.empty()) cfg.format = c.format;
  if (c.seed) cfg.seed = *c.seed;
  if (c.t) cfg.t = *c.t;
  cfg.validate();
  return cfg;
}

void emit(const CommandResult& r, const Common& c, const RunConfig& cfg) {
  for (const auto& note : r.notes) std::cerr << note << '\n';
  if (!c.out_dir.empty()) {
    for (const auto& t : r.tables) std::cerr << "wrote " << write_table(t, c.out_dir, cfg.format) << '\n';
    return;
  }
  const bool many = r.tables.size() > 1;
  for (const auto& t : r.tables) {
    if (many && cfg.format == "csv") std::cout << "# " << t.name << '\n';
    if (cfg.format == "json") {
      write_json(t, std::cout);
    } else {
      write_csv(t, std::cout);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-number statistics of subtracted and added thermal, sub-Poissonian and twin-beam light"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config_path, "JSON run configuration (built-in defaults if omitted)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", common.out_dir, "Output directory (tables go to stdout if omitted)");
  app.add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", common.seed, "Random seed");
  app.add_option("--t", common.t, "Beam-splitter transmissivity of the subtraction arm")->check(CLI::Range(0.0, 1.0));

  std::string kind = "ts";
  std::optional<int> cbar;
  auto* state = app.add_subcommand("state", "Emit a model photon-number distribution");
  state->add_option("--kind", kind, "TS, SPS, TWB, PSTS, PATS, PSSPS, PASPS, PSTWB, PATWB, PATSsc, PASPSsc")
      ->required();
  state->add_option("--cbar", cbar, "Subtracted/added photocounts")->check(CLI::NonNegativeNumber);

  auto* metrics = app.add_subcommand("metrics", "Mean, Fano factor, non-Gaussianity, noise reduction");
  metrics->add_option("--kind", kind, "State kind")->required();
  metrics->add_option("--cbar", cbar, "Photocount number (all up to cbar_max if omitted)")
      ->check(CLI::NonNegativeNumber);

  std::optional<double> s;
  int points = 0;
  auto* quasi = app.add_subcommand("quasi", "Intensity quasi-distribution P(W; s)");
  quasi->add_option("--kind", kind, "State kind")->required();
  quasi->add_option("--cbar", cbar, "Photocount number")->check(CLI::NonNegativeNumber);
  quasi->add_option("--s", s, "Ordering parameter in (-1, 1)");
  quasi->add_option("--points", points, "Grid points (per axis for two beams)")->check(CLI::PositiveNumber);

  ReconstructRequest rec;
  auto* reconstruct = app.add_subcommand("reconstruct", "Maximum-likelihood (EM) photon-number reconstruction");
  reconstruct->add_option("--histogram", rec.histogram_path, "Photocount histogram CSV (c,count)")
      ->check(CLI::ExistingFile);
  reconstruct->add_option("--detector", rec.detector, "Detector name from the config");
  reconstruct->add_option("--kind", kind, "State to synthesize when no histogram is given");
  reconstruct->add_option("--cbar", cbar, "Photocount number of the synthesized state")->check(CLI::NonNegativeNumber);
  reconstruct->add_option("--samples", rec.samples, "Synthetic histogram size")->check(CLI::PositiveNumber);
  reconstruct->add_option("--n-max", rec.n_max, "Photon-number range")->check(CLI::NonNegativeNumber);

  std::string sweep_name;
  std::string panel = "abcd";
  auto* sweep = app.add_subcommand("sweep", "Parameter sweeps");
  sweep->add_option("name", sweep_name, "Sweep name")->required()->check(CLI::IsMember({"fig-s1"}));
  sweep->add_option("--panel", panel, "Panel a, b, c or d (all if omitted)")->check(CLI::IsMember({"a", "b", "c", "d"}));

  std::string table_name;
  auto* table = app.add_subcommand("table", "Success-probability table and sensitivity report");
  table->add_option("name", table_name, "Table name")->required()->check(CLI::IsMember({"s2"}));

  std::string report_name;
  auto* report = app.add_subcommand("report", "Trend reports");
  report->add_option("name", report_name, "Report name")->required()->check(CLI::IsMember({"trends"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const RunConfig cfg = load(common);
    CommandResult result;
    if (*state) {
      result = run_state(cfg, parse_state_kind(kind), cbar.value_or(0));
    } else if (*metrics) {
      result = run_metrics(cfg, parse_state_kind(kind), cbar);
    } else if (*quasi) {
      QuasiRequest q;
      q.kind = parse_state_kind(kind);
      q.cbar = cbar.value_or(0);
      q.s = s.value_or(cfg.quasi.s);
      q.points = points;
      result = run_quasi(cfg, q);
    } else if (*reconstruct) {
      rec.kind = parse_state_kind(kind);
      rec.cbar = cbar.value_or(0);
      result = run_reconstruct(cfg, rec);
    } else if (*sweep) {
      result = run_fano_map(cfg, panel);
    } else if (*table) {
      result = run_table_s2(cfg);
    } else if (*report) {
      result = run_trends(cfg);
    }
    emit(result, common, cfg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PrecisionError& e) {
    std::cerr << "precision error: " << e.what() << '\n';
    return kExitPrecision;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
