#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "photostat/core_dist.hpp"
#include "photostat/detection.hpp"

namespace photostat {

/// Settings of the intensity quasi-distribution runs.
struct QuasiSettings {
  double s = 0.1;
  int points = 512;
  /// Upper end of the W grid; 0 picks it from the distribution.
  double w_max = 0.0;
  /// Kernel mode number (1 = single-mode intensity).
  double modes = 1.0;
  /// Tail tolerance of the input distributions. The inversion amplifies
  /// truncation error, hence the much tighter default.
  double tail_tolerance = 1e-30;
};

/// Parameter grids of the four Fano-factor maps.
struct FanoMapSettings {
  /// Mean photon number of the thermal state in panels a and b.
  double ts_mean = 5.0;
  std::vector<double> modes_grid;
  std::vector<double> efficiency_grid;
  /// Panel a sweeps these transmissivities; other panels use `t`.
  std::vector<double> transmissivities;
  double t = 0.5;
  int cbar_max = 5;
  /// Efficiency of the ideal detector in the subtraction arm.
  double subtraction_efficiency = 1.0;
  /// Herald efficiency of the added state in panel b.
  double addition_efficiency = 0.227;
  /// Twin beam heralded on `sps_counts` to give the SPS of panels c and d.
  MandelRiceParams sps_pairs{50.0, 0.1};
  int sps_counts = 5;
  /// Twin beam heralded to give the added states.
  MandelRiceParams added_pairs{50.0, 0.05};
};

/// Which named detector plays which part.
struct DetectorRoles {
  std::string subtraction = "Dbar_s";
  std::string sps_herald = "D_i";
  std::string addition_herald = "Dbar_a";
  std::string added_signal = "Dprime_s";
  std::string thermal = "D_t";
};

struct RunConfig {
  TwinBeamParams twb_p;
  TwinBeamParams twb_a;
  std::map<std::string, DetectorSpec> detectors;
  DetectorRoles roles;
  /// Beam-splitter transmissivity of the subtraction arm.
  double t = 0.5;
  Truncation truncation;
  /// Photon-number range of reconstructions; 0 = automatic.
  int n_max = 0;
  std::uint64_t seed = 20240501;
  std::string format = "csv";
  /// Idler photocounts heralding the sub-Poissonian state.
  int sps_counts = 2;
  /// Pair-coincidence efficiency of the sc variants; negative = product of
  /// the added-signal and addition-herald efficiencies.
  double sc_pair_efficiency = -1.0;
  int cbar_max = 3;
  /// Thermal state used for the ideal-detector trend checks.
  MandelRiceParams reference_ts{46.8, 0.12};
  QuasiSettings quasi;
  FanoMapSettings fano_map;

  /// Throws ConfigError for unknown names.
  const DetectorSpec& detector(const std::string& name) const;
  double pair_efficiency() const;
  void validate() const;
};

/// Built-in defaults matching the shipped config/paper.json.
RunConfig default_config();
/// Parses JSON (comments allowed) over the defaults. Throws ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& config);

}  // namespace photostat
