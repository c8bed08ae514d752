#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "photostat/config.hpp"
#include "photostat/io.hpp"
#include "photostat/model.hpp"

namespace photostat {

/// Tables produced by one command plus human-readable notes for stderr.
struct CommandResult {
  std::vector<Table> tables;
  std::vector<std::string> notes;
};

/// Normalized distribution of one model state.
CommandResult run_state(const RunConfig& config, StateKind kind, int cbar);

/// Success probability, moments, Fano factor, non-Gaussianity (single beam)
/// or noise reduction (two beams). Without `cbar`, every cbar <= cbar_max.
CommandResult run_metrics(const RunConfig& config, StateKind kind, std::optional<int> cbar);

struct QuasiRequest {
  StateKind kind = StateKind::PATSsc;
  int cbar = 2;
  double s = 0.1;
  /// Grid points (per axis for two beams); 0 = 512 for one beam, 128 for two.
  int points = 0;
};
CommandResult run_quasi(const RunConfig& config, const QuasiRequest& request);

struct ReconstructRequest {
  /// `c,count` CSV; empty = synthesize from the model state below.
  std::string histogram_path;
  /// Detector name; empty = the thermal-arm detector.
  std::string detector;
  StateKind kind = StateKind::TS;
  int cbar = 0;
  std::uint64_t samples = 1000000;
  /// 0 = config value, then the moment-based default.
  int n_max = 0;
};
CommandResult run_reconstruct(const RunConfig& config, const ReconstructRequest& request);

/// Fano-factor maps; `panels` is any subset of "abcd".
CommandResult run_fano_map(const RunConfig& config, const std::string& panels);

/// Reference success probabilities (percent) for cbar = 0..3; negative = not tabulated.
struct SuccessReference {
  StateKind kind;
  double percent[4];
};
const std::vector<SuccessReference>& success_references();

/// Success probabilities against the reference table, plus the addition
/// sensitivity scan over +-10% of every TWB_a parameter and a doubled-cutoff rerun.
CommandResult run_table_s2(const RunConfig& config);

/// Means, Fano factors, non-Gaussianity and noise reduction versus cbar.
CommandResult run_trends(const RunConfig& config);

}  // namespace photostat
