#pragma once

#include <optional>
#include <string>
#include <vector>

#include "photostat/conditioning.hpp"
#include "photostat/config.hpp"

namespace photostat {

enum class StateKind { TS, SPS, TWB, PSTS, PATS, PSSPS, PASPS, PSTWB, PATWB, PATSsc, PASPSsc };

/// Case-insensitive name lookup; throws ConfigError for unknown labels.
StateKind parse_state_kind(const std::string& name);
const char* to_string(StateKind kind);
std::vector<StateKind> all_state_kinds();
bool is_joint(StateKind kind);
/// Whether the kind is indexed by a photocount number.
bool is_conditioned(StateKind kind);

/// A model state: exactly one of `single` / `pair` is set.
struct ModelState {
  StateKind kind = StateKind::TS;
  int cbar = 0;
  std::optional<ConditionedState> single;
  std::optional<ConditionedJoint> pair;
  double success_prob() const;
  std::string label() const;
};

/// States of the experimental scheme built from one run configuration.
///
/// TS is the signal marginal of TWB_p; the SPS heralds TWB_p on the idler;
/// subtraction splits at a beam splitter of transmissivity `t` and heralds on
/// the subtraction detector; added light is TWB_a heralded on its idler.
class PaperModel {
 public:
  explicit PaperModel(RunConfig config);
  PaperModel(RunConfig config, const Truncation& truncation);

  const RunConfig& config() const { return config_; }
  const Truncation& truncation() const { return truncation_; }
  const JointPhotonNumberDistribution& twb_p() const { return twb_p_; }
  const JointPhotonNumberDistribution& twb_a() const { return twb_a_; }
  const PhotonNumberDistribution& ts() const { return ts_; }
  const ConditionedState& sps() const { return sps_; }

  /// Heralded light used for addition.
  ConditionedState added(int cbar) const;
  ConditionedState added_sc(int cbar) const;

  ConditionedState psts(int cbar) const;
  ConditionedState pats(int cbar) const;
  ConditionedState pssps(int cbar) const;
  ConditionedState pasps(int cbar) const;
  ConditionedState patssc(int cbar) const;
  ConditionedState paspssc(int cbar) const;
  ConditionedJoint pstwb(int cbar) const;
  ConditionedJoint patwb(int cbar) const;

  /// cbar is ignored for TS, SPS and TWB.
  ModelState build(StateKind kind, int cbar) const;

 private:
  BeamSplitter splitter() const { return {config_.t}; }

  RunConfig config_;
  Truncation truncation_;
  JointPhotonNumberDistribution twb_p_;
  JointPhotonNumberDistribution twb_a_;
  PhotonNumberDistribution ts_;
  ConditionedState sps_;
  PhotonNumberDistribution sps_normalized_;
};

}  // namespace photostat
