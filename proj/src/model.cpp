#include "photostat/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

#include "photostat/errors.hpp"

namespace photostat {

namespace {

constexpr std::array<std::pair<StateKind, const char*>, 11> kNames{{
    {StateKind::TS, "TS"},
    {StateKind::SPS, "SPS"},
    {StateKind::TWB, "TWB"},
    {StateKind::PSTS, "PSTS"},
    {StateKind::PATS, "PATS"},
    {StateKind::PSSPS, "PSSPS"},
    {StateKind::PASPS, "PASPS"},
    {StateKind::PSTWB, "PSTWB"},
    {StateKind::PATWB, "PATWB"},
    {StateKind::PATSsc, "PATSsc"},
    {StateKind::PASPSsc, "PASPSsc"},
}};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

ConditionedState tagged(ConditionedState s, StateKind kind, int cbar) {
  s.label = to_string(kind);
  s.cbar = cbar;
  return s;
}

ConditionedJoint tagged(ConditionedJoint s, StateKind kind, int cbar) {
  s.label = to_string(kind);
  s.cbar = cbar;
  return s;
}

}  // namespace

StateKind parse_state_kind(const std::string& name) {
  const std::string key = lower(name);
  for (const auto& [kind, label] : kNames) {
    if (lower(label) == key) return kind;
  }
  throw ConfigError("unknown state kind '" + name + "'");
}

const char* to_string(StateKind kind) {
  for (const auto& [k, label] : kNames) {
    if (k == kind) return label;
  }
  return "?";
}

std::vector<StateKind> all_state_kinds() {
  std::vector<StateKind> out;
  for (const auto& entry : kNames) out.push_back(entry.first);
  return out;
}

bool is_joint(StateKind kind) {
  return kind == StateKind::TWB || kind == StateKind::PSTWB || kind == StateKind::PATWB;
}

bool is_conditioned(StateKind kind) {
  return kind != StateKind::TS && kind != StateKind::SPS && kind != StateKind::TWB;
}

double ModelState::success_prob() const {
  if (single) return single->success_prob;
  if (pair) return pair->success_prob;
  return 0.0;
}

std::string ModelState::label() const {
  if (!is_conditioned(kind)) return to_string(kind);
  return std::to_string(cbar) + "-" + to_string(kind);
}

PaperModel::PaperModel(RunConfig config) : PaperModel(config, config.truncation) {}

PaperModel::PaperModel(RunConfig config, const Truncation& truncation)
    : config_(std::move(config)), truncation_(truncation) {
  config_.validate();
  truncation_.validate();
  twb_p_ = twb_model(config_.twb_p, truncation_);
  twb_a_ = twb_model(config_.twb_a, truncation_);
  ts_ = marginal(twb_p_, Axis::Signal);
  sps_ = tagged(condition_on_counts(twb_p_, config_.detector(config_.roles.sps_herald), config_.sps_counts, Axis::Idler),
                StateKind::SPS, config_.sps_counts);
  sps_normalized_ = sps_.normalized();
}

ConditionedState PaperModel::added(int cbar) const {
  return condition_on_counts(twb_a_, config_.detector(config_.roles.addition_herald), cbar, Axis::Idler);
}

ConditionedState PaperModel::added_sc(int cbar) const {
  return sc_added_state(config_.twb_a, config_.pair_efficiency(), cbar, truncation_);
}

ConditionedState PaperModel::psts(int cbar) const {
  return tagged(subtract(ts_, splitter(), config_.detector(config_.roles.subtraction), cbar), StateKind::PSTS, cbar);
}

ConditionedState PaperModel::pats(int cbar) const {
  return tagged(add(ts_.normalized(), added(cbar)), StateKind::PATS, cbar);
}

ConditionedState PaperModel::pssps(int cbar) const {
  return tagged(subtract(sps_normalized_, splitter(), config_.detector(config_.roles.subtraction), cbar),
                StateKind::PSSPS, cbar);
}

ConditionedState PaperModel::pasps(int cbar) const {
  return tagged(add(sps_normalized_, added(cbar)), StateKind::PASPS, cbar);
}

ConditionedState PaperModel::patssc(int cbar) const {
  return tagged(add(ts_.normalized(), added_sc(cbar)), StateKind::PATSsc, cbar);
}

ConditionedState PaperModel::paspssc(int cbar) const {
  return tagged(add(sps_normalized_, added_sc(cbar)), StateKind::PASPSsc, cbar);
}

ConditionedJoint PaperModel::pstwb(int cbar) const {
  return tagged(subtract_joint(twb_p_, splitter(), config_.detector(config_.roles.subtraction), cbar, Axis::Signal),
                StateKind::PSTWB, cbar);
}

ConditionedJoint PaperModel::patwb(int cbar) const {
  return tagged(add_joint(twb_p_.normalized(), added(cbar), Axis::Signal), StateKind::PATWB, cbar);
}

ModelState PaperModel::build(StateKind kind, int cbar) const {
  if (cbar < 0) throw InvalidArgument("photocount number must be >= 0");
  ModelState out;
  out.kind = kind;
  out.cbar = is_conditioned(kind) ? cbar : 0;
  switch (kind) {
    case StateKind::TS:
      out.single = ConditionedState{ts_, ts_.total_mass(), "TS", 0};
      break;
    case StateKind::SPS:
      out.single = sps_;
      break;
    case StateKind::TWB:
      out.pair = ConditionedJoint{twb_p_, twb_p_.total_mass(), "TWB", 0};
      break;
    case StateKind::PSTS:
      out.single = psts(cbar);
      break;
    case StateKind::PATS:
      out.single = pats(cbar);
      break;
    case StateKind::PSSPS:
      out.single = pssps(cbar);
      break;
    case StateKind::PASPS:
      out.single = pasps(cbar);
      break;
    case StateKind::PATSsc:
      out.single = patssc(cbar);
      break;
    case StateKind::PASPSsc:
      out.single = paspssc(cbar);
      break;
    case StateKind::PSTWB:
      out.pair = pstwb(cbar);
      break;
    case StateKind::PATWB:
      out.pair = patwb(cbar);
      break;
  }
  return out;
}

}  // namespace photostat
