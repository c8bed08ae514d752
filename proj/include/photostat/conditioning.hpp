#pragma once

#include <string>

#include <Eigen/Dense>

#include "photostat/core_dist.hpp"
#include "photostat/detection.hpp"

namespace photostat {

struct BeamSplitter {
  double transmissivity = 0.5;

  void validate() const;
};

/// Post-selected state: joint probability of (photon number, heralding
/// outcome) plus the outcome's success probability.
struct ConditionedState {
  PhotonNumberDistribution joint;
  double success_prob = 0.0;
  std::string label;
  int cbar = 0;

  PhotonNumberDistribution normalized() const;
};

/// Two-beam counterpart of ConditionedState.
struct ConditionedJoint {
  JointPhotonNumberDistribution joint;
  double success_prob = 0.0;
  std::string label;
  int cbar = 0;

  JointPhotonNumberDistribution normalized() const;
};

/// Default floor below which a heralding outcome counts as unsupported.
inline constexpr double kDefaultSuccessFloor = 1e-15;

/// Heralds on c photocounts registered by `det` on the `detected` beam; the
/// returned state lives on the other beam.
ConditionedState condition_on_counts(const JointPhotonNumberDistribution& joint, const DetectorSpec& det, int c,
                                     Axis detected = Axis::Idler, double floor = kDefaultSuccessFloor);

/// Photon subtraction: split at the beam splitter, herald on cbar photocounts in the reflected arm.
ConditionedState subtract(const PhotonNumberDistribution& p, const BeamSplitter& bs, const DetectorSpec& det,
                          int cbar, double floor = kDefaultSuccessFloor);

/// Success probabilities of every photocount outcome of subtract(), c = 0..c_max.
Eigen::VectorXd subtraction_outcome_probabilities(const PhotonNumberDistribution& p, const BeamSplitter& bs,
                                                  const DetectorSpec& det, int c_max);

/// Photon addition: p convolved with the heralded state. p must be normalized.
ConditionedState add(const PhotonNumberDistribution& p, const ConditionedState& added);

/// Subtraction acting on one beam of a joint distribution.
ConditionedJoint subtract_joint(const JointPhotonNumberDistribution& joint, const BeamSplitter& bs,
                                const DetectorSpec& det, int cbar, Axis axis = Axis::Signal,
                                double floor = kDefaultSuccessFloor);

/// Addition acting on one beam of a joint distribution. The joint must be normalized.
ConditionedJoint add_joint(const JointPhotonNumberDistribution& joint, const ConditionedState& added,
                           Axis axis = Axis::Signal);

/// Spatially-correlated heralding: an exact Fock state |cbar>, produced with
/// the probability of registering cbar pair coincidences at efficiency eta_pair.
ConditionedState sc_added_state(const TwinBeamParams& params, double eta_pair, int cbar,
                                const Truncation& truncation = {}, double floor = kDefaultSuccessFloor);

/// Mean of the subtracted thermal state: t B (M + cbar) / (1 + (1-t) eta B).
double pst_mean_closed_form(double modes, double mean_per_mode, double t, double eta, int cbar);

/// Fano factor of the subtracted thermal state: 1 + t B / (1 + (1-t) eta B).
double pst_fano_closed_form(double modes, double mean_per_mode, double t, double eta, int cbar);

}  // namespace photostat
