#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "photostat/conditioning.hpp"
#include "photostat/errors.hpp"
#include "photostat/metrics.hpp"

using namespace photostat;
using photostat::test::max_abs_diff;

namespace {
const double kDark = 0.22 / 4536;
const TwinBeamParams kTwbP{{60.6, 0.084}, {0.001, 14.4}, {0.04, 0.75}};
}  // namespace

TEST_SUITE("conditioning") {
  TEST_CASE("heralding an ideal twin beam gives Fock states") {
    const auto j = ideal_twb({1.0, 1.0});
    for (int k = 0; k <= 4; ++k) {
      const auto s = condition_on_counts(j, DetectorSpec::ideal(1.0), k);
      CHECK(s.normalized()[k] == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(s.success_prob == doctest::Approx(std::ldexp(1.0, -(k + 1))).epsilon(1e-12));
      CHECK(s.joint.total_mass() == doctest::Approx(s.success_prob).epsilon(1e-10));
    }
  }

  TEST_CASE("post-selection is complete") {
    const auto j = twb_model(kTwbP);
    const auto det = DetectorSpec::iccd(0.227, 3024, kDark);
    double total = 0.0;
    for (int c = 0; c <= 60; ++c) total += condition_on_counts(j, det, c, Axis::Idler, 0.0).success_prob;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    const auto ts = marginal(j, Axis::Signal).normalized();
    const auto sub = DetectorSpec::iccd(0.234, 1512, kDark);
    const Eigen::VectorXd outcomes = subtraction_outcome_probabilities(ts, {0.5}, sub, 60);
    CHECK(outcomes.sum() == doctest::Approx(1.0).epsilon(1e-9));
    for (int c = 0; c <= 3; ++c) {
      CHECK(subtract(ts, {0.5}, sub, c).success_prob == doctest::Approx(outcomes[c]).epsilon(1e-12));
    }
  }

  TEST_CASE("main-text sub-Poissonian state") {
    const auto s = condition_on_counts(twb_model(kTwbP), DetectorSpec::iccd(0.227, 3024, kDark), 2);
    const double f = fano(s.normalized());
    CHECK(f >= 0.74);
    CHECK(f <= 0.94);
  }

  TEST_CASE("subtraction at full transmission") {
    const auto p = mandel_rice({46.8, 0.12});
    const auto det = DetectorSpec::iccd(0.234, 1512, kDark);
    const auto s = subtract(p, {1.0}, det, 0);
    CHECK(max_abs_diff(s.normalized(), p.normalized()) < 1e-14);
    CHECK(s.success_prob == doctest::Approx(std::pow(1 - kDark, 1512)).epsilon(1e-12));
    CHECK_THROWS_AS(subtract(p, {1.0}, DetectorSpec::ideal(1.0), 1), NoSupportError);
  }

  TEST_CASE("subtracted thermal mean and Fano closed forms") {
    const auto p = mandel_rice({1.0, 1.0}, Truncation{1e-16});
    for (int c = 0; c <= 2; ++c) {
      const auto s = subtract(p, {0.5}, DetectorSpec::ideal(1.0), c).normalized();
      CHECK(s.mean() == doctest::Approx((1.0 + c) / 3.0).epsilon(1e-9));
    }
    CHECK(pst_mean_closed_form(1, 1, 0.5, 1, 2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pst_fano_closed_form(1, 1, 0.5, 1, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(pst_fano_closed_form(7, 0.3, 0.7, 0.5, 0) == pst_fano_closed_form(7, 0.3, 0.7, 0.5, 5));
    CHECK(pst_fano_closed_form(7, 0.3, 1.0, 0.5, 2) == doctest::Approx(1.3).epsilon(1e-15));
    CHECK(pst_mean_closed_form(7, 0.3, 1.0, 0.5, 0) == doctest::Approx(2.1).epsilon(1e-15));
    // Single-mode, perfect detection, t -> 1: one subtracted photon doubles the mean.
    CHECK(pst_mean_closed_form(1, 0.8, 1.0, 1.0, 1) == doctest::Approx(2 * 0.8).epsilon(1e-15));
  }

  TEST_CASE("ideal Fock addition") {
    for (const auto& p : {mandel_rice({46.8, 0.12}),
                          condition_on_counts(twb_model(kTwbP), DetectorSpec::iccd(0.227, 3024, kDark), 2)
                              .normalized()}) {
      for (int k = 1; k <= 3; ++k) {
        const ConditionedState fock{PhotonNumberDistribution::fock(k), 1.0, "fock", k};
        const auto a = add(p, fock);
        CHECK(a.success_prob == 1.0);
        CHECK(a.normalized().mean() == doctest::Approx(p.mean() + k).epsilon(1e-13));
        CHECK(a.normalized()[k] == doctest::Approx(p[0]).epsilon(1e-13));
        CHECK(fano(a.normalized()) == doctest::Approx(p.mean() / (p.mean() + k) * fano(p)).epsilon(1e-12));
      }
      const ConditionedState vac{PhotonNumberDistribution::vacuum(), 1.0, "vac", 0};
      CHECK(max_abs_diff(add(p, vac).normalized(), p.normalized()) < 1e-15);
    }
  }

  TEST_CASE("joint subtraction and addition") {
    const auto j = twb_model(kTwbP);
    const auto det = DetectorSpec::iccd(0.234, 1512, kDark);
    const auto full = subtract_joint(j, {1.0}, det, 0);
    CHECK((full.normalized().probs() - j.normalized().probs()).cwiseAbs().maxCoeff() < 1e-14);

    const auto none = subtract_joint(j, {0.5}, det, 0).normalized();
    double previous_i = marginal(none, Axis::Idler).mean();
    double previous_s = marginal(none, Axis::Signal).mean();
    for (int c = 1; c <= 3; ++c) {
      const auto s = subtract_joint(j, {0.5}, det, c).normalized();
      const double mi = marginal(s, Axis::Idler).mean();
      const double ms = marginal(s, Axis::Signal).mean();
      CHECK(mi > previous_i);
      CHECK(ms > previous_s);
      CHECK(ms - previous_s < mi - previous_i);
      previous_i = mi;
      previous_s = ms;
    }

    const auto added = condition_on_counts(twb_model({{1740.0, 0.001}, {0.0, 0.0}, {0.34, 0.94}}),
                                           DetectorSpec::iccd(0.227, 3024, kDark), 1);
    const auto a = add_joint(j.normalized(), added);
    CHECK(max_abs_diff(marginal(a.normalized(), Axis::Idler), marginal(j.normalized(), Axis::Idler)) < 1e-15);
    CHECK(marginal(a.normalized(), Axis::Signal).mean() ==
          doctest::Approx(marginal(j, Axis::Signal).mean() + added.normalized().mean()).epsilon(1e-10));
    const ConditionedState vac{PhotonNumberDistribution::vacuum(), 1.0, "vac", 0};
    CHECK((add_joint(j, vac).joint.probs() - j.probs()).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("spatially-correlated added light") {
    const TwinBeamParams a{{1740.0, 0.001}, {0.0, 0.0}, {0.34, 0.94}};
    for (int c = 0; c <= 3; ++c) {
      const auto s = sc_added_state(a, 0.234 * 0.227, c);
      CHECK(s.normalized()[c] == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(s.normalized().variance() == doctest::Approx(0.0).scale(1e-12));
    }
    const TwinBeamParams faint{{1.0, 1e-9}, {0.0, 0.0}, {0.0, 0.0}};
    CHECK(sc_added_state(faint, 0.5, 0).success_prob == doctest::Approx(1.0).epsilon(1e-8));
    CHECK_THROWS_AS(sc_added_state(a, 0.0, 1), InvalidArgument);
  }

  TEST_CASE("argument checks") {
    const auto p = mandel_rice({1.0, 1.0});
    CHECK_THROWS_AS(subtract(p, {1.5}, DetectorSpec::ideal(1.0), 0), InvalidArgument);
    CHECK_THROWS_AS(subtract(p, {0.5}, DetectorSpec::ideal(1.0), -1), InvalidArgument);
    CHECK_THROWS_AS(condition_on_counts(ideal_twb({1.0, 1.0}), DetectorSpec::ideal(1.0), -2), InvalidArgument);
  }
}
