#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "photostat/detection.hpp"
#include "photostat/errors.hpp"

using namespace photostat;

namespace {
const double kDark = 0.22 / 4536;
}

TEST_SUITE("detection") {
  TEST_CASE("ideal PNR entries") {
    const auto k = ideal_pnr_matrix(0.5, 10);
    CHECK(ideal_pnr_matrix(0.3, 1)(1, 1) == doctest::Approx(0.3));
    CHECK(k(2, 3) == doctest::Approx(0.375).epsilon(1e-15));
    for (int n = 0; n <= 10; ++n) CHECK(k(0, n) == doctest::Approx(std::pow(0.5, n)).epsilon(1e-14));
    CHECK(k(5, 3) == 0.0);
    CHECK_THROWS_AS(ideal_pnr_matrix(1.2, 3), InvalidArgument);
  }

  TEST_CASE("iCCD matrix basics") {
    for (const auto& spec : {DetectorSpec::iccd(0.234, 1512, kDark), DetectorSpec::iccd(0.227, 3024, kDark),
                             DetectorSpec::iccd(0.234, 3024, kDark)}) {
      const auto t = iccd_matrix(spec, 200);
      const Eigen::VectorXd sums = t.matrix().colwise().sum();
      CHECK((sums.array() - 1.0).abs().maxCoeff() < 1e-9);
      CHECK(t.matrix().minCoeff() >= 0.0);
      for (int n : {0, 1, 7, 40}) {
        CHECK(t(0, n) == doctest::Approx(std::pow(1 - kDark, spec.pixels) * std::pow(1 - spec.efficiency, n))
                             .epsilon(1e-12));
      }
    }
  }

  TEST_CASE("alternating form agrees with the recurrence") {
    const auto spec = DetectorSpec::iccd(0.234, 1512, kDark);
    const auto t = iccd_matrix(spec, 30);
    // The c-th difference cancels harder as c grows; the form may decline
    // there, but never disagree.
    int evaluated = 0;
    for (int n : {0, 1, 2, 5, 10, 20, 30}) {
      for (int c = 0; c <= std::min(n + 3, 8); ++c) {
        try {
          const double v = iccd_entry_alternating(spec, c, n);
          CHECK(v == doctest::Approx(t(c, n)).epsilon(1e-9));
          ++evaluated;
        } catch (const PrecisionError&) {
          CHECK(c >= 5);
        }
      }
    }
    CHECK(evaluated >= 40);
    // Cancellation beyond double-double reach is reported, not hidden.
    CHECK_THROWS_AS(iccd_entry_alternating(DetectorSpec::iccd(0.234, 1512, kDark), 90, 200), PrecisionError);
  }

  TEST_CASE("saturation and the ideal limit") {
    const auto small = iccd_matrix(DetectorSpec::iccd(0.9, 4, 0.0), 20);
    CHECK(small.c_max() == 4);
    const auto t = iccd_matrix(DetectorSpec::iccd(0.4, 1000000, 0.0), 50);
    const auto k = ideal_pnr_matrix(0.4, 50);
    double worst = 0.0;
    for (int n = 0; n <= 50; ++n) {
      for (int c = 0; c <= n; ++c) worst = std::max(worst, std::abs(t(c, n) - k(c, n)));
    }
    CHECK(worst < 1e-3);
  }

  TEST_CASE("dark counts never lower the mean photocount") {
    for (int n : {0, 3, 10}) {
      double previous = -1.0;
      for (double d : {0.0, 1e-5, 1e-4, 1e-3, 1e-2}) {
        const auto t = iccd_matrix(DetectorSpec::iccd(0.3, 500, d), n);
        double mean = 0.0;
        for (int c = 0; c <= t.c_max(); ++c) mean += c * t(c, n);
        CHECK(mean >= previous - 1e-12);
        previous = mean;
      }
    }
  }

  TEST_CASE("apply_detector") {
    std::mt19937_64 rng(5);
    const auto p = test::random_distribution(rng, 8);
    CHECK(test::max_abs_diff(apply_detector(p, DetectionMatrix(Eigen::MatrixXd::Identity(8, 8))), p) == 0.0);
    Truncation tr;
    tr.tail_tolerance = 1e-16;
    const auto mr = mandel_rice({3.0, 2.0}, tr);
    const auto out = apply_detector(mr, ideal_pnr_matrix(0.25, mr.cutoff()));
    CHECK(test::max_abs_diff(out, mandel_rice({3.0, 0.5}, tr)) < 1e-9);
    const auto spec = DetectorSpec::iccd(0.234, 1512, kDark);
    const auto dark_only = apply_detector(PhotonNumberDistribution::vacuum(), iccd_matrix(spec, 0));
    CHECK(dark_only[0] == doctest::Approx(std::pow(1 - kDark, 1512)).epsilon(1e-13));
    CHECK(apply_detector(mr, iccd_matrix(spec, mr.cutoff())).total_mass() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(apply_detector(mr, ideal_pnr_matrix(0.5, 3)), InvalidArgument);
  }

  TEST_CASE("sampler edge cases and determinism") {
    const auto clean = DetectorSpec::iccd(0.234, 1512, 0.0);
    std::mt19937_64 rng(1);
    bool all_zero = true;
    for (int k = 0; k < 1000; ++k) all_zero = all_zero && sample_detector(0, clean, rng) == 0;
    CHECK(all_zero);

    const auto wide = DetectorSpec::iccd(0.3, 1000000, 0.0);
    int hits = 0;
    const int trials = 100000;
    for (int k = 0; k < trials; ++k) hits += sample_detector(1, wide, rng);
    const double sigma = std::sqrt(0.3 * 0.7 / trials);
    CHECK(std::abs(hits / double(trials) - 0.3) < 3 * sigma);

    const auto spec = DetectorSpec::iccd(0.234, 1512, kDark);
    CHECK(sample_detector(12, spec, std::uint64_t{99}) == sample_detector(12, spec, std::uint64_t{99}));
  }

  TEST_CASE("memoized matrices are shared") {
    const auto spec = DetectorSpec::iccd(0.234, 1512, kDark);
    CHECK(detection_matrix(spec, 40).get() == detection_matrix(spec, 40).get());
    CHECK(detection_matrix(DetectorSpec::ideal(0.5), 10)->matrix().isApprox(ideal_pnr_matrix(0.5, 10).matrix()));
  }

  TEST_CASE("detector validation") {
    CHECK_THROWS_AS(DetectorSpec::iccd(0.5, 0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(DetectorSpec::iccd(0.5, 10, 1.0), InvalidArgument);
    CHECK_THROWS_AS(DetectorSpec::ideal(-0.1), InvalidArgument);
  }
}
