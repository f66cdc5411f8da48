#include "parley/edt.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace {

using parley::Categorical;
using parley::EdtCheck;
using parley::PairingOptions;
using parley::PairingReport;

TEST(EdtCheck, IdenticalDistributionsMeetJensenWithEquality) {
  Categorical p = parley::new_categorical({"a", "b", "c"}, {0.2, 0.5, 0.3});
  for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    EdtCheck check = parley::edt_check(p, p, alpha);
    EXPECT_NEAR(check.h_c, check.jensen_bound, 1e-12);
    EXPECT_NEAR(check.entropy_gap, 0.0, 1e-12);
    EXPECT_TRUE(check.satisfied());
  }
}

TEST(EdtCheck, UniformAgainstPointMassWorkedExample) {
  Categorical uniform =
      parley::new_categorical({"a", "b", "c", "d"}, {1, 1, 1, 1});
  Categorical point = parley::new_categorical({"a", "b", "c", "d"},
                                              {1.0, 0.0, 0.0, 0.0});
  EdtCheck check = parley::edt_check(uniform, point, 0.6);

  // The mixture is (0.55, 0.15, 0.15, 0.15); evaluate its entropy directly.
  double expected_h_c =
      -(0.55 * std::log2(0.55) + 3.0 * 0.15 * std::log2(0.15));
  EXPECT_NEAR(check.h_c, expected_h_c, 1e-12);
  EXPECT_NEAR(check.h_c, 1.706, 0.001);
  EXPECT_NEAR(check.h_a, 2.0, 1e-12);
  EXPECT_NEAR(check.h_b, 0.0, 1e-12);
  EXPECT_NEAR(check.jensen_bound, 1.2, 1e-12);
  EXPECT_NEAR(check.gap_bound, 1.2, 1e-12);
  EXPECT_NEAR(check.entropy_gap, 2.0, 1e-12);
  EXPECT_TRUE(check.satisfied());
  EXPECT_GE(check.h_c, check.jensen_bound);
}

TEST(EdtCheck, EndpointAlphasCollapseToOneSide) {
  Categorical a = parley::new_categorical({"x", "y"}, {0.9, 0.1});
  Categorical b = parley::new_categorical({"x", "y"}, {0.5, 0.5});
  EdtCheck at_one = parley::edt_check(a, b, 1.0);
  EXPECT_NEAR(at_one.h_c, at_one.h_a, 1e-12);
  EXPECT_NEAR(at_one.h_c, at_one.jensen_bound, 1e-12);
  EdtCheck at_zero = parley::edt_check(a, b, 0.0);
  EXPECT_NEAR(at_zero.h_c, at_zero.h_b, 1e-12);
  EXPECT_NEAR(at_zero.h_c, at_zero.jensen_bound, 1e-12);
}

TEST(EdtCheck, DisjointSupportsStillSatisfyTheBound) {
  Categorical a = parley::new_categorical({"x", "y"}, {0.7, 0.3});
  Categorical b = parley::new_categorical({"u", "v", "w"}, {0.5, 0.25, 0.25});
  EdtCheck check = parley::edt_check(a, b, 0.4);
  EXPECT_TRUE(check.satisfied());
  // Mixing disjoint supports adds choice entropy on top of the mean.
  EXPECT_GT(check.h_c, check.jensen_bound + 0.5);
}

TEST(EdtCheck, BoundHoldsOnAThousandRandomPairs) {
  parley::Rng rng(20240801);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 2 + rng.below(5);
    Categorical a = testsup::random_categorical(rng, n, trial % 3 == 0);
    Categorical b = testsup::random_categorical(rng, n, trial % 5 == 0);
    for (int i = 0; i < 11; ++i) {
      double alpha = i / 10.0;
      EdtCheck check = parley::edt_check(a, b, alpha);
      EXPECT_TRUE(check.jensen_satisfied)
          << "trial " << trial << " alpha " << alpha << ": h_c " << check.h_c
          << " < " << check.jensen_bound;
      EXPECT_TRUE(check.gap_satisfied);
      // The two bound forms are the same number written two ways.
      EXPECT_NEAR(check.jensen_bound, check.gap_bound, 1e-9);
    }
  }
}

TEST(SweepAlpha, GridCoversZeroToOneInclusive) {
  Categorical a = parley::new_categorical({"x", "y"}, {0.9, 0.1});
  Categorical b = parley::new_categorical({"x", "y"}, {0.5, 0.5});
  auto checks = parley::sweep_alpha(a, b, 5);
  ASSERT_EQ(checks.size(), 5u);
  EXPECT_EQ(checks.front().alpha, 0.0);
  EXPECT_NEAR(checks[1].alpha, 0.25, 1e-12);
  EXPECT_EQ(checks.back().alpha, 1.0);
  EXPECT_THROW(parley::sweep_alpha(a, b, 1), parley::error);
}

TEST(SweepAlpha, GapBoundRisesWithAlphaWhenAIsMoreUncertain) {
  Categorical a = parley::new_categorical({"x", "y"}, {0.5, 0.5});  // 1 bit
  Categorical b = parley::new_categorical({"x", "y"}, {0.9, 0.1});
  auto checks = parley::sweep_alpha(a, b, 11);
  for (std::size_t i = 1; i < checks.size(); ++i) {
    EXPECT_GT(checks[i].gap_bound, checks[i - 1].gap_bound);
    EXPECT_TRUE(checks[i].satisfied());
  }
}

TEST(SweepAlpha, GapBoundConstantWhenEntropiesMatch) {
  Categorical a = parley::new_categorical({"x", "y"}, {0.9, 0.1});
  Categorical b = parley::new_categorical({"x", "y"}, {0.1, 0.9});
  auto checks = parley::sweep_alpha(a, b, 11);
  for (const auto& check : checks) {
    EXPECT_NEAR(check.gap_bound, checks.front().gap_bound, 1e-12);
    EXPECT_TRUE(check.satisfied());
  }
}

TEST(SimulatePairing, RejectsInvalidTargets) {
  PairingOptions options;
  options.n_trials = 4;
  options.entropy_hi = 0.5;
  options.entropy_lo = 0.5;
  EXPECT_THROW(parley::simulate_pairing(options), parley::error);
  options.entropy_hi = 0.4;
  EXPECT_THROW(parley::simulate_pairing(options), parley::error);
  options.entropy_hi = std::log2(5.0) + 0.1;
  options.entropy_lo = 0.5;
  EXPECT_THROW(parley::simulate_pairing(options), parley::error);
  options.entropy_hi = 2.0;
  options.entropy_lo = -0.1;
  EXPECT_THROW(parley::simulate_pairing(options), parley::error);
  options.entropy_lo = 0.5;
  options.n_labels = 1;
  EXPECT_THROW(parley::simulate_pairing(options), parley::error);
  options.n_labels = 5;
  options.n_trials = 0;
  EXPECT_THROW(parley::simulate_pairing(options), parley::error);
}

TEST(SimulatePairing, BitForBitReproducibleFromTheSeed) {
  PairingOptions options;
  options.n_trials = 64;
  PairingReport one = parley::simulate_pairing(options);
  PairingReport two = parley::simulate_pairing(options);
  EXPECT_EQ(one.accuracy_contrasting, two.accuracy_contrasting);
  EXPECT_EQ(one.accuracy_matched, two.accuracy_matched);
  EXPECT_EQ(one.mean_entropy_gap, two.mean_entropy_gap);
  EXPECT_EQ(nlohmann::json(one).dump(), nlohmann::json(two).dump());

  options.seed = 8;
  PairingReport other = parley::simulate_pairing(options);
  EXPECT_NE(nlohmann::json(other).dump(), nlohmann::json(one).dump());
}

TEST(SimulatePairing, NearlyEqualTargetsEraseTheContrast) {
  // The degenerate limit entropy_hi == entropy_lo is rejected up front, so
  // probe just inside it: with paired seeds the two arms then run all but
  // identical debates and recover the truth on exactly the same trials.
  PairingOptions options;
  options.n_trials = 300;
  options.entropy_hi = 1.250001;
  options.entropy_lo = 1.25;
  PairingReport report = parley::simulate_pairing(options);
  EXPECT_NEAR(report.accuracy_contrasting, report.accuracy_matched, 0.004);
  EXPECT_NEAR(report.mean_entropy_gap, 0.0, 0.001);
}

TEST(SimulatePairing, FrozenBlendIgnoresTheEvidencePull) {
  // eta = 0 keeps both distributions at their opening values, so the
  // evidence term (which only enters through blending) cannot matter.
  PairingOptions options;
  options.n_trials = 200;
  options.eta = 0.0;
  options.truth_affinity = 0.0;
  PairingReport untouched = parley::simulate_pairing(options);
  options.truth_affinity = 50.0;
  PairingReport pulled = parley::simulate_pairing(options);
  EXPECT_EQ(untouched.accuracy_contrasting, pulled.accuracy_contrasting);
  EXPECT_EQ(untouched.accuracy_matched, pulled.accuracy_matched);
}

TEST(SimulatePairing, DefaultsFavorTheContrastingPair) {
  PairingReport report = parley::simulate_pairing(PairingOptions{});
  EXPECT_EQ(report.trials, 2000);
  EXPECT_EQ(report.seed, 7u);
  EXPECT_GT(report.accuracy_contrasting, report.accuracy_matched);
  EXPECT_GE(report.accuracy_contrasting, 0.0);
  EXPECT_LE(report.accuracy_contrasting, 1.0);
  EXPECT_GE(report.accuracy_matched, 0.0);
  EXPECT_LE(report.accuracy_matched, 1.0);
  // Opening gap realizes the 2.0 vs 0.5 bit targets.
  EXPECT_NEAR(report.mean_entropy_gap, 1.5, 0.02);
  EXPECT_GT(report.se_contrasting, 0.0);
  EXPECT_LT(report.se_contrasting, 0.02);
  EXPECT_GT(report.se_matched, 0.0);
  EXPECT_LT(report.se_matched, 0.02);
}

}  // namespace
