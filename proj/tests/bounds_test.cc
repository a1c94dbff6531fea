#include "ecm/bounds.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ecm/errors.h"
#include "oracles.h"

namespace ecm::bounds {
namespace {

TEST(ApUpper, Examples) {
  EXPECT_NEAR(ApUpper(1.0, 0.5), 1.0 + std::log(0.75), 1e-15);
  EXPECT_NEAR(ApUpper(1.0, 0.5), 0.712318, 1e-6);
  EXPECT_NEAR(ApUpper(1.0, 1.0), 0.306853, 1e-6);
  for (double alpha : {1e-3, 1.0, 1e6}) EXPECT_EQ(ApUpper(alpha, 0.0), 1.0);
}

TEST(ApLower, Examples) {
  EXPECT_NEAR(ApLower(1.0, 0.5), 4.0 / 9.0, 1e-15);
  for (double alpha : {1e-3, 1.0, 1e6}) EXPECT_EQ(ApLower(alpha, 0.0), 1.0);
}

TEST(ApLower, BranchesMeetAtTwoThirds) {
  for (double alpha : {1.0 / 6.0, 0.25, 1.0, 7.0, 1e4}) {
    const double r = 1.0 / (6.0 * alpha);
    EXPECT_NEAR(1.0 - std::sqrt(2.0 * alpha * r / 3.0), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR((8.0 / 9.0) / (1.0 + 2.0 * alpha * r), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(ApLower(alpha, r), 2.0 / 3.0, 1e-12);
  }
}

TEST(Bounds, DomainErrors) {
  EXPECT_THROW(ApUpper(0.0, 0.5), ValidationError);
  EXPECT_THROW(ApUpper(-1.0, 0.5), ValidationError);
  EXPECT_THROW(ApUpper(1.0, 1.5), ValidationError);
  EXPECT_THROW(ApLower(1.0, -0.1), ValidationError);
  EXPECT_THROW(ApLower(std::nan(""), 0.1), ValidationError);
  EXPECT_THROW(SlopeM(0.0, SlopeMode::kUpper), ValidationError);
  EXPECT_THROW(ParseSlopeMode("steep"), ValidationError);
}

TEST(Bounds, MatchOracleClosedForms) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> log_alpha(-4.0, 6.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double alpha = std::pow(10.0, log_alpha(rng));
    const double r = unit(rng);
    EXPECT_NEAR(ApUpper(alpha, r), static_cast<double>(oracle::ApUpper(alpha, r)),
                1e-11);
    EXPECT_NEAR(ApLower(alpha, r), static_cast<double>(oracle::ApLower(alpha, r)),
                1e-12);
  }
}

TEST(Bounds, Ordered) {
  for (double alpha : {0.01, 0.1, 1.0, 10.0, 1000.0}) {
    for (int i = 0; i <= 1000; ++i) {
      const double r = i / 1000.0;
      EXPECT_LE(ApLower(alpha, r), ApUpper(alpha, r) + 1e-15)
          << "alpha=" << alpha << " r=" << r;
    }
  }
}

TEST(Bounds, NonIncreasingInRankingErrorAndAlpha) {
  const std::vector<double> alphas = {0.01, 0.05, 0.1, 0.5, 1, 2, 5, 10, 100, 1e3, 1e4};
  for (double alpha : alphas) {
    for (int i = 1; i <= 500; ++i) {
      const double r0 = (i - 1) / 500.0;
      const double r1 = i / 500.0;
      EXPECT_LE(ApUpper(alpha, r1), ApUpper(alpha, r0));
      EXPECT_LE(ApLower(alpha, r1), ApLower(alpha, r0));
    }
  }
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    for (size_t k = 1; k < alphas.size(); ++k) {
      EXPECT_LE(ApUpper(alphas[k], r), ApUpper(alphas[k - 1], r) + 1e-15);
      EXPECT_LE(ApLower(alphas[k], r), ApLower(alphas[k - 1], r));
    }
  }
}

TEST(Envelope, Examples) {
  const BoundEnvelope zero = Envelope(1.0, 0.0);
  EXPECT_EQ(zero.det_lower, 0.0);
  EXPECT_EQ(zero.det_upper, 0.0);
  const BoundEnvelope half = Envelope(1.0, 0.5, SlopeMode::kUpper);
  EXPECT_NEAR(half.det_upper, 5.0 / 9.0, 1e-15);
  EXPECT_LE(half.ap_lower, half.ap_upper);
  EXPECT_EQ(half.slope_mode, SlopeMode::kUpper);
  EXPECT_NEAR(half.slope_m, 19.0 / 27.0, 1e-15);
  EXPECT_EQ(Envelope(1.0, 0.5).slope_mode, SlopeMode::kUpper);
}

TEST(SlopeM, Examples) {
  EXPECT_EQ(SlopeM(3.0, SlopeMode::kUnit), 1.0);
  EXPECT_NEAR(SlopeM(1.0, SlopeMode::kLower), std::log(2.0), 1e-15);
  EXPECT_NEAR(SlopeM(1.0, SlopeMode::kUpper), 19.0 / 27.0, 1e-15);
  EXPECT_NEAR(SlopeM(1e6, SlopeMode::kLower), 1.0, 1e-5);
  EXPECT_NEAR(SlopeM(1e6, SlopeMode::kUpper), 1.0, 1e-5);
}

TEST(SlopeM, MeetModeIsTheTightEnvelopeChord) {
  // Past the crossing the rational branch binds at r = 1.
  EXPECT_NEAR(SlopeM(1.0, SlopeMode::kMeet), 1.0 - (8.0 / 9.0) / 3.0, 1e-15);
  // Below it the square-root branch binds.
  EXPECT_NEAR(SlopeM(0.05, SlopeMode::kMeet), std::sqrt(0.1 / 3.0), 1e-15);
}

TEST(SlopeM, Bracket) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> log_alpha(-4.0, 6.0);
  for (int i = 0; i < 1000; ++i) {
    const double alpha = std::pow(10.0, log_alpha(rng));
    const double lo = SlopeM(alpha, SlopeMode::kLower);
    const double meet = SlopeM(alpha, SlopeMode::kMeet);
    const double hi = SlopeM(alpha, SlopeMode::kUpper);
    EXPECT_LE(lo, meet + 1e-9) << "alpha=" << alpha;
    EXPECT_LE(meet, hi + 1e-9) << "alpha=" << alpha;
  }
}

TEST(SlopeModeName, RoundTrips) {
  for (SlopeMode m : {SlopeMode::kUnit, SlopeMode::kLower, SlopeMode::kUpper,
                      SlopeMode::kMeet}) {
    EXPECT_EQ(ParseSlopeMode(SlopeModeName(m)), m);
  }
}

TEST(BranchMeetPoint, MatchesAnalyticCrossing) {
  for (double alpha : {1.0 / 6.0, 0.2, 1.0, 3.0, 10.0, 1e3, 1e6}) {
    const auto r = BranchMeetPoint(alpha);
    ASSERT_TRUE(r.has_value()) << alpha;
    EXPECT_NEAR(*r, 1.0 / (6.0 * alpha), 1e-11) << alpha;
  }
  EXPECT_FALSE(BranchMeetPoint(0.1).has_value());
  EXPECT_FALSE(BranchMeetPoint(0.01).has_value());
}

TEST(BinaryBoundCheck, Examples) {
  const metrics::ScoreSet set({0.9, 0.4}, {0.5, 0.1});
  const auto a = BinaryBoundCheck(set, 0.45);
  EXPECT_EQ(a.rhs, 1.0);
  EXPECT_EQ(a.ranking_error, 0.25);
  EXPECT_TRUE(a.holds);
  const auto b = BinaryBoundCheck(set, 0.7);
  EXPECT_EQ(b.rhs, 0.5);
  EXPECT_TRUE(b.holds);
  const auto c = BinaryBoundCheck(metrics::ScoreSet({0.8, 0.9}, {0.1, 0.2}), 0.5);
  EXPECT_EQ(c.rhs, 0.0);
  EXPECT_EQ(c.ranking_error, 0.0);
  EXPECT_TRUE(c.holds);
  EXPECT_THROW(BinaryBoundCheck(metrics::ScoreSet({}, {0.2}), 0.5), ValidationError);
}

TEST(BinaryBoundCheck, HoldsAtEveryThreshold) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> k(0, 20);
  std::uniform_int_distribution<size_t> size(1, 60);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> pos(size(rng));
    std::vector<double> neg(size(rng));
    for (double& s : pos) s = k(rng) / 20.0;
    for (double& s : neg) s = k(rng) / 20.0;
    const metrics::ScoreSet set(pos, neg);
    std::vector<double> all = pos;
    all.insert(all.end(), neg.begin(), neg.end());
    for (double s : all) {
      for (double t : {s - 1e-9, s, s + 1e-9}) {
        EXPECT_TRUE(BinaryBoundCheck(set, t).holds) << "t=" << t;
      }
    }
  }
}

TEST(StandardErrors, Values) {
  EXPECT_NEAR(ApStandardError(0.5, 100), 0.05, 1e-15);
  EXPECT_EQ(ApStandardError(1.0, 10), 0.0);
  // Hanley–McNeil at AUC = 1/2 with n⁺ = n⁻ = 1: q1 = 1/3, q2 = 1/3.
  EXPECT_NEAR(RankingStandardError(0.5, 1, 1), 0.5, 1e-15);
  EXPECT_EQ(RankingStandardError(0.0, 50, 50), 0.0);
  EXPECT_THROW(ApStandardError(0.5, 0), ValidationError);
  EXPECT_THROW(RankingStandardError(0.5, 0, 3), ValidationError);
}

TEST(CheckSandwich, PerfectModelCollapses) {
  const auto s = CheckSandwich(10.0, 1.0, 0.0, 0.0, 0.0);
  EXPECT_EQ(s.lower, 1.0);
  EXPECT_EQ(s.upper, 1.0);
  EXPECT_TRUE(s.within);
}

TEST(CheckSandwich, DetectsViolations) {
  EXPECT_FALSE(CheckSandwich(1.0, 0.95, 0.5, 0.001, 0.001).within);
  EXPECT_FALSE(CheckSandwich(1.0, 0.1, 0.5, 0.001, 0.001).within);
  EXPECT_TRUE(CheckSandwich(1.0, 0.6, 0.5, 0.001, 0.001).within);
  // Widening admits a point just outside.
  EXPECT_TRUE(CheckSandwich(1.0, ApUpper(1.0, 0.5) + 0.02, 0.5, 0.01, 0.0).within);
}

TEST(GFunction, MeanAndNodes) {
  GFunction g{{0.0, 1.0, 0.5, 0.5}, 0.5};
  EXPECT_EQ(g.Mean(), 0.5);
  EXPECT_EQ(g.Node(0), 0.125);
  EXPECT_EQ(g.Node(3), 0.875);
}

TEST(VariationalObjective, ConstantG) {
  // g ≡ 1 gives ∫ x/(x+α) dx = 1 - α·ln((1+α)/α).
  GFunction g{std::vector<double>(4000, 1.0), 1.0};
  EXPECT_NEAR(VariationalObjective(g, 2.0), 1.0 - 2.0 * std::log(1.5), 1e-6);
  GFunction zero{std::vector<double>(100, 0.0), 0.0};
  EXPECT_EQ(VariationalObjective(zero, 2.0), 1.0);
}

TEST(ProjectOntoConstraints, FeasibleAndIdempotent) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.3, 0.8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(500);
    for (double& v : p) v = normal(rng);
    const double tau = unit(rng);
    const GFunction g = ProjectOntoConstraints(p, tau);
    EXPECT_NEAR(g.Mean(), tau, 1e-12);
    for (double v : g.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const GFunction again = ProjectOntoConstraints(g.values, tau);
    for (size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(again.values[i], g.values[i], 1e-12);
  }
  EXPECT_THROW(ProjectOntoConstraints({}, 0.5), ValidationError);
  EXPECT_THROW(ProjectOntoConstraints({0.5}, 1.5), ValidationError);
}

TEST(VariationalMinOracle, Examples) {
  EXPECT_NEAR(VariationalMinOracle(1.0, 1.0 / 6.0).objective, 2.0 / 3.0, 1e-3);
  EXPECT_NEAR(VariationalMinOracle(1.0, 0.5).objective, 4.0 / 9.0, 1e-3);
  EXPECT_EQ(VariationalMinOracle(1.0, 0.0).objective, 1.0);
}

TEST(VariationalMinOracle, ResultIsFeasible) {
  const OracleResult r = VariationalMinOracle(5.0, 0.3);
  EXPECT_NEAR(r.g.Mean(), 0.3, 1e-12);
  for (double v : r.g.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_GT(r.iterations, 0);
}

TEST(VariationalMinOracle, NonConvergenceCarriesIterate) {
  MinOracleOptions options;
  options.max_iterations = 1;
  options.relative_tolerance = 0.0;
  try {
    VariationalMinOracle(1.0, 0.5, options);
    FAIL() << "expected OracleConvergenceError";
  } catch (const OracleConvergenceError& e) {
    EXPECT_EQ(e.last_iterate.size(), 2000u);
    EXPECT_NEAR(e.last_iterate.Mean(), 0.5, 1e-12);
    EXPECT_GT(e.gradient_norm, 0.0);
  }
}

TEST(VariationalMaxOracle, Examples) {
  EXPECT_NEAR(VariationalMaxOracle(1.0, 0.5).objective, 0.712318, 1e-3);
  EXPECT_NEAR(VariationalMaxOracle(1.0, 1e-3).objective, 1.0, 1e-3);
  EXPECT_NEAR(VariationalMaxOracle(5.0, 0.2).objective, 1.0 + 5.0 * std::log(1.0 - 0.2 / 6.0),
              1e-3);
}

TEST(Oracles, AgreeWithClosedFormsOnFeasibleGrid) {
  for (double alpha : {0.5, 1.0, 5.0, 50.0}) {
    for (double tau : {0.05, 1.0 / 6.0, 0.3, 0.5, 0.9}) {
      const double upper = ApUpper(alpha, tau);
      const double lower = ApLower(alpha, tau);
      const double max = VariationalMaxOracle(alpha, tau).objective;
      const double min = VariationalMinOracle(alpha, tau).objective;
      EXPECT_NEAR(max, upper, 1e-3) << alpha << " " << tau;
      if (LowerBoundMinimizerFeasible(alpha, tau)) {
        EXPECT_NEAR(min, lower, 1e-3) << alpha << " " << tau;
      } else {
        // The box only removes candidates, so the true minimum can only rise.
        EXPECT_GE(min, lower - 1e-3) << alpha << " " << tau;
      }
      EXPECT_LE(min, max + 1e-9);
    }
  }
}

TEST(LowerBoundMinimizerFeasible, Cases) {
  EXPECT_TRUE(LowerBoundMinimizerFeasible(1.0, 0.5));
  EXPECT_TRUE(LowerBoundMinimizerFeasible(1.0, 1.0 / 6.0));
  EXPECT_FALSE(LowerBoundMinimizerFeasible(1.0, 0.9));
  EXPECT_FALSE(LowerBoundMinimizerFeasible(0.5, 0.9));
}

}  // namespace
}  // namespace ecm::bounds
