#include "ecm/metrics.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ecm/errors.h"
#include "oracles.h"

namespace ecm::metrics {
namespace {

ScoreSet Small() { return ScoreSet({0.9, 0.4}, {0.5, 0.1}); }

std::vector<double> Uniform(std::mt19937_64& rng, size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Scores snapped to a coarse grid so that ties are common.
std::vector<double> Coarse(std::mt19937_64& rng, size_t n) {
  std::uniform_int_distribution<int> k(0, 10);
  std::vector<double> v(n);
  for (double& x : v) x = k(rng) / 10.0;
  return v;
}

TEST(ScoreSet, RejectsOutOfRange) {
  EXPECT_THROW(ScoreSet({1.5}, {0.2}), ValidationError);
  EXPECT_THROW(ScoreSet({0.5}, {-0.1}), ValidationError);
  EXPECT_THROW(ScoreSet({std::nan("")}, {0.2}), ValidationError);
}

TEST(RecallAt, Examples) {
  EXPECT_DOUBLE_EQ(RecallAt(Small(), 0.45), 0.5);
  EXPECT_EQ(RecallAt(Small(), 1.0), 0.0);
  EXPECT_EQ(RecallAt(Small(), -1.0), 1.0);
  EXPECT_THROW(RecallAt(ScoreSet({}, {0.3}), 0.5), ValidationError);
}

TEST(PrecisionAt, Examples) {
  EXPECT_DOUBLE_EQ(PrecisionAt(Small(), 0.45, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(PrecisionAt(Small(), 0.45, 3.0), 0.25);
  EXPECT_EQ(PrecisionAt(Small(), 0.6, 7.0), 1.0);
  EXPECT_THROW(PrecisionAt(Small(), 0.95, 1.0), UndefinedPrecisionError);
  EXPECT_THROW(PrecisionAt(Small(), 0.5, 0.0), ValidationError);
}

TEST(AveragePrecision, HandExample) {
  EXPECT_NEAR(AveragePrecision(Small(), 1.0), 5.0 / 6.0, 1e-15);
}

TEST(AveragePrecision, PerfectSeparation) {
  for (double alpha : {0.01, 1.0, 1000.0}) {
    EXPECT_EQ(AveragePrecision(ScoreSet({0.8, 0.9, 1.0}, {0.0, 0.1}), alpha), 1.0);
  }
}

TEST(AveragePrecision, EmptySideThrows) {
  EXPECT_THROW(AveragePrecision(ScoreSet({}, {0.3}), 1.0), ValidationError);
  EXPECT_THROW(AveragePrecision(ScoreSet({0.3}, {}), 1.0), ValidationError);
}

TEST(AveragePrecision, UniformScoresGiveOneHalf) {
  std::mt19937_64 rng(1);
  const size_t n = 100000;
  const ScoreSet set(Uniform(rng, n), Uniform(rng, n));
  const double ap = AveragePrecision(set, 1.0);
  // Each precision term lies in [0,1]; the terms are not independent, so use
  // the conservative bound on the standard error of a mean of [0,1] values.
  const double se = 0.5 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(ap, 0.5, 3.0 * se);
}

TEST(AveragePrecision, MatchesOracle) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<size_t> size(1, 60);
  std::uniform_real_distribution<double> alpha(0.05, 50.0);
  for (int trial = 0; trial < 300; ++trial) {
    auto pos = trial % 2 ? Coarse(rng, size(rng)) : Uniform(rng, size(rng));
    auto neg = trial % 2 ? Coarse(rng, size(rng)) : Uniform(rng, size(rng));
    const double a = alpha(rng);
    const long double want = oracle::AveragePrecision(pos, neg, a);
    EXPECT_NEAR(AveragePrecision(ScoreSet(pos, neg), a), static_cast<double>(want),
                1e-12);
  }
}

TEST(RankingError, Examples) {
  EXPECT_EQ(RankingError(Small()), 0.25);
  EXPECT_EQ(RankingError(ScoreSet({0.8, 0.9}, {0.1, 0.2})), 0.0);
  EXPECT_EQ(RankingError(ScoreSet({0.5}, {0.5})), 0.5);
  EXPECT_EQ(RankingError(ScoreSet({0.5}, {0.5}), TieMode::kStrict), 0.0);
  EXPECT_EQ(RankingError(ScoreSet({0.1, 0.2}, {0.3, 0.9})), 1.0);
  EXPECT_THROW(RankingError(ScoreSet({}, {0.5})), ValidationError);
}

TEST(RankingErrorBruteForce, Examples) {
  EXPECT_EQ(RankingErrorBruteForce(ScoreSet({0.3}, {0.7})), 1.0);
  EXPECT_EQ(RankingErrorBruteForce(Small()), 0.25);
}

TEST(RankingErrorBruteForce, SizeGuard) {
  const std::vector<double> big(10001, 0.5);
  EXPECT_THROW(RankingErrorBruteForce(ScoreSet(big, big)), ResourceError);
}

TEST(RankingError, SortedEqualsBruteForceAndOracle) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<size_t> size(1, 200);
  for (int trial = 0; trial < 1000; ++trial) {
    const bool ties = trial % 2 == 0;
    auto pos = ties ? Coarse(rng, size(rng)) : Uniform(rng, size(rng));
    auto neg = ties ? Coarse(rng, size(rng)) : Uniform(rng, size(rng));
    const ScoreSet set(pos, neg);
    for (TieMode mode : {TieMode::kHalfCredit, TieMode::kStrict}) {
      const double sorted = RankingError(set, mode);
      EXPECT_EQ(sorted, RankingErrorBruteForce(set, mode));
      EXPECT_NEAR(sorted,
                  static_cast<double>(
                      oracle::RankingError(pos, neg, mode == TieMode::kStrict)),
                  1e-15);
    }
  }
}

TEST(RankingError, SwapComplements) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const ScoreSet set(Coarse(rng, 1 + trial % 37), Coarse(rng, 1 + trial % 23));
    EXPECT_NEAR(RankingError(set.Swapped()), 1.0 - RankingError(set), 1e-15);
  }
}

TEST(Metrics, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(6);
  auto cube = [](double x) { return x * x * x; };
  auto affine = [](double x) { return (x + 1.0) / 2.0; };
  for (int trial = 0; trial < 100; ++trial) {
    auto pos = Coarse(rng, 40);
    auto neg = Uniform(rng, 55);
    const ScoreSet base(pos, neg);
    for (int which = 0; which < 2; ++which) {
      auto p = pos;
      auto n = neg;
      for (double& x : p) x = which ? affine(x) : cube(x);
      for (double& x : n) x = which ? affine(x) : cube(x);
      const ScoreSet moved(p, n);
      EXPECT_DOUBLE_EQ(RankingError(moved), RankingError(base));
      EXPECT_DOUBLE_EQ(AveragePrecision(moved, 2.5), AveragePrecision(base, 2.5));
    }
  }
}

TEST(Metrics, RangeProperties) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> alpha(1e-3, 1e3);
  for (int trial = 0; trial < 300; ++trial) {
    const ScoreSet set(Coarse(rng, 1 + trial % 17), Uniform(rng, 1 + trial % 29));
    const double ap = AveragePrecision(set, alpha(rng));
    const double r = RankingError(set);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
}

TEST(PrCurve, HandExample) {
  const auto curve = PrCurve(Small(), 1.0);
  ASSERT_GE(curve.points.size(), 3u);
  ASSERT_LE(curve.points.size(), 4u);
  bool half = false;
  bool full = false;
  for (size_t i = 0; i < curve.points.size(); ++i) {
    half = half || curve.points[i].recall == 0.5;
    full = full || curve.points[i].recall == 1.0;
    if (i > 0) EXPECT_LT(curve.points[i].threshold, curve.points[i - 1].threshold);
  }
  EXPECT_TRUE(half);
  EXPECT_TRUE(full);
  EXPECT_EQ(curve.points.front().precision, 1.0);
}

TEST(PrCurve, PerfectSeparation) {
  const auto curve = PrCurve(ScoreSet({0.7, 0.8, 0.9}, {0.1, 0.2}), 4.0);
  for (const auto& p : curve.points) {
    if (p.threshold >= 0.7) EXPECT_EQ(p.precision, 1.0);
  }
  const auto single = PrCurve(ScoreSet({0.9}, {0.2}), 1.0);
  ASSERT_FALSE(single.points.empty());
  EXPECT_EQ(single.points.front().recall, 1.0);
  EXPECT_EQ(single.points.front().precision, 1.0);
}

TEST(ParseScoreCsv, ReadsLabels) {
  const ScoreSet set = ParseScoreCsv("score,label\n0.9,1\n0.5,0\n0.4,1\n0.1,0\n");
  ASSERT_EQ(set.positives().size(), 2u);
  ASSERT_EQ(set.negatives().size(), 2u);
  EXPECT_EQ(RankingError(set), 0.25);
}

TEST(ParseScoreCsv, Errors) {
  EXPECT_THROW(ParseScoreCsv("s,l\n0.1,1\n"), InputError);
  EXPECT_THROW(ParseScoreCsv("score,label\n0.1,2\n"), InputError);
  EXPECT_THROW(ParseScoreCsv("score,label\nabc,1\n"), InputError);
  EXPECT_THROW(ParseScoreCsv("score,label\n0.1\n"), InputError);
  EXPECT_THROW(ParseScoreCsv(""), InputError);
}

}  // namespace
}  // namespace ecm::metrics
