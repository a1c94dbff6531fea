#include "ecm/verify.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

#include "ecm/bounds.h"
#include "ecm/ecm_loss.h"
#include "ecm/errors.h"
#include "ecm/margins.h"
#include "ecm/metrics.h"
#include "ecm/random.h"

namespace ecm::verify {
namespace {

constexpr size_t kMaxExamples = 5;

struct TrialOutcome {
  int64_t checks = 0;
  int64_t failures = 0;
  double deviation = 0.0;
  std::string example;  // first failure of this trial
};

// Runs trial(i) for i in [0, n) across workers. Each trial draws from its own
// seed stream and outcomes are reduced in index order, so the result is
// independent of the worker count.
SuiteResult RunTrials(std::string name, int64_t n, unsigned workers,
                      const std::function<TrialOutcome(int64_t)>& trial) {
  std::vector<TrialOutcome> outcomes(static_cast<size_t>(std::max<int64_t>(n, 0)));
  unsigned count = workers == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                : workers;
  count = static_cast<unsigned>(
      std::min<int64_t>(count, std::max<int64_t>(1, n)));
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < count; ++w) {
    pool.emplace_back([&, w] {
      for (int64_t i = w; i < n; i += count) {
        outcomes[static_cast<size_t>(i)] = trial(i);
      }
    });
  }
  pool.clear();  // joins

  SuiteResult result;
  result.name = std::move(name);
  for (const auto& o : outcomes) {
    result.checks += o.checks;
    result.failures += o.failures;
    result.max_deviation = std::max(result.max_deviation, o.deviation);
    if (o.failures > 0 && result.examples.size() < kMaxExamples) {
      result.examples.push_back(o.example);
    }
  }
  return result;
}

void Record(SuiteResult& r, bool ok, double deviation, const std::string& what) {
  ++r.checks;
  r.max_deviation = std::max(r.max_deviation, deviation);
  if (!ok) {
    ++r.failures;
    if (r.examples.size() < kMaxExamples) r.examples.push_back(what);
  }
}

void Record(TrialOutcome& o, bool ok, double deviation, const std::string& what) {
  ++o.checks;
  o.deviation = std::max(o.deviation, deviation);
  if (!ok) {
    if (o.failures == 0) o.example = what;
    ++o.failures;
  }
}

std::string Fmt(double v) {
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

double LogUniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

double SampleBeta(std::mt19937_64& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

// Random score set with deliberate ties: half of the draws snap scores to a
// coarse grid.
metrics::ScoreSet RandomScoreSet(std::mt19937_64& rng, int max_per_side) {
  std::uniform_int_distribution<int> size(1, max_per_side);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coarse(0.5);
  const bool snap = coarse(rng);
  const double shift = unit(rng) * 0.4;
  auto draw = [&](int n, double offset) {
    std::vector<double> v(static_cast<size_t>(n));
    for (double& s : v) {
      s = std::clamp(unit(rng) * 0.8 + offset, 0.0, 1.0);
      if (snap) s = std::round(s * 10.0) / 10.0;
    }
    return v;
  };
  const int n_pos = size(rng);
  const int n_neg = size(rng);
  auto pos = draw(n_pos, shift);
  auto neg = draw(n_neg, 0.0);
  return metrics::ScoreSet(std::move(pos), std::move(neg));
}

margins::MarginWeights RandomWeights(std::mt19937_64& rng) {
  priors::ClassStats stats;
  stats.n_plus = static_cast<int64_t>(std::llround(LogUniform(rng, 1.0, 1e9)));
  stats.n_minus = static_cast<int64_t>(std::llround(LogUniform(rng, 1.0, 1e9)));
  stats.alpha = static_cast<double>(stats.n_minus) / static_cast<double>(stats.n_plus);
  return margins::Weights(margins::OptimalMargins(stats));
}

using LossFn = std::function<loss::LossEval(double)>;

// Central difference with h = 1e-5; relative 1e-6, absolute 1e-9 for tiny
// gradients.
bool GradientMatches(const LossFn& fn, double f, double* deviation) {
  constexpr double h = 1e-5;
  const double analytic = fn(f).grad_logit;
  const double numeric = (fn(f + h).value - fn(f - h).value) / (2.0 * h);
  const double err = std::abs(analytic - numeric);
  if (std::abs(analytic) < 1e-3) {
    *deviation = err;
    return err <= 1e-9;
  }
  *deviation = err / std::abs(analytic);
  return *deviation <= 1e-6;
}

}  // namespace

const std::vector<std::string>& SuiteNames() {
  static const std::vector<std::string> names = {
      "meet",      "bounds",    "oracles",   "margins", "boundary",
      "gradients", "estimator", "binary",    "slope"};
  return names;
}

std::vector<SuiteResult> RunSuite(std::string_view name,
                                  const VerifyOptions& options) {
  if (options.trials < 1) throw ValidationError("trials must be ≥ 1");
  if (name == "all") {
    std::vector<SuiteResult> all;
    for (const auto& n : SuiteNames()) {
      auto one = RunSuite(n, options);
      all.insert(all.end(), one.begin(), one.end());
    }
    return all;
  }
  if (name == "meet") return {MeetPointSuite()};
  if (name == "bounds") return {BoundSandwichSuite(options)};
  if (name == "oracles") return {VariationalOracleSuite()};
  if (name == "margins") return {MarginOptimalitySuite(options)};
  if (name == "boundary") return {DecisionBoundarySuite(options)};
  if (name == "gradients") return {GradientSuite(options)};
  if (name == "estimator") return {EstimatorSuite(options)};
  if (name == "binary") return {BinaryBoundSuite(options)};
  if (name == "slope") return {SlopeBracketSuite(options)};
  throw ValidationError("unknown suite '" + std::string(name) + "'");
}

SuiteResult MeetPointSuite() {
  SuiteResult r;
  r.name = "meet";
  for (double alpha : {1.0 / 6.0, 0.5, 1.0, 3.0, 10.0, 1000.0}) {
    const double rk = 1.0 / (6.0 * alpha);
    const double sqrt_branch = 1.0 - std::sqrt(2.0 * alpha * rk / 3.0);
    const double rational_branch = (8.0 / 9.0) / (1.0 + 2.0 * alpha * rk);
    const double dev = std::max({std::abs(sqrt_branch - 2.0 / 3.0),
                                 std::abs(rational_branch - 2.0 / 3.0),
                                 std::abs(bounds::ApLower(alpha, rk) - 2.0 / 3.0)});
    Record(r, dev <= 1e-12, dev, "alpha=" + Fmt(alpha) + " branches off 2/3 by " + Fmt(dev));
    const auto meet = bounds::BranchMeetPoint(alpha);
    const double meet_dev = meet ? std::abs(*meet - rk) : 1.0;
    Record(r, meet_dev <= 1e-9, 0.0,
           "alpha=" + Fmt(alpha) + " bisection meet point off by " + Fmt(meet_dev));
  }
  return r;
}

SuiteResult BoundSandwichSuite(const VerifyOptions& options) {
  static constexpr std::array<double, 4> kAlphas = {0.1, 1.0, 10.0, 1000.0};
  return RunTrials(
      "bounds", options.trials, options.workers, [&](int64_t i) {
        std::mt19937_64 rng(StreamSeed(options.seed, static_cast<uint64_t>(i)));
        const double alpha = kAlphas[static_cast<size_t>(i) % kAlphas.size()];
        std::uniform_real_distribution<double> shape(0.3, 6.0);
        std::uniform_int_distribution<int> size(50, 1000);
        const double a1 = shape(rng), b1 = shape(rng);
        const double a2 = shape(rng), b2 = shape(rng);
        std::vector<double> pos(static_cast<size_t>(size(rng)));
        std::vector<double> neg(static_cast<size_t>(size(rng)));
        for (double& s : pos) s = SampleBeta(rng, a1, b1);
        for (double& s : neg) s = SampleBeta(rng, a2, b2);
        const int64_t n_pos = static_cast<int64_t>(pos.size());
        const int64_t n_neg = static_cast<int64_t>(neg.size());
        const metrics::ScoreSet set(std::move(pos), std::move(neg));
        const double ap = metrics::AveragePrecision(set, alpha);
        const double r = metrics::RankingError(set);
        const auto check = bounds::CheckSandwich(
            alpha, ap, r, bounds::ApStandardError(ap, n_pos),
            bounds::RankingStandardError(r, n_pos, n_neg));
        TrialOutcome o;
        const double excess =
            std::max({0.0, check.lower - ap, ap - check.upper});
        Record(o, check.within, excess,
               "trial " + std::to_string(i) + " alpha=" + Fmt(alpha) + " ap=" + Fmt(ap) +
                   " R=" + Fmt(r) + " envelope=[" + Fmt(check.lower) + ", " +
                   Fmt(check.upper) + "]");
        return o;
      });
}

SuiteResult VariationalOracleSuite() {
  SuiteResult r;
  r.name = "oracles";
  for (double alpha : {0.5, 1.0, 5.0, 50.0}) {
    for (double tau : {0.05, 1.0 / 6.0, 0.3, 0.5, 0.9}) {
      const std::string where = "alpha=" + Fmt(alpha) + " tau=" + Fmt(tau);
      try {
        const auto hi = bounds::VariationalMaxOracle(alpha, tau);
        const double expected_hi = bounds::ApUpper(alpha, tau);
        const double dev_hi = std::abs(hi.objective - expected_hi);
        Record(r, dev_hi <= 1e-3, dev_hi, where + " max oracle " + Fmt(hi.objective) +
                                              " vs " + Fmt(expected_hi));
        const auto lo = bounds::VariationalMinOracle(alpha, tau);
        const double expected_lo = bounds::ApLower(alpha, tau);
        if (bounds::LowerBoundMinimizerFeasible(alpha, tau)) {
          const double dev_lo = std::abs(lo.objective - expected_lo);
          Record(r, dev_lo <= 1e-3, dev_lo, where + " min oracle " + Fmt(lo.objective) +
                                                " vs " + Fmt(expected_lo));
        } else {
          // The box binds: only the sandwich is asserted.
          Record(r, lo.objective >= expected_lo - 1e-3 && lo.objective <= hi.objective + 1e-3,
                 0.0, where + " boxed min oracle " + Fmt(lo.objective) +
                          " outside [" + Fmt(expected_lo) + ", " + Fmt(hi.objective) + "]");
        }
      } catch (const NumericalError& e) {
        Record(r, false, 0.0, where + ": " + e.what());
      }
    }
  }
  return r;
}

SuiteResult MarginOptimalitySuite(const VerifyOptions& options) {
  constexpr double kStep = 1e-3;
  auto result = RunTrials("margins", options.trials, options.workers, [&](int64_t i) {
    std::mt19937_64 rng(StreamSeed(options.seed ^ 0x3A, static_cast<uint64_t>(i)));
    std::uniform_int_distribution<int64_t> count(1, 1000000000);
    priors::ClassStats stats;
    stats.n_plus = count(rng);
    stats.n_minus = count(rng);
    stats.alpha = static_cast<double>(stats.n_minus) / static_cast<double>(stats.n_plus);
    const auto closed = margins::OptimalMargins(stats);
    const auto grid = margins::MarginsGridOracle(stats, kStep);
    const double dev = std::abs(closed.gamma_plus - grid.gamma_plus);
    TrialOutcome o;
    Record(o, dev <= kStep + 1e-12, dev,
           "n+=" + std::to_string(stats.n_plus) + " n-=" + std::to_string(stats.n_minus) +
               " closed=" + Fmt(closed.gamma_plus) + " grid=" + Fmt(grid.gamma_plus));
    return o;
  });
  const auto exact = margins::OptimalMargins({16, 81, 81.0 / 16.0});
  const double dev = std::abs(exact.gamma_plus - 0.6);
  Record(result, dev <= 1e-12, 0.0, "(16, 81) gave " + Fmt(exact.gamma_plus));
  return result;
}

SuiteResult DecisionBoundarySuite(const VerifyOptions& options) {
  return RunTrials("boundary", options.trials, options.workers, [&](int64_t i) {
    std::mt19937_64 rng(StreamSeed(options.seed ^ 0xB0, static_cast<uint64_t>(i)));
    std::uniform_real_distribution<double> u(1e-3, 1.0 - 1e-3);
    const double gamma_plus = u(rng);
    const margins::Margins m{gamma_plus, 1.0 - gamma_plus};
    const auto w = margins::Weights(m);
    const double f = loss::DecisionLogit(w);
    const double dev = std::max(std::abs(loss::Sigmoid(f) - gamma_plus),
                                std::abs(loss::SurrogateScore(f, w) - 0.5));
    TrialOutcome o;
    Record(o, dev <= 1e-12, dev, "gamma+=" + Fmt(gamma_plus) + " deviation " + Fmt(dev));
    return o;
  });
}

SuiteResult GradientSuite(const VerifyOptions& options) {
  return RunTrials("gradients", options.trials, options.workers, [&](int64_t i) {
    std::mt19937_64 rng(StreamSeed(options.seed ^ 0x6D, static_cast<uint64_t>(i)));
    std::uniform_real_distribution<double> logit(-10.0, 10.0);
    std::uniform_real_distribution<double> scale(1e-6, 2.0);
    std::uniform_real_distribution<double> saturated(10.0, 1e4);
    std::bernoulli_distribution coin(0.5);
    const auto w = RandomWeights(rng);
    const double m = scale(rng);
    const auto label = coin(rng) ? loss::Label::kPositive : loss::Label::kNegative;
    const double f = logit(rng);
    const loss::FocalParams focal{};

    TrialOutcome o;
    const std::string where = "f=" + Fmt(f) + " w=(" + Fmt(w.w_plus) + "," +
                              Fmt(w.w_minus) + ") m=" + Fmt(m);
    double dev = 0.0;
    const bool ecm_ok = GradientMatches(
        [&](double x) { return loss::EcmLoss(x, label, w, m); }, f, &dev);
    Record(o, ecm_ok, dev, "ecm gradient mismatch at " + where);
    const bool focal_ok = GradientMatches(
        [&](double x) { return loss::FocalEcmLoss(x, label, w, m, focal); }, f, &dev);
    Record(o, focal_ok, dev, "focal gradient mismatch at " + where);

    const double far = (coin(rng) ? 1.0 : -1.0) * saturated(rng);
    for (const auto& e : {loss::EcmLoss(far, label, w, m),
                          loss::FocalEcmLoss(far, label, w, m, focal)}) {
      Record(o, std::isfinite(e.value) && std::isfinite(e.grad_logit) && e.value >= 0.0,
             0.0, "non-finite loss at f=" + Fmt(far));
    }
    return o;
  });
}

SuiteResult EstimatorSuite(const VerifyOptions& options) {
  return RunTrials("estimator", options.trials, options.workers, [&](int64_t i) {
    std::mt19937_64 rng(StreamSeed(options.seed ^ 0xE5, static_cast<uint64_t>(i)));
    const auto set = RandomScoreSet(rng, 200);
    TrialOutcome o;
    for (auto mode : {metrics::TieMode::kHalfCredit, metrics::TieMode::kStrict}) {
      const double fast = metrics::RankingError(set, mode);
      const double slow = metrics::RankingErrorBruteForce(set, mode);
      Record(o, fast == slow, std::abs(fast - slow),
             "trial " + std::to_string(i) + ": sorted " + Fmt(fast) + " vs brute force " +
                 Fmt(slow));
    }
    return o;
  });
}

SuiteResult BinaryBoundSuite(const VerifyOptions& options) {
  return RunTrials("binary", options.trials, options.workers, [&](int64_t i) {
    std::mt19937_64 rng(StreamSeed(options.seed ^ 0xB1, static_cast<uint64_t>(i)));
    const auto set = RandomScoreSet(rng, 200);
    std::vector<double> thresholds = {0.0, 1.0};
    for (auto side : {set.positives(), set.negatives()}) {
      for (double s : side) {
        thresholds.push_back(s);
        thresholds.push_back(std::max(0.0, s - 1e-9));
        thresholds.push_back(std::min(1.0, s + 1e-9));
      }
    }
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    TrialOutcome o;
    for (double t : thresholds) {
      const auto check = bounds::BinaryBoundCheck(set, t);
      Record(o, check.holds, std::max(0.0, check.ranking_error - check.rhs),
             "trial " + std::to_string(i) + " t=" + Fmt(t) + ": R=" +
                 Fmt(check.ranking_error) + " > rhs=" + Fmt(check.rhs));
    }
    return o;
  });
}

SuiteResult SlopeBracketSuite(const VerifyOptions& options) {
  auto result = RunTrials("slope", options.trials, options.workers, [&](int64_t i) {
    std::mt19937_64 rng(StreamSeed(options.seed ^ 0x51, static_cast<uint64_t>(i)));
    const double alpha = LogUniform(rng, 1e-4, 1e6);
    const double lower = bounds::SlopeM(alpha, bounds::SlopeMode::kLower);
    const double meet = bounds::SlopeM(alpha, bounds::SlopeMode::kMeet);
    const double upper = bounds::SlopeM(alpha, bounds::SlopeMode::kUpper);
    TrialOutcome o;
    const double dev = std::max({0.0, lower - meet, meet - upper});
    Record(o, dev <= 1e-9, dev,
           "alpha=" + Fmt(alpha) + ": lower=" + Fmt(lower) + " meet=" + Fmt(meet) +
               " upper=" + Fmt(upper));
    return o;
  });
  for (auto mode : {bounds::SlopeMode::kLower, bounds::SlopeMode::kUpper}) {
    const double m = bounds::SlopeM(1e6, mode);
    Record(result, std::abs(m - 1.0) <= 1e-5, 0.0,
           std::string(bounds::SlopeModeName(mode)) + " slope at alpha=1e6 is " + Fmt(m));
  }
  return result;
}

}  // namespace ecm::verify
