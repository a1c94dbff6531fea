// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ecm/bounds.h"
#include "ecm/margins.h"
#include "ecm/sandbox.h"
#include "ecm/verify.h"

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Outcome FromSuite(const ecm::verify::SuiteResult& s) {
  std::string detail = Fmt("%lld checks, %lld failures, max deviation %.3g",
                           static_cast<long long>(s.checks),
                           static_cast<long long>(s.failures), s.max_deviation);
  if (!s.examples.empty()) detail += "; first: " + s.examples.front();
  return {s.passed(), detail};
}

ecm::verify::VerifyOptions Options(int64_t trials) {
  ecm::verify::VerifyOptions o;
  o.trials = trials;
  o.seed = 42;
  return o;
}

Outcome MeetPoint() {
  Outcome o = FromSuite(ecm::verify::MeetPointSuite());
  const double rk = 1.0 / 6.0;  // alpha = 1
  const double sqrt_branch = 1.0 - std::sqrt(2.0 * rk / 3.0);
  const double rational_branch = (8.0 / 9.0) / (1.0 + 2.0 * rk);
  const double dev = std::max(std::abs(sqrt_branch - 2.0 / 3.0),
                              std::abs(rational_branch - 2.0 / 3.0));
  o.passed = o.passed && dev <= 1e-12;
  return o;
}

Outcome MarginOptimality() {
  Outcome o = FromSuite(ecm::verify::MarginOptimalitySuite(Options(100)));
  const double g = ecm::margins::OptimalMargins({16, 81, 81.0 / 16.0}).gamma_plus;
  o.passed = o.passed && std::abs(g - 0.6) <= 1e-12;
  o.detail += Fmt("; (16,81) -> %.15f", g);
  return o;
}

Outcome SlopeBracket() {
  Outcome o = FromSuite(ecm::verify::SlopeBracketSuite(Options(1000)));
  using ecm::bounds::SlopeMode;
  const double lo = ecm::bounds::SlopeM(1e6, SlopeMode::kLower);
  const double hi = ecm::bounds::SlopeM(1e6, SlopeMode::kUpper);
  o.passed = o.passed && std::abs(lo - 1.0) <= 1e-5 && std::abs(hi - 1.0) <= 1e-5;
  o.detail += Fmt("; alpha=1e6: lower %.9f, upper %.9f", lo, hi);
  return o;
}

Outcome SandboxAudit() {
  ecm::sandbox::TrainConfig t;
  t.checkpoint_every = 5;
  const auto result = ecm::sandbox::RunExperiment({}, t);
  int failed = 0;
  int failures = 0;
  for (const auto& report : result.checkpoint_reports) {
    const auto audit = ecm::sandbox::BoundAudit(report);
    failed += audit.passed ? 0 : 1;
    failures += static_cast<int>(audit.failures.size());
  }
  return {failed == 0,
          Fmt("%zu checkpoints, %d failing, %d class violations, final mean AP %.4f",
              result.checkpoint_reports.size(), failed, failures, result.report.mean_ap)};
}

Outcome DirectionalImprovement() {
  using ecm::sandbox::LossKind;
  int rare_wins = 0;
  double mean_ecm = 0.0;
  double mean_bce = 0.0;
  std::string per_seed;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    ecm::sandbox::SyntheticConfig d;
    d.seed = seed;
    std::array<double, 2> rare{};
    std::array<double, 2> mean{};
    for (int i = 0; i < 2; ++i) {
      ecm::sandbox::TrainConfig t;
      t.seed = seed;
      t.loss = i == 0 ? LossKind::kBce : LossKind::kEcm;
      const auto r = ecm::sandbox::RunExperiment(d, t);
      rare[i] = ecm::sandbox::RareTercileMeanAp(r.report, r.class_counts);
      mean[i] = r.report.mean_ap;
    }
    rare_wins += rare[1] >= rare[0] ? 1 : 0;
    mean_bce += mean[0] / 5.0;
    mean_ecm += mean[1] / 5.0;
    per_seed += Fmt(" s%llu:%+.2e", static_cast<unsigned long long>(seed), rare[1] - rare[0]);
  }
  return {rare_wins >= 4 && mean_ecm >= mean_bce,
          Fmt("rare-tercile ECM>=BCE in %d/5 seeds (ECM-BCE:", rare_wins) + per_seed +
              Fmt("); mean AP ECM %.9f vs BCE %.9f", mean_ecm, mean_bce)};
}

std::string Capture(const std::string& command, int& status) {
  std::string out;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) {
    status = -1;
    return out;
  }
  std::array<char, 4096> buf;
  size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  status = pclose(pipe);
  return out;
}

Outcome Determinism() {
  const std::string cmd =
      std::string(ECM_CLI_PATH) + " verify --suite all --trials 1000 --seed 42";
  int s1 = 0;
  int s2 = 0;
  const std::string a = Capture(cmd, s1);
  const std::string b = Capture(cmd, s2);
  const bool ran = s1 == 0 && s2 == 0 && !a.empty();
  return {ran && a == b,
          Fmt("%zu and %zu bytes, %s, exit statuses %d/%d", a.size(), b.size(),
              a == b ? "identical" : "different", s1, s2)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0 = no stated limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  using namespace ecm::verify;
  const std::vector<Criterion> criteria = {
      {1, "meet point", 0, MeetPoint},
      {2, "bound sandwich", 60,
       [] { return FromSuite(BoundSandwichSuite(Options(10000))); }},
      {3, "variational oracles", 120, [] { return FromSuite(VariationalOracleSuite()); }},
      {4, "margin optimality", 10, MarginOptimality},
      {5, "decision boundary", 0,
       [] { return FromSuite(DecisionBoundarySuite(Options(1000))); }},
      {6, "gradient checks", 5, [] { return FromSuite(GradientSuite(Options(1000))); }},
      {7, "estimator equivalence", 10,
       [] { return FromSuite(EstimatorSuite(Options(1000))); }},
      {8, "binary bound", 10, [] { return FromSuite(BinaryBoundSuite(Options(1000))); }},
      {9, "slope bracket", 0, SlopeBracket},
      {10, "sandbox bound audit", 120, SandboxAudit},
      {11, "directional long-tail improvement", 600, DirectionalImprovement},
      {12, "determinism", 0, Determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o = c.run();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && seconds > c.limit_seconds) {
      o.passed = false;
      o.detail += Fmt("; over the %.0f s limit", c.limit_seconds);
    }
    failed += o.passed ? 0 : 1;
    std::printf("%s criterion %2d %-34s %7.2fs  %s\n", o.passed ? "PASS" : "FAIL", c.id,
                c.name, seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
