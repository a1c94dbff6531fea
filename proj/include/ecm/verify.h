#ifndef ECM_VERIFY_H_
#define ECM_VERIFY_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ecm::verify {

// Outcome of one property suite. Contains no timing information so that
// reports are reproducible byte for byte.
struct SuiteResult {
  std::string name;
  int64_t checks = 0;
  int64_t failures = 0;
  // The first few failing cases, human readable.
  std::vector<std::string> examples;
  // Largest observed deviation, where the suite has a natural one.
  double max_deviation = 0.0;

  bool passed() const { return failures == 0; }
};

struct VerifyOptions {
  int64_t trials = 1000;
  uint64_t seed = 42;
  // 0 = hardware concurrency. Results do not depend on this.
  unsigned workers = 0;
};

// Suite names accepted by RunSuite, in the order "all" runs them.
const std::vector<std::string>& SuiteNames();

// Runs one named suite, or every suite for "all". Throws ValidationError for
// unknown names.
std::vector<SuiteResult> RunSuite(std::string_view name,
                                  const VerifyOptions& options);

// Individual suites.
SuiteResult MeetPointSuite();
// Random Beta-distributed detectors across alpha ∈ {0.1, 1, 10, 1000}.
SuiteResult BoundSandwichSuite(const VerifyOptions& options);
SuiteResult VariationalOracleSuite();
SuiteResult MarginOptimalitySuite(const VerifyOptions& options);
SuiteResult DecisionBoundarySuite(const VerifyOptions& options);
SuiteResult GradientSuite(const VerifyOptions& options);
SuiteResult EstimatorSuite(const VerifyOptions& options);
SuiteResult BinaryBoundSuite(const VerifyOptions& options);
SuiteResult SlopeBracketSuite(const VerifyOptions& options);

}  // namespace ecm::verify

#endif  // ECM_VERIFY_H_
