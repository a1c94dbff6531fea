#include "ecm/verify.h"

#include <gtest/gtest.h>

#include "ecm/errors.h"

namespace ecm::verify {
namespace {

bool SameResults(const std::vector<SuiteResult>& a, const std::vector<SuiteResult>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].checks != b[i].checks ||
        a[i].failures != b[i].failures || a[i].examples != b[i].examples ||
        a[i].max_deviation != b[i].max_deviation) {
      return false;
    }
  }
  return true;
}

TEST(SuiteNames, Order) {
  EXPECT_EQ(SuiteNames(),
            (std::vector<std::string>{"meet", "bounds", "oracles", "margins", "boundary",
                                      "gradients", "estimator", "binary", "slope"}));
}

TEST(RunSuite, UnknownName) {
  EXPECT_THROW(RunSuite("nope", {}), ValidationError);
}

TEST(RunSuite, AllSuitesPass) {
  VerifyOptions options;
  options.trials = 200;
  options.seed = 5;
  const auto results = RunSuite("all", options);
  ASSERT_EQ(results.size(), SuiteNames().size());
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed()) << r.name << ": "
                            << (r.examples.empty() ? "" : r.examples.front());
    EXPECT_GT(r.checks, 0) << r.name;
  }
}

TEST(RunSuite, IndependentOfWorkerCount) {
  VerifyOptions one;
  one.trials = 150;
  one.seed = 9;
  one.workers = 1;
  VerifyOptions many = one;
  many.workers = 7;
  for (const char* name : {"bounds", "margins", "gradients", "estimator", "binary", "slope"}) {
    EXPECT_TRUE(SameResults(RunSuite(name, one), RunSuite(name, many))) << name;
  }
}

TEST(RunSuite, SeedChangesTheDraws) {
  VerifyOptions a;
  a.trials = 100;
  a.seed = 1;
  VerifyOptions b = a;
  b.seed = 2;
  EXPECT_NE(RunSuite("binary", a).front().checks, RunSuite("binary", b).front().checks);
}

}  // namespace
}  // namespace ecm::verify
