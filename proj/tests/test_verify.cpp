#include <string>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace lecam::verify {
namespace {

using lecam::testing::space;

TEST(Verify, EverySuitePassesAtSmallScale) {
  for (const auto& [name, fn] : suites()) {
    const auto r = fn({.trials = 20, .seed = 11});
    EXPECT_TRUE(r.ok()) << name << ": " << (r.failures.empty() ? "" : r.failures.front());
    EXPECT_EQ(r.trials, 20u);
    EXPECT_EQ(r.name, name);
  }
}

TEST(Verify, DeterministicInSeed) {
  for (const char* name : {"triangle", "oracles", "ib"}) {
    const auto a = run_suite(name, {.trials = 10, .seed = 7});
    const auto b = run_suite(name, {.trials = 10, .seed = 7});
    EXPECT_EQ(a.worst_slack, b.worst_slack) << name;
    EXPECT_EQ(a.metrics, b.metrics) << name;
  }
  // Different seeds draw different instances.
  EXPECT_NE(run_suite("triangle", {.trials = 10, .seed = 7}).worst_slack,
            run_suite("triangle", {.trials = 10, .seed = 8}).worst_slack);
}

TEST(Verify, TrialResultsIndependentOfTrialCount) {
  // Trial i draws the same instance whatever the total count, so the
  // worst slack over a prefix can only be matched or undercut.
  const auto few = run_suite("regret_identity", {.trials = 5, .seed = 3});
  const auto many = run_suite("regret_identity", {.trials = 15, .seed = 3});
  EXPECT_LE(many.worst_slack, few.worst_slack);
}

TEST(Verify, AllRunsEverySuite) {
  const auto reports = run("all", {.trials = 2, .seed = 1, .max_dim = 3});
  EXPECT_EQ(reports.size(), suites().size());
}

TEST(Verify, RejectsBadArguments) {
  EXPECT_THROW(run_suite("nope", {}), InvalidArgument);
  EXPECT_THROW(run_suite("triangle", {.trials = 0}), InvalidArgument);
  EXPECT_THROW(run_suite("triangle", {.max_dim = 0}), InvalidArgument);
}

TEST(Verify, CheckerRecordsFailures) {
  SuiteReport r;
  r.trials = 1;
  detail::Checker c(r, 0);
  EXPECT_TRUE(c.le(1.0, 1.0, 0.0, "equal"));
  EXPECT_FALSE(c.le(1.0, 0.5, 0.1, "too big"));
  EXPECT_FALSE(c.near(1.0, 2.0, 0.5, "far"));
  EXPECT_FALSE(c.ok());
  EXPECT_EQ(r.failed_checks, 2u);
  EXPECT_DOUBLE_EQ(r.worst_slack, -1.0);
  ASSERT_EQ(r.failures.size(), 2u);
  EXPECT_NE(r.failures[0].find("too big"), std::string::npos);
}

TEST(BinaryTightness, ConstantVersusIdentity) {
  const auto th = space("T", 2);
  const auto pi = Distribution::uniform(th);
  const auto t = MarkovKernel::identity(th);
  const auto u = MarkovKernel::uninformative(th);
  const double delta = weighted_deficiency(t, u, pi);
  EXPECT_NEAR(delta, 1.0, 1e-7);
  // The grid misses c = 1/2, so the sweep stops just short of delta.
  EXPECT_GE(binary_tightness(t, u, pi), delta - 0.05);
  EXPECT_LE(binary_tightness(t, u, pi), delta + 1e-9);
  EXPECT_NEAR(binary_tightness(t, u, pi, 3), 1.0, 1e-12);
  EXPECT_THROW(binary_tightness(MarkovKernel::identity(space("S", 3)), MarkovKernel::identity(space("S", 3)),
                                Distribution::uniform(space("S", 3))),
               InvalidArgument);
}

}  // namespace
}  // namespace lecam::verify
