#include <gtest/gtest.h>

#include "test_util.hpp"

namespace lecam::lp {
namespace {

using lecam::testing::mat;
using lecam::testing::vec;

LinearProgram inequality_lp(Eigen::VectorXd c, Eigen::MatrixXd a, Eigen::VectorXd b) {
  LinearProgram lp;
  lp.cost = std::move(c);
  lp.ub_matrix = std::move(a);
  lp.ub_rhs = std::move(b);
  lp.eq_matrix = Eigen::MatrixXd::Zero(0, lp.cost.size());
  lp.eq_rhs = Eigen::VectorXd::Zero(0);
  return lp;
}

TEST(Simplex, TextbookMaximization) {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18: optimum (2, 6), value 36.
  const auto sol = solve(inequality_lp(vec({-3, -5}), mat({{1, 0}, {0, 2}, {3, 2}}), vec({4, 12, 18})));
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.objective, -36.0, 1e-12);
  EXPECT_NEAR(sol.x(0), 2.0, 1e-12);
  EXPECT_NEAR(sol.x(1), 6.0, 1e-12);
}

TEST(Simplex, Equalities) {
  LinearProgram lp;
  lp.cost = vec({1, 1});
  lp.ub_matrix = Eigen::MatrixXd::Zero(0, 2);
  lp.ub_rhs = Eigen::VectorXd::Zero(0);
  lp.eq_matrix = mat({{1, 2}, {1, -1}});
  lp.eq_rhs = vec({4, 1});
  const auto sol = solve(lp);
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.x(0), 2.0, 1e-12);
  EXPECT_NEAR(sol.x(1), 1.0, 1e-12);
  EXPECT_NEAR(sol.objective, 3.0, 1e-12);
}

TEST(Simplex, RedundantEqualityRows) {
  LinearProgram lp;
  lp.cost = vec({1, 0});
  lp.ub_matrix = Eigen::MatrixXd::Zero(0, 2);
  lp.ub_rhs = Eigen::VectorXd::Zero(0);
  lp.eq_matrix = mat({{1, 1}, {2, 2}});
  lp.eq_rhs = vec({1, 2});
  const auto sol = solve(lp);
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.objective, 0.0, 1e-12);
  EXPECT_NEAR(sol.x(1), 1.0, 1e-12);
}

TEST(Simplex, NegativeRightHandSide) {
  // x + y >= 2 written as -x - y <= -2; min x + 2y -> x = 2.
  const auto sol = solve(inequality_lp(vec({1, 2}), mat({{-1, -1}}), vec({-2})));
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.objective, 2.0, 1e-12);
}

TEST(Simplex, DetectsInfeasibleAndUnbounded) {
  EXPECT_EQ(solve(inequality_lp(vec({1}), mat({{1}, {-1}}), vec({1, -2}))).status, Status::infeasible);
  EXPECT_EQ(solve(inequality_lp(vec({-1, 0}), mat({{1, -1}}), vec({1}))).status, Status::unbounded);
}

TEST(Simplex, BealeCyclingExample) {
  // Cycles under textbook Dantzig pricing without an anti-cycling rule.
  const auto sol = solve(inequality_lp(vec({-0.75, 20, -0.5, 6}),
                                       mat({{0.25, -8, -1, 9}, {0.5, -12, -0.5, 3}, {0, 0, 1, 0}}), vec({0, 0, 1})),
                         Options{.bland_after = 0});
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.objective, -1.25, 1e-12);
}

TEST(Simplex, RejectsInconsistentDimensions) {
  EXPECT_THROW(solve(inequality_lp(vec({1, 1}), mat({{1}}), vec({1}))), InvalidArgument);
}

// Strong duality: min c'x, Ax <= b, x >= 0 and its dual min b'y, -A'y <= c, y >= 0
// have optimal values summing to zero.
TEST(Simplex, StrongDualityOnRandomPrograms) {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = static_cast<Eigen::Index>(rng.between(1, 12));
    const auto n = static_cast<Eigen::Index>(rng.between(1, 12));
    Eigen::MatrixXd a(m, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.uniform(0.0, 1.0) + (rng.bernoulli(0.3) ? 0.0 : 0.1);
    Eigen::VectorXd b(m), c(n);
    for (Eigen::Index i = 0; i < m; ++i) b(i) = rng.uniform(0.5, 2.0);
    for (Eigen::Index j = 0; j < n; ++j) c(j) = rng.uniform(-1.0, 1.0);
    const auto primal = solve(inequality_lp(c, a, b));
    const auto dual = solve(inequality_lp(b, -a.transpose(), c));
    ASSERT_EQ(primal.status, Status::optimal);
    ASSERT_EQ(dual.status, Status::optimal);
    EXPECT_NEAR(primal.objective, -dual.objective, 1e-9);
    EXPECT_TRUE(((a * primal.x - b).array() <= 1e-9).all());
  }
}

}  // namespace
}  // namespace lecam::lp
