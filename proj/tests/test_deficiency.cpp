#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace lecam {
namespace {

using testing::mat;
using testing::space;
using testing::vec;

double weighted_objective(const MarkovKernel& t, const MarkovKernel& u, const Eigen::MatrixXd& v,
                          const Distribution& pi) {
  return (u.matrix() - v * t.matrix()).cwiseAbs().colwise().sum().dot(pi.mass());
}

// Exact oracle for |Y| = 2 and |X| <= 2. With V(y0|x) = v_x the objective is
// sum_theta pi(theta) 2 |U(y0|theta) - sum_x v_x T(x|theta)|, piecewise linear on
// the unit box, so its minimum sits on a vertex of the line arrangement: box
// corners, line/edge crossings and pairwise line crossings.
double arrangement_oracle(const MarkovKernel& t, const MarkovKernel& u, const Distribution& pi) {
  const auto nx = t.to().size();
  const auto nth = t.from().size();
  auto objective = [&](double v0, double v1) {
    double total = 0.0;
    for (std::size_t th = 0; th < nth; ++th) {
      const double pred = v0 * t(0, th) + (nx > 1 ? v1 * t(1, th) : 0.0);
      total += pi[th] * 2.0 * std::abs(u(0, th) - pred);
    }
    return total;
  };
  std::vector<std::pair<double, double>> candidates{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  if (nx == 1) {
    for (std::size_t th = 0; th < nth; ++th) {
      if (t(0, th) > 0) candidates.emplace_back(u(0, th) / t(0, th), 0.0);
    }
  } else {
    // Line theta: a v0 + b v1 = c.
    for (std::size_t th = 0; th < nth; ++th) {
      const double a = t(0, th), b = t(1, th), c = u(0, th);
      for (double edge : {0.0, 1.0}) {
        if (b != 0) candidates.emplace_back(edge, (c - a * edge) / b);
        if (a != 0) candidates.emplace_back((c - b * edge) / a, edge);
      }
      for (std::size_t s = 0; s < th; ++s) {
        const double a2 = t(0, s), b2 = t(1, s), c2 = u(0, s);
        const double det = a * b2 - a2 * b;
        if (std::abs(det) < 1e-14) continue;
        candidates.emplace_back((c * b2 - c2 * b) / det, (a * c2 - a2 * c) / det);
      }
    }
  }
  double best = INFINITY;
  for (auto [v0, v1] : candidates) {
    if (v0 < -1e-12 || v0 > 1 + 1e-12 || v1 < -1e-12 || v1 > 1 + 1e-12) continue;
    best = std::min(best, objective(std::clamp(v0, 0.0, 1.0), std::clamp(v1, 0.0, 1.0)));
  }
  return best;
}

void expect_sound(const DeficiencyResult& r) {
  EXPECT_GE(r.delta, -1e-12);
  EXPECT_LE(r.delta, 2.0 + 1e-12);
  EXPECT_LE(r.objective_gap, kDeficiencyTolerance);
  EXPECT_LT((r.witness.matrix().colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
  EXPECT_GE(r.witness.matrix().minCoeff(), 0.0);
}

TEST(WeightedDirectedDeficiency, SelfAndConstant) {
  Rng rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const auto th = space("T", rng.between(1, 5));
    const auto x = space("X", rng.between(1, 5));
    const auto t = random_kernel(th, x, rng);
    const auto pi = random_distribution(th, rng, true);
    const auto self = weighted_directed_deficiency(t, t, pi);
    expect_sound(self);
    EXPECT_LE(self.delta, 1e-7);
    const auto constant = weighted_directed_deficiency(t, MarkovKernel::uninformative(th), pi);
    expect_sound(constant);
    EXPECT_LE(constant.delta, 1e-7);
  }
}

TEST(WeightedDirectedDeficiency, ConstantCannotRecoverIdentity) {
  const auto th = space("T", 2);
  const auto pi = Distribution::uniform(th);
  const auto r = weighted_directed_deficiency(MarkovKernel::uninformative(th), MarkovKernel::identity(th), pi);
  expect_sound(r);
  EXPECT_NEAR(r.delta, 1.0, 1e-7);
  // Every constant decoder q gives 0.5 * 2(1 - q0) + 0.5 * 2 q0 = 1.
  for (double q0 : {0.0, 0.25, 0.5, 1.0}) {
    EXPECT_NEAR(
        weighted_objective(MarkovKernel::uninformative(th), MarkovKernel::identity(th), mat({{q0}, {1 - q0}}), pi), 1.0,
        1e-15);
  }
}

TEST(WeightedDirectedDeficiency, MatchesArrangementOracle) {
  Rng rng(31);
  const auto y = space("Y", 2);
  for (int trial = 0; trial < 300; ++trial) {
    SCOPED_TRACE(trial);
    const auto th = space("T", rng.between(1, 5));
    const auto x = space("X", rng.between(1, 2));
    const auto t = random_kernel(th, x, rng);
    const auto u = random_kernel(th, y, rng);
    const auto pi = random_distribution(th, rng, true);
    const auto r = weighted_directed_deficiency(t, u, pi);
    expect_sound(r);
    EXPECT_NEAR(r.delta, arrangement_oracle(t, u, pi), 1e-7);
  }
}

TEST(WeightedDirectedDeficiency, OptimalAgainstRandomWitnessesAndLossBounds) {
  Rng rng(37);
  for (int trial = 0; trial < 60; ++trial) {
    const auto th = space("T", rng.between(1, 5));
    const auto x = space("X", rng.between(1, 5));
    const auto y = space("Y", rng.between(1, 5));
    const auto t = random_kernel(th, x, rng);
    const auto u = random_kernel(th, y, rng);
    const auto pi = random_distribution(th, rng, true);
    const auto r = weighted_directed_deficiency(t, u, pi);
    expect_sound(r);
    EXPECT_NEAR(weighted_objective(t, u, r.witness.matrix(), pi), r.delta, 1e-12);
    for (int k = 0; k < 50; ++k) {
      EXPECT_LE(r.delta, weighted_objective(t, u, random_kernel(x, y, rng).matrix(), pi) + 1e-9);
    }
    // Any loss gives a lower bound (V_L(T) - V_L(U)) / ||L||.
    for (int k = 0; k < 50; ++k) {
      const auto l = random_loss(th, space("A", rng.between(1, 5)), rng);
      if (l.sup_norm() == 0) continue;
      EXPECT_GE(r.delta + 1e-9, (value(l, pi, t) - value(l, pi, u)) / l.sup_norm());
    }
  }
}

TEST(WeightedDirectedDeficiency, ZeroPriorEntriesDropOut) {
  const auto th = space("T", 3);
  const auto x = space("X", 2);
  // theta_2 is unreachable from T but has zero prior weight.
  const MarkovKernel t(th, x, mat({{1, 0, 0.5}, {0, 1, 0.5}}));
  const MarkovKernel u(th, th, Eigen::MatrixXd::Identity(3, 3));
  const auto r = weighted_directed_deficiency(t, u, Distribution(th, vec({0.5, 0.5, 0.0})));
  expect_sound(r);
  EXPECT_NEAR(r.delta, 0.0, 1e-9);
}

TEST(WeightedDirectedDeficiency, SpaceMismatch) {
  const auto th = space("T", 2);
  EXPECT_THROW(weighted_directed_deficiency(MarkovKernel::identity(th), MarkovKernel::identity(space("S", 2)),
                                            Distribution::uniform(th)),
               SpaceMismatch);
}

TEST(WeightedDeficiency, ExamplesAndSymmetry) {
  const auto th = space("T", 2);
  const auto pi = Distribution::uniform(th);
  EXPECT_NEAR(weighted_deficiency(MarkovKernel::identity(th), MarkovKernel::uninformative(th), pi), 1.0, 1e-7);
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t3 = space("T", rng.between(1, 4));
    const auto a = random_kernel(t3, space("X", rng.between(1, 4)), rng);
    const auto b = random_kernel(t3, space("Y", rng.between(1, 4)), rng);
    const auto p = random_distribution(t3, rng, true);
    EXPECT_EQ(weighted_deficiency(a, b, p), weighted_deficiency(b, a, p));
    EXPECT_LE(weighted_deficiency(a, a, p), 1e-7);
  }
}

TEST(DirectedDeficiency, Examples) {
  const auto th = space("T", 2);
  const auto r = directed_deficiency(MarkovKernel::uninformative(th), MarkovKernel::identity(th));
  expect_sound(r);
  EXPECT_NEAR(r.delta, 1.0, 1e-7);
  Rng rng(43);
  for (int trial = 0; trial < 40; ++trial) {
    const auto t3 = space("T", rng.between(1, 4));
    const auto t = random_kernel(t3, space("X", rng.between(1, 4)), rng);
    const auto u = random_kernel(t3, space("Y", rng.between(1, 4)), rng);
    EXPECT_LE(directed_deficiency(t, t).delta, 1e-7);
    const auto sup = directed_deficiency(t, u);
    expect_sound(sup);
    EXPECT_NEAR(columnwise_residual(t, u, sup.witness).maxCoeff(), sup.delta, 1e-12);
    for (int k = 0; k < 100; ++k) {
      EXPECT_GE(sup.delta, weighted_directed_deficiency(t, u, random_distribution(t3, rng, true)).delta - 1e-6);
    }
  }
}

TEST(FactorsThrough, GarbledExperimentFactors) {
  Rng rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    const auto th = space("T", rng.between(1, 5));
    const auto x = space("X", rng.between(1, 5));
    const auto t = random_kernel(th, x, rng);
    const auto u = compose(random_kernel(x, space("Y", rng.between(1, 5)), rng), t);
    const auto r = factors_through(t, u, random_positive_distribution(th, rng));
    ASSERT_TRUE(r.factors);
    EXPECT_LE(columnwise_residual(t, u, r.deficiency.witness).maxCoeff(), 1e-6);
  }
}

TEST(FactorsThrough, ConstantDoesNotRecoverIdentity) {
  for (std::size_t n : {2u, 3u, 5u}) {
    const auto th = space("T", n);
    EXPECT_FALSE(factors_through(MarkovKernel::uninformative(th), MarkovKernel::identity(th), Distribution::uniform(th))
                     .factors);
  }
}

TEST(FactorsThrough, SufficientStatistic) {
  // X = {a, b, c, d}, f merges {a, b} -> u and {c, d} -> v. Within each fiber the
  // split is independent of theta, so f(T) is equivalent to T.
  const auto th = space("T", 3);
  FiniteSpace x("X", {"a", "b", "c", "d"});
  FiniteSpace y("Y", {"u", "v"});
  const std::vector<std::size_t> merge_image{0, 0, 1, 1};
  const auto f = MarkovKernel::deterministic(x, y, merge_image);
  const MarkovKernel split(y, x, mat({{0.3, 0}, {0.7, 0}, {0, 0.6}, {0, 0.4}}));
  Rng rng(53);
  const auto coarse = random_kernel(th, y, rng);
  const auto t = compose(split, coarse);
  const auto ft = compose(f, t);
  const auto pi = random_positive_distribution(th, rng);
  EXPECT_TRUE(factors_through(t, ft, pi).factors);
  EXPECT_TRUE(factors_through(ft, t, pi).factors);

  // Theta-dependent splits break sufficiency.
  const MarkovKernel t2(th, x, mat({{0.4, 0.1, 0.2}, {0.1, 0.4, 0.2}, {0.25, 0.25, 0.1}, {0.25, 0.25, 0.5}}));
  EXPECT_TRUE(factors_through(t2, compose(f, t2), pi).factors);
  EXPECT_FALSE(factors_through(compose(f, t2), t2, pi).factors);
}

TEST(FactorsThrough, RequiresStrictlyPositivePrior) {
  const auto th = space("T", 2);
  EXPECT_THROW(factors_through(MarkovKernel::identity(th), MarkovKernel::identity(th), Distribution::point_mass(th, 0)),
               InvalidArgument);
}

TEST(DeficiencyLoss, AttainsWeightedDeficiency) {
  Rng rng(151);
  for (int trial = 0; trial < 200; ++trial) {
    SCOPED_TRACE(trial);
    const auto th = space("T", rng.between(1, 8));
    const auto t = random_kernel(th, space("X", rng.between(1, 8)), rng);
    const auto u = random_kernel(th, space("Y", rng.between(1, 8)), rng);
    const auto pi = random_distribution(th, rng, true);
    const double delta = weighted_directed_deficiency(t, u, pi).delta;
    const auto l = deficiency_loss(t, u, pi);
    EXPECT_LE(l.sup_norm(), 1.0);
    EXPECT_NEAR(value(l, pi, t) - value(l, pi, u), delta, 1e-7);
  }
  const auto b = space("T", 2);
  const auto l = deficiency_loss(MarkovKernel::uninformative(b), MarkovKernel::identity(b), Distribution::uniform(b));
  EXPECT_NEAR(value(l, Distribution::uniform(b), MarkovKernel::uninformative(b)) -
                  value(l, Distribution::uniform(b), MarkovKernel::identity(b)),
              1.0, 1e-9);
}

TEST(DeficiencyProperties, TriangleAndRandomization) {
  Rng rng(59);
  for (int trial = 0; trial < 60; ++trial) {
    SCOPED_TRACE(trial);
    const auto th = space("T", rng.between(1, 4));
    const auto t1 = random_kernel(th, space("X", rng.between(1, 4)), rng);
    const auto t2 = random_kernel(th, space("Y", rng.between(1, 4)), rng);
    const auto t3 = random_kernel(th, space("Z", rng.between(1, 4)), rng);
    const auto pi = random_distribution(th, rng, true);
    EXPECT_LE(weighted_deficiency(t1, t3, pi),
              weighted_deficiency(t1, t2, pi) + weighted_deficiency(t2, t3, pi) + 1e-6);
    const double d12 = weighted_directed_deficiency(t1, t2, pi).delta;
    for (int k = 0; k < 20; ++k) {
      const auto l = random_loss(th, space("A", rng.between(1, 5)), rng);
      EXPECT_LE(value(l, pi, t1), value(l, pi, t2) + d12 * l.sup_norm() + 1e-6);
    }
  }
}

}  // namespace
}  // namespace lecam
