#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lecam/decision.hpp"
#include "lecam/errors.hpp"
#include "lecam/kernel.hpp"
#include "lecam/simplex.hpp"
#include "lecam/space.hpp"

// Le Cam deficiencies between experiments T: Theta -> X and U: Theta -> Y,
// solved exactly as linear programs over randomizations V: X -> Y.

namespace lecam {

/// Objective tolerance promised by the deficiency solvers.
inline constexpr double kDeficiencyTolerance = 1e-7;

struct DeficiencyResult {
  /// Deficiency evaluated at `witness`, in [0, 2].
  double delta = 0.0;
  /// A randomization V: X -> Y attaining `delta`. Not unique in general.
  MarkovKernel witness;
  /// |delta - LP optimum|; stays below kDeficiencyTolerance for a sound solve.
  double objective_gap = 0.0;
};

/// Per-theta l1 distance ||U(theta) - (V T)(theta)||, one entry per theta.
inline Eigen::VectorXd columnwise_residual(const MarkovKernel& t, const MarkovKernel& u, const MarkovKernel& v) {
  require_same_space(t.from(), u.from(), "deficiency residual (experiments)");
  require_same_space(v.from(), t.to(), "deficiency residual (randomization input)");
  require_same_space(v.to(), u.to(), "deficiency residual (randomization output)");
  return (u.matrix() - v.matrix() * t.matrix()).cwiseAbs().colwise().sum().transpose();
}

namespace detail {

struct DeficiencyLp {
  lp::LinearProgram program;
  Eigen::Index v_count = 0;
};

// Variables: V(y,x) at y*|X|+x, then positive/negative residual parts for
// every active theta, then (minimax only) the bound t.
inline DeficiencyLp build_deficiency_lp(const MarkovKernel& t, const MarkovKernel& u,
                                        const std::vector<Eigen::Index>& active, const Eigen::VectorXd* weights) {
  const auto nx = static_cast<Eigen::Index>(t.to().size());
  const auto ny = static_cast<Eigen::Index>(u.to().size());
  const auto na = static_cast<Eigen::Index>(active.size());
  const Eigen::Index v_count = ny * nx;
  const Eigen::Index pos0 = v_count;
  const Eigen::Index neg0 = pos0 + ny * na;
  const bool minimax = weights == nullptr;
  const Eigen::Index n = neg0 + ny * na + (minimax ? 1 : 0);

  DeficiencyLp out;
  out.v_count = v_count;
  auto& p = out.program;
  p.cost = Eigen::VectorXd::Zero(n);
  p.eq_matrix = Eigen::MatrixXd::Zero(ny * na + nx, n);
  p.eq_rhs = Eigen::VectorXd::Zero(ny * na + nx);

  for (Eigen::Index k = 0; k < na; ++k) {
    const Eigen::Index theta = active[static_cast<std::size_t>(k)];
    for (Eigen::Index y = 0; y < ny; ++y) {
      const Eigen::Index row = k * ny + y;
      for (Eigen::Index x = 0; x < nx; ++x) p.eq_matrix(row, y * nx + x) = t.matrix()(x, theta);
      p.eq_matrix(row, pos0 + row) = 1.0;
      p.eq_matrix(row, neg0 + row) = -1.0;
      p.eq_rhs(row) = u.matrix()(y, theta);
      if (!minimax) {
        p.cost(pos0 + row) = (*weights)(theta);
        p.cost(neg0 + row) = (*weights)(theta);
      }
    }
  }
  for (Eigen::Index x = 0; x < nx; ++x) {
    const Eigen::Index row = ny * na + x;
    for (Eigen::Index y = 0; y < ny; ++y) p.eq_matrix(row, y * nx + x) = 1.0;
    p.eq_rhs(row) = 1.0;
  }

  if (minimax) {
    const Eigen::Index tcol = n - 1;
    p.cost(tcol) = 1.0;
    p.ub_matrix = Eigen::MatrixXd::Zero(na, n);
    p.ub_rhs = Eigen::VectorXd::Zero(na);
    for (Eigen::Index k = 0; k < na; ++k) {
      for (Eigen::Index y = 0; y < ny; ++y) {
        p.ub_matrix(k, pos0 + k * ny + y) = 1.0;
        p.ub_matrix(k, neg0 + k * ny + y) = 1.0;
      }
      p.ub_matrix(k, tcol) = -1.0;
    }
  } else {
    p.ub_matrix = Eigen::MatrixXd::Zero(0, n);
    p.ub_rhs = Eigen::VectorXd::Zero(0);
  }
  return out;
}

inline MarkovKernel extract_witness(const MarkovKernel& t, const MarkovKernel& u, const lp::Solution& sol) {
  const auto nx = static_cast<Eigen::Index>(t.to().size());
  const auto ny = static_cast<Eigen::Index>(u.to().size());
  Eigen::MatrixXd v(ny, nx);
  for (Eigen::Index y = 0; y < ny; ++y) {
    for (Eigen::Index x = 0; x < nx; ++x) v(y, x) = std::max(0.0, sol.x(y * nx + x));
  }
  for (Eigen::Index x = 0; x < nx; ++x) {
    const double s = v.col(x).sum();
    if (s > 0.0) {
      v.col(x) /= s;
    } else {
      v.col(x).setConstant(1.0 / static_cast<double>(ny));
    }
  }
  return MarkovKernel(t.to(), u.to(), std::move(v));
}

inline lp::Solution solve_or_throw(const lp::LinearProgram& program, const char* what) {
  auto sol = lp::solve(program);
  if (sol.status != lp::Status::optimal) {
    throw SolverError(std::string(what) + ": simplex ended with status '" + lp::to_string(sol.status) + "'");
  }
  return sol;
}

// The witness is the clamped LP point, so its objective should match the
// LP optimum to round-off. A larger gap means the solve went numerically
// wrong and the number cannot be trusted.
inline DeficiencyResult certify(double delta, MarkovKernel v, double lp_objective, const char* what) {
  const double gap = std::abs(delta - lp_objective);
  if (!(gap <= kDeficiencyTolerance)) {
    throw SolverError(std::string(what) + ": witness objective " + std::to_string(delta) +
                      " disagrees with the LP optimum " + std::to_string(lp_objective));
  }
  return DeficiencyResult{delta, std::move(v), gap};
}

}  // namespace detail

/// delta_pi(T, U) = min_V sum_theta pi(theta) ||U(theta) - V T(theta)||_1.
///
/// Zero-probability hypotheses drop out of the objective.
inline DeficiencyResult weighted_directed_deficiency(const MarkovKernel& t, const MarkovKernel& u,
                                                     const Distribution& prior) {
  require_same_space(t.from(), u.from(), "weighted_directed_deficiency (experiments)");
  require_same_space(t.from(), prior.space(), "weighted_directed_deficiency (prior)");
  std::vector<Eigen::Index> active;
  for (Eigen::Index th = 0; th < prior.mass().size(); ++th) {
    if (prior.mass()(th) > 0.0) active.push_back(th);
  }
  const auto built = detail::build_deficiency_lp(t, u, active, &prior.mass());
  const auto sol = detail::solve_or_throw(built.program, "weighted_directed_deficiency");
  MarkovKernel v = detail::extract_witness(t, u, sol);
  const double delta = columnwise_residual(t, u, v).dot(prior.mass());
  return detail::certify(delta, std::move(v), sol.objective, "weighted_directed_deficiency");
}

/// Delta_pi(T, U) = max(delta_pi(T, U), delta_pi(U, T)). Symmetric.
inline double weighted_deficiency(const MarkovKernel& t, const MarkovKernel& u, const Distribution& prior) {
  return std::max(weighted_directed_deficiency(t, u, prior).delta, weighted_directed_deficiency(u, t, prior).delta);
}

/// delta(T, U) = sup_pi delta_pi(T, U) = min_V max_theta ||U(theta) - V T(theta)||_1.
inline DeficiencyResult directed_deficiency(const MarkovKernel& t, const MarkovKernel& u) {
  require_same_space(t.from(), u.from(), "directed_deficiency");
  std::vector<Eigen::Index> active(t.from().size());
  for (std::size_t i = 0; i < active.size(); ++i) active[i] = static_cast<Eigen::Index>(i);
  const auto built = detail::build_deficiency_lp(t, u, active, nullptr);
  const auto sol = detail::solve_or_throw(built.program, "directed_deficiency");
  MarkovKernel v = detail::extract_witness(t, u, sol);
  const double delta = columnwise_residual(t, u, v).maxCoeff();
  return detail::certify(delta, std::move(v), sol.objective, "directed_deficiency");
}

struct FactorResult {
  bool factors = false;
  /// The LP result; when `factors` is true its witness is U/T.
  DeficiencyResult deficiency;
};

/// Does U factor through T, i.e. U = W T for some kernel W? Decided by
/// delta_pi(T, U) <= tol, which needs a strictly positive prior.
inline FactorResult factors_through(const MarkovKernel& t, const MarkovKernel& u, const Distribution& prior,
                                    double tol = 1e-6) {
  if (!prior.strictly_positive()) {
    throw InvalidArgument("factors_through needs a strictly positive prior over " + prior.space().describe());
  }
  auto result = weighted_directed_deficiency(t, u, prior);
  const bool ok = result.delta <= tol;
  return FactorResult{ok, std::move(result)};
}

/// A loss over (Theta, actions = U's outputs) with ||L|| <= 1 and
/// V_L(pi, T) - V_L(pi, U) = delta_pi(T, U): the loss attaining the sup in
/// the randomization bound. Read off the dual program
///
///   max_{|w| <= 1} sum_theta pi sum_y w(y,theta) U(y|theta)
///                  - sum_x max_y sum_theta pi w(y,theta) T(x|theta)
///
/// as L(theta, y) = -w(y, theta). Zero-prior rows are left at zero.
inline LossMatrix deficiency_loss(const MarkovKernel& t, const MarkovKernel& u, const Distribution& prior) {
  require_same_space(t.from(), u.from(), "deficiency_loss (experiments)");
  require_same_space(t.from(), prior.space(), "deficiency_loss (prior)");
  const auto nth = static_cast<Eigen::Index>(prior.size());
  const auto nx = static_cast<Eigen::Index>(t.to().size());
  const auto ny = static_cast<Eigen::Index>(u.to().size());
  const Eigen::VectorXd& pi = prior.mass();

  // Variables: w+ and w- at (y, theta), then s+ and s- at x.
  const Eigen::Index nw = ny * nth;
  const Eigen::Index wp = 0, wm = nw, sp = 2 * nw, sm = 2 * nw + nx;
  const Eigen::Index n = 2 * nw + 2 * nx;
  lp::LinearProgram p;
  p.cost = Eigen::VectorXd::Zero(n);
  p.ub_matrix = Eigen::MatrixXd::Zero(2 * nw + nx * ny, n);
  p.ub_rhs = Eigen::VectorXd::Zero(2 * nw + nx * ny);
  p.eq_matrix = Eigen::MatrixXd::Zero(0, n);
  p.eq_rhs = Eigen::VectorXd::Zero(0);
  for (Eigen::Index y = 0; y < ny; ++y) {
    for (Eigen::Index th = 0; th < nth; ++th) {
      const Eigen::Index k = y * nth + th;
      p.cost(wp + k) = -pi(th) * u.matrix()(y, th);
      p.cost(wm + k) = pi(th) * u.matrix()(y, th);
      p.ub_matrix(k, wp + k) = 1.0;
      p.ub_rhs(k) = 1.0;
      p.ub_matrix(nw + k, wm + k) = 1.0;
      p.ub_rhs(nw + k) = 1.0;
    }
  }
  for (Eigen::Index x = 0; x < nx; ++x) {
    p.cost(sp + x) = 1.0;
    p.cost(sm + x) = -1.0;
    for (Eigen::Index y = 0; y < ny; ++y) {
      const Eigen::Index row = 2 * nw + x * ny + y;
      for (Eigen::Index th = 0; th < nth; ++th) {
        p.ub_matrix(row, wp + y * nth + th) = pi(th) * t.matrix()(x, th);
        p.ub_matrix(row, wm + y * nth + th) = -pi(th) * t.matrix()(x, th);
      }
      p.ub_matrix(row, sp + x) = -1.0;
      p.ub_matrix(row, sm + x) = 1.0;
    }
  }
  const auto sol = detail::solve_or_throw(p, "deficiency_loss");
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(nth, ny);
  for (Eigen::Index y = 0; y < ny; ++y) {
    for (Eigen::Index th = 0; th < nth; ++th) {
      if (pi(th) <= 0.0) continue;
      const Eigen::Index k = y * nth + th;
      values(th, y) = std::clamp(sol.x(wm + k) - sol.x(wp + k), -1.0, 1.0);
    }
  }
  return LossMatrix(prior.space(), u.to(), std::move(values));
}

}  // namespace lecam
