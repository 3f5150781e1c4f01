#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "lecam/errors.hpp"

namespace lecam::lp {

/// minimize cost' x  subject to  ub_matrix x <= ub_rhs,  eq_matrix x = eq_rhs,  x >= 0.
///
/// Either constraint block may be empty (zero rows) but must have as many
/// columns as `cost` has entries.
struct LinearProgram {
  Eigen::VectorXd cost;
  Eigen::MatrixXd ub_matrix;
  Eigen::VectorXd ub_rhs;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal:
      return "optimal";
    case Status::infeasible:
      return "infeasible";
    case Status::unbounded:
      return "unbounded";
    case Status::iteration_limit:
      return "iteration limit";
  }
  return "unknown";
}

struct Solution {
  Status status = Status::infeasible;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
};

struct Options {
  double pivot_tolerance = 1e-9;
  double feasibility_tolerance = 1e-9;
  std::size_t max_iterations = 200000;
  /// Consecutive degenerate pivots after which Bland's rule takes over.
  std::size_t bland_after = 64;
};

namespace detail {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense tableau: rows 0..m-1 are constraints, row m is the reduced-cost row.
// The last column holds the right-hand side; the objective row's rhs holds
// minus the current objective value.
class TableauSimplex {
 public:
  TableauSimplex(Tableau t, std::vector<Eigen::Index> basis, Eigen::Index columns_allowed, const Options& opt)
      : t_(std::move(t)), basis_(std::move(basis)), allowed_(columns_allowed), opt_(opt) {}

  Tableau& tableau() { return t_; }
  std::vector<Eigen::Index>& basis() { return basis_; }
  void set_allowed(Eigen::Index n) { allowed_ = n; }
  std::size_t iterations() const { return iterations_; }

  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  /// Runs primal simplex on the current tableau. Returns optimal,
  /// unbounded or iteration_limit.
  Status run() {
    const Eigen::Index m = t_.rows() - 1;
    const Eigen::Index rhs = t_.cols() - 1;
    std::size_t degenerate_streak = 0;
    while (true) {
      if (iterations_ >= opt_.max_iterations) return Status::iteration_limit;
      const bool bland = degenerate_streak >= opt_.bland_after;

      Eigen::Index enter = -1;
      double best = -opt_.feasibility_tolerance;
      for (Eigen::Index j = 0; j < allowed_; ++j) {
        const double d = t_(m, j);
        if (d < best) {
          enter = j;
          if (bland) break;
          best = d;
        }
      }
      if (enter < 0) return Status::optimal;

      const Eigen::Index leave = bland ? bland_ratio(enter) : harris_ratio(enter);
      if (leave < 0) return Status::unbounded;

      const double step = std::max(0.0, t_(leave, rhs)) / t_(leave, enter);
      degenerate_streak = step <= 1e-14 ? degenerate_streak + 1 : 0;
      pivot(leave, enter);
      // Harris steps may push basics a hair below zero; snap them back.
      for (Eigen::Index i = 0; i < m; ++i) {
        if (t_(i, rhs) < 0.0 && t_(i, rhs) > -opt_.feasibility_tolerance) t_(i, rhs) = 0.0;
      }
      ++iterations_;
    }
  }

 private:
  // Textbook minimum ratio, lowest basic index on ties (needed for Bland).
  Eigen::Index bland_ratio(Eigen::Index enter) const {
    const Eigen::Index m = t_.rows() - 1;
    const Eigen::Index rhs = t_.cols() - 1;
    Eigen::Index leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = t_(i, enter);
      if (a <= opt_.pivot_tolerance) continue;
      const double r = std::max(0.0, t_(i, rhs)) / a;
      if (leave < 0 || r < ratio - 1e-14 ||
          (r <= ratio + 1e-14 && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
        leave = i;
        ratio = r;
      }
    }
    return leave;
  }

  // Harris two-pass test: find the largest step that keeps every basic
  // above -tolerance, then among rows blocking within that step take the
  // largest pivot element. Avoids dividing by tiny entries.
  Eigen::Index harris_ratio(Eigen::Index enter) const {
    const Eigen::Index m = t_.rows() - 1;
    const Eigen::Index rhs = t_.cols() - 1;
    double bound = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = t_(i, enter);
      if (a > opt_.pivot_tolerance)
        bound = std::min(bound, (std::max(0.0, t_(i, rhs)) + opt_.feasibility_tolerance) / a);
    }
    Eigen::Index leave = -1;
    double biggest = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = t_(i, enter);
      if (a <= opt_.pivot_tolerance) continue;
      if (std::max(0.0, t_(i, rhs)) / a <= bound && a > biggest) {
        biggest = a;
        leave = i;
      }
    }
    return leave;
  }

  Tableau t_;
  std::vector<Eigen::Index> basis_;
  Eigen::Index allowed_;
  Options opt_;
  std::size_t iterations_ = 0;
};

}  // namespace detail

/// Two-phase dense tableau simplex. Dantzig pricing, switching to Bland's
/// rule on long degenerate runs so that the method always terminates.
inline Solution solve(const LinearProgram& lp, const Options& opt = {}) {
  const Eigen::Index n = lp.cost.size();
  const Eigen::Index m_ub = lp.ub_matrix.rows();
  const Eigen::Index m_eq = lp.eq_matrix.rows();
  if ((m_ub > 0 && lp.ub_matrix.cols() != n) || (m_eq > 0 && lp.eq_matrix.cols() != n) || lp.ub_rhs.size() != m_ub ||
      lp.eq_rhs.size() != m_eq) {
    throw InvalidArgument("linear program has inconsistent dimensions");
  }
  const Eigen::Index m = m_ub + m_eq;

  // Rows needing an artificial start variable: equalities and <= rows with negative rhs.
  std::vector<Eigen::Index> artificial_rows;
  for (Eigen::Index i = 0; i < m_ub; ++i) {
    if (lp.ub_rhs(i) < 0.0) artificial_rows.push_back(i);
  }
  for (Eigen::Index i = 0; i < m_eq; ++i) artificial_rows.push_back(m_ub + i);
  const auto n_art = static_cast<Eigen::Index>(artificial_rows.size());

  const Eigen::Index slack0 = n;
  const Eigen::Index art0 = n + m_ub;
  const Eigen::Index rhs = art0 + n_art;
  detail::Tableau t = detail::Tableau::Zero(m + 1, rhs + 1);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m), -1);

  for (Eigen::Index i = 0; i < m_ub; ++i) {
    const double sign = lp.ub_rhs(i) < 0.0 ? -1.0 : 1.0;
    t.row(i).head(n) = sign * lp.ub_matrix.row(i);
    t(i, slack0 + i) = sign;
    t(i, rhs) = sign * lp.ub_rhs(i);
    if (sign > 0.0) basis[static_cast<std::size_t>(i)] = slack0 + i;
  }
  for (Eigen::Index i = 0; i < m_eq; ++i) {
    const double sign = lp.eq_rhs(i) < 0.0 ? -1.0 : 1.0;
    t.row(m_ub + i).head(n) = sign * lp.eq_matrix.row(i);
    t(m_ub + i, rhs) = sign * lp.eq_rhs(i);
  }
  for (Eigen::Index k = 0; k < n_art; ++k) {
    const Eigen::Index row = artificial_rows[static_cast<std::size_t>(k)];
    t(row, art0 + k) = 1.0;
    basis[static_cast<std::size_t>(row)] = art0 + k;
  }

  Solution out;
  detail::TableauSimplex simplex(std::move(t), std::move(basis), art0, opt);

  if (n_art > 0) {
    // Phase 1: minimize the sum of artificials over all columns.
    auto& tab = simplex.tableau();
    tab.row(m).setZero();
    tab.row(m).segment(art0, n_art).setOnes();
    for (Eigen::Index row : artificial_rows) tab.row(m) -= tab.row(row);
    simplex.set_allowed(rhs);
    const Status s = simplex.run();
    if (s == Status::iteration_limit) {
      out.status = s;
      out.iterations = simplex.iterations();
      return out;
    }
    const double scale = 1.0 + tab.col(rhs).head(m).cwiseAbs().maxCoeff();
    if (-tab(m, rhs) > opt.feasibility_tolerance * scale) {
      out.status = Status::infeasible;
      out.iterations = simplex.iterations();
      return out;
    }
    // Drive zero-level artificials out of the basis where possible. Rows
    // where no structural column is nonzero are redundant and left alone.
    for (Eigen::Index i = 0; i < m; ++i) {
      if (simplex.basis()[static_cast<std::size_t>(i)] < art0) continue;
      Eigen::Index col = -1;
      double best = opt.pivot_tolerance * 1e3;
      for (Eigen::Index j = 0; j < art0; ++j) {
        if (std::abs(tab(i, j)) > best) {
          best = std::abs(tab(i, j));
          col = j;
        }
      }
      if (col >= 0) simplex.pivot(i, col);
    }
  }

  // Phase 2 on structural and slack columns only.
  {
    auto& tab = simplex.tableau();
    tab.row(m).setZero();
    tab.row(m).head(n) = lp.cost.transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index b = simplex.basis()[static_cast<std::size_t>(i)];
      const double cb = b < n ? lp.cost(b) : 0.0;
      if (cb != 0.0) tab.row(m) -= cb * tab.row(i);
    }
    simplex.set_allowed(art0);
  }
  out.status = simplex.run();
  out.iterations = simplex.iterations();
  if (out.status != Status::optimal) return out;

  const auto& tab = simplex.tableau();
  out.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index b = simplex.basis()[static_cast<std::size_t>(i)];
    if (b < n) out.x(b) = std::max(0.0, tab(i, rhs));
  }
  out.objective = lp.cost.dot(out.x);
  return out;
}

}  // namespace lecam::lp
