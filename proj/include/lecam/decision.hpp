#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lecam/errors.hpp"
#include "lecam/kernel.hpp"
#include "lecam/space.hpp"

namespace lecam {

/// Bounded loss L(theta, a), stored |Theta| x |A|.
class LossMatrix {
 public:
  LossMatrix(FiniteSpace theta, FiniteSpace actions, Eigen::MatrixXd values)
      : theta_(std::move(theta)), actions_(std::move(actions)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.rows()) != theta_.size() ||
        static_cast<std::size_t>(values_.cols()) != actions_.size()) {
      throw InvalidArgument("loss over " + theta_.describe() + " x " + actions_.describe() + " needs a " +
                            std::to_string(theta_.size()) + "x" + std::to_string(actions_.size()) + " matrix");
    }
    if (!values_.allFinite()) throw InvalidArgument("loss has a non-finite entry");
    sup_norm_ = values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0;
  }

  /// 0-1 loss with A = Theta.
  static LossMatrix zero_one(const FiniteSpace& theta) {
    const auto n = static_cast<Eigen::Index>(theta.size());
    return LossMatrix(theta, theta, Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n));
  }

  const FiniteSpace& theta() const noexcept { return theta_; }
  const FiniteSpace& actions() const noexcept { return actions_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double sup_norm() const noexcept { return sup_norm_; }

  /// alpha * L + shift; alpha may be any real.
  LossMatrix affine(double alpha, double shift) const {
    return LossMatrix(theta_, actions_, (alpha * values_.array() + shift).matrix());
  }

 private:
  FiniteSpace theta_;
  FiniteSpace actions_;
  Eigen::MatrixXd values_;
  double sup_norm_ = 0.0;
};

namespace detail {

/// Index of the smallest entry, lowest index on ties.
inline std::size_t argmin_lowest(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) < v(best)) best = i;
  }
  return static_cast<std::size_t>(best);
}

inline std::size_t bayes_act(const LossMatrix& loss, const Eigen::Ref<const Eigen::VectorXd>& posterior) {
  return argmin_lowest(loss.values().transpose() * posterior);
}

inline double min_expected_loss(const LossMatrix& loss, const Eigen::Ref<const Eigen::VectorXd>& p) {
  return (loss.values().transpose() * p).minCoeff();
}

inline double regret(const LossMatrix& loss, const Eigen::Ref<const Eigen::VectorXd>& p,
                     const Eigen::Ref<const Eigen::VectorXd>& q) {
  const Eigen::VectorXd expected = loss.values().transpose() * p;
  return expected(static_cast<Eigen::Index>(bayes_act(loss, q))) - expected.minCoeff();
}

}  // namespace detail

/// A learning problem (Theta, X, T, A, L) together with a prior on Theta.
struct LearningProblem {
  MarkovKernel experiment;
  LossMatrix loss;
  Distribution prior;

  LearningProblem(MarkovKernel t, LossMatrix l, Distribution p)
      : experiment(std::move(t)), loss(std::move(l)), prior(std::move(p)) {
    require_same_space(experiment.from(), loss.theta(), "learning problem (experiment vs loss)");
    require_same_space(experiment.from(), prior.space(), "learning problem (experiment vs prior)");
  }

  const FiniteSpace& theta() const noexcept { return experiment.from(); }
  const FiniteSpace& data_space() const noexcept { return experiment.to(); }
};

/// Action minimizing expected loss under `posterior`; ties go to the lowest index.
inline std::size_t bayes_act(const LossMatrix& loss, const Distribution& posterior) {
  require_same_space(loss.theta(), posterior.space(), "bayes_act");
  return detail::bayes_act(loss, posterior.mass());
}

/// Bayes risk function min_a E_{theta ~ p} L(theta, a). Concave in p.
inline double min_expected_loss(const LossMatrix& loss, const Distribution& p) {
  require_same_space(loss.theta(), p.space(), "min_expected_loss");
  return detail::min_expected_loss(loss, p.mass());
}

/// Full Bayes risk of a randomized rule D: Theta -> A.
inline double bayes_risk(const LossMatrix& loss, const Distribution& prior, const MarkovKernel& rule) {
  require_same_space(loss.theta(), prior.space(), "bayes_risk (loss vs prior)");
  require_same_space(rule.from(), loss.theta(), "bayes_risk (rule input)");
  require_same_space(rule.to(), loss.actions(), "bayes_risk (rule output)");
  // sum_theta pi(theta) sum_a D(a|theta) L(theta,a)
  return rule.matrix().transpose().cwiseProduct(loss.values()).rowwise().sum().dot(prior.mass());
}

/// Value of the experiment: expected posterior Bayes risk. Lower is better.
inline double value(const LossMatrix& loss, const Distribution& prior, const MarkovKernel& experiment) {
  require_same_space(loss.theta(), prior.space(), "value (loss vs prior)");
  require_same_space(experiment.from(), prior.space(), "value (experiment vs prior)");
  // Row x of joint * L is pi_X(x) times the posterior expected loss of each action.
  const Eigen::MatrixXd scaled = (experiment.matrix() * prior.mass().asDiagonal()) * loss.values();
  return scaled.rowwise().minCoeff().sum();
}

/// The Bayes-optimal deterministic rule X -> A for the problem.
inline MarkovKernel bayes_rule(const LossMatrix& loss, const Distribution& prior, const MarkovKernel& experiment) {
  require_same_space(loss.theta(), prior.space(), "bayes_rule (loss vs prior)");
  const auto inverse = bayes_inverse(experiment, prior);
  std::vector<std::size_t> acts(experiment.to().size());
  for (std::size_t x = 0; x < acts.size(); ++x) {
    acts[x] = detail::bayes_act(loss, inverse.posterior.matrix().col(static_cast<Eigen::Index>(x)));
  }
  return MarkovKernel::deterministic(experiment.to(), loss.actions(), acts);
}

/// Excess loss of playing the Bayes act for q when theta ~ p. Never negative.
inline double regret(const LossMatrix& loss, const Distribution& p, const Distribution& q) {
  require_same_space(loss.theta(), p.space(), "regret (p)");
  require_same_space(loss.theta(), q.space(), "regret (q)");
  return detail::regret(loss, p.mass(), q.mass());
}

/// Loss in value from observing features phi(x) instead of x.
inline double feature_gap(const LossMatrix& loss, const Distribution& prior, const MarkovKernel& experiment,
                          const MarkovKernel& features) {
  return value(loss, prior, compose(features, experiment)) - value(loss, prior, experiment);
}

/// Gain in value of T over observing nothing: min_a E_pi L - V_L(pi, T).
inline double information_gap(const LossMatrix& loss, const Distribution& prior, const MarkovKernel& experiment) {
  return min_expected_loss(loss, prior) - value(loss, prior, experiment);
}

}  // namespace lecam
