#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "lecam/kernel.hpp"
#include "lecam/space.hpp"

// Entropies and divergences in bits, with 0 log 0 = 0.

namespace lecam {

namespace detail {

inline double entropy_bits(const Eigen::Ref<const Eigen::VectorXd>& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log2(p(i));
  }
  return h;
}

/// KL(p || q); +infinity when p puts mass where q has none.
inline double kl_bits(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    if (q(i) <= 0.0) return std::numeric_limits<double>::infinity();
    d += p(i) * std::log2(p(i) / q(i));
  }
  return d;
}

}  // namespace detail

inline double entropy(const Distribution& p) { return detail::entropy_bits(p.mass()); }

inline double kl_divergence(const Distribution& p, const Distribution& q) {
  require_same_space(p.space(), q.space(), "kl_divergence");
  return detail::kl_bits(p.mass(), q.mass());
}

/// H(X | Z) under the joint law pi_X(x) phi(z|x).
inline double conditional_entropy(const Distribution& data_prior, const MarkovKernel& features) {
  require_same_space(features.from(), data_prior.space(), "conditional_entropy");
  const Eigen::MatrixXd j = features.matrix() * data_prior.mass().asDiagonal();  // z, x
  const Eigen::Map<const Eigen::VectorXd> flat(j.data(), j.size());
  const Eigen::VectorXd z_marginal = j.rowwise().sum();
  return std::max(0.0, detail::entropy_bits(flat) - detail::entropy_bits(z_marginal));
}

/// I(X; Z) = sum_x pi_X(x) KL(phi(.|x) || phi(pi_X)).
inline double mutual_information(const Distribution& data_prior, const MarkovKernel& features) {
  require_same_space(features.from(), data_prior.space(), "mutual_information");
  const Eigen::VectorXd z_marginal = features.matrix() * data_prior.mass();
  double mi = 0.0;
  for (Eigen::Index x = 0; x < features.matrix().cols(); ++x) {
    const double w = data_prior.mass()(x);
    if (w <= 0.0) continue;
    mi += w * detail::kl_bits(features.matrix().col(x), z_marginal);
  }
  return mi;
}

}  // namespace lecam
