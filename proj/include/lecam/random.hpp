#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lecam/decision.hpp"
#include "lecam/kernel.hpp"
#include "lecam/space.hpp"

namespace lecam {

/// Seeded generator with platform-independent draws (std distributions are
/// implementation-defined, so we derive everything from raw 64-bit words).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Derives an independent stream seed from a base seed (splitmix64).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t hash(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on {0, ..., n-1}.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  /// Uniform on {lo, ..., hi}.
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Exp(1) variate, strictly positive.
  double exponential() { return -std::log1p(-uniform()) + 1e-300; }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

/// A random probability vector. Shapes are mixed on purpose: flat
/// Dirichlet, peaked, sparse and (when allowed) point masses.
inline Eigen::VectorXd random_simplex_point(Eigen::Index n, Rng& rng, bool allow_zeros) {
  Eigen::VectorXd v(n);
  const std::size_t shape = rng.index(allow_zeros ? 4 : 2);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.exponential();
  if (shape == 1) {
    v = v.array().pow(3.0);
  } else if (shape == 2) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (rng.bernoulli(0.4)) v(i) = 0.0;
    }
    if (v.sum() <= 0.0) v(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)))) = 1.0;
  } else if (shape == 3) {
    v.setZero();
    v(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)))) = 1.0;
  }
  v /= v.sum();
  return v;
}

}  // namespace detail

inline Distribution random_distribution(const FiniteSpace& space, Rng& rng, bool allow_zeros = false) {
  return Distribution(space, detail::random_simplex_point(static_cast<Eigen::Index>(space.size()), rng, allow_zeros));
}

/// Strictly positive distribution, Dirichlet(1).
inline Distribution random_positive_distribution(const FiniteSpace& space, Rng& rng) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(space.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.exponential();
  return Distribution(space, v / v.sum());
}

inline MarkovKernel random_kernel(const FiniteSpace& from, const FiniteSpace& to, Rng& rng) {
  const auto rows = static_cast<Eigen::Index>(to.size());
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(from.size()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j) = detail::random_simplex_point(rows, rng, true);
  return MarkovKernel(from, to, std::move(m));
}

/// Columns drawn from the flat Dirichlet(1), no extreme shapes.
inline MarkovKernel random_flat_kernel(const FiniteSpace& from, const FiniteSpace& to, Rng& rng) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(to.size()), static_cast<Eigen::Index>(from.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.exponential();
  m.array().rowwise() /= m.colwise().sum().array();
  return MarkovKernel(from, to, std::move(m));
}

inline MarkovKernel random_deterministic_kernel(const FiniteSpace& from, const FiniteSpace& to, Rng& rng) {
  std::vector<std::size_t> image(from.size());
  for (auto& y : image) y = rng.index(to.size());
  return MarkovKernel::deterministic(from, to, image);
}

/// Entries uniform in [-scale, scale] with an occasional constant offset.
inline LossMatrix random_loss(const FiniteSpace& theta, const FiniteSpace& actions, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(theta.size()), static_cast<Eigen::Index>(actions.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-scale, scale);
  if (rng.bernoulli(0.25)) v.array() += rng.uniform(0.0, scale);
  return LossMatrix(theta, actions, std::move(v));
}

}  // namespace lecam
