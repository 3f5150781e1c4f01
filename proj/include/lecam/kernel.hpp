#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lecam/errors.hpp"
#include "lecam/space.hpp"

namespace lecam {

/// A Markov kernel between finite spaces, stored column-stochastic:
/// matrix(y, x) is the probability of output y given input x.
///
/// Experiments, feature maps, decoders and randomized decision rules are
/// all represented by this type.
class MarkovKernel {
 public:
  MarkovKernel(FiniteSpace from, FiniteSpace to, Eigen::MatrixXd matrix)
      : from_(std::move(from)), to_(std::move(to)), matrix_(std::move(matrix)) {
    if (static_cast<std::size_t>(matrix_.rows()) != to_.size() ||
        static_cast<std::size_t>(matrix_.cols()) != from_.size()) {
      throw InvalidArgument("kernel " + from_.describe() + " -> " + to_.describe() + " needs a " +
                            std::to_string(to_.size()) + "x" + std::to_string(from_.size()) + " matrix, got " +
                            std::to_string(matrix_.rows()) + "x" + std::to_string(matrix_.cols()));
    }
    for (Eigen::Index j = 0; j < matrix_.cols(); ++j) {
      detail::normalize_probabilities(matrix_.col(j), "kernel column '" + from_.label(static_cast<std::size_t>(j)) +
                                                          "' of " + from_.name() + " -> " + to_.name());
    }
  }

  static MarkovKernel identity(const FiniteSpace& space) {
    const auto n = static_cast<Eigen::Index>(space.size());
    return MarkovKernel(space, space, Eigen::MatrixXd::Identity(n, n));
  }

  /// The completely uninformative kernel onto the one-point space.
  static MarkovKernel uninformative(const FiniteSpace& space) {
    return MarkovKernel(space, FiniteSpace::point(), Eigen::MatrixXd::Ones(1, static_cast<Eigen::Index>(space.size())));
  }

  /// Every input is sent to the same output distribution.
  static MarkovKernel constant(const FiniteSpace& from, const Distribution& output) {
    return MarkovKernel(from, output.space(), output.mass().replicate(1, static_cast<Eigen::Index>(from.size())));
  }

  /// Point-mass columns: input i goes to output image[i].
  static MarkovKernel deterministic(const FiniteSpace& from, const FiniteSpace& to,
                                    std::span<const std::size_t> image) {
    if (image.size() != from.size()) {
      throw InvalidArgument("deterministic map on " + from.describe() + " needs " + std::to_string(from.size()) +
                            " images, got " + std::to_string(image.size()));
    }
    Eigen::MatrixXd m =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(to.size()), static_cast<Eigen::Index>(from.size()));
    for (std::size_t x = 0; x < image.size(); ++x) {
      if (image[x] >= to.size()) {
        throw InvalidArgument("deterministic map sends '" + from.label(x) + "' outside " + to.describe());
      }
      m(static_cast<Eigen::Index>(image[x]), static_cast<Eigen::Index>(x)) = 1.0;
    }
    return MarkovKernel(from, to, std::move(m));
  }

  /// Deterministic kernel from a label map; throws if f produces a label not in `to`.
  static MarkovKernel deterministic(const FiniteSpace& from, const FiniteSpace& to,
                                    const std::function<std::string(const std::string&)>& f) {
    std::vector<std::size_t> image;
    image.reserve(from.size());
    for (const auto& label : from.labels()) {
      auto target = f(label);
      auto idx = to.find(target);
      if (!idx) {
        throw InvalidArgument("deterministic map sends '" + label + "' to '" + target + "', which is not in " +
                              to.describe());
      }
      image.push_back(*idx);
    }
    return deterministic(from, to, image);
  }

  const FiniteSpace& from() const noexcept { return from_; }
  const FiniteSpace& to() const noexcept { return to_; }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

  double operator()(std::size_t out, std::size_t in) const {
    return matrix_(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  }

  /// Output distribution for input `in`.
  Distribution column(std::size_t in) const { return Distribution(to_, matrix_.col(static_cast<Eigen::Index>(in))); }

  /// If every column is a point mass, the image of each input.
  std::optional<std::vector<std::size_t>> as_function() const {
    std::vector<std::size_t> image(from_.size());
    for (Eigen::Index j = 0; j < matrix_.cols(); ++j) {
      Eigen::Index row = 0;
      if (matrix_.col(j).maxCoeff(&row) < 1.0 - 1e-12) return std::nullopt;
      image[static_cast<std::size_t>(j)] = static_cast<std::size_t>(row);
    }
    return image;
  }

 private:
  FiniteSpace from_;
  FiniteSpace to_;
  Eigen::MatrixXd matrix_;
};

/// Joint law of (theta, x) as a |X| x |Theta| matrix, T diag(pi).
class JointDistribution {
 public:
  JointDistribution(FiniteSpace theta, FiniteSpace data, Eigen::MatrixXd matrix)
      : theta_(std::move(theta)), data_(std::move(data)), matrix_(std::move(matrix)) {
    if (static_cast<std::size_t>(matrix_.rows()) != data_.size() ||
        static_cast<std::size_t>(matrix_.cols()) != theta_.size()) {
      throw InvalidArgument("joint distribution has the wrong shape");
    }
    Eigen::Map<Eigen::VectorXd> flat(matrix_.data(), matrix_.size());
    detail::normalize_probabilities(flat.col(0),
                                    "joint distribution over " + theta_.describe() + " x " + data_.describe());
  }

  const FiniteSpace& theta() const noexcept { return theta_; }
  const FiniteSpace& data() const noexcept { return data_; }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

  Distribution data_marginal() const { return Distribution(data_, matrix_.rowwise().sum()); }
  Distribution theta_marginal() const { return Distribution(theta_, matrix_.colwise().sum().transpose()); }

 private:
  FiniteSpace theta_;
  FiniteSpace data_;
  Eigen::MatrixXd matrix_;
};

/// outer . inner, i.e. first apply inner then outer.
inline MarkovKernel compose(const MarkovKernel& outer, const MarkovKernel& inner) {
  require_same_space(outer.from(), inner.to(), "compose");
  return MarkovKernel(inner.from(), outer.to(), outer.matrix() * inner.matrix());
}

inline Distribution pushforward(const MarkovKernel& t, const Distribution& p) {
  require_same_space(t.from(), p.space(), "pushforward");
  return Distribution(t.to(), t.matrix() * p.mass());
}

inline JointDistribution joint(const MarkovKernel& t, const Distribution& prior) {
  require_same_space(t.from(), prior.space(), "joint");
  return JointDistribution(t.from(), t.to(), t.matrix() * prior.mass().asDiagonal());
}

/// Posterior kernel X -> Theta obtained by Bayes rule, together with the
/// data marginal and the data labels whose marginal is zero. Those columns
/// carry the uniform distribution; they receive zero weight everywhere the
/// posterior is averaged against the marginal.
struct BayesInverse {
  MarkovKernel posterior;
  Distribution marginal;
  std::vector<std::size_t> zero_marginal;
};

inline BayesInverse bayes_inverse(const MarkovKernel& t, const Distribution& prior) {
  require_same_space(t.from(), prior.space(), "bayes_inverse");
  const Eigen::MatrixXd j = t.matrix() * prior.mass().asDiagonal();  // x, theta
  const Eigen::VectorXd marginal = j.rowwise().sum();
  const auto n_theta = j.cols();
  Eigen::MatrixXd post(n_theta, j.rows());
  std::vector<std::size_t> zero;
  for (Eigen::Index x = 0; x < j.rows(); ++x) {
    if (marginal(x) > 0.0) {
      post.col(x) = j.row(x).transpose() / marginal(x);
    } else {
      post.col(x).setConstant(1.0 / static_cast<double>(n_theta));
      zero.push_back(static_cast<std::size_t>(x));
    }
  }
  return BayesInverse{MarkovKernel(t.to(), t.from(), std::move(post)), Distribution(t.to(), marginal), std::move(zero)};
}

}  // namespace lecam
