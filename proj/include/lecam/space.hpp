#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lecam/errors.hpp"

namespace lecam {

/// Columns and probability vectors must sum to one within this tolerance.
inline constexpr double kStochasticTolerance = 1e-9;

/// A finite, ordered set of distinct labels.
///
/// Two spaces compare equal when they carry the same labels in the same
/// order; the name is only used in diagnostics. Copies share storage.
class FiniteSpace {
 public:
  FiniteSpace(std::string name, std::vector<std::string> labels) {
    if (labels.empty()) {
      throw InvalidArgument("space '" + name + "' must have at least one label");
    }
    auto data = std::make_shared<Data>();
    data->name = std::move(name);
    data->labels = std::move(labels);
    for (std::size_t i = 0; i < data->labels.size(); ++i) {
      if (!data->index.emplace(data->labels[i], i).second) {
        throw InvalidArgument("space '" + data->name + "' has duplicate label '" + data->labels[i] + "'");
      }
    }
    data_ = std::move(data);
  }

  /// Labels prefix0, prefix1, ..., prefix{n-1}.
  static FiniteSpace indexed(std::string name, std::size_t n, std::string_view prefix) {
    std::vector<std::string> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::string(prefix) + std::to_string(i));
    return FiniteSpace(std::move(name), std::move(labels));
  }

  /// The one-point space that uninformative kernels map into.
  static FiniteSpace point() { return FiniteSpace("point", {"*"}); }

  const std::string& name() const noexcept { return data_->name; }
  std::size_t size() const noexcept { return data_->labels.size(); }
  const std::string& label(std::size_t i) const { return data_->labels.at(i); }
  const std::vector<std::string>& labels() const noexcept { return data_->labels; }

  std::optional<std::size_t> find(std::string_view label) const {
    auto it = data_->index.find(std::string(label));
    if (it == data_->index.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view label) const {
    if (auto i = find(label)) return *i;
    throw InvalidArgument("label '" + std::string(label) + "' is not in space '" + name() + "'");
  }

  std::string describe() const {
    std::ostringstream os;
    os << '\'' << name() << "' {";
    for (std::size_t i = 0; i < size(); ++i) {
      if (i) os << ',';
      if (i == 6 && size() > 8) {
        os << "...(" << size() << " labels)";
        break;
      }
      os << label(i);
    }
    os << '}';
    return os.str();
  }

  friend bool operator==(const FiniteSpace& a, const FiniteSpace& b) {
    return a.data_ == b.data_ || a.data_->labels == b.data_->labels;
  }

 private:
  struct Data {
    std::string name;
    std::vector<std::string> labels;
    std::unordered_map<std::string, std::size_t> index;
  };
  std::shared_ptr<const Data> data_;
};

inline void require_same_space(const FiniteSpace& a, const FiniteSpace& b, std::string_view context) {
  if (!(a == b)) {
    throw SpaceMismatch(std::string(context) + ": space " + a.describe() + " does not match space " + b.describe());
  }
}

namespace detail {

/// Validates a probability vector in place. Tiny negative round-off is
/// clamped to zero and sums off by at most kStochasticTolerance are
/// renormalized; anything else is rejected.
template <class Derived>
void normalize_probabilities(Eigen::MatrixBase<Derived>&& v, std::string_view what) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double& p = v.derived().coeffRef(i);
    if (!std::isfinite(p)) throw InvalidArgument(std::string(what) + " has a non-finite entry");
    if (p < 0.0) {
      if (p < -1e-12) {
        throw InvalidArgument(std::string(what) + " has a negative entry " + std::to_string(p));
      }
      p = 0.0;
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kStochasticTolerance) {
    std::ostringstream os;
    os.precision(12);
    os << what << " sums to " << sum << ", expected 1";
    throw InvalidArgument(os.str());
  }
  // Leave near-exact sums alone so that normalization is idempotent.
  if (std::abs(sum - 1.0) > 1e-12) v.derived() /= sum;
}

}  // namespace detail

/// A probability vector over a finite space.
class Distribution {
 public:
  Distribution(FiniteSpace space, Eigen::VectorXd mass) : space_(std::move(space)), mass_(std::move(mass)) {
    if (static_cast<std::size_t>(mass_.size()) != space_.size()) {
      throw InvalidArgument("distribution over " + space_.describe() + " has " + std::to_string(mass_.size()) +
                            " entries, expected " + std::to_string(space_.size()));
    }
    detail::normalize_probabilities(mass_.col(0), "distribution over " + space_.describe());
  }

  static Distribution uniform(const FiniteSpace& space) {
    const auto n = static_cast<Eigen::Index>(space.size());
    return Distribution(space, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
  }

  static Distribution point_mass(const FiniteSpace& space, std::size_t i) {
    if (i >= space.size()) throw InvalidArgument("point mass index out of range for " + space.describe());
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.size()));
    m(static_cast<Eigen::Index>(i)) = 1.0;
    return Distribution(space, std::move(m));
  }

  const FiniteSpace& space() const noexcept { return space_; }
  const Eigen::VectorXd& mass() const noexcept { return mass_; }
  std::size_t size() const noexcept { return space_.size(); }
  double operator[](std::size_t i) const { return mass_(static_cast<Eigen::Index>(i)); }

  bool strictly_positive() const { return (mass_.array() > 0.0).all(); }

  /// Most probable label, lowest index on ties.
  std::size_t mode() const {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < mass_.size(); ++i) {
      if (mass_(i) > mass_(best)) best = i;
    }
    return static_cast<std::size_t>(best);
  }

 private:
  FiniteSpace space_;
  Eigen::VectorXd mass_;
};

/// l1 distance sum_i |P_i - Q_i|, in [0, 2].
inline double variational_divergence(const Distribution& p, const Distribution& q) {
  require_same_space(p.space(), q.space(), "variational_divergence");
  return (p.mass() - q.mass()).lpNorm<1>();
}

}  // namespace lecam
