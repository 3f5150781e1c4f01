#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lecam/decision.hpp"
#include "lecam/errors.hpp"
#include "lecam/information.hpp"
#include "lecam/kernel.hpp"
#include "lecam/random.hpp"
#include "lecam/space.hpp"

// Supervised feature learning: choose phi: X -> Z to keep the feature gap
// small while paying beta * I(X; Z). The gap is written as an expected
// regret between data posteriors T*(x) and latent centroids U(z); the
// objective is minimized coordinate-wise over (centroids, latent prior, phi).

namespace lecam {

struct IBState {
  MarkovKernel encoder;       // X -> Z
  MarkovKernel centroids;     // Z -> Theta
  Distribution latent_prior;  // over Z
  double beta = 0.0;
  std::vector<double> objective_trace;
};

struct IBOptions {
  std::size_t latent_size = 2;
  double beta = 0.0;
  std::size_t max_iters = 200;
  std::uint64_t seed = 0;
};

namespace ib {

/// Data marginal and posteriors T*(x) of a learning problem.
struct Posteriors {
  BayesInverse inverse;

  Posteriors(const MarkovKernel& experiment, const Distribution& prior) : inverse(bayes_inverse(experiment, prior)) {}

  const Eigen::MatrixXd& matrix() const { return inverse.posterior.matrix(); }  // theta, x
  const Distribution& data_prior() const { return inverse.marginal; }
};

/// R(x, z) = regret(L, T*(x), U(z)).
inline Eigen::MatrixXd regret_matrix(const LossMatrix& loss, const Eigen::MatrixXd& posteriors,
                                     const MarkovKernel& centroids) {
  const Eigen::MatrixXd expected = posteriors.transpose() * loss.values();  // x, a
  const Eigen::VectorXd floor = expected.rowwise().minCoeff();
  Eigen::MatrixXd r(expected.rows(), centroids.matrix().cols());
  for (Eigen::Index z = 0; z < r.cols(); ++z) {
    const auto a = static_cast<Eigen::Index>(detail::bayes_act(loss, centroids.matrix().col(z)));
    r.col(z) = expected.col(a) - floor;
  }
  return r;
}

/// Expected regret term sum_x pi_X(x) sum_z phi(z|x) R(x, z).
inline double distortion(const LossMatrix& loss, const Posteriors& post, const MarkovKernel& encoder,
                         const MarkovKernel& centroids) {
  const Eigen::MatrixXd r = regret_matrix(loss, post.matrix(), centroids);  // x, z
  const Eigen::VectorXd& w = post.data_prior().mass();
  double total = 0.0;
  for (Eigen::Index x = 0; x < r.rows(); ++x) {
    if (w(x) > 0.0) total += w(x) * r.row(x).dot(encoder.matrix().col(x));
  }
  return total;
}

/// beta-weighted KL term sum_x pi_X(x) KL(phi(x) || latent prior); zero when beta == 0.
inline double rate(const Posteriors& post, const MarkovKernel& encoder, const Distribution& latent_prior, double beta) {
  if (beta == 0.0) return 0.0;
  const Eigen::VectorXd& w = post.data_prior().mass();
  double total = 0.0;
  for (Eigen::Index x = 0; x < w.size(); ++x) {
    if (w(x) <= 0.0) continue;
    const double kl = lecam::detail::kl_bits(encoder.matrix().col(x), latent_prior.mass());
    if (std::isinf(kl)) return std::numeric_limits<double>::infinity();
    total += w(x) * kl;
  }
  return beta * total;
}

/// (a) U(z) := sum_x P(x|z) T*(x). Latents with no mass get the prior on Theta.
inline MarkovKernel centroid_step(const Posteriors& post, const MarkovKernel& encoder, const Distribution& prior) {
  const Eigen::MatrixXd weighted = encoder.matrix() * post.data_prior().mass().asDiagonal();  // z, x
  Eigen::MatrixXd u(post.matrix().rows(), weighted.rows());
  for (Eigen::Index z = 0; z < weighted.rows(); ++z) {
    const double mass = weighted.row(z).sum();
    if (mass > 0.0) {
      u.col(z) = post.matrix() * weighted.row(z).transpose() / mass;
    } else {
      u.col(z) = prior.mass();
    }
  }
  return MarkovKernel(encoder.to(), prior.space(), std::move(u));
}

/// (b) latent prior := phi(pi_X).
inline Distribution latent_prior_step(const Posteriors& post, const MarkovKernel& encoder) {
  return pushforward(encoder, post.data_prior());
}

/// (c) Encoder minimizing the objective for fixed centroids and latent prior:
/// phi(z|x) proportional to prior(z) 2^(-R(x,z)/beta), or hard argmin_z R(x,z)
/// (lowest index on ties) when beta == 0.
inline MarkovKernel encoder_step(const LossMatrix& loss, const Posteriors& post, const MarkovKernel& centroids,
                                 const Distribution& latent_prior, double beta) {
  const Eigen::MatrixXd r = regret_matrix(loss, post.matrix(), centroids);  // x, z
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(r.cols(), r.rows());
  for (Eigen::Index x = 0; x < r.rows(); ++x) {
    if (beta == 0.0) {
      phi(static_cast<Eigen::Index>(lecam::detail::argmin_lowest(r.row(x).transpose())), x) = 1.0;
      continue;
    }
    // KL is measured in bits, so the Gibbs weights use base 2.
    Eigen::VectorXd logw(r.cols());
    for (Eigen::Index z = 0; z < r.cols(); ++z) {
      const double p = latent_prior.mass()(z);
      logw(z) = p > 0.0 ? std::log2(p) - r(x, z) / beta : -std::numeric_limits<double>::infinity();
    }
    const double top = logw.maxCoeff();
    for (Eigen::Index z = 0; z < r.cols(); ++z) {
      phi(z, x) = std::isinf(logw(z)) ? 0.0 : std::exp2(logw(z) - top);
    }
    phi.col(x) /= phi.col(x).sum();
  }
  return MarkovKernel(post.data_prior().space(), centroids.from(), std::move(phi));
}

/// Seeds centroids at data posteriors, k-means++ style with regret as the
/// spread measure. Once every posterior has zero regret against some seed,
/// the remaining seeds are drawn uniformly from the unused support points.
inline MarkovKernel seed_centroids(const LossMatrix& loss, const Posteriors& post, const FiniteSpace& latent,
                                   Rng& rng) {
  const Eigen::VectorXd& w = post.data_prior().mass();
  const auto nx = w.size();
  const std::size_t k = latent.size();
  std::vector<Eigen::Index> seeds;
  auto draw_weighted = [&](const Eigen::VectorXd& weights) {
    double u = rng.uniform() * weights.sum();
    Eigen::Index last = -1;
    for (Eigen::Index x = 0; x < nx; ++x) {
      if (weights(x) <= 0.0) continue;
      last = x;
      if (u < weights(x)) return x;
      u -= weights(x);
    }
    return last;
  };
  seeds.push_back(draw_weighted(w));
  while (seeds.size() < k) {
    Eigen::VectorXd spread = Eigen::VectorXd::Zero(nx);
    for (Eigen::Index x = 0; x < nx; ++x) {
      if (w(x) <= 0.0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (auto s : seeds) best = std::min(best, detail::regret(loss, post.matrix().col(x), post.matrix().col(s)));
      spread(x) = w(x) * best;
    }
    if (spread.sum() > 1e-12) {
      seeds.push_back(draw_weighted(spread));
      continue;
    }
    std::vector<Eigen::Index> unused;
    for (Eigen::Index x = 0; x < nx; ++x) {
      if (w(x) > 0.0 && std::find(seeds.begin(), seeds.end(), x) == seeds.end()) unused.push_back(x);
    }
    if (unused.empty()) {
      seeds.push_back(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(nx))));
    } else {
      seeds.push_back(unused[rng.index(unused.size())]);
    }
  }
  Eigen::MatrixXd u(post.matrix().rows(), static_cast<Eigen::Index>(k));
  for (std::size_t z = 0; z < k; ++z) u.col(static_cast<Eigen::Index>(z)) = post.matrix().col(seeds[z]);
  return MarkovKernel(latent, post.inverse.posterior.to(), std::move(u));
}

}  // namespace ib

/// Expected regret between data posteriors and the state's centroids plus
/// beta times the KL rate against the state's latent prior.
inline double ib_objective(const IBState& state, const LossMatrix& loss, const Distribution& prior,
                           const MarkovKernel& experiment) {
  if (state.beta < 0.0) throw InvalidArgument("ib_objective: beta must be nonnegative");
  require_same_space(loss.theta(), prior.space(), "ib_objective (loss vs prior)");
  require_same_space(state.encoder.from(), experiment.to(), "ib_objective (encoder input)");
  require_same_space(state.centroids.from(), state.encoder.to(), "ib_objective (centroid input)");
  require_same_space(state.centroids.to(), prior.space(), "ib_objective (centroid output)");
  require_same_space(state.latent_prior.space(), state.encoder.to(), "ib_objective (latent prior)");
  const ib::Posteriors post(experiment, prior);
  return ib::distortion(loss, post, state.encoder, state.centroids) +
         ib::rate(post, state.encoder, state.latent_prior, state.beta);
}

/// Alternating minimization: centroids, then latent prior, then encoder,
/// until the objective improves by less than 1e-9 or max_iters sweeps.
/// The returned centroids and latent prior are consistent with the encoder.
inline IBState ib_learn(const LossMatrix& loss, const Distribution& prior, const MarkovKernel& experiment,
                        const IBOptions& opt) {
  if (opt.latent_size < 1) throw InvalidArgument("ib_learn: latent size must be at least 1");
  if (!(opt.beta >= 0.0) || !std::isfinite(opt.beta)) throw InvalidArgument("ib_learn: beta must be finite and >= 0");
  if (opt.max_iters < 1) throw InvalidArgument("ib_learn: max_iters must be at least 1");
  require_same_space(loss.theta(), prior.space(), "ib_learn (loss vs prior)");
  require_same_space(experiment.from(), prior.space(), "ib_learn (experiment vs prior)");

  const ib::Posteriors post(experiment, prior);
  const FiniteSpace latent = FiniteSpace::indexed("Z", opt.latent_size, "z");
  Rng rng(opt.seed);
  MarkovKernel centroids = ib::seed_centroids(loss, post, latent, rng);
  MarkovKernel encoder = ib::encoder_step(loss, post, centroids, Distribution::uniform(latent), opt.beta);

  std::vector<double> trace;
  Distribution latent_prior = Distribution::uniform(latent);
  for (std::size_t it = 0;; ++it) {
    centroids = ib::centroid_step(post, encoder, prior);
    latent_prior = ib::latent_prior_step(post, encoder);
    const double obj = ib::distortion(loss, post, encoder, centroids) + ib::rate(post, encoder, latent_prior, opt.beta);
    trace.push_back(obj);
    if (trace.size() > 1 && trace[trace.size() - 2] - obj < 1e-9) break;
    if (it + 1 >= opt.max_iters) break;
    encoder = ib::encoder_step(loss, post, centroids, latent_prior, opt.beta);
  }
  return IBState{std::move(encoder), std::move(centroids), std::move(latent_prior), opt.beta, std::move(trace)};
}

/// Number of distinct posterior columns T*(x) over the support of pi_X.
inline std::size_t distinct_posteriors(const MarkovKernel& experiment, const Distribution& prior, double tol = 1e-12) {
  const ib::Posteriors post(experiment, prior);
  std::vector<Eigen::Index> reps;
  for (Eigen::Index x = 0; x < post.matrix().cols(); ++x) {
    if (post.data_prior().mass()(x) <= 0.0) continue;
    bool seen = false;
    for (auto r : reps) {
      if ((post.matrix().col(x) - post.matrix().col(r)).cwiseAbs().maxCoeff() <= tol) {
        seen = true;
        break;
      }
    }
    if (!seen) reps.push_back(x);
  }
  return reps.size();
}

}  // namespace lecam
