#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lecam/errors.hpp"
#include "lecam/information.hpp"
#include "lecam/kernel.hpp"
#include "lecam/random.hpp"
#include "lecam/space.hpp"

// Generic features: an encoder phi: X -> Z is judged by how well X can be
// recovered from Z under the data prior. Twice the best reconstruction
// error bounds the value lost on every learning problem that generates X.

namespace lecam {

/// MAP decoder Z -> X: each latent decodes to argmax_x pi_X(x) phi(z|x),
/// lowest index on ties. Latents with zero marginal decode to the prior mode.
inline MarkovKernel optimal_decoder(const MarkovKernel& encoder, const Distribution& data_prior) {
  require_same_space(encoder.from(), data_prior.space(), "optimal_decoder");
  const Eigen::MatrixXd scores = encoder.matrix() * data_prior.mass().asDiagonal();  // z, x
  std::vector<std::size_t> image(encoder.to().size());
  const std::size_t mode = data_prior.mode();
  for (Eigen::Index z = 0; z < scores.rows(); ++z) {
    if (scores.row(z).sum() <= 0.0) {
      image[static_cast<std::size_t>(z)] = mode;
      continue;
    }
    Eigen::Index best = 0;
    for (Eigen::Index x = 1; x < scores.cols(); ++x) {
      if (scores(z, x) > scores(z, best)) best = x;
    }
    image[static_cast<std::size_t>(z)] = static_cast<std::size_t>(best);
  }
  return MarkovKernel::deterministic(encoder.to(), encoder.from(), image);
}

/// Probability that d(phi(x)) != x for x ~ pi_X.
inline double reconstruction_error(const MarkovKernel& encoder, const MarkovKernel& decoder,
                                   const Distribution& data_prior) {
  require_same_space(encoder.from(), data_prior.space(), "reconstruction_error (encoder vs prior)");
  require_same_space(decoder.to(), data_prior.space(), "reconstruction_error (decoder output)");
  const Eigen::MatrixXd round_trip = compose(decoder, encoder).matrix();
  // Summing the missed mass keeps a perfect reconstruction at exactly 0.
  const Eigen::VectorXd missed = (1.0 - round_trip.diagonal().array()).max(0.0).matrix();
  return std::clamp(missed.dot(data_prior.mass()), 0.0, 1.0);
}

/// Quality epsilon in [0, 2] of the encoder as generic features for pi_X:
/// twice the minimal reconstruction error.
inline double generic_quality(const MarkovKernel& encoder, const Distribution& data_prior) {
  return 2.0 * reconstruction_error(encoder, optimal_decoder(encoder, data_prior), data_prior);
}

struct HellmanRavivReport {
  double epsilon = 0.0;
  double conditional_entropy = 0.0;  // bits
  bool holds = false;
};

/// Checks epsilon <= H(X|Z): conditional entropy upper-bounds the quality.
inline HellmanRavivReport hellman_raviv_check(const MarkovKernel& encoder, const Distribution& data_prior) {
  HellmanRavivReport r;
  r.epsilon = generic_quality(encoder, data_prior);
  r.conditional_entropy = conditional_entropy(data_prior, encoder);
  r.holds = r.epsilon <= r.conditional_entropy + 1e-9;
  return r;
}

struct AutoencodeOptions {
  std::size_t latent_size = 2;
  std::size_t max_iters = 100;
  std::size_t restarts = 16;
  std::uint64_t seed = 0;
};

struct AutoencoderResult {
  MarkovKernel encoder;
  MarkovKernel decoder;
  double epsilon = 2.0;
  /// Reconstruction probability after each sweep of the winning restart.
  std::vector<double> trace;
  std::size_t restarts_used = 0;
  std::size_t best_restart = 0;
  std::uint64_t seed = 0;
};

namespace detail {

struct DeterministicCode {
  std::vector<std::size_t> encoder;  // x -> z
  std::vector<std::size_t> decoder;  // z -> x
};

inline double reconstruction_probability(const DeterministicCode& code, const Eigen::VectorXd& prior) {
  double p = 0.0;
  for (std::size_t x = 0; x < code.encoder.size(); ++x) {
    if (code.decoder[code.encoder[x]] == x) p += prior(static_cast<Eigen::Index>(x));
  }
  return p;
}

inline double missed_mass(const DeterministicCode& code, const Eigen::VectorXd& prior) {
  double m = 0.0;
  for (std::size_t x = 0; x < code.encoder.size(); ++x) {
    if (code.decoder[code.encoder[x]] != x) m += prior(static_cast<Eigen::Index>(x));
  }
  return m;
}

// MAP decoding of each fiber. Latents whose fiber carries no mass are
// pointed at the heaviest inputs nothing reconstructs yet, so the next
// encoder step can use them.
inline std::vector<std::size_t> decoder_step(const std::vector<std::size_t>& encoder, const Eigen::VectorXd& prior,
                                             std::size_t latent_size, const std::vector<std::size_t>& by_mass) {
  const std::size_t nx = encoder.size();
  std::vector<std::size_t> decoder(latent_size, nx);
  std::vector<double> best(latent_size, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    const double w = prior(static_cast<Eigen::Index>(x));
    const std::size_t z = encoder[x];
    if (w > best[z]) {
      best[z] = w;
      decoder[z] = x;
    }
  }
  std::vector<bool> reconstructed(nx, false);
  for (std::size_t z = 0; z < latent_size; ++z) {
    if (decoder[z] < nx) reconstructed[decoder[z]] = true;
  }
  auto next = by_mass.begin();
  for (std::size_t z = 0; z < latent_size; ++z) {
    if (decoder[z] < nx) continue;
    while (next != by_mass.end() && (reconstructed[*next] || prior(static_cast<Eigen::Index>(*next)) <= 0.0)) ++next;
    if (next != by_mass.end()) {
      decoder[z] = *next;
      reconstructed[*next] = true;
    } else {
      decoder[z] = by_mass.front();
    }
  }
  return decoder;
}

// Sends each input to a latent that decodes to it. Inputs nobody decodes
// to are spread over the lightest latents, which leaves the objective
// unchanged and keeps fibers balanced.
inline std::vector<std::size_t> encoder_step(const std::vector<std::size_t>& decoder, const Eigen::VectorXd& prior,
                                             std::size_t nx) {
  const std::size_t k = decoder.size();
  std::vector<std::size_t> encoder(nx, k);
  std::vector<double> load(k, 0.0);
  for (std::size_t z = k; z-- > 0;) {
    if (decoder[z] < nx) encoder[decoder[z]] = z;  // lowest z wins
  }
  for (std::size_t x = 0; x < nx; ++x) {
    if (encoder[x] < k) load[encoder[x]] += prior(static_cast<Eigen::Index>(x));
  }
  for (std::size_t x = 0; x < nx; ++x) {
    if (encoder[x] < k) continue;
    const auto z = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    encoder[x] = z;
    load[z] += prior(static_cast<Eigen::Index>(x));
  }
  return encoder;
}

}  // namespace detail

/// Alternating maximization of the reconstruction probability over
/// deterministic encoder/decoder pairs, best of `restarts` seeded random
/// starts (ties go to the earliest restart).
inline AutoencoderResult autoencode(const Distribution& data_prior, const AutoencodeOptions& opt,
                                    const std::string& latent_name = "Z") {
  if (opt.latent_size < 1) throw InvalidArgument("autoencode: latent size must be at least 1");
  if (opt.restarts < 1) throw InvalidArgument("autoencode: restarts must be at least 1");
  if (opt.max_iters < 1) throw InvalidArgument("autoencode: max_iters must be at least 1");

  const std::size_t nx = data_prior.size();
  const std::size_t k = opt.latent_size;
  const Eigen::VectorXd& prior = data_prior.mass();
  std::vector<std::size_t> by_mass(nx);
  std::iota(by_mass.begin(), by_mass.end(), std::size_t{0});
  std::stable_sort(by_mass.begin(), by_mass.end(), [&](std::size_t a, std::size_t b) {
    return prior(static_cast<Eigen::Index>(a)) > prior(static_cast<Eigen::Index>(b));
  });

  detail::DeterministicCode best_code;
  std::vector<double> best_trace;
  std::size_t best_restart = 0;
  double best_value = -1.0;

  for (std::size_t r = 0; r < opt.restarts; ++r) {
    Rng rng(Rng::mix(opt.seed, r));
    detail::DeterministicCode code;
    code.encoder.resize(nx);
    for (auto& z : code.encoder) z = rng.index(k);
    code.decoder = detail::decoder_step(code.encoder, prior, k, by_mass);
    std::vector<double> trace{detail::reconstruction_probability(code, prior)};
    for (std::size_t it = 1; it < opt.max_iters; ++it) {
      detail::DeterministicCode next;
      next.encoder = detail::encoder_step(code.decoder, prior, nx);
      next.decoder = detail::decoder_step(next.encoder, prior, k, by_mass);
      const double p = detail::reconstruction_probability(next, prior);
      // A sweep never loses mass, so a non-improving one is still adopted:
      // it rebalances unused inputs without changing the objective.
      const bool improved = p > trace.back() + 1e-15;
      code = std::move(next);
      if (!improved) break;
      trace.push_back(p);
    }
    if (trace.back() > best_value) {
      best_value = trace.back();
      best_code = std::move(code);
      best_trace = std::move(trace);
      best_restart = r;
    }
  }

  const FiniteSpace latent = FiniteSpace::indexed(latent_name, k, "z");
  AutoencoderResult out{MarkovKernel::deterministic(data_prior.space(), latent, best_code.encoder),
                        MarkovKernel::deterministic(latent, data_prior.space(), best_code.decoder),
                        std::clamp(2.0 * detail::missed_mass(best_code, prior), 0.0, 2.0),
                        std::move(best_trace),
                        opt.restarts,
                        best_restart,
                        opt.seed};
  return out;
}

/// Greedily trained chain of encoders X -> Z1 -> ... -> Zn.
struct FeatureChain {
  std::vector<MarkovKernel> layers;
  /// epsilon_i of layer i against the prior it was trained on.
  std::vector<double> layer_quality;
  /// Quality of the composed encoder against the original prior.
  double total_quality = 0.0;
  /// Prior entering each layer, followed by the prior on the last latent space.
  std::vector<Distribution> layer_priors;

  double quality_bound() const { return std::accumulate(layer_quality.begin(), layer_quality.end(), 0.0); }

  MarkovKernel composed() const {
    MarkovKernel out = layers.front();
    for (std::size_t i = 1; i < layers.size(); ++i) out = compose(layers[i], out);
    return out;
  }
};

/// Trains layer i on the pushforward prior of layer i-1 with autoencode().
/// Layer seeds are derived from `opt.seed`; `opt.latent_size` is ignored.
inline FeatureChain stack(const Distribution& data_prior, const std::vector<std::size_t>& sizes,
                          const AutoencodeOptions& opt) {
  if (sizes.empty()) throw InvalidArgument("stack: need at least one layer size");
  for (auto k : sizes) {
    if (k < 1) throw InvalidArgument("stack: layer sizes must be at least 1");
  }
  FeatureChain chain;
  chain.layer_priors.push_back(data_prior);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    AutoencodeOptions layer_opt = opt;
    layer_opt.latent_size = sizes[i];
    layer_opt.seed = Rng::mix(opt.seed, i);
    const std::string name = "Z" + std::to_string(i + 1);
    auto result = autoencode(chain.layer_priors.back(), layer_opt, name);
    chain.layer_quality.push_back(result.epsilon);
    chain.layer_priors.push_back(pushforward(result.encoder, chain.layer_priors.back()));
    chain.layers.push_back(std::move(result.encoder));
  }
  chain.total_quality = generic_quality(chain.composed(), data_prior);
  if (chain.total_quality > chain.quality_bound() + 1e-6) {
    throw std::logic_error("stack: composed quality exceeds the sum of layer qualities");
  }
  return chain;
}

}  // namespace lecam
