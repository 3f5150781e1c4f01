#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lecam/bottleneck.hpp"
#include "lecam/decision.hpp"
#include "lecam/deficiency.hpp"
#include "lecam/errors.hpp"
#include "lecam/features.hpp"
#include "lecam/information.hpp"
#include "lecam/kernel.hpp"
#include "lecam/random.hpp"
#include "lecam/space.hpp"

// Seeded property suites. Every trial draws its own generator from
// (seed, suite name, trial index), so a suite's result does not depend on
// which other suites ran or in what order.

namespace lecam::verify {

struct Options {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  /// Upper bound on randomly drawn space sizes. Some suites use smaller
  /// fixed caps where an exhaustive oracle is involved.
  std::size_t max_dim = 6;
};

struct SuiteReport {
  std::string name;
  std::size_t trials = 0;
  std::size_t passed = 0;
  /// min over all checks of (bound - measured); a check passes when its
  /// slack is at least minus its tolerance.
  double worst_slack = std::numeric_limits<double>::infinity();
  std::map<std::string, double> metrics;
  std::vector<std::string> failures;  // first few only
  std::size_t failed_checks = 0;
  bool suite_checks_ok = true;

  bool ok() const { return passed == trials && suite_checks_ok; }
};

namespace detail {

constexpr std::size_t kMaxFailureMessages = 10;

class Checker {
 public:
  Checker(SuiteReport& report, std::size_t trial) : report_(report), trial_(trial) {}

  /// measured <= bound + tol
  bool le(double measured, double bound, double tol, const std::string& what) {
    const double slack = bound - measured;
    report_.worst_slack = std::min(report_.worst_slack, slack);
    if (slack >= -tol) return true;
    fail(what, measured, bound);
    return false;
  }

  /// |a - b| <= tol
  bool near(double a, double b, double tol, const std::string& what) {
    const double gap = std::abs(a - b);
    report_.worst_slack = std::min(report_.worst_slack, -gap);
    if (gap <= tol) return true;
    fail(what, a, b);
    return false;
  }

  bool that(bool cond, const std::string& what) {
    if (!cond) fail(what, 0.0, 0.0);
    return cond;
  }

  bool ok() const { return ok_; }

 private:
  void fail(const std::string& what, double a, double b) {
    ok_ = false;
    ++report_.failed_checks;
    if (report_.failures.size() < kMaxFailureMessages) {
      std::ostringstream os;
      os.precision(12);
      os << "trial " << trial_ << ": " << what << " (" << a << " vs " << b << ")";
      report_.failures.push_back(os.str());
    }
  }

  SuiteReport& report_;
  std::size_t trial_;
  bool ok_ = true;
};

inline FiniteSpace sp(const char* name, Rng& rng, std::size_t max_dim) {
  return FiniteSpace::indexed(name, rng.between(1, std::max<std::size_t>(1, max_dim)), name);
}

using TrialFn = std::function<void(Rng&, Checker&, std::size_t trial)>;

inline SuiteReport run_trials(const std::string& name, const Options& opt, const TrialFn& body) {
  if (opt.trials < 1) throw InvalidArgument("verify: trials must be at least 1");
  if (opt.max_dim < 1) throw InvalidArgument("verify: max_dim must be at least 1");
  SuiteReport r;
  r.name = name;
  r.trials = opt.trials;
  const std::uint64_t base = Rng::mix(opt.seed, Rng::hash(name));
  for (std::size_t i = 0; i < opt.trials; ++i) {
    Rng rng(Rng::mix(base, i));
    Checker c(r, i);
    body(rng, c, i);
    if (c.ok()) ++r.passed;
  }
  return r;
}

// Minimum Bayes risk by brute force over every deterministic rule X -> A.
inline double brute_force_value(const LossMatrix& loss, const Distribution& prior, const MarkovKernel& t) {
  const std::size_t nx = t.to().size(), na = loss.actions().size();
  std::vector<std::size_t> rule(nx, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    best =
        std::min(best, bayes_risk(loss, prior, compose(MarkovKernel::deterministic(t.to(), loss.actions(), rule), t)));
    std::size_t i = 0;
    while (i < nx && ++rule[i] == na) rule[i++] = 0;
    if (i == nx) break;
  }
  return best;
}

inline double best_reconstruction(const Eigen::VectorXd& p, std::size_t k) {
  const auto n = static_cast<std::size_t>(p.size());
  std::vector<std::size_t> code(n, 0);
  double best = 0.0;
  while (true) {
    std::vector<double> top(k, 0.0);
    for (std::size_t x = 0; x < n; ++x) top[code[x]] = std::max(top[code[x]], p(static_cast<Eigen::Index>(x)));
    double total = 0.0;
    for (double v : top) total += v;
    best = std::max(best, total);
    std::size_t i = 0;
    while (i < n && ++code[i] == k) code[i++] = 0;
    if (i == n) break;
  }
  return best;
}

}  // namespace detail

/// Largest |V_L(pi,T) - V_L(pi,U)| / ||L|| over centered two-action losses
/// L(theta, a) = +-g(theta)/2 with g = (c, -(1 - c)), c on a uniform grid.
/// Only defined for binary Theta.
inline double binary_tightness(const MarkovKernel& t, const MarkovKernel& u, const Distribution& prior,
                               std::size_t grid = 200) {
  if (prior.size() != 2) throw InvalidArgument("binary_tightness: Theta must have two points");
  const FiniteSpace actions("A", {"a0", "a1"});
  double best = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    const double c = grid == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(grid - 1);
    Eigen::MatrixXd v(2, 2);
    v << -c / 2, c / 2, (1 - c) / 2, -(1 - c) / 2;
    const LossMatrix l(prior.space(), actions, v);
    if (l.sup_norm() == 0.0) continue;
    best = std::max(best, std::abs(value(l, prior, t) - value(l, prior, u)) / l.sup_norm());
  }
  return best;
}

inline SuiteReport randomization(const Options& opt) {
  return detail::run_trials("randomization", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const auto th = detail::sp("t", rng, opt.max_dim);
    const auto t = random_kernel(th, detail::sp("x", rng, opt.max_dim), rng);
    const auto u = random_kernel(th, detail::sp("y", rng, opt.max_dim), rng);
    const auto pi = random_distribution(th, rng, true);
    const double delta = weighted_directed_deficiency(t, u, pi).delta;
    for (int k = 0; k < 200; ++k) {
      const auto l = random_loss(th, detail::sp("a", rng, opt.max_dim), rng, rng.uniform(0.1, 10.0));
      if (!c.le(value(l, pi, t), value(l, pi, u) + delta * l.sup_norm(), 1e-6, "V(T) <= V(U) + delta ||L||")) break;
    }
  });
}

// |dV| / ||L|| for the loss read off the dual, in the direction that
// carries Delta.
inline double certificate_gap(const MarkovKernel& t, const MarkovKernel& u, const Distribution& pi) {
  const bool forward = weighted_directed_deficiency(t, u, pi).delta >= weighted_directed_deficiency(u, t, pi).delta;
  const auto l = forward ? deficiency_loss(t, u, pi) : deficiency_loss(u, t, pi);
  if (l.sup_norm() == 0.0) return 0.0;
  return std::abs(value(l, pi, t) - value(l, pi, u)) / l.sup_norm();
}

inline SuiteReport value_gap(const Options& opt) {
  double worst_sweep = -std::numeric_limits<double>::infinity();
  double worst_shortfall = -std::numeric_limits<double>::infinity();
  auto r = detail::run_trials("value_gap", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const auto th = detail::sp("t", rng, opt.max_dim);
    const auto t = random_kernel(th, detail::sp("x", rng, opt.max_dim), rng);
    const auto u = random_kernel(th, detail::sp("y", rng, opt.max_dim), rng);
    const auto pi = random_distribution(th, rng, true);
    const double big_delta = weighted_deficiency(t, u, pi);
    for (int k = 0; k < 500; ++k) {
      const auto l = random_loss(th, detail::sp("a", rng, opt.max_dim), rng);
      if (l.sup_norm() == 0.0) continue;
      const double gap = std::abs(value(l, pi, t) - value(l, pi, u)) / l.sup_norm();
      if (!c.le(gap, big_delta, 1e-6, "|dV| / ||L|| <= Delta")) break;
    }
    c.near(certificate_gap(t, u, pi), big_delta, 1e-6, "dual loss attains Delta");

    // Near-tightness on a binary Theta. Two-action centered losses alone
    // fall short now and then, so the dual loss joins the sampled sup.
    const auto b = FiniteSpace::indexed("t", 2, "t");
    const auto bt = random_kernel(b, detail::sp("x", rng, std::min<std::size_t>(opt.max_dim, 4)), rng);
    const auto bu = random_kernel(b, detail::sp("y", rng, std::min<std::size_t>(opt.max_dim, 4)), rng);
    const auto bpi = random_positive_distribution(b, rng);
    const double bd = weighted_deficiency(bt, bu, bpi);
    const double sweep = binary_tightness(bt, bu, bpi);
    const double reached = std::max(sweep, certificate_gap(bt, bu, bpi));
    worst_sweep = std::max(worst_sweep, bd - sweep);
    worst_shortfall = std::max(worst_shortfall, bd - reached);
    c.le(bd - reached, 0.05, 0.0, "binary sup reaches Delta - 0.05");
    c.le(reached, bd, 1e-6, "binary sup stays below Delta");
  });
  r.metrics["worst_binary_shortfall"] = worst_shortfall;
  r.metrics["worst_sweep_shortfall"] = worst_sweep;
  return r;
}

inline SuiteReport feature_deficiency(const Options& opt) {
  return detail::run_trials("feature_deficiency", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const auto th = detail::sp("t", rng, opt.max_dim);
    const auto x = detail::sp("x", rng, opt.max_dim);
    const auto t = random_kernel(th, x, rng);
    const auto z = detail::sp("z", rng, opt.max_dim);
    const auto phi = rng.bernoulli(0.5) ? random_deterministic_kernel(x, z, rng) : random_kernel(x, z, rng);
    const auto pi = random_distribution(th, rng, true);
    c.le(weighted_deficiency(t, compose(phi, t), pi), generic_quality(phi, pushforward(t, pi)), 1e-6,
         "Delta_pi(T, phi T) <= eps(phi, T pi)");
  });
}

inline SuiteReport generic_features(const Options& opt) {
  return detail::run_trials("generic_features", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const auto x = detail::sp("x", rng, opt.max_dim);
    const auto z = detail::sp("z", rng, opt.max_dim);
    const auto phi = rng.bernoulli(0.5) ? random_deterministic_kernel(x, z, rng) : random_kernel(x, z, rng);
    const auto pi_x = random_distribution(x, rng, true);
    const double eps = generic_quality(phi, pi_x);
    c.near(eps, weighted_directed_deficiency(phi, MarkovKernel::identity(x), pi_x).delta, 1e-6,
           "eps == delta_piX(phi, id)");
    // Problems consistent with pi_X: pick posteriors B: X -> Theta, then
    // pi = B pi_X and T = Bayes inverse of B, so that T pi = pi_X.
    for (int k = 0; k < 100; ++k) {
      const auto th = detail::sp("t", rng, opt.max_dim);
      const auto b = random_kernel(x, th, rng);
      const auto inv = bayes_inverse(b, pi_x);
      const auto& t = inv.posterior;
      const auto& pi = inv.marginal;
      const auto l = random_loss(th, detail::sp("a", rng, opt.max_dim), rng);
      const double gap = feature_gap(l, pi, t, phi);
      if (!c.le(variational_divergence(pushforward(t, pi), pi_x), 0.0, 1e-9, "T pi == pi_X")) break;
      if (!c.le(gap, eps * l.sup_norm(), 1e-6, "feature gap <= eps ||L||")) break;
    }
  });
}

inline SuiteReport stacking(const Options& opt) {
  auto r = detail::run_trials("stacking", opt, [&](Rng& rng, detail::Checker& c, std::size_t trial) {
    if (trial == 0) {
      const auto u4 = Distribution::uniform(FiniteSpace::indexed("x", 4, "x"));
      const auto chain = stack(u4, {2, 1}, {.seed = rng.next()});
      c.near(chain.layer_quality[0], 2.0 * (1.0 - detail::best_reconstruction(u4.mass(), 2)), 0.0,
             "uniform-4 layer 1 matches exhaustive optimum");
      c.near(chain.layer_quality[0], 1.0, 0.0, "uniform-4 layer 1 eps == 1");
      c.le(chain.total_quality, chain.quality_bound(), 1e-6, "uniform-4 total <= sum");
    }
    const auto x = detail::sp("x", rng, opt.max_dim);
    const auto pi = random_distribution(x, rng, true);
    const std::vector<std::size_t> sizes{rng.between(1, opt.max_dim), rng.between(1, opt.max_dim)};
    AutoencodeOptions ae;
    ae.seed = rng.next();
    try {
      const auto chain = stack(pi, sizes, ae);
      c.le(chain.total_quality, chain.quality_bound(), 1e-6, "eps_total <= eps_1 + eps_2");
    } catch (const std::logic_error& e) {
      c.that(false, e.what());
    }
  });
  return r;
}

inline SuiteReport triangle(const Options& opt) {
  return detail::run_trials("triangle", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const auto th = detail::sp("t", rng, opt.max_dim);
    const auto t1 = random_kernel(th, detail::sp("x", rng, opt.max_dim), rng);
    const auto t2 = random_kernel(th, detail::sp("y", rng, opt.max_dim), rng);
    const auto t3 = random_kernel(th, detail::sp("w", rng, opt.max_dim), rng);
    const auto pi = random_distribution(th, rng, true);
    c.le(weighted_deficiency(t1, t3, pi), weighted_deficiency(t1, t2, pi) + weighted_deficiency(t2, t3, pi), 1e-6,
         "Delta(T1,T3) <= Delta(T1,T2) + Delta(T2,T3)");
    c.le(weighted_deficiency(t1, t1, pi), 0.0, 1e-7, "Delta(T,T) == 0");
  });
}

inline SuiteReport regret_identity(const Options& opt) {
  return detail::run_trials("regret_identity", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const auto th = detail::sp("t", rng, opt.max_dim);
    const auto x = detail::sp("x", rng, opt.max_dim);
    const auto t = random_kernel(th, x, rng);
    const auto pi = random_distribution(th, rng, true);
    const auto l = random_loss(th, detail::sp("a", rng, opt.max_dim), rng);
    const auto phi = random_kernel(x, detail::sp("z", rng, opt.max_dim), rng);
    // E_z E_{x|z} regret(T*(x), U(z)) with U(z) the posterior mean of the fiber.
    const auto inv = bayes_inverse(t, pi);
    const Eigen::MatrixXd joint_xz = phi.matrix() * inv.marginal.mass().asDiagonal();  // z, x
    double bregman = 0.0;
    for (Eigen::Index z = 0; z < joint_xz.rows(); ++z) {
      const double pz = joint_xz.row(z).sum();
      if (pz <= 0.0) continue;
      const Eigen::VectorXd centroid = inv.posterior.matrix() * joint_xz.row(z).transpose() / pz;
      for (Eigen::Index xi = 0; xi < joint_xz.cols(); ++xi) {
        if (joint_xz(z, xi) > 0.0) {
          bregman += joint_xz(z, xi) * lecam::detail::regret(l, inv.posterior.matrix().col(xi), centroid);
        }
      }
    }
    c.near(feature_gap(l, pi, t, phi), bregman, 1e-9, "feature gap == expected regret");
  });
}

inline SuiteReport ib(const Options& opt) {
  return detail::run_trials("ib", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const auto th = detail::sp("t", rng, opt.max_dim);
    const auto t = random_kernel(th, detail::sp("x", rng, opt.max_dim), rng);
    const auto pi = random_distribution(th, rng, true);
    const auto l = random_loss(th, detail::sp("a", rng, opt.max_dim), rng);
    IBOptions o;
    o.latent_size = rng.between(1, opt.max_dim);
    o.beta = rng.bernoulli(0.3) ? 0.0 : rng.uniform(0.01, 3.0);
    o.seed = rng.next();
    const auto s = ib_learn(l, pi, t, o);
    for (std::size_t i = 1; i < s.objective_trace.size(); ++i) {
      if (!c.le(s.objective_trace[i], s.objective_trace[i - 1], 1e-9, "objective trace non-increasing")) break;
    }
    IBOptions hard;
    hard.latent_size = distinct_posteriors(t, pi);
    hard.seed = rng.next();
    const auto h = ib_learn(l, pi, t, hard);
    c.le(h.objective_trace.back(), 0.0, 1e-9, "beta = 0, k >= distinct posteriors closes the gap");
  });
}

inline SuiteReport hellman_raviv(const Options& opt) {
  return detail::run_trials("hellman_raviv", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const auto x = detail::sp("x", rng, opt.max_dim);
    const auto z = detail::sp("z", rng, opt.max_dim);
    const auto phi = rng.bernoulli(0.3) ? random_deterministic_kernel(x, z, rng) : random_kernel(x, z, rng);
    const auto report = hellman_raviv_check(phi, random_distribution(x, rng, true));
    c.le(report.epsilon, report.conditional_entropy, 1e-9, "eps <= H(X|Z)");
  });
}

inline SuiteReport oracles(const Options& opt) {
  std::size_t hits = 0;
  auto r = detail::run_trials("oracles", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const std::size_t small = std::min<std::size_t>(opt.max_dim, 4);
    const auto th = detail::sp("t", rng, small);
    const auto t = random_kernel(th, detail::sp("x", rng, small), rng);
    const auto pi = random_distribution(th, rng, true);
    const auto l = random_loss(th, detail::sp("a", rng, small), rng);
    c.near(value(l, pi, t), detail::brute_force_value(l, pi, t), 1e-9, "value == brute force");

    const auto x = detail::sp("x", rng, opt.max_dim);
    const auto phi = random_kernel(x, detail::sp("z", rng, opt.max_dim), rng);
    const auto pi_x = random_distribution(x, rng, true);
    c.near(generic_quality(phi, pi_x), weighted_directed_deficiency(phi, MarkovKernel::identity(x), pi_x).delta, 1e-6,
           "MAP quality == LP deficiency");

    const auto xa = detail::sp("x", rng, std::min<std::size_t>(opt.max_dim, 5));
    const auto pa = random_distribution(xa, rng, true);
    const std::size_t k = rng.between(1, 3);
    const auto ae = autoencode(pa, {.latent_size = k, .restarts = 16, .seed = rng.next()});
    const double optimum = 2.0 * (1.0 - detail::best_reconstruction(pa.mass(), k));
    c.le(optimum, ae.epsilon, 1e-12, "autoencoder never beats the exhaustive optimum");
    if (ae.epsilon <= optimum + 1e-12) ++hits;
  });
  const double rate = static_cast<double>(hits) / static_cast<double>(r.trials);
  r.metrics["autoencoder_hit_rate"] = rate;
  if (rate < 0.95) {
    r.suite_checks_ok = false;
    r.failures.push_back("autoencoder hit rate " + std::to_string(rate) + " below 0.95");
  }
  return r;
}

inline SuiteReport reduction(const Options& opt) {
  return detail::run_trials("reduction", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const auto th = detail::sp("t", rng, opt.max_dim);
    const auto t = random_kernel(th, detail::sp("x", rng, opt.max_dim), rng);
    const auto u = random_kernel(th, detail::sp("y", rng, opt.max_dim), rng);
    const auto pi = random_distribution(th, rng, true);
    const auto l = random_loss(th, detail::sp("a", rng, opt.max_dim), rng);
    const auto d = weighted_directed_deficiency(t, u, pi);
    const auto rule_u = bayes_rule(l, pi, u);
    const double transported = bayes_risk(l, pi, compose(rule_u, compose(d.witness, t)));
    c.le(transported, bayes_risk(l, pi, compose(rule_u, u)) + d.delta * l.sup_norm(), 1e-6,
         "risk of D_U V T <= risk of D_U U + delta ||L||");
  });
}

inline SuiteReport information_processing(const Options& opt) {
  return detail::run_trials("information_processing", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const auto x = detail::sp("x", rng, opt.max_dim);
    const auto y = detail::sp("y", rng, opt.max_dim);
    const auto k = random_kernel(x, y, rng);
    const auto p = random_distribution(x, rng, true);
    const auto q = random_distribution(x, rng, true);
    c.le(variational_divergence(pushforward(k, p), pushforward(k, q)), variational_divergence(p, q), 1e-12,
         "||T P - T Q|| <= ||P - Q||");
    const auto th = detail::sp("t", rng, opt.max_dim);
    const auto t = random_kernel(th, x, rng);
    const auto l = random_loss(th, detail::sp("a", rng, opt.max_dim), rng);
    c.le(0.0, feature_gap(l, random_distribution(th, rng, true), t, k), 1e-9, "feature gap >= 0");
  });
}

inline SuiteReport factoring(const Options& opt) {
  return detail::run_trials("factoring", opt, [&](Rng& rng, detail::Checker& c, std::size_t) {
    const auto th = detail::sp("t", rng, opt.max_dim);
    const auto x = detail::sp("x", rng, opt.max_dim);
    const auto t = random_kernel(th, x, rng);
    const auto u = compose(random_kernel(x, detail::sp("y", rng, opt.max_dim), rng), t);
    const auto f = factors_through(t, u, random_positive_distribution(th, rng));
    c.that(f.factors, "garbling of T factors through T");
    c.le(columnwise_residual(t, u, f.deficiency.witness).maxCoeff(), 0.0, 1e-6, "witness reproduces U");
  });
}

using SuiteFn = SuiteReport (*)(const Options&);

inline const std::vector<std::pair<std::string, SuiteFn>>& suites() {
  static const std::vector<std::pair<std::string, SuiteFn>> all{
      {"randomization", &randomization},
      {"value_gap", &value_gap},
      {"feature_deficiency", &feature_deficiency},
      {"generic_features", &generic_features},
      {"stacking", &stacking},
      {"triangle", &triangle},
      {"regret_identity", &regret_identity},
      {"ib", &ib},
      {"hellman_raviv", &hellman_raviv},
      {"oracles", &oracles},
      {"reduction", &reduction},
      {"information_processing", &information_processing},
      {"factoring", &factoring},
  };
  return all;
}

inline SuiteReport run_suite(const std::string& name, const Options& opt) {
  for (const auto& [n, fn] : suites()) {
    if (n == name) return fn(opt);
  }
  std::string known;
  for (const auto& [n, fn] : suites()) known += (known.empty() ? "" : ", ") + n;
  throw InvalidArgument("unknown suite '" + name + "' (known: " + known + ", all)");
}

inline std::vector<SuiteReport> run(const std::string& name, const Options& opt) {
  std::vector<SuiteReport> out;
  if (name == "all") {
    for (const auto& [n, fn] : suites()) out.push_back(fn(opt));
  } else {
    out.push_back(run_suite(name, opt));
  }
  return out;
}

}  // namespace lecam::verify
