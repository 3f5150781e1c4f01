// lecam: command-line front end for problem files.
//
//   lecam value      FILE [--experiment T] [--loss L] [--prior pi]
//   lecam deficiency FILE T U [--prior pi | --sup] [--factor-tol t]
//   lecam autoencode FILE [--prior pi] --latent k [--restarts r] [--iters n] [--seed s]
//   lecam stack      FILE [--prior pi] --sizes k1,k2,... [--restarts r] [--iters n] [--seed s]
//   lecam ib         FILE [--experiment T] [--loss L] [--prior pi] --latent k [--beta b] [--iters n] [--seed s]
//   lecam verify     [--suite name|all] [--trials N] [--seed s] [--max-dim d]
//
// JSON goes to stdout, diagnostics to stderr. Exit codes: 0 ok, 1 a checked
// property failed, 2 bad input, 3 space mismatch, 4 solver failure.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lecam/experiment_file.hpp"
#include "lecam/lecam.hpp"

namespace {

using nlohmann::json;
using namespace lecam;

enum Exit { kOk = 0, kPropertyFailed = 1, kBadInput = 2, kMismatch = 3, kSolver = 4 };

// inf/nan are not JSON; they come out as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json kernel_json(const MarkovKernel& k) {
  return {{"from", k.from().name()}, {"to", k.to().name()}, {"matrix", lecam::detail::write_matrix(k.matrix())}};
}

json distribution_json(const Distribution& d) {
  return {{"space", d.space().name()}, {"mass", lecam::detail::write_vector(d.mass())}};
}

// Input label -> output label, for kernels with 0/1 columns.
json label_map(const MarkovKernel& k) {
  json out = json::object();
  for (std::size_t c = 0; c < k.from().size(); ++c) {
    Eigen::Index r = 0;
    k.matrix().col(static_cast<Eigen::Index>(c)).maxCoeff(&r);
    out[k.from().label(c)] = k.to().label(static_cast<std::size_t>(r));
  }
  return out;
}

json trace_json(const std::vector<double>& trace) {
  json out = json::array();
  for (double v : trace) out.push_back(number(v));
  return out;
}

// Name given on the command line, or the only entity of that kind in the file.
template <class Map>
std::string pick(const Map& m, const std::string& given, const char* kind, const char* flag) {
  if (!given.empty()) return given;
  if (m.size() == 1) return m.begin()->first;
  throw SchemaError(std::string("file has ") + std::to_string(m.size()) + " " + kind + "s; choose one with " + flag);
}

struct Common {
  std::string file;
  std::size_t max_dim = kDefaultMaxDim;
  ExperimentFile load() const { return load_experiment(file, max_dim); }
};

struct ProblemRefs {
  std::string experiment, loss, prior;
};

void add_problem_refs(CLI::App* cmd, ProblemRefs& refs) {
  cmd->add_option("--experiment", refs.experiment, "kernel Theta -> X (default: the only kernel)");
  cmd->add_option("--loss", refs.loss, "loss matrix (default: the only loss)");
  cmd->add_option("--prior", refs.prior, "prior over Theta (default: the only distribution)");
}

struct Problem {
  const MarkovKernel& experiment;
  const LossMatrix& loss;
  const Distribution& prior;
};

Problem resolve(const ExperimentFile& f, const ProblemRefs& refs) {
  return {f.kernel(pick(f.kernels, refs.experiment, "kernel", "--experiment")),
          f.loss(pick(f.losses, refs.loss, "loss", "--loss")),
          f.distribution(pick(f.distributions, refs.prior, "distribution", "--prior"))};
}

int emit(const json& doc, int code = kOk) {
  std::cout << doc.dump(2) << '\n';
  return code;
}

int cmd_value(const Common& c, const ProblemRefs& refs) {
  const auto f = c.load();
  const auto p = resolve(f, refs);
  return emit({{"value", value(p.loss, p.prior, p.experiment)},
               {"bayes_rule", label_map(bayes_rule(p.loss, p.prior, p.experiment))}});
}

struct DeficiencyArgs {
  std::string t, u, prior;
  bool sup = false;
  double factor_tol = 1e-6;
};

int cmd_deficiency(const Common& c, const DeficiencyArgs& a) {
  const auto f = c.load();
  const auto& t = f.kernel(a.t);
  const auto& u = f.kernel(a.u);
  json out;
  if (a.sup) {
    const auto r = directed_deficiency(t, u);
    // U = W T exactly iff the worst-case deficiency vanishes.
    out = {{"delta", r.delta},
           {"mode", "sup"},
           {"witness", kernel_json(r.witness)},
           {"factors_through", r.delta <= a.factor_tol}};
  } else {
    const std::string prior_name = pick(f.distributions, a.prior, "distribution", "--prior or --sup");
    const auto& pi = f.distribution(prior_name);
    const auto r = weighted_directed_deficiency(t, u, pi);
    const bool positive = (pi.mass().array() > 0.0).all();
    out = {{"delta", r.delta}, {"mode", "prior"}, {"prior", prior_name}, {"witness", kernel_json(r.witness)}};
    if (positive) {
      out["factors_through"] = factors_through(t, u, pi, a.factor_tol).factors;
    } else {
      // A zero-prior theta hides part of U; fall back to the sup version.
      std::cerr << "note: prior has zero entries, factors_through decided with the sup deficiency\n";
      out["factors_through"] = directed_deficiency(t, u).delta <= a.factor_tol;
    }
  }
  return emit(out);
}

struct LearnArgs {
  std::string prior;
  std::size_t latent = 2;
  std::size_t restarts = 16;
  std::size_t iters = 100;
  std::uint64_t seed = 0;
  std::vector<std::size_t> sizes;
};

int cmd_autoencode(const Common& c, const LearnArgs& a) {
  const auto f = c.load();
  const auto& pi = f.distribution(pick(f.distributions, a.prior, "distribution", "--prior"));
  const auto r =
      autoencode(pi, {.latent_size = a.latent, .max_iters = a.iters, .restarts = a.restarts, .seed = a.seed});
  return emit({{"epsilon", r.epsilon},
               {"encoder", kernel_json(r.encoder)},
               {"decoder", kernel_json(r.decoder)},
               {"encoder_map", label_map(r.encoder)},
               {"decoder_map", label_map(r.decoder)},
               {"trace", trace_json(r.trace)},
               {"best_restart", r.best_restart},
               {"seed", r.seed}});
}

int cmd_stack(const Common& c, const LearnArgs& a) {
  const auto f = c.load();
  const auto& pi = f.distribution(pick(f.distributions, a.prior, "distribution", "--prior"));
  const auto chain = stack(pi, a.sizes, {.max_iters = a.iters, .restarts = a.restarts, .seed = a.seed});
  json layers = json::array();
  for (std::size_t i = 0; i < chain.layers.size(); ++i) {
    layers.push_back({{"epsilon", chain.layer_quality[i]},
                      {"encoder", kernel_json(chain.layers[i])},
                      {"encoder_map", label_map(chain.layers[i])}});
  }
  const bool holds = chain.total_quality <= chain.quality_bound() + 1e-9;
  return emit({{"layers", layers},
               {"total_epsilon", chain.total_quality},
               {"bound", chain.quality_bound()},
               {"within_bound", holds}},
              holds ? kOk : kPropertyFailed);
}

struct IbArgs {
  ProblemRefs refs;
  std::size_t latent = 2;
  double beta = 0.0;
  std::size_t iters = 200;
  std::uint64_t seed = 0;
};

int cmd_ib(const Common& c, const IbArgs& a) {
  const auto f = c.load();
  const auto p = resolve(f, a.refs);
  const auto s = ib_learn(p.loss, p.prior, p.experiment,
                          {.latent_size = a.latent, .beta = a.beta, .max_iters = a.iters, .seed = a.seed});
  bool monotone = true;
  for (std::size_t i = 1; i < s.objective_trace.size(); ++i) {
    monotone = monotone && s.objective_trace[i] <= s.objective_trace[i - 1] + 1e-9;
  }
  const auto data_prior = pushforward(p.experiment, p.prior);
  return emit({{"encoder", kernel_json(s.encoder)},
               {"centroids", kernel_json(s.centroids)},
               {"latent_prior", distribution_json(s.latent_prior)},
               {"beta", s.beta},
               {"trace", trace_json(s.objective_trace)},
               {"trace_non_increasing", monotone},
               {"feature_gap", feature_gap(p.loss, p.prior, p.experiment, s.encoder)},
               {"information_gap", information_gap(p.loss, p.prior, p.experiment)},
               {"mutual_information_bits", mutual_information(data_prior, s.encoder)}},
              monotone ? kOk : kPropertyFailed);
}

struct VerifyArgs {
  std::string suite = "all";
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t max_dim = 6;
};

int cmd_verify(const VerifyArgs& a) {
  if (a.max_dim > kDefaultMaxDim) {
    throw InvalidArgument("--max-dim " + std::to_string(a.max_dim) + " is above the limit of " +
                          std::to_string(kDefaultMaxDim));
  }
  if (a.max_dim > 8) std::cerr << "note: --max-dim " << a.max_dim << " makes the LP suites slow\n";
  const auto reports = verify::run(a.suite, {.trials = a.trials, .seed = a.seed, .max_dim = a.max_dim});
  json suites = json::array();
  bool all_ok = true;
  for (const auto& r : reports) {
    json metrics = json::object();
    for (const auto& [k, v] : r.metrics) metrics[k] = number(v);
    suites.push_back({{"suite", r.name},
                      {"ok", r.ok()},
                      {"trials", r.trials},
                      {"passed", r.passed},
                      {"failed_checks", r.failed_checks},
                      {"worst_slack", number(r.worst_slack)},
                      {"metrics", metrics},
                      {"failures", r.failures}});
    all_ok = all_ok && r.ok();
    std::cerr << r.name << ": " << r.passed << "/" << r.trials << (r.ok() ? " ok" : " FAILED") << '\n';
  }
  return emit({{"seed", a.seed}, {"trials", a.trials}, {"max_dim", a.max_dim}, {"ok", all_ok}, {"suites", suites}},
              all_ok ? kOk : kPropertyFailed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite statistical experiments: value, deficiency, feature learning, property checks"};
  app.require_subcommand(1);
  Common common;

  auto file_cmd = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("file", common.file, "problem file (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--max-dim", common.max_dim, "reject spaces with more labels than this")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    return cmd;
  };

  ProblemRefs value_refs;
  auto* value_cmd = file_cmd("value", "Bayes value and Bayes rule of an experiment");
  add_problem_refs(value_cmd, value_refs);

  DeficiencyArgs def;
  auto* def_cmd = file_cmd("deficiency", "deficiency of T relative to U, with a randomization witness");
  def_cmd->add_option("T", def.t, "kernel T")->required();
  def_cmd->add_option("U", def.u, "kernel U")->required();
  auto* prior_opt = def_cmd->add_option("--prior", def.prior, "weight thetas by this distribution");
  def_cmd->add_flag("--sup", def.sup, "worst case over theta")->excludes(prior_opt);
  def_cmd->add_option("--factor-tol", def.factor_tol, "delta at or below this counts as factoring")
      ->capture_default_str();

  LearnArgs ae;
  auto* ae_cmd = file_cmd("autoencode", "deterministic autoencoder for a distribution");
  ae_cmd->add_option("--prior", ae.prior, "distribution to encode (default: the only one)");
  ae_cmd->add_option("--latent", ae.latent, "latent size")->capture_default_str();
  ae_cmd->add_option("--restarts", ae.restarts, "random restarts")->capture_default_str();
  ae_cmd->add_option("--iters", ae.iters, "max sweeps per restart")->capture_default_str();
  ae_cmd->add_option("--seed", ae.seed, "seed")->capture_default_str();

  LearnArgs st;
  auto* st_cmd = file_cmd("stack", "greedy stack of autoencoders");
  st_cmd->add_option("--prior", st.prior, "distribution to encode (default: the only one)");
  st_cmd->add_option("--sizes", st.sizes, "latent sizes, e.g. 2,1")->required()->delimiter(',');
  st_cmd->add_option("--restarts", st.restarts, "random restarts per layer")->capture_default_str();
  st_cmd->add_option("--iters", st.iters, "max sweeps per restart")->capture_default_str();
  st_cmd->add_option("--seed", st.seed, "seed")->capture_default_str();

  IbArgs ib;
  auto* ib_cmd = file_cmd("ib", "information-bottleneck style features");
  add_problem_refs(ib_cmd, ib.refs);
  ib_cmd->add_option("--latent", ib.latent, "latent size")->capture_default_str();
  ib_cmd->add_option("--beta", ib.beta, "weight of the rate term")->capture_default_str();
  ib_cmd->add_option("--iters", ib.iters, "max sweeps")->capture_default_str();
  ib_cmd->add_option("--seed", ib.seed, "seed")->capture_default_str();

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "seeded property suites");
  ver_cmd->add_option("--suite", ver.suite, "suite name or 'all'")->capture_default_str();
  ver_cmd->add_option("--trials", ver.trials, "trials per suite")->capture_default_str()->check(CLI::PositiveNumber);
  ver_cmd->add_option("--seed", ver.seed, "seed")->capture_default_str();
  ver_cmd->add_option("--max-dim", ver.max_dim, "largest random space")->capture_default_str();
  ver_cmd->add_flag_callback(
      "--list",
      [] {
        for (const auto& [name, fn] : verify::suites()) std::cout << name << '\n';
        std::exit(0);
      },
      "list suite names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*value_cmd) return cmd_value(common, value_refs);
    if (*def_cmd) return cmd_deficiency(common, def);
    if (*ae_cmd) return cmd_autoencode(common, ae);
    if (*st_cmd) return cmd_stack(common, st);
    if (*ib_cmd) return cmd_ib(common, ib);
    if (*ver_cmd) return cmd_verify(ver);
  } catch (const SpaceMismatch& e) {
    std::cerr << "error: space mismatch: " << e.what() << '\n';
    return kMismatch;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const SolverError& e) {
    std::cerr << "error: solver: " << e.what() << '\n';
    return kSolver;
  }
  return kBadInput;
}
