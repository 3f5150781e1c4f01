#pragma once

#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lecam/decision.hpp"
#include "lecam/errors.hpp"
#include "lecam/kernel.hpp"
#include "lecam/space.hpp"

// JSON problem files. Layout:
//
//   {
//     "spaces":        {"Theta": ["h0", "h1"], ...},
//     "kernels":       {"T": {"from": "Theta", "to": "X", "matrix": [[...], ...]}},
//     "distributions": {"pi": {"space": "Theta", "mass": [0.5, 0.5]}},
//     "losses":        {"L": {"theta": "Theta", "actions": "A", "values": [[...], ...]}}
//   }
//
// Kernel matrices are written row by row with rows = outputs, so each
// column is a distribution. Loss rows are indexed by theta.

namespace lecam {

/// Structurally invalid file: bad JSON, unknown references, wrong shapes,
/// non-stochastic kernels.
class SchemaError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

constexpr std::size_t kDefaultMaxDim = 32;

struct ExperimentFile {
  std::map<std::string, FiniteSpace> spaces;
  std::map<std::string, MarkovKernel> kernels;
  std::map<std::string, Distribution> distributions;
  std::map<std::string, LossMatrix> losses;

  const FiniteSpace& space(const std::string& name) const { return lookup(spaces, name, "space"); }
  const MarkovKernel& kernel(const std::string& name) const { return lookup(kernels, name, "kernel"); }
  const Distribution& distribution(const std::string& name) const {
    return lookup(distributions, name, "distribution");
  }
  const LossMatrix& loss(const std::string& name) const { return lookup(losses, name, "loss"); }

 private:
  template <class Map>
  static const typename Map::mapped_type& lookup(const Map& m, const std::string& name, const char* kind) {
    auto it = m.find(name);
    if (it == m.end()) {
      std::string known;
      for (const auto& [k, v] : m) known += (known.empty() ? "" : ", ") + k;
      throw SchemaError(std::string("unknown ") + kind + " '" + name +
                        "' (file has: " + (known.empty() ? "none" : known) + ")");
    }
    return it->second;
  }
};

namespace detail {

using nlohmann::json;

inline const json& member(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

inline std::string string_field(const json& obj, const char* key, const std::string& where) {
  const auto& v = member(obj, key, where);
  if (!v.is_string()) throw SchemaError(where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline Eigen::VectorXd read_vector(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": expected an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw SchemaError(where + ": entry " + std::to_string(i) + " is not a number");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

inline Eigen::MatrixXd read_matrix(const json& v, std::size_t rows, std::size_t cols, const std::string& where) {
  if (!v.is_array() || v.size() != rows) {
    throw SchemaError(where + ": expected " + std::to_string(rows) + " rows");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = read_vector(v[r], where + " row " + std::to_string(r));
    if (static_cast<std::size_t>(row.size()) != cols) {
      throw SchemaError(where + ": row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                        " entries, expected " + std::to_string(cols));
    }
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

inline json write_matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json write_vector(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

template <class F>
auto rethrow_as_schema(const std::string& where, F&& build) {
  try {
    return build();
  } catch (const SchemaError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

}  // namespace detail

/// Builds and validates a problem file. Spaces larger than max_dim are
/// rejected so a stray file cannot blow up the dense LP.
inline ExperimentFile parse_experiment(const nlohmann::json& doc, std::size_t max_dim = kDefaultMaxDim) {
  using detail::json;
  if (!doc.is_object()) throw SchemaError("problem file: top level must be an object");
  for (const auto& [key, v] : doc.items()) {
    if (key != "spaces" && key != "kernels" && key != "distributions" && key != "losses") {
      throw SchemaError("problem file: unknown section '" + key + "'");
    }
  }
  auto section = [&](const char* key) -> json {
    if (!doc.contains(key)) return json::object();
    if (!doc.at(key).is_object()) throw SchemaError(std::string("section '") + key + "' must be an object");
    return doc.at(key);
  };

  // items() only views its object, so the sections must outlive the loops.
  const json space_section = section("spaces"), kernel_section = section("kernels");
  const json distribution_section = section("distributions"), loss_section = section("losses");

  ExperimentFile f;
  for (const auto& [name, labels] : space_section.items()) {
    const std::string where = "space '" + name + "'";
    if (!labels.is_array()) throw SchemaError(where + ": expected an array of labels");
    std::vector<std::string> ls;
    for (const auto& l : labels) {
      if (!l.is_string()) throw SchemaError(where + ": labels must be strings");
      ls.push_back(l.get<std::string>());
    }
    if (ls.size() > max_dim) {
      throw SchemaError(where + " has " + std::to_string(ls.size()) + " labels, above the limit of " +
                        std::to_string(max_dim));
    }
    f.spaces.emplace(name, detail::rethrow_as_schema(where, [&] { return FiniteSpace(name, ls); }));
  }
  for (const auto& [name, k] : kernel_section.items()) {
    const std::string where = "kernel '" + name + "'";
    const auto& from = f.space(detail::string_field(k, "from", where));
    const auto& to = f.space(detail::string_field(k, "to", where));
    auto m = detail::read_matrix(detail::member(k, "matrix", where), to.size(), from.size(), where);
    f.kernels.emplace(name, detail::rethrow_as_schema(where, [&] { return MarkovKernel(from, to, std::move(m)); }));
  }
  for (const auto& [name, d] : distribution_section.items()) {
    const std::string where = "distribution '" + name + "'";
    const auto& sp = f.space(detail::string_field(d, "space", where));
    auto mass = detail::read_vector(detail::member(d, "mass", where), where);
    f.distributions.emplace(name, detail::rethrow_as_schema(where, [&] { return Distribution(sp, std::move(mass)); }));
  }
  for (const auto& [name, l] : loss_section.items()) {
    const std::string where = "loss '" + name + "'";
    const auto& th = f.space(detail::string_field(l, "theta", where));
    const auto& act = f.space(detail::string_field(l, "actions", where));
    auto values = detail::read_matrix(detail::member(l, "values", where), th.size(), act.size(), where);
    f.losses.emplace(name, detail::rethrow_as_schema(where, [&] { return LossMatrix(th, act, std::move(values)); }));
  }
  return f;
}

inline ExperimentFile parse_experiment(const std::string& text, std::size_t max_dim = kDefaultMaxDim) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("problem file is not valid JSON: ") + e.what());
  }
  return parse_experiment(doc, max_dim);
}

inline ExperimentFile load_experiment(const std::string& path, std::size_t max_dim = kDefaultMaxDim) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open problem file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment(buf.str(), max_dim);
}

/// Serializes every entity. Spaces referenced by entities but missing from
/// `spaces` are added under their own names.
inline nlohmann::json to_json(const ExperimentFile& f) {
  using detail::json;
  std::map<std::string, FiniteSpace> spaces = f.spaces;
  auto ref = [&](const FiniteSpace& s) {
    auto [it, inserted] = spaces.emplace(s.name(), s);
    if (!inserted && !(it->second == s)) {
      throw SchemaError("two different spaces share the name '" + s.name() + "'");
    }
    return s.name();
  };
  json doc = json::object();
  json ks = json::object(), ds = json::object(), ls = json::object();
  for (const auto& [name, k] : f.kernels) {
    ks[name] = {{"from", ref(k.from())}, {"to", ref(k.to())}, {"matrix", detail::write_matrix(k.matrix())}};
  }
  for (const auto& [name, d] : f.distributions) {
    ds[name] = {{"space", ref(d.space())}, {"mass", detail::write_vector(d.mass())}};
  }
  for (const auto& [name, l] : f.losses) {
    ls[name] = {{"theta", ref(l.theta())}, {"actions", ref(l.actions())}, {"values", detail::write_matrix(l.values())}};
  }
  json sp = json::object();
  for (const auto& [name, s] : spaces) sp[name] = s.labels();
  doc["spaces"] = std::move(sp);
  doc["kernels"] = std::move(ks);
  doc["distributions"] = std::move(ds);
  doc["losses"] = std::move(ls);
  return doc;
}

inline void save_experiment(const ExperimentFile& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write problem file '" + path + "'");
  out << to_json(f).dump(2) << '\n';
}

}  // namespace lecam
