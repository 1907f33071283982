#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace hogwild {

namespace text {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string_view strip_comment(std::string_view s) {
  const auto pos = s.find('#');
  return pos == std::string_view::npos ? s : s.substr(0, pos);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

inline bool parse_u64(std::string_view s, std::uint64_t& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc{} && r.ptr == s.data() + s.size() && std::isfinite(out);
}

// Shortest round-trippable decimal form.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace text

enum class ModelType { kCurieWeiss, kTorusGrid, kExplicit };

inline std::string_view to_string(ModelType t) {
  switch (t) {
    case ModelType::kCurieWeiss: return "curie_weiss";
    case ModelType::kTorusGrid: return "torus_grid";
    case ModelType::kExplicit: return "explicit";
  }
  return "?";
}

inline bool parse_model_type(std::string_view s, ModelType& out) {
  if (s == "curie_weiss") out = ModelType::kCurieWeiss;
  else if (s == "torus_grid") out = ModelType::kTorusGrid;
  else if (s == "explicit") out = ModelType::kExplicit;
  else return false;
  return true;
}

struct WeightedEdge {
  NodeId u;
  NodeId v;
  double weight;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

struct NodeField {
  NodeId node;
  double weight;

  friend bool operator==(const NodeField&, const NodeField&) = default;
};

/// Declarative description of a model: a preset family or an explicit edge
/// list. `size` is n for curie_weiss / explicit and k for torus_grid.
struct ModelSpec {
  ModelType type = ModelType::kCurieWeiss;
  std::size_t size = 0;
  double alpha = 0.5;
  std::vector<WeightedEdge> edges;
  std::vector<NodeField> fields;

  std::size_t node_count() const { return type == ModelType::kTorusGrid ? size * size : size; }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

inline IsingModel build_model(const ModelSpec& spec) {
  switch (spec.type) {
    case ModelType::kCurieWeiss: return build_curie_weiss(spec.size, spec.alpha);
    case ModelType::kTorusGrid: return build_torus_grid(spec.size, spec.alpha);
    case ModelType::kExplicit: {
      std::vector<Edge> edges;
      std::vector<double> weights;
      for (const auto& e : spec.edges) {
        edges.push_back({e.u, e.v});
        weights.push_back(e.weight);
      }
      std::vector<double> node_weights(spec.size, 0.0);
      for (const auto& f : spec.fields) {
        if (f.node >= spec.size) throw InvalidModelError("field on node outside [0, n)");
        node_weights[f.node] = f.weight;
      }
      return IsingModel(Graph(spec.size, std::move(edges)), std::move(weights),
                        std::move(node_weights));
    }
  }
  throw InvalidModelError("unknown model type");
}

/// Parses the model description format:
///
///   # comment
///   type = curie_weiss | torus_grid | explicit
///   n = 100            (curie_weiss, explicit)
///   k = 10             (torus_grid)
///   alpha = 0.5        (curie_weiss, torus_grid)
///   0 1 0.25           (explicit: one "u v weight" line per edge)
///   field 3 0.1        (explicit: optional external field on node 3)
///
/// The returned spec has been built once, so every model invariant holds.
inline ModelSpec parse_model_spec(std::istream& in) {
  ModelSpec spec;
  bool have_type = false, have_size = false, have_alpha = false;
  std::vector<std::size_t> edge_lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = text::trim(text::strip_comment(line));
    if (body.empty()) continue;
    if (const auto eq = body.find('='); eq != std::string_view::npos) {
      const auto key = text::trim(body.substr(0, eq));
      const auto value = text::trim(body.substr(eq + 1));
      if (key == "type") {
        if (!parse_model_type(value, spec.type)) {
          throw ParseError(lineno, "unknown model type '" + std::string(value) + "'");
        }
        have_type = true;
      } else if (key == "n" || key == "k") {
        std::uint64_t v = 0;
        if (!text::parse_u64(value, v)) throw ParseError(lineno, "expected an integer for " + std::string(key));
        spec.size = v;
        have_size = true;
      } else if (key == "alpha") {
        if (!text::parse_double(value, spec.alpha)) throw ParseError(lineno, "expected a finite alpha");
        have_alpha = true;
      } else {
        throw ParseError(lineno, "unknown key '" + std::string(key) + "'");
      }
      continue;
    }
    const auto tok = text::split_ws(body);
    if (tok.size() == 3 && tok[0] == "field") {
      std::uint64_t v = 0;
      double w = 0;
      if (!text::parse_u64(tok[1], v) || !text::parse_double(tok[2], w)) {
        throw ParseError(lineno, "expected 'field node weight'");
      }
      spec.fields.push_back({NodeId(v), w});
      continue;
    }
    if (tok.size() != 3) throw ParseError(lineno, "expected 'u v weight'");
    std::uint64_t u = 0, v = 0;
    double w = 0;
    if (!text::parse_u64(tok[0], u) || !text::parse_u64(tok[1], v) || !text::parse_double(tok[2], w)) {
      throw ParseError(lineno, "expected 'u v weight'");
    }
    spec.edges.push_back({NodeId(u), NodeId(v), w});
    edge_lines.push_back(lineno);
  }
  if (!have_type) throw ParseError(lineno, "missing 'type'");
  if (!have_size) throw ParseError(lineno, "missing node count ('n' or 'k')");
  if (spec.type != ModelType::kExplicit && !have_alpha) throw ParseError(lineno, "missing 'alpha'");
  if (spec.type != ModelType::kExplicit && (!spec.edges.empty() || !spec.fields.empty())) {
    throw ParseError(lineno, "edge lines are only allowed for explicit models");
  }
  std::set<std::pair<NodeId, NodeId>> seen;
  for (std::size_t e = 0; e < spec.edges.size(); ++e) {
    auto [u, v, w] = spec.edges[e];
    if (u >= spec.size || v >= spec.size) throw ParseError(edge_lines[e], "edge endpoint outside [0, n)");
    if (u == v) throw ParseError(edge_lines[e], "self-loop");
    if (!seen.insert(std::minmax(u, v)).second) throw ParseError(edge_lines[e], "duplicate edge");
  }
  try {
    (void)build_model(spec);
  } catch (const InvalidModelError& e) {
    throw ParseError(lineno, e.what());
  }
  return spec;
}

inline ModelSpec load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  try {
    return parse_model_spec(in);
  } catch (const ParseError& e) {
    throw ParseError(path, e.line(), e.detail());
  }
}

inline void write_model_spec(std::ostream& out, const ModelSpec& spec) {
  out << "type = " << to_string(spec.type) << '\n';
  out << (spec.type == ModelType::kTorusGrid ? "k = " : "n = ") << spec.size << '\n';
  if (spec.type != ModelType::kExplicit) out << "alpha = " << text::format_double(spec.alpha) << '\n';
  for (const auto& e : spec.edges) {
    out << e.u << ' ' << e.v << ' ' << text::format_double(e.weight) << '\n';
  }
  for (const auto& f : spec.fields) {
    out << "field " << f.node << ' ' << text::format_double(f.weight) << '\n';
  }
}

}  // namespace hogwild
