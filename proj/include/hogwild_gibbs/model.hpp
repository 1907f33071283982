#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace hogwild {

using Spin = std::int8_t;
using NodeId = std::uint32_t;

inline constexpr std::size_t kDefaultEnumerationLimit = 20;

/// A full assignment in {-1,+1}^n.
class Configuration {
 public:
  Configuration() = default;

  // All spins +1.
  explicit Configuration(std::size_t n) : spins_(n, Spin{1}) {}

  explicit Configuration(std::vector<Spin> spins) : spins_(std::move(spins)) {
    for (std::size_t i = 0; i < spins_.size(); ++i) {
      if (spins_[i] != 1 && spins_[i] != -1) {
        throw ValidationError("spin " + std::to_string(i) + " is not -1 or +1");
      }
    }
  }

  static Configuration uniform_random(std::size_t n, RngStream& rng) {
    Configuration x(n);
    for (auto& s : x.spins_) s = rng.uniform() < 0.5 ? Spin{1} : Spin{-1};
    return x;
  }

  // Bit i of `index` set <=> spin i is +1.
  static Configuration from_index(std::uint64_t index, std::size_t n) {
    Configuration x(n);
    for (std::size_t i = 0; i < n; ++i) x.spins_[i] = ((index >> i) & 1U) ? Spin{1} : Spin{-1};
    return x;
  }

  std::uint64_t index() const {
    if (spins_.size() > 63) throw CapacityError("configuration too large to index");
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < spins_.size(); ++i) {
      if (spins_[i] > 0) idx |= std::uint64_t{1} << i;
    }
    return idx;
  }

  std::size_t size() const noexcept { return spins_.size(); }
  Spin operator[](std::size_t i) const { return spins_[i]; }

  Spin at(std::size_t i) const {
    if (i >= spins_.size()) throw BoundsError("site " + std::to_string(i) + " out of range");
    return spins_[i];
  }

  void set(std::size_t i, Spin s) {
    if (s != 1 && s != -1) throw ValidationError("spin must be -1 or +1");
    spins_.at(i) = s;
  }

  Configuration negated() const {
    Configuration y = *this;
    for (auto& s : y.spins_) s = static_cast<Spin>(-s);
    return y;
  }

  std::span<const Spin> spins() const noexcept { return spins_; }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::vector<Spin> spins_;
};

struct Edge {
  NodeId u;
  NodeId v;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Simple undirected graph. Edges are normalized to u < v and keep the order
/// in which they were supplied; per-node neighbor lists are sorted.
class Graph {
 public:
  Graph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    if (n_ == 0) throw InvalidModelError("graph needs at least one node");
    adjacency_.resize(n_);
    for (auto& e : edges_) {
      if (e.u >= n_ || e.v >= n_) {
        throw InvalidModelError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                ") references a node outside [0, n)");
      }
      if (e.u == e.v) throw InvalidModelError("self-loop at node " + std::to_string(e.u));
      if (e.u > e.v) std::swap(e.u, e.v);
      adjacency_[e.u].push_back(e.v);
      adjacency_[e.v].push_back(e.u);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      auto& a = adjacency_[i];
      std::sort(a.begin(), a.end());
      if (std::adjacent_find(a.begin(), a.end()) != a.end()) {
        throw InvalidModelError("duplicate edge at node " + std::to_string(i));
      }
    }
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const NodeId> neighbors(std::size_t i) const { return adjacency_.at(i); }
  std::size_t degree(std::size_t i) const { return adjacency_.at(i).size(); }

  std::size_t max_degree() const {
    std::size_t d = 0;
    for (const auto& a : adjacency_) d = std::max(d, a.size());
    return d;
  }

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> adjacency_;
};

struct Neighbor {
  NodeId node;
  double weight;
};

/// Pairwise Ising model
///   p(x) ∝ exp( Σ_v θ_v x_v + Σ_{(u,v)∈E} θ_uv x_u x_v ).
///
/// Immutable after construction. Neighbor lists carry their edge weight so a
/// local field costs O(degree).
class IsingModel {
 public:
  IsingModel(Graph graph, std::vector<double> edge_weights, std::vector<double> node_weights = {})
      : graph_(std::move(graph)),
        edge_weights_(std::move(edge_weights)),
        node_weights_(std::move(node_weights)) {
    const std::size_t n = graph_.size();
    if (node_weights_.empty()) node_weights_.assign(n, 0.0);
    if (edge_weights_.size() != graph_.edges().size()) {
      throw InvalidModelError("edge weight count does not match edge count");
    }
    if (node_weights_.size() != n) throw InvalidModelError("node weight count does not match n");
    zero_field_ = true;
    for (double w : node_weights_) {
      if (!std::isfinite(w)) throw InvalidModelError("non-finite node weight");
      if (w != 0.0) zero_field_ = false;
    }
    std::vector<std::vector<Neighbor>> adj(n);
    for (std::size_t e = 0; e < edge_weights_.size(); ++e) {
      const double w = edge_weights_[e];
      if (!std::isfinite(w)) throw InvalidModelError("non-finite edge weight");
      const auto [u, v] = graph_.edges()[e];
      adj[u].push_back({v, w});
      adj[v].push_back({u, w});
    }
    offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::sort(adj[i].begin(), adj[i].end(),
                [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
      offsets_[i + 1] = offsets_[i] + adj[i].size();
      neighbors_.insert(neighbors_.end(), adj[i].begin(), adj[i].end());
    }
  }

  std::size_t size() const noexcept { return graph_.size(); }
  const Graph& graph() const noexcept { return graph_; }
  const std::vector<double>& edge_weights() const noexcept { return edge_weights_; }
  const std::vector<double>& node_weights() const noexcept { return node_weights_; }
  double node_weight(std::size_t i) const { return node_weights_.at(i); }
  bool zero_field() const noexcept { return zero_field_; }

  std::span<const Neighbor> neighbors(std::size_t i) const {
    if (i >= size()) throw BoundsError("node " + std::to_string(i) + " out of range");
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  // Weight of edge (i,j), or nullopt if the nodes are not adjacent.
  std::optional<double> edge_weight(std::size_t i, std::size_t j) const {
    const auto nb = neighbors(i);
    const auto it = std::lower_bound(nb.begin(), nb.end(), j,
                                     [](const Neighbor& a, std::size_t k) { return a.node < k; });
    if (it == nb.end() || it->node != j) return std::nullopt;
    return it->weight;
  }

  // θ_i + Σ_{j∈N(i)} θ_ij · read(j). `read` supplies neighbor spins, which
  // lets the asynchronous engines substitute stale values.
  template <typename ReadFn>
  double local_field(std::size_t i, ReadFn&& read) const {
    double h = node_weights_[i];
    const Neighbor* it = neighbors_.data() + offsets_[i];
    const Neighbor* end = neighbors_.data() + offsets_[i + 1];
    for (; it != end; ++it) h += it->weight * static_cast<double>(read(it->node));
    return h;
  }

  double local_field(std::size_t i, std::span<const Spin> x) const {
    return local_field(i, [x](NodeId j) { return x[j]; });
  }

 private:
  Graph graph_;
  std::vector<double> edge_weights_;
  std::vector<double> node_weights_;
  bool zero_field_ = true;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> neighbors_;
};

struct SiteDistribution {
  double p_plus;

  double p_minus() const noexcept { return 1.0 - p_plus; }
};

// P(x_i = +1 | rest) as a function of the local field.
inline double p_plus_from_field(double h) { return 0.5 * (1.0 + std::tanh(h)); }

// Resample rule shared by every engine: +1 iff u < p_plus.
inline Spin threshold_spin(double u, double p_plus) { return u < p_plus ? Spin{1} : Spin{-1}; }

inline IsingModel build_curie_weiss(std::size_t n, double alpha) {
  if (n < 2) throw InvalidModelError("Curie-Weiss model needs n >= 2");
  if (!std::isfinite(alpha)) throw InvalidModelError("alpha must be finite");
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) edges.push_back({NodeId(u), NodeId(v)});
  }
  const double beta = alpha / static_cast<double>(n - 1);
  std::vector<double> weights(edges.size(), beta);
  return IsingModel(Graph(n, std::move(edges)), std::move(weights));
}

// k-by-k grid with wrap-around rows and columns (four-regular torus).
inline IsingModel build_torus_grid(std::size_t k, double alpha) {
  if (k < 3) throw InvalidModelError("torus grid needs k >= 3");
  if (!std::isfinite(alpha)) throw InvalidModelError("alpha must be finite");
  const std::size_t n = k * k;
  std::vector<Edge> edges;
  edges.reserve(2 * n);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      const auto id = NodeId(r * k + c);
      edges.push_back({id, NodeId(r * k + (c + 1) % k)});
      edges.push_back({id, NodeId(((r + 1) % k) * k + c)});
    }
  }
  std::vector<double> weights(edges.size(), alpha / 4.0);
  return IsingModel(Graph(n, std::move(edges)), std::move(weights));
}

inline SiteDistribution conditional(const IsingModel& model, const Configuration& x,
                                    std::size_t i) {
  if (x.size() != model.size()) throw DimensionError("configuration length does not match model");
  if (i >= model.size()) throw BoundsError("site " + std::to_string(i) + " out of range");
  return {p_plus_from_field(model.local_field(i, x.spins()))};
}

enum class InfluenceMode { kAutomatic, kBruteForce };

/// Influence of node j on node i: the largest total-variation change in the
/// conditional of i when only x_j is flipped.
///
/// Zero-field models use the closed form tanh(|θ_ij|); the brute-force path
/// enumerates the other neighbors of i (the conditional depends on nothing
/// else) and is limited to 2^limit states.
inline double influence(const IsingModel& model, std::size_t j, std::size_t i,
                        InfluenceMode mode = InfluenceMode::kAutomatic,
                        std::size_t limit = kDefaultEnumerationLimit) {
  if (i >= model.size() || j >= model.size()) throw BoundsError("node out of range");
  if (i == j) throw InvalidArgumentError("influence of a node on itself is undefined");
  const auto w = model.edge_weight(i, j);
  if (!w) return 0.0;
  if (mode == InfluenceMode::kAutomatic && model.zero_field()) return std::tanh(std::abs(*w));

  std::vector<Neighbor> others;
  for (const auto& nb : model.neighbors(i)) {
    if (nb.node != j) others.push_back(nb);
  }
  if (others.size() > limit) {
    throw CapacityError("brute-force influence needs 2^" + std::to_string(others.size()) +
                        " neighbor states");
  }
  double best = 0.0;
  const std::uint64_t states = std::uint64_t{1} << others.size();
  for (std::uint64_t s = 0; s < states; ++s) {
    double h = model.node_weight(i);
    for (std::size_t b = 0; b < others.size(); ++b) {
      h += others[b].weight * (((s >> b) & 1U) ? 1.0 : -1.0);
    }
    const double tv = std::abs(p_plus_from_field(h + *w) - p_plus_from_field(h - *w));
    best = std::max(best, tv);
  }
  return best;
}

// Dobrushin coefficient max_i Σ_j I(j,i); the condition holds when < 1.
inline double dobrushin_alpha(const IsingModel& model,
                              InfluenceMode mode = InfluenceMode::kAutomatic) {
  double alpha = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    double total = 0.0;
    for (const auto& nb : model.neighbors(i)) total += influence(model, nb.node, i, mode);
    alpha = std::max(alpha, total);
  }
  return alpha;
}

// Unnormalized log-probability (the log-partition term is excluded).
inline double log_weight(const IsingModel& model, const Configuration& x) {
  if (x.size() != model.size()) throw DimensionError("configuration length does not match model");
  double s = 0.0;
  for (std::size_t v = 0; v < model.size(); ++v) s += model.node_weight(v) * x[v];
  const auto& edges = model.graph().edges();
  const auto& w = model.edge_weights();
  for (std::size_t e = 0; e < edges.size(); ++e) s += w[e] * x[edges[e].u] * x[edges[e].v];
  return s;
}

/// Exact distribution over all 2^n configurations, indexed by
/// Configuration::index().
inline std::vector<double> exact_distribution(const IsingModel& model,
                                              std::size_t limit = kDefaultEnumerationLimit) {
  const std::size_t n = model.size();
  if (n > limit) {
    throw CapacityError("exact enumeration refuses n = " + std::to_string(n) + " > " +
                        std::to_string(limit));
  }
  const std::uint64_t states = std::uint64_t{1} << n;
  std::vector<double> logw(states);
  double max_lw = -INFINITY;
  for (std::uint64_t s = 0; s < states; ++s) {
    logw[s] = log_weight(model, Configuration::from_index(s, n));
    max_lw = std::max(max_lw, logw[s]);
  }
  double z = 0.0;
  for (auto& lw : logw) {
    lw = std::exp(lw - max_lw);
    z += lw;
  }
  for (auto& p : logw) p /= z;
  return logw;
}

// Total-variation distance between two distributions on the same index set.
inline double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionError("distributions have different support sizes");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace hogwild
