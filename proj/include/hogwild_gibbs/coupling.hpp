#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "async.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace hogwild {

inline std::size_t hamming(const Configuration& x, const Configuration& y) {
  if (x.size() != y.size()) throw DimensionError("configurations have different lengths");
  std::size_t d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d += x[i] != y[i];
  return d;
}

/// Probabilities over ordered states {0, ..., k-1}.
class FiniteDistribution {
 public:
  explicit FiniteDistribution(std::vector<double> p) : p_(std::move(p)) {
    if (p_.empty()) throw ValidationError("distribution needs at least one state");
    double total = 0.0;
    for (double v : p_) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("probabilities must be finite and >= 0");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("probabilities do not sum to 1");
  }

  // Binary law ordered (+1, -1).
  static FiniteDistribution binary(double p_plus) { return FiniteDistribution({p_plus, 1.0 - p_plus}); }

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& probabilities() const noexcept { return p_; }

  // Index of the state whose half-open cumulative interval [P(i-1), P(i))
  // contains u. Rounding slack above the last breakpoint falls to the last
  // state with positive mass.
  std::size_t inverse_cdf(double u) const {
    double c = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (p_[i] > 0.0) last_positive = i;
      c += p_[i];
      if (u < c) return i;
    }
    return last_positive;
  }

 private:
  std::vector<double> p_;
};

inline double total_variation(const FiniteDistribution& p, const FiniteDistribution& q) {
  return total_variation(p.probabilities(), q.probabilities());
}

/// Greedy coupling: one shared uniform u pushed through both inverse CDFs.
inline std::pair<std::size_t, std::size_t> greedy_couple(const FiniteDistribution& p,
                                                         const FiniteDistribution& q, double u) {
  if (p.size() != q.size()) throw ValidationError("distributions are over different state sets");
  if (!(u >= 0.0 && u < 1.0)) throw InvalidArgumentError("u must lie in [0, 1)");
  return {p.inverse_cdf(u), q.inverse_cdf(u)};
}

// Binary specialization with states ordered (+1, -1); identical to
// threshold_spin applied to each side.
inline std::pair<Spin, Spin> greedy_couple_binary(double p_plus, double q_plus, double u) {
  return {threshold_spin(u, p_plus), threshold_spin(u, q_plus)};
}

/// Exact Lebesgue measure of {u in [0,1): outputs of greedy_couple differ},
/// computed over the merged breakpoints of both CDFs.
inline double greedy_disagreement(const FiniteDistribution& p, const FiniteDistribution& q) {
  if (p.size() != q.size()) throw ValidationError("distributions are over different state sets");
  std::vector<double> cuts{0.0, 1.0};
  double cp = 0.0, cq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cp += p[i];
    cq += q[i];
    cuts.push_back(std::min(cp, 1.0));
    cuts.push_back(std::min(cq, 1.0));
  }
  std::sort(cuts.begin(), cuts.end());
  double measure = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    if (b <= a) continue;
    const double mid = 0.5 * (a + b);
    if (p.inverse_cdf(mid) != q.inverse_cdf(mid)) measure += b - a;
  }
  return measure;
}

struct CoupledStep {
  std::size_t site;
  // Neighbors of `site` on which X and Y agree but the stale read of Y
  // differs from X.
  std::size_t stale_mismatches;
  bool disagreed_before;
  bool disagrees_after;
};

/// One greedy-coupled step of the sequential chain X and the HOGWILD! chain Y.
/// Site and threshold come from `rng` exactly as in gibbs_step, so the X
/// marginal is the sequential chain itself; delays come from `delay_rng`.
inline CoupledStep coupled_step(const IsingModel& model, ChainState& x, VersionedTrace& y,
                                const DelayModel& dm, RngStream& rng, RngStream& delay_rng) {
  if (x.config.size() != model.size() || y.size() != model.size()) {
    throw DimensionError("coupled chains do not match the model size");
  }
  const std::size_t i = rng.index(model.size());
  const double u = rng.uniform();
  const bool before = x.config[i] != y.current(i);
  const double p = p_plus_from_field(model.local_field(i, x.config.spins()));
  std::size_t mismatches = 0;
  const double q = p_plus_from_field(
      detail::stale_local_field(model, y, i, dm, delay_rng, nullptr, &mismatches, &x.config));
  const auto [sx, sy] = greedy_couple_binary(p, q, u);
  x.config.set(i, sx);
  ++x.step;
  y.write(i, sy);
  return {i, mismatches, before, sx != sy};
}

struct CoupledRunOptions {
  bool record_trajectory = true;
  // Start both chains here instead of a random configuration.
  std::optional<Configuration> init;
};

/// Hamming-distance statistics of a coupled run. Moments are indexed by
/// power d = 1..max_moment (slot 0 unused).
struct CoupledRunStats {
  std::size_t n = 0;
  std::uint64_t steps = 0;
  std::vector<std::uint32_t> hamming;          // d_H after each step (index t-1)
  std::vector<std::uint32_t> stale_mismatch;   // per-step stale-read disagreements
  std::vector<double> moments_full;            // time average over steps 1..T
  std::vector<double> moments_window;          // time average over the final half
  std::uint32_t final_hamming = 0;
  std::uint32_t max_hamming = 0;
  Configuration final_x;
  Configuration final_y;
};

inline CoupledRunStats run_coupled(const IsingModel& model, std::uint64_t steps,
                                   const DelayModel& dm, std::size_t max_moment, RngStream& rng,
                                   const CoupledRunOptions& options = {}) {
  if (max_moment < 1) throw InvalidArgumentError("max_moment must be >= 1");
  const std::size_t n = model.size();
  Configuration init = options.init ? *options.init : Configuration::uniform_random(n, rng);
  if (init.size() != n) throw DimensionError("initial configuration length mismatch");
  ChainState x{init, 0};
  VersionedTrace y(std::move(init), dm.max_delay());
  RngStream delay_rng = rng.substream(kDelayStreamTag);

  CoupledRunStats stats;
  stats.n = n;
  stats.steps = steps;
  stats.moments_full.assign(max_moment + 1, 0.0);
  stats.moments_window.assign(max_moment + 1, 0.0);
  if (options.record_trajectory) {
    stats.hamming.reserve(steps);
    stats.stale_mismatch.reserve(steps);
  }
  const std::uint64_t window_start = steps / 2;  // steps t > window_start form the final half
  std::vector<long double> sum_full(max_moment + 1, 0.0L), sum_window(max_moment + 1, 0.0L);
  std::uint32_t d = 0;
  for (std::uint64_t t = 1; t <= steps; ++t) {
    const CoupledStep cs = coupled_step(model, x, y, dm, rng, delay_rng);
    d = d - static_cast<std::uint32_t>(cs.disagreed_before) + static_cast<std::uint32_t>(cs.disagrees_after);
    stats.max_hamming = std::max(stats.max_hamming, d);
    if (options.record_trajectory) {
      stats.hamming.push_back(d);
      stats.stale_mismatch.push_back(static_cast<std::uint32_t>(cs.stale_mismatches));
    }
    long double power = 1.0L;
    for (std::size_t k = 1; k <= max_moment; ++k) {
      power *= d;
      sum_full[k] += power;
      if (t > window_start) sum_window[k] += power;
    }
  }
  if (steps > 0) {
    const auto window_len = static_cast<long double>(steps - window_start);
    for (std::size_t k = 1; k <= max_moment; ++k) {
      stats.moments_full[k] = static_cast<double>(sum_full[k] / static_cast<long double>(steps));
      stats.moments_window[k] = static_cast<double>(sum_window[k] / window_len);
    }
  }
  stats.final_hamming = d;
  stats.final_x = x.config;
  stats.final_y = y.current();
  return stats;
}

/// Expected-Hamming bound τ α ln(n) / (1 - α) for greedily coupled
/// sequential and HOGWILD! chains started together.
inline double hamming_bound_theory(double tau, double alpha, double n) {
  if (!(alpha < 1.0)) throw DomainError("Dobrushin condition violated: alpha >= 1");
  return tau * alpha * std::log(n) / (1.0 - alpha);
}

// Same bound with log base 2, reported next to the natural-log value.
inline double hamming_bound_theory_log2(double tau, double alpha, double n) {
  if (!(alpha < 1.0)) throw DomainError("Dobrushin condition violated: alpha >= 1");
  return tau * alpha * std::log2(n) / (1.0 - alpha);
}

}  // namespace hogwild
