#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace hogwild {

/// Law of the read delays τ_{i,t}. Draws never look at the chain state.
///
/// Geometric delays count failures before the first success,
/// P(K = k) = p (1-p)^k, and are clamped at `cap` (K -> min(K, cap)).
/// With `shared` set, one delay per step applies to every read of that step;
/// otherwise each read gets an i.i.d. delay.
class DelayModel {
 public:
  enum class Family { kConstant, kUniformInt, kGeometric };

  static DelayModel constant(std::uint32_t c, bool shared = false) {
    return DelayModel(Family::kConstant, c, 0.0, c, shared);
  }

  // Uniform on {0, ..., m}.
  static DelayModel uniform_int(std::uint32_t m, bool shared = false) {
    return DelayModel(Family::kUniformInt, m, 0.0, m, shared);
  }

  static DelayModel geometric(double p, std::uint32_t cap, bool shared = false) {
    if (!(p > 0.0 && p <= 1.0)) throw InvalidArgumentError("geometric delay needs p in (0, 1]");
    return DelayModel(Family::kGeometric, 0, p, cap, shared);
  }

  // Geometric with untruncated mean tau and cap ceil(10 tau).
  static DelayModel geometric_with_mean(double tau, bool shared = false) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidArgumentError("tau must be finite and >= 0");
    if (tau == 0.0) return constant(0, shared);
    const auto cap = static_cast<std::uint32_t>(std::max(1.0, std::ceil(10.0 * tau)));
    return geometric(1.0 / (1.0 + tau), cap, shared);
  }

  Family family() const noexcept { return family_; }
  bool shared() const noexcept { return shared_; }
  std::uint32_t max_delay() const noexcept { return cap_; }
  double p() const noexcept { return p_; }
  std::uint32_t parameter() const noexcept { return param_; }

  // Closed-form mean of a single delay.
  double mean() const {
    switch (family_) {
      case Family::kConstant: return param_;
      case Family::kUniformInt: return 0.5 * param_;
      case Family::kGeometric: {
        // E[min(K, c)] = Σ_{k=1..c} P(K >= k) = (1-p)(1 - (1-p)^c) / p
        const double q = 1.0 - p_;
        return q * (1.0 - std::pow(q, cap_)) / p_;
      }
    }
    return 0.0;
  }

  // Declared average contention τ; always >= mean().
  double tau_bound() const { return family_ == Family::kGeometric ? (1.0 - p_) / p_ : mean(); }

  std::uint32_t draw(RngStream& rng) const {
    switch (family_) {
      case Family::kConstant: return param_;
      case Family::kUniformInt: return static_cast<std::uint32_t>(rng.index(std::size_t{param_} + 1));
      case Family::kGeometric: {
        if (p_ >= 1.0) return 0;
        const double u = 1.0 - rng.uniform();  // (0, 1]
        const double k = std::floor(std::log(u) * inv_log_q_);
        return k >= cap_ ? cap_ : static_cast<std::uint32_t>(k);
      }
    }
    return 0;
  }

  friend bool operator==(const DelayModel&, const DelayModel&) = default;

 private:
  DelayModel(Family f, std::uint32_t param, double p, std::uint32_t cap, bool shared)
      : family_(f), param_(param), p_(p), cap_(cap), shared_(shared),
        inv_log_q_(f == Family::kGeometric && p < 1.0 ? 1.0 / std::log1p(-p) : 0.0) {}

  Family family_;
  std::uint32_t param_;
  double p_;
  std::uint32_t cap_;
  bool shared_;
  double inv_log_q_;
};

inline std::vector<std::uint32_t> sample_delays(const DelayModel& dm, std::span<const NodeId> nodes,
                                                RngStream& rng) {
  std::vector<std::uint32_t> out(nodes.size());
  if (dm.shared()) {
    const auto d = dm.draw(rng);
    for (auto& x : out) x = d;
  } else {
    for (auto& x : out) x = dm.draw(rng);
  }
  return out;
}

/// Per-node write history answering "what was x_i after s writes?".
///
/// Every history starts with (0, initial value); each write() advances the
/// global step by one and appends to the written node. With a retain window
/// w, entries that no read at or after step() - w can reach are dropped.
class VersionedTrace {
 public:
  struct Write {
    std::uint64_t step;
    Spin value;

    friend bool operator==(const Write&, const Write&) = default;
  };

  explicit VersionedTrace(Configuration init, std::optional<std::uint64_t> retain_window = std::nullopt)
      : current_(std::move(init)), last_write_(current_.size(), 0), window_(retain_window) {
    history_.resize(current_.size());
    for (std::size_t i = 0; i < current_.size(); ++i) history_[i].push_back({0, current_[i]});
  }

  std::size_t size() const noexcept { return current_.size(); }
  std::uint64_t step() const noexcept { return step_; }
  const Configuration& current() const noexcept { return current_; }
  Spin current(std::size_t i) const { return current_[i]; }
  std::uint64_t last_write(std::size_t i) const { return last_write_[i]; }
  const std::vector<std::uint64_t>& last_writes() const noexcept { return last_write_; }
  const std::deque<Write>& history(std::size_t i) const { return history_.at(i); }

  // Value of node i after s writes, for 0 <= s <= step().
  Spin read_at(std::size_t i, std::uint64_t s) const {
    if (i >= size()) throw BoundsError("node " + std::to_string(i) + " out of range");
    if (s > step_) throw BoundsError("read from the future");
    const auto& h = history_[i];
    for (auto it = h.rbegin(); it != h.rend(); ++it) {
      if (it->step <= s) return it->value;
    }
    throw BoundsError("read at step " + std::to_string(s) + " falls in the pruned history");
  }

  // Read with delay d at the current step; negative times clamp to 0.
  Spin read_delayed(std::size_t i, std::uint32_t d) const {
    return read_at(i, d >= step_ ? 0 : step_ - d);
  }

  void write(std::size_t i, Spin value) {
    if (i >= size()) throw BoundsError("node " + std::to_string(i) + " out of range");
    ++step_;
    current_.set(i, value);
    last_write_[i] = step_;
    auto& h = history_[i];
    h.push_back({step_, value});
    if (window_ && step_ >= *window_) {
      const std::uint64_t horizon = step_ - *window_;
      while (h.size() >= 2 && h[1].step <= horizon) h.pop_front();
    }
  }

  friend bool operator==(const VersionedTrace& a, const VersionedTrace& b) {
    return a.step_ == b.step_ && a.current_ == b.current_ && a.history_ == b.history_;
  }

 private:
  Configuration current_;
  std::vector<std::deque<Write>> history_;
  std::vector<std::uint64_t> last_write_;
  std::uint64_t step_ = 0;
  std::optional<std::uint64_t> window_;
};

struct DelayRecord {
  std::uint64_t write_index;
  NodeId node;
  std::uint32_t delay;

  friend bool operator==(const DelayRecord&, const DelayRecord&) = default;
};

class DelayLog {
 public:
  void add(std::uint64_t write_index, NodeId node, std::uint32_t delay) {
    records_.push_back({write_index, node, delay});
  }

  void append(const DelayLog& other) {
    records_.insert(records_.end(), other.records_.begin(), other.records_.end());
  }

  const std::vector<DelayRecord>& records() const noexcept { return records_; }
  std::vector<DelayRecord>& records() noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  void write_csv(std::ostream& out) const {
    out << "write_index,node,delay\n";
    for (const auto& r : records_) out << r.write_index << ',' << r.node << ',' << r.delay << '\n';
  }

  friend bool operator==(const DelayLog&, const DelayLog&) = default;

 private:
  std::vector<DelayRecord> records_;
};

// Mean observed delay.
inline double estimate_tau(const DelayLog& log) {
  if (log.empty()) throw EmptyInputError("delay log is empty");
  long double sum = 0;
  for (const auto& r : log.records()) sum += r.delay;
  return static_cast<double>(sum / static_cast<long double>(log.size()));
}

namespace detail {

// Local field of site i computed from stale reads of `trace` at its current
// step. A delay is drawn only for reads it can affect: a neighbor whose last
// write is at least `cap` steps old reads its current value under every
// admissible delay. When `log` is given every read draws and is recorded.
// `mismatches` (with `reference`) counts neighbors where reference and the
// current trace agree but the stale read differs.
inline double stale_local_field(const IsingModel& model, const VersionedTrace& trace, std::size_t i,
                                const DelayModel& dm, RngStream& delay_rng, DelayLog* log,
                                std::size_t* mismatches = nullptr,
                                const Configuration* reference = nullptr) {
  const std::uint64_t t = trace.step();
  const std::uint32_t cap = dm.max_delay();
  const bool shared = dm.shared();
  const std::uint32_t shared_delay = shared ? dm.draw(delay_rng) : 0;
  const Spin* cur = trace.current().spins().data();
  const std::uint64_t* last = trace.last_writes().data();

  if (!log && !mismatches) {
    double h = model.node_weight(i);
    for (const auto& nb : model.neighbors(i)) {
      const NodeId j = nb.node;
      Spin v = cur[j];
      if (last[j] + cap > t) {
        v = trace.read_delayed(j, shared ? shared_delay : dm.draw(delay_rng));
      }
      h += nb.weight * v;
    }
    return h;
  }

  return model.local_field(i, [&](NodeId j) -> Spin {
    Spin v;
    if (!log && last[j] + cap <= t) {
      v = cur[j];
    } else {
      const std::uint32_t d = shared ? shared_delay : dm.draw(delay_rng);
      if (log) log->add(t, j, d);
      v = trace.read_delayed(j, d);
    }
    if (mismatches && (*reference)[j] == cur[j] && v != cur[j]) ++*mismatches;
    return v;
  });
}

}  // namespace detail

/// One HOGWILD! update on the simulated engine. Consumes the same two
/// uniforms from `rng` as gibbs_step (site, threshold); delays come from
/// `delay_rng` only.
inline std::size_t hogwild_step_simulated(const IsingModel& model, VersionedTrace& trace,
                                          const DelayModel& dm, RngStream& rng,
                                          RngStream& delay_rng, DelayLog* log = nullptr) {
  if (trace.size() != model.size()) throw DimensionError("trace size does not match model");
  const std::size_t i = rng.index(model.size());
  const double u = rng.uniform();
  const double h = detail::stale_local_field(model, trace, i, dm, delay_rng, log);
  trace.write(i, threshold_spin(u, p_plus_from_field(h)));
  return i;
}

struct HogwildOptions {
  // Keep every write instead of pruning beyond the delay cap.
  bool full_history = false;
  // Record every read's delay (forces a draw per read).
  DelayLog* log = nullptr;
};

struct HogwildRun {
  Configuration final;
  VersionedTrace trace;
};

inline HogwildRun run_hogwild_simulated(const IsingModel& model, std::uint64_t steps,
                                        const DelayModel& dm, Configuration init, RngStream& rng,
                                        const HogwildOptions& options = {}) {
  if (init.size() != model.size()) throw DimensionError("initial configuration length mismatch");
  std::optional<std::uint64_t> window;
  if (!options.full_history) window = dm.max_delay();
  VersionedTrace trace(std::move(init), window);
  RngStream delay_rng = rng.substream(kDelayStreamTag);
  for (std::uint64_t s = 0; s < steps; ++s) {
    hogwild_step_simulated(model, trace, dm, rng, delay_rng, options.log);
  }
  Configuration final = trace.current();
  return {std::move(final), std::move(trace)};
}

inline HogwildRun run_hogwild_simulated(const IsingModel& model, std::uint64_t steps,
                                        const DelayModel& dm, RngStream& rng,
                                        const HogwildOptions& options = {}) {
  auto init = Configuration::uniform_random(model.size(), rng);
  return run_hogwild_simulated(model, steps, dm, std::move(init), rng, options);
}

/// Independent HOGWILD! restarts: run r starts from a uniform configuration
/// on stream rng.substream(r) and returns its final state.
inline std::vector<Configuration> hogwild_batch(const IsingModel& model, std::size_t count,
                                                std::uint64_t steps_per_run, const DelayModel& dm,
                                                const RngStream& rng, std::size_t workers = 1) {
  if (count < 1) throw InvalidArgumentError("hogwild_batch needs count >= 1");
  std::vector<Configuration> out(count);
  parallel_for(count, workers, [&](std::size_t r) {
    auto stream = rng.substream(r);
    out[r] = run_hogwild_simulated(model, steps_per_run, dm, stream).final;
  });
  return out;
}

}  // namespace hogwild
