#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace hogwild {

struct ChainState {
  Configuration config;
  std::uint64_t step = 0;
};

// Called after each update with (step after the update, site, new spin).
using StepObserver = std::function<void(std::uint64_t, std::size_t, Spin)>;

/// One sequential Gibbs update. Consumes exactly two uniforms from `rng`:
/// the site, then the threshold u (x_i <- +1 iff u < p_plus).
inline std::size_t gibbs_step(const IsingModel& model, ChainState& state, RngStream& rng) {
  const std::size_t i = rng.index(model.size());
  const double u = rng.uniform();
  const double p = p_plus_from_field(model.local_field(i, state.config.spins()));
  state.config.set(i, threshold_spin(u, p));
  ++state.step;
  return i;
}

inline ChainState run_sequential(const IsingModel& model, std::uint64_t steps, Configuration init,
                                 RngStream& rng, const StepObserver& observer = {}) {
  if (init.size() != model.size()) throw DimensionError("initial configuration length mismatch");
  ChainState state{std::move(init), 0};
  for (std::uint64_t t = 0; t < steps; ++t) {
    const auto i = gibbs_step(model, state, rng);
    if (observer) observer(state.step, i, state.config[i]);
  }
  return state;
}

// Starts from a uniform random configuration drawn from `rng` (n uniforms).
inline ChainState run_sequential(const IsingModel& model, std::uint64_t steps, RngStream& rng,
                                 const StepObserver& observer = {}) {
  auto init = Configuration::uniform_random(model.size(), rng);
  return run_sequential(model, steps, std::move(init), rng, observer);
}

/// ceil( n/(1-alpha) * ln(n/eps) ): sequential mixing-time bound under
/// Dobrushin's condition.
inline std::uint64_t mixing_budget_theory(std::size_t n, double alpha, double eps) {
  if (!(alpha < 1.0)) throw DomainError("Dobrushin condition violated: alpha >= 1");
  if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  const double nn = static_cast<double>(n);
  return static_cast<std::uint64_t>(std::ceil(nn / (1.0 - alpha) * std::log(nn / eps)));
}

// ceil(10 n log2 n), the burn-in used by the experiment protocol.
inline std::uint64_t mixing_budget_experiment(std::size_t n) {
  const double nn = static_cast<double>(n);
  return static_cast<std::uint64_t>(std::ceil(10.0 * nn * std::log2(nn)));
}

/// `count` independent restarts, each from a fresh uniform configuration on
/// stream rng.substream(run). Results are ordered by run index regardless of
/// the worker count.
inline std::vector<Configuration> sample_batch(const IsingModel& model, std::size_t count,
                                               std::uint64_t steps_per_run, const RngStream& rng,
                                               std::size_t workers = 1) {
  if (count < 1) throw InvalidArgumentError("sample_batch needs count >= 1");
  std::vector<Configuration> out(count);
  parallel_for(count, workers, [&](std::size_t r) {
    auto stream = rng.substream(r);
    out[r] = run_sequential(model, steps_per_run, stream).config;
  });
  return out;
}

/// Histogram (by Configuration::index) of a single chain: `burn_in` steps,
/// then one sample every `thin` steps until `samples` are recorded.
inline std::vector<std::uint64_t> thinned_histogram(const IsingModel& model, std::uint64_t burn_in,
                                                    std::uint64_t thin, std::uint64_t samples,
                                                    RngStream& rng,
                                                    std::size_t limit = kDefaultEnumerationLimit) {
  if (model.size() > limit) throw CapacityError("histogram support too large");
  if (thin == 0) throw InvalidArgumentError("thinning interval must be positive");
  std::vector<std::uint64_t> hist(std::size_t{1} << model.size(), 0);
  ChainState state = run_sequential(model, burn_in, rng);
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (std::uint64_t k = 0; k < thin; ++k) gibbs_step(model, state, rng);
    ++hist[state.config.index()];
  }
  return hist;
}

inline std::vector<double> normalize_histogram(const std::vector<std::uint64_t>& hist) {
  std::uint64_t total = 0;
  for (auto c : hist) total += c;
  if (total == 0) throw EmptyInputError("empty histogram");
  std::vector<double> p(hist.size());
  for (std::size_t i = 0; i < hist.size(); ++i) p[i] = static_cast<double>(hist[i]) / static_cast<double>(total);
  return p;
}

inline std::vector<double> empirical_distribution(const std::vector<Configuration>& samples,
                                                  std::size_t n,
                                                  std::size_t limit = kDefaultEnumerationLimit) {
  if (n > limit) throw CapacityError("histogram support too large");
  std::vector<std::uint64_t> hist(std::size_t{1} << n, 0);
  for (const auto& x : samples) {
    if (x.size() != n) throw DimensionError("sample length mismatch");
    ++hist[x.index()];
  }
  return normalize_histogram(hist);
}

// CSV trajectory writer: header "step,site,new_value".
class TrajectoryCsv {
 public:
  explicit TrajectoryCsv(std::ostream& out) : out_(out) { out_ << "step,site,new_value\n"; }

  StepObserver observer() {
    return [this](std::uint64_t step, std::size_t site, Spin v) {
      out_ << step << ',' << site << ',' << int(v) << '\n';
    };
  }

 private:
  std::ostream& out_;
};

}  // namespace hogwild
