#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "async.hpp"
#include "bounds.hpp"
#include "coupling.hpp"
#include "errors.hpp"
#include "hardware.hpp"
#include "model.hpp"
#include "model_io.hpp"
#include "multilinear.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "stats.hpp"

namespace hogwild {

enum class ExperimentKind { kStationarity, kDelayProbe, kTauVsThreads, kCoupledHamming, kBias, kVariance };
enum class BurnInRule { kTheory, kExperiment, kExplicit };
enum class FunctionKind { kCompleteBilinear, kLinearSum };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kStationarity: return "stationarity";
    case ExperimentKind::kDelayProbe: return "delay-probe";
    case ExperimentKind::kTauVsThreads: return "tau-vs-threads";
    case ExperimentKind::kCoupledHamming: return "coupled-hamming";
    case ExperimentKind::kBias: return "bias";
    case ExperimentKind::kVariance: return "variance";
  }
  return "?";
}

inline std::string_view to_string(BurnInRule r) {
  switch (r) {
    case BurnInRule::kTheory: return "theory";
    case BurnInRule::kExperiment: return "experiment";
    case BurnInRule::kExplicit: return "explicit";
  }
  return "?";
}

inline std::string_view to_string(FunctionKind f) {
  return f == FunctionKind::kCompleteBilinear ? "complete_bilinear" : "linear_sum";
}

inline std::string_view to_string(DelayModel::Family f) {
  switch (f) {
    case DelayModel::Family::kConstant: return "constant";
    case DelayModel::Family::kUniformInt: return "uniform";
    case DelayModel::Family::kGeometric: return "geometric";
  }
  return "?";
}

/// Delay law as written in a config. `value` is the constant delay, the
/// uniform maximum or the geometric mean τ; `cap` = 0 keeps the default
/// geometric cap ceil(10τ).
struct DelaySpec {
  DelayModel::Family family = DelayModel::Family::kGeometric;
  double value = 4.0;
  std::uint32_t cap = 0;
  bool shared = false;

  DelayModel build() const {
    switch (family) {
      case DelayModel::Family::kConstant: return DelayModel::constant(static_cast<std::uint32_t>(value), shared);
      case DelayModel::Family::kUniformInt: return DelayModel::uniform_int(static_cast<std::uint32_t>(value), shared);
      case DelayModel::Family::kGeometric:
        if (cap == 0) return DelayModel::geometric_with_mean(value, shared);
        return DelayModel::geometric(1.0 / (1.0 + value), cap, shared);
    }
    throw InvalidArgumentError("unknown delay family");
  }

  friend bool operator==(const DelaySpec&, const DelaySpec&) = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kBias;
  std::uint64_t seed = 0;
  std::size_t runs = 5000;
  BurnInRule burn_in = BurnInRule::kExperiment;
  std::uint64_t steps = 0;       // explicit rule only
  double eps = 0.05;             // theory rule only
  double budget_multiplier = 1;  // applied to the burn-in rule
  std::vector<std::size_t> sizes;    // node counts; empty means the model's own size
  std::vector<std::size_t> threads;  // tau-vs-threads sweep
  std::size_t workers = 0;           // 0 = one per hardware thread
  std::size_t max_moment = 2;
  std::size_t thin = 0;              // stationarity; 0 = n
  std::uint64_t reads_per_point = 50000000;  // performed, not logged
  std::size_t repeats = 1;
  double tolerance = 0.02;
  FunctionKind function = FunctionKind::kCompleteBilinear;
  std::string output = ".";
  ModelSpec model{ModelType::kCurieWeiss, 100, 0.5, {}, {}};
  DelaySpec delay;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ", ";
    s += std::to_string(v[k]);
  }
  return s;
}

inline std::vector<std::size_t> parse_size_list(std::string_view value, const std::string& path) {
  std::vector<std::size_t> out;
  std::string cleaned(value);
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  for (auto tok : text::split_ws(cleaned)) {
    std::uint64_t v = 0;
    if (!text::parse_u64(tok, v)) throw SchemaError(path, "expected a list of non-negative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace detail

/// Writes the config as sectioned key = value text. parse_config reads it
/// back to an equal config.
inline void write_config(std::ostream& out, const ExperimentConfig& c) {
  out << "[experiment]\n"
      << "kind = " << to_string(c.kind) << '\n'
      << "seed = " << c.seed << '\n'
      << "runs = " << c.runs << '\n'
      << "burn_in = " << to_string(c.burn_in) << '\n'
      << "steps = " << c.steps << '\n'
      << "eps = " << text::format_double(c.eps) << '\n'
      << "budget_multiplier = " << text::format_double(c.budget_multiplier) << '\n'
      << "sizes = " << detail::join(c.sizes) << '\n'
      << "threads = " << detail::join(c.threads) << '\n'
      << "workers = " << c.workers << '\n'
      << "max_moment = " << c.max_moment << '\n'
      << "thin = " << c.thin << '\n'
      << "reads_per_point = " << c.reads_per_point << '\n'
      << "repeats = " << c.repeats << '\n'
      << "tolerance = " << text::format_double(c.tolerance) << '\n'
      << "function = " << to_string(c.function) << '\n'
      << "output = " << c.output << '\n'
      << "\n[model]\n"
      << "type = " << to_string(c.model.type) << '\n'
      << (c.model.type == ModelType::kTorusGrid ? "k = " : "n = ") << c.model.size << '\n'
      << "alpha = " << text::format_double(c.model.alpha) << '\n';
  for (const auto& e : c.model.edges) out << "edge = " << e.u << ' ' << e.v << ' ' << text::format_double(e.weight) << '\n';
  for (const auto& f : c.model.fields) out << "field = " << f.node << ' ' << text::format_double(f.weight) << '\n';
  out << "\n[delay]\n"
      << "family = " << to_string(c.delay.family) << '\n'
      << "value = " << text::format_double(c.delay.value) << '\n'
      << "cap = " << c.delay.cap << '\n'
      << "shared = " << (c.delay.shared ? "true" : "false") << '\n';
}

inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  write_config(os, c);
  return os.str();
}

/// Parses the sectioned config format. Errors are SchemaError with the
/// offending "section.key" path. `seed` is required.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  c.model.edges.clear();
  bool have_seed = false;
  bool have_kind = false;
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = text::trim(text::strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw SchemaError("line " + std::to_string(lineno), "unterminated section header");
      section = std::string(text::trim(s.substr(1, s.size() - 2)));
      if (section != "experiment" && section != "model" && section != "delay") {
        throw SchemaError(section, "unknown section");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw SchemaError("line " + std::to_string(lineno), "expected key = value");
    if (section.empty()) throw SchemaError("line " + std::to_string(lineno), "key outside of a section");
    const std::string key(text::trim(s.substr(0, eq)));
    const std::string_view value = text::trim(s.substr(eq + 1));
    const std::string path = section + "." + key;

    auto u64 = [&]() {
      std::uint64_t v = 0;
      if (!text::parse_u64(value, v)) throw SchemaError(path, "expected a non-negative integer");
      return v;
    };
    auto real = [&]() {
      double v = 0;
      if (!text::parse_double(value, v)) throw SchemaError(path, "expected a finite number");
      return v;
    };

    if (section == "experiment") {
      if (key == "kind") {
        bool ok = false;
        for (auto k : {ExperimentKind::kStationarity, ExperimentKind::kDelayProbe, ExperimentKind::kTauVsThreads,
                       ExperimentKind::kCoupledHamming, ExperimentKind::kBias, ExperimentKind::kVariance}) {
          if (value == to_string(k)) c.kind = k, ok = true;
        }
        if (!ok) throw SchemaError(path, "unknown experiment kind '" + std::string(value) + "'");
        have_kind = true;
      } else if (key == "seed") {
        c.seed = u64();
        have_seed = true;
      } else if (key == "runs") {
        c.runs = u64();
      } else if (key == "burn_in") {
        if (value == "theory") c.burn_in = BurnInRule::kTheory;
        else if (value == "experiment") c.burn_in = BurnInRule::kExperiment;
        else if (value == "explicit") c.burn_in = BurnInRule::kExplicit;
        else throw SchemaError(path, "expected theory, experiment or explicit");
      } else if (key == "steps") {
        c.steps = u64();
      } else if (key == "eps") {
        c.eps = real();
      } else if (key == "budget_multiplier") {
        c.budget_multiplier = real();
      } else if (key == "sizes") {
        c.sizes = detail::parse_size_list(value, path);
      } else if (key == "threads") {
        c.threads = detail::parse_size_list(value, path);
      } else if (key == "workers") {
        c.workers = u64();
      } else if (key == "max_moment") {
        c.max_moment = u64();
      } else if (key == "thin") {
        c.thin = u64();
      } else if (key == "reads_per_point") {
        c.reads_per_point = u64();
      } else if (key == "repeats") {
        c.repeats = u64();
      } else if (key == "tolerance") {
        c.tolerance = real();
      } else if (key == "function") {
        if (value == "complete_bilinear") c.function = FunctionKind::kCompleteBilinear;
        else if (value == "linear_sum") c.function = FunctionKind::kLinearSum;
        else throw SchemaError(path, "expected complete_bilinear or linear_sum");
      } else if (key == "output") {
        c.output = std::string(value);
      } else {
        throw SchemaError(path, "unknown key");
      }
    } else if (section == "model") {
      if (key == "type") {
        if (!parse_model_type(value, c.model.type)) throw SchemaError(path, "unknown model type");
      } else if (key == "n" || key == "k") {
        c.model.size = u64();
      } else if (key == "alpha") {
        c.model.alpha = real();
      } else if (key == "edge" || key == "field") {
        const auto tok = text::split_ws(value);
        const std::size_t arity = key == "edge" ? 3 : 2;
        std::uint64_t a = 0, b = 0;
        double w = 0;
        if (tok.size() != arity || !text::parse_u64(tok[0], a) ||
            (arity == 3 && !text::parse_u64(tok[1], b)) || !text::parse_double(tok.back(), w)) {
          throw SchemaError(path, key == "edge" ? "expected 'u v weight'" : "expected 'node weight'");
        }
        if (key == "edge") c.model.edges.push_back({NodeId(a), NodeId(b), w});
        else c.model.fields.push_back({NodeId(a), w});
      } else {
        throw SchemaError(path, "unknown key");
      }
    } else {
      if (key == "family") {
        if (value == "constant") c.delay.family = DelayModel::Family::kConstant;
        else if (value == "uniform") c.delay.family = DelayModel::Family::kUniformInt;
        else if (value == "geometric") c.delay.family = DelayModel::Family::kGeometric;
        else throw SchemaError(path, "expected constant, uniform or geometric");
      } else if (key == "value" || key == "tau") {
        c.delay.value = real();
      } else if (key == "cap") {
        c.delay.cap = static_cast<std::uint32_t>(u64());
      } else if (key == "shared") {
        if (value == "true") c.delay.shared = true;
        else if (value == "false") c.delay.shared = false;
        else throw SchemaError(path, "expected true or false");
      } else {
        throw SchemaError(path, "unknown key");
      }
    }
  }
  if (!have_kind) throw SchemaError("experiment.kind", "required");
  if (!have_seed) throw SchemaError("experiment.seed", "required");
  if (c.runs < 1) throw SchemaError("experiment.runs", "must be >= 1");
  if (c.repeats < 1) throw SchemaError("experiment.repeats", "must be >= 1");
  if (c.max_moment < 1) throw SchemaError("experiment.max_moment", "must be >= 1");
  if (!(c.budget_multiplier > 0)) throw SchemaError("experiment.budget_multiplier", "must be > 0");
  if (c.burn_in == BurnInRule::kTheory && !(c.eps > 0 && c.eps < 1)) {
    throw SchemaError("experiment.eps", "must lie in (0, 1)");
  }
  if (c.burn_in == BurnInRule::kExplicit && c.steps == 0) {
    throw SchemaError("experiment.steps", "explicit burn-in needs steps > 0");
  }
  if (!(c.delay.value >= 0)) throw SchemaError("delay.value", "must be >= 0");
  if (c.model.type == ModelType::kExplicit && !c.sizes.empty()) {
    throw SchemaError("experiment.sizes", "explicit models have a fixed size");
  }
  for (auto n : c.sizes) {
    if (c.model.type == ModelType::kTorusGrid) {
      const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
      if (k * k != n) throw SchemaError("experiment.sizes", "torus grid sizes must be perfect squares");
    }
  }
  return c;
}

inline ExperimentConfig parse_config(const std::string& text_in) {
  std::istringstream is(text_in);
  return parse_config(is);
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  return parse_config(in);
}

/// A pass/fail flag with the formula and threshold it was computed from.
struct Check {
  std::string name;
  std::string formula;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunReport {
  ExperimentKind kind = ExperimentKind::kBias;
  Table results;
  std::vector<Table> plots;
  std::vector<Check> checks;
  std::map<std::string, std::string> metadata;
  bool deterministic = true;
  double seconds = 0.0;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }

  const Check* find_check(std::string_view name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

struct RunOptions {
  // Divides run, seed and sample counts; bias error bands widen by sqrt(scale).
  double scale = 1.0;
  // Gate and thread count for hardware experiments; worker count otherwise.
  std::optional<std::size_t> threads;
};

namespace detail {

inline std::vector<std::size_t> experiment_sizes(const ExperimentConfig& c) {
  if (!c.sizes.empty()) return c.sizes;
  return {c.model.node_count()};
}

inline IsingModel model_for_size(const ExperimentConfig& c, std::size_t n) {
  ModelSpec spec = c.model;
  if (!c.sizes.empty()) {
    spec.size = spec.type == ModelType::kTorusGrid
                    ? static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))))
                    : n;
  }
  try {
    return build_model(spec);
  } catch (const InvalidModelError& e) {
    throw SchemaError("model", e.what());
  }
}

inline std::uint64_t burn_in_steps(const ExperimentConfig& c, const IsingModel& model) {
  double base = 0;
  switch (c.burn_in) {
    case BurnInRule::kTheory:
      base = static_cast<double>(mixing_budget_theory(model.size(), dobrushin_alpha(model), c.eps));
      break;
    case BurnInRule::kExperiment: base = static_cast<double>(mixing_budget_experiment(model.size())); break;
    case BurnInRule::kExplicit: base = static_cast<double>(c.steps); break;
  }
  return static_cast<std::uint64_t>(std::ceil(base * c.budget_multiplier));
}

inline std::size_t scaled(std::size_t count, double scale, std::size_t floor_value = 2) {
  const auto v = static_cast<std::size_t>(std::ceil(static_cast<double>(count) / scale));
  return std::max(v, floor_value);
}

inline std::size_t workers_for(const ExperimentConfig& c, const RunOptions& opt) {
  if (opt.threads) return std::max<std::size_t>(1, *opt.threads);
  return c.workers ? c.workers : default_workers();
}

inline MultilinearFunction build_function(FunctionKind f, std::size_t n) {
  return f == FunctionKind::kCompleteBilinear ? complete_bilinear(n) : linear_sum(n);
}

inline std::string fmt(double v) { return text::format_double(v); }

inline RunReport run_stationarity(const ExperimentConfig& c, const RunOptions& opt) {
  RunReport r;
  r.results = {"stationarity", {"n", "samples", "burn_in", "thin", "tv"}, {}};
  Table dist{"distribution", {"state", "exact", "empirical"}, {}};
  for (std::size_t n : experiment_sizes(c)) {
    const auto model = model_for_size(c, n);
    const auto exact = exact_distribution(model);
    const std::uint64_t burn = burn_in_steps(c, model);
    const std::uint64_t thin = c.thin ? c.thin : model.size();
    const std::size_t samples = scaled(c.runs, opt.scale);
    RngStream rng(c.seed, model.size());
    const auto emp = normalize_histogram(thinned_histogram(model, burn, thin, samples, rng));
    const double tv = total_variation(exact, emp);
    r.results.rows.push_back({double(model.size()), double(samples), double(burn), double(thin), tv});
    for (std::size_t s = 0; s < exact.size(); ++s) dist.rows.push_back({double(s), exact[s], emp[s]});
    r.checks.push_back({"tv_to_oracle_n" + std::to_string(model.size()), "TV(empirical, exact) <= tolerance", tv,
                        c.tolerance, tv <= c.tolerance});
  }
  r.plots.push_back(std::move(dist));
  return r;
}

struct DelayPoint {
  double mean = 0;
  double stderr_mean = 0;
  std::size_t reads = 0;
};

// Mean logged delay over `repeats` hardware runs, each performing about
// `reads` neighbor reads. About 2e5 reads per run are logged.
inline DelayPoint probe_delay(const IsingModel& model, std::size_t threads, std::uint64_t reads,
                              std::size_t repeats, std::uint64_t seed) {
  const std::size_t deg = std::max<std::size_t>(1, model.neighbors(0).size());
  std::vector<double> means;
  DelayPoint p;
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    HardwareOptions o;
    o.threads = threads;
    o.seed = seed + 7919 * rep;
    o.total_writes = std::max<std::uint64_t>(reads / deg, 1);
    o.log_stride = static_cast<std::uint32_t>(std::max<std::uint64_t>(1, reads / 200000));
    const auto run = run_hogwild_hardware(model, o);
    means.push_back(estimate_tau(run.log));
    p.reads += run.log.size();
  }
  double sum = 0;
  for (double m : means) sum += m;
  p.mean = sum / static_cast<double>(means.size());
  if (means.size() > 1) p.stderr_mean = summarize(means, EstimateMethod::kHogwildHardware).std_error;
  return p;
}

inline RunReport run_delay_probe(const ExperimentConfig& c, const RunOptions& opt) {
  if (!opt.threads) throw InvalidArgumentError("hardware delay probes require an explicit --threads");
  RunReport r;
  r.deterministic = false;
  r.results = {"delay_vs_n", {"n", "threads", "mean_delay", "delay_stderr", "reads"}, {}};
  const auto sizes = experiment_sizes(c);
  const std::uint64_t reads = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(c.reads_per_point / opt.scale));
  std::vector<double> xs, ys;
  for (std::size_t n : sizes) {
    const auto model = model_for_size(c, n);
    const auto p = probe_delay(model, *opt.threads, reads, c.repeats, c.seed + n);
    r.results.rows.push_back({double(n), double(*opt.threads), p.mean, p.stderr_mean, double(p.reads)});
    xs.push_back(double(n));
    ys.push_back(p.mean);
  }
  if (xs.size() >= 2) {
    const auto fit = fit_line(xs, ys);
    double level = 0;
    for (double y : ys) level += y;
    level /= static_cast<double>(ys.size());
    const double span = *std::max_element(xs.begin(), xs.end()) - *std::min_element(xs.begin(), xs.end());
    r.metadata["slope"] = fmt(fit.slope);
    r.metadata["mean_level"] = fmt(level);
    const double drift = std::abs(fit.slope) * span;
    r.checks.push_back({"delay_flat_in_n", "|slope| * (n_max - n_min) < tolerance * mean delay", drift,
                        c.tolerance * level, drift < c.tolerance * level});
  }
  return r;
}

inline RunReport run_tau_vs_threads(const ExperimentConfig& c, const RunOptions& opt) {
  if (!opt.threads) throw InvalidArgumentError("hardware delay probes require an explicit --threads");
  if (c.threads.empty()) throw SchemaError("experiment.threads", "tau-vs-threads needs a thread list");
  RunReport r;
  r.deterministic = false;
  r.results = {"tau_vs_threads", {"threads", "mean_delay"}, {}};
  const auto sizes = experiment_sizes(c);
  const std::uint64_t reads = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(c.reads_per_point / opt.scale));
  std::vector<double> xs, ys;
  for (std::size_t t : c.threads) {
    double sum = 0;
    for (std::size_t n : sizes) {
      sum += probe_delay(model_for_size(c, n), t, reads, c.repeats, c.seed + 1000003 * t + n).mean;
    }
    const double mean = sum / static_cast<double>(sizes.size());
    r.results.rows.push_back({double(t), mean});
    xs.push_back(double(t));
    ys.push_back(mean);
  }
  if (xs.size() >= 2) {
    const auto fit = fit_line(xs, ys);
    r.metadata["slope"] = fmt(fit.slope);
    r.metadata["intercept"] = fmt(fit.intercept);
    r.checks.push_back({"delay_linear_in_threads", "R^2 of least-squares line >= 0.9", fit.r_squared, 0.9,
                        fit.r_squared >= 0.9});
  }
  return r;
}

inline RunReport run_coupled_hamming(const ExperimentConfig& c, const RunOptions& opt) {
  RunReport r;
  const DelayModel dm = c.delay.build();
  const double tau = dm.tau_bound();
  const std::size_t D = c.max_moment;
  r.results.name = "coupled_hamming";
  r.results.columns = {"n", "alpha", "tau", "seeds", "steps", "mean_hamming", "mean_hamming_stderr"};
  for (std::size_t k = 2; k <= D; ++k) {
    r.results.columns.push_back("moment_" + std::to_string(k));
    r.results.columns.push_back("moment_" + std::to_string(k) + "_stderr");
  }
  r.results.columns.insert(r.results.columns.end(), {"bound_ln", "bound_log2"});
  const std::size_t seeds = scaled(c.runs, opt.scale);
  const std::size_t workers = workers_for(c, opt);
  std::vector<double> lnln, lnm2, w;
  for (std::size_t n : experiment_sizes(c)) {
    const auto model = model_for_size(c, n);
    const double alpha = dobrushin_alpha(model);
    const std::uint64_t steps = burn_in_steps(c, model);
    const std::uint64_t stride = std::max<std::uint64_t>(1, steps / 1000);
    std::vector<std::vector<double>> moments(seeds);
    std::vector<std::vector<double>> traj(seeds);
    const RngStream base(c.seed, n);
    parallel_for(seeds, workers, [&](std::size_t s) {
      auto rng = base.substream(s);
      const auto st = run_coupled(model, steps, dm, D, rng);
      moments[s] = st.moments_window;
      for (std::uint64_t t = stride; t <= steps; t += stride) traj[s].push_back(st.hamming[t - 1]);
    });
    std::vector<double> row{double(n), alpha, tau, double(seeds), double(steps)};
    std::vector<EstimateReport> per_moment(D + 1);
    for (std::size_t k = 1; k <= D; ++k) {
      std::vector<double> v(seeds);
      for (std::size_t s = 0; s < seeds; ++s) v[s] = moments[s][k];
      per_moment[k] = summarize(v, EstimateMethod::kHogwildSimulated);
      row.push_back(per_moment[k].mean);
      row.push_back(per_moment[k].std_error);
    }
    const double bound = hamming_bound_theory(tau, alpha, double(n));
    row.push_back(bound);
    row.push_back(hamming_bound_theory_log2(tau, alpha, double(n)));
    r.results.rows.push_back(std::move(row));
    r.checks.push_back({"hamming_bound_n" + std::to_string(n), "E[d_H] <= tau*alpha*ln(n)/(1-alpha)",
                        per_moment[1].mean, bound, per_moment[1].mean <= bound});
    if (D >= 2 && per_moment[2].mean > 0) {
      lnln.push_back(std::log(std::log(double(n))));
      lnm2.push_back(std::log(per_moment[2].mean));
      const double se = per_moment[2].std_error / per_moment[2].mean;
      w.push_back(se > 0 ? 1.0 / (se * se) : 1.0);
    }

    Table t{"hamming_trajectory_n" + std::to_string(n), {"step", "hamming"}, {}};
    for (std::size_t k = 2; k <= D; ++k) t.columns.push_back("hamming_pow" + std::to_string(k));
    for (std::size_t q = 0; q < traj.front().size(); ++q) {
      std::vector<double> pt{double((q + 1) * stride)};
      for (std::size_t k = 1; k <= D; ++k) {
        double sum = 0;
        for (std::size_t s = 0; s < seeds; ++s) sum += std::pow(traj[s][q], double(k));
        pt.push_back(sum / double(seeds));
      }
      t.rows.push_back(std::move(pt));
    }
    r.plots.push_back(std::move(t));
  }
  if (lnln.size() >= 3) {
    const auto fit = fit_line(lnln, lnm2, w);
    const double upper = fit.slope + 1.645 * fit.slope_stderr;
    r.metadata["moment2_loglog_slope"] = fmt(fit.slope);
    r.metadata["moment2_loglog_slope_stderr"] = fmt(fit.slope_stderr);
    r.checks.push_back({"moment2_polylog_growth",
                        "slope of ln E[d_H^2] vs ln ln n, plus 1.645 stderr, <= 2.5", upper, 2.5, upper <= 2.5});
  }
  return r;
}

inline RunReport run_bias(const ExperimentConfig& c, const RunOptions& opt) {
  RunReport r;
  const DelayModel dm = c.delay.build();
  r.results = {"bias", {"n", "seq_mean", "seq_stderr", "hog_mean", "hog_stderr", "bias", "errbar"}, {}};
  Table plot{"bias_errorbars", {"n", "seq_mean", "hog_mean", "errbar_low", "errbar_high"}, {}};
  Table ratio{"bias_ratio", {"n", "seq_stdev", "ratio", "ratio_stderr", "bound_ln"}, {}};
  const double band = std::sqrt(std::max(1.0, opt.scale));
  const std::size_t runs = scaled(c.runs, opt.scale);
  std::vector<double> ns, ratios, ratio_se;
  for (std::size_t n : experiment_sizes(c)) {
    const auto model = model_for_size(c, n);
    const auto f = build_function(c.function, model.size());
    BiasExperiment ex{runs, runs, burn_in_steps(c, model), workers_for(c, opt)};
    const auto b = estimate_bias(model, f, dm, ex, RngStream(c.seed, n));
    const double sqrt_n = std::sqrt(double(n));
    const double errbar = band * 3.0 * b.sequential.stdev / sqrt_n + 3.0 * b.combined_stderr;
    r.results.rows.push_back({double(n), b.sequential.mean, b.sequential.std_error, b.hogwild.mean,
                              b.hogwild.std_error, b.bias, errbar});
    plot.rows.push_back({double(n), b.sequential.mean, b.hogwild.mean, b.sequential.mean - errbar,
                         b.sequential.mean + errbar});
    const double rt = b.sequential.stdev > 0 ? b.bias / b.sequential.stdev : 0.0;
    const double rt_se = b.sequential.stdev > 0 ? b.combined_stderr / b.sequential.stdev : 0.0;
    const double bound = bound_bias_degree_d(f.a_inf(), f.degree(), dm.tau_bound(), dobrushin_alpha(model), double(n));
    ratio.rows.push_back({double(n), b.sequential.stdev, rt, rt_se, bound});
    ns.push_back(double(n));
    ratios.push_back(rt);
    ratio_se.push_back(rt_se);
    r.checks.push_back({"bias_within_errbar_n" + std::to_string(n),
                        "|seq_mean - hog_mean| <= 3*sqrt(scale)*seq_stdev/sqrt(n) + 3*combined_stderr", b.bias,
                        errbar, b.bias <= errbar});
    if (c.function == FunctionKind::kLinearSum) {
      const double lim = 3.0 * b.hogwild.std_error;
      r.checks.push_back({"linear_unbiased_n" + std::to_string(n), "|hog_mean| <= 3*hog_stderr",
                          std::abs(b.hogwild.mean), lim, std::abs(b.hogwild.mean) <= lim});
    }
  }
  if (c.function == FunctionKind::kCompleteBilinear && ns.size() >= 3) {
    // An inversion counts only when the ratio rises by more than twice the
    // noise of the two ratios involved.
    double inversions = 0;
    for (std::size_t k = 0; k + 1 < ratios.size(); ++k) {
      const double noise = std::hypot(ratio_se[k], ratio_se[k + 1]);
      if (ratios[k + 1] - ratios[k] > 2.0 * noise) inversions += 1;
    }
    r.metadata["ratio_spearman"] = fmt(spearman(ns, ratios));
    r.checks.push_back({"bias_ratio_nonincreasing", "significant increases of bias/stdev in n <= 1", inversions, 1.0,
                        inversions <= 1.0});
  }
  r.plots.push_back(std::move(plot));
  r.plots.push_back(std::move(ratio));
  return r;
}

inline RunReport run_variance(const ExperimentConfig& c, const RunOptions& opt) {
  RunReport r;
  const DelayModel dm = c.delay.build();
  r.results = {"variance", {"n", "runs", "variance", "variance_over_n2"}, {}};
  const std::size_t runs = scaled(c.runs, opt.scale);
  std::vector<double> normalized;
  for (std::size_t n : experiment_sizes(c)) {
    const auto model = model_for_size(c, n);
    const auto f = build_function(c.function, model.size());
    const auto samples = hogwild_batch(model, runs, burn_in_steps(c, model), dm,
                                       RngStream(c.seed, n).substream(kHogwildBatchTag), workers_for(c, opt));
    const double var = empirical_variance(f, samples);
    const double nn = double(n);
    r.results.rows.push_back({nn, double(runs), var, var / (nn * nn)});
    normalized.push_back(var / (nn * nn));
  }
  if (normalized.size() >= 2) {
    const auto [lo, hi] = std::minmax_element(normalized.begin(), normalized.end());
    const double spread = *lo > 0 ? *hi / *lo : INFINITY;
    r.checks.push_back({"variance_envelope", "max(var/n^2) / min(var/n^2) < tolerance", spread, c.tolerance,
                        spread < c.tolerance});
  }
  return r;
}

}  // namespace detail

/// Runs one experiment. Simulated kinds are deterministic given the config;
/// hardware kinds need opt.threads and are flagged nondeterministic.
inline RunReport run_experiment(const ExperimentConfig& c, const RunOptions& opt = {}) {
  if (!(opt.scale >= 1.0)) throw InvalidArgumentError("scale must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  RunReport r;
  switch (c.kind) {
    case ExperimentKind::kStationarity: r = detail::run_stationarity(c, opt); break;
    case ExperimentKind::kDelayProbe: r = detail::run_delay_probe(c, opt); break;
    case ExperimentKind::kTauVsThreads: r = detail::run_tau_vs_threads(c, opt); break;
    case ExperimentKind::kCoupledHamming: r = detail::run_coupled_hamming(c, opt); break;
    case ExperimentKind::kBias: r = detail::run_bias(c, opt); break;
    case ExperimentKind::kVariance: r = detail::run_variance(c, opt); break;
  }
  r.kind = c.kind;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.metadata["kind"] = std::string(to_string(c.kind));
  r.metadata["seed"] = std::to_string(c.seed);
  r.metadata["scale"] = text::format_double(opt.scale);
  r.metadata["model"] = std::string(to_string(c.model.type));
  r.metadata["alpha"] = text::format_double(c.model.alpha);
  return r;
}

inline void write_table_csv(std::ostream& out, const Table& t) {
  for (std::size_t k = 0; k < t.columns.size(); ++k) out << (k ? "," : "") << t.columns[k];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << text::format_double(row[k]);
    out << '\n';
  }
}

/// Writes the results table and every plot table as "<name>.csv" under
/// `dir`. Returns the paths written.
inline std::vector<std::string> emit_plotdata(const RunReport& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  std::vector<std::string> paths;
  auto emit = [&](const Table& t) {
    const auto path = (std::filesystem::path(dir) / (t.name + ".csv")).string();
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    write_table_csv(out, t);
    if (!out) throw Error("write failed for '" + path + "'");
    paths.push_back(path);
  };
  emit(report.results);
  for (const auto& t : report.plots) emit(t);
  return paths;
}

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(r.kind));
  j["deterministic"] = r.deterministic;
  j["seconds"] = r.seconds;
  j["passed"] = r.passed();
  j["metadata"] = r.metadata;
  auto& rows = j["results"] = nlohmann::json::array();
  for (const auto& row : r.results.rows) {
    nlohmann::json o;
    for (std::size_t k = 0; k < row.size() && k < r.results.columns.size(); ++k) o[r.results.columns[k]] = row[k];
    rows.push_back(std::move(o));
  }
  auto& checks = j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"formula", c.formula},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"passed", c.passed}});
  }
  return j;
}

inline void write_summary_json(const RunReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << to_json(r).dump(2) << '\n';
}

}  // namespace hogwild
