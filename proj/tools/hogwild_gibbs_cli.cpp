#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "hogwild_gibbs/hogwild_gibbs.hpp"

namespace hg = hogwild;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  double scale = 1.0;
  std::string out;
};

// Built-in configurations mirroring the paper's experiment sizes.
hg::ExperimentConfig default_config(hg::ExperimentKind kind) {
  hg::ExperimentConfig c;
  c.kind = kind;
  c.model = {hg::ModelType::kCurieWeiss, 100, 0.5, {}, {}};
  switch (kind) {
    case hg::ExperimentKind::kStationarity:
      c.model.size = 8;
      c.runs = 100000;
      break;
    case hg::ExperimentKind::kDelayProbe:
      c.sizes = {100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
      c.tolerance = 0.2;
      break;
    case hg::ExperimentKind::kTauVsThreads:
      c.sizes = {100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
      c.threads = {2, 4, 8, 16};
      c.reads_per_point = 10000000;
      break;
    case hg::ExperimentKind::kCoupledHamming:
      c.sizes = {200};
      c.runs = 50;
      c.budget_multiplier = 10;
      break;
    case hg::ExperimentKind::kBias:
      c.sizes = {25, 100, 225, 400};
      break;
    case hg::ExperimentKind::kVariance:
      c.sizes = {50, 100, 200};
      c.runs = 1000;
      c.tolerance = 3;
      break;
  }
  return c;
}

hg::ExperimentConfig resolve_config(const GlobalFlags& g, hg::ExperimentKind kind, bool allow_threads_kind) {
  hg::ExperimentConfig c;
  if (!g.config.empty()) {
    c = hg::load_config_file(g.config);
    const bool ok = c.kind == kind || (allow_threads_kind && c.kind == hg::ExperimentKind::kTauVsThreads);
    if (!ok) {
      throw hg::SchemaError("experiment.kind", "config is a '" + std::string(hg::to_string(c.kind)) +
                                                   "' experiment, not '" + std::string(hg::to_string(kind)) + "'");
    }
  } else {
    if (!g.seed) throw hg::SchemaError("experiment.seed", "pass --seed or a --config with a seed");
    c = default_config(kind);
  }
  if (g.seed) c.seed = *g.seed;
  return c;
}

void print_report(const hg::RunReport& r) {
  hg::write_table_csv(std::cout, r.results);
  for (const auto& c : r.checks) {
    std::printf("%s %s: value=%s threshold=%s [%s]\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                hg::text::format_double(c.value).c_str(), hg::text::format_double(c.threshold).c_str(),
                c.formula.c_str());
  }
  if (!r.deterministic) std::printf("note: hardware timings are nondeterministic\n");
}

int run_kind(const GlobalFlags& g, hg::ExperimentKind kind, bool allow_threads_kind = false) {
  const auto cfg = resolve_config(g, kind, allow_threads_kind);
  hg::RunOptions opt;
  opt.scale = g.scale;
  opt.threads = g.threads;
  const auto report = hg::run_experiment(cfg, opt);
  const std::string dir = g.out.empty() ? cfg.output : g.out;
  hg::emit_plotdata(report, dir);
  hg::write_summary_json(report, (std::filesystem::path(dir) / "summary.json").string());
  print_report(report);
  return report.passed() ? 0 : 1;
}

hg::ModelSpec model_from(const GlobalFlags& g, const std::string& model_path) {
  if (!model_path.empty()) return hg::load_model_file(model_path);
  if (!g.config.empty()) return hg::load_config_file(g.config).model;
  throw hg::InvalidArgumentError("pass --model FILE or --config FILE");
}

int inspect(const GlobalFlags& g, const std::string& model_path) {
  const auto spec = model_from(g, model_path);
  const auto model = hg::build_model(spec);
  const double alpha = hg::dobrushin_alpha(model);
  std::printf("type: %s\n", std::string(hg::to_string(spec.type)).c_str());
  std::printf("n: %zu\n", model.size());
  std::printf("edges: %zu\n", model.graph().edges().size());
  std::printf("dobrushin_alpha: %s\n", hg::text::format_double(alpha).c_str());
  std::printf("dobrushin_condition: %s\n", alpha < 1.0 ? "holds" : "violated");
  if (alpha < 1.0) {
    std::printf("mixing_budget_theory(eps=0.05): %llu\n",
                static_cast<unsigned long long>(hg::mixing_budget_theory(model.size(), alpha, 0.05)));
  }
  std::printf("mixing_budget_experiment: %llu\n",
              static_cast<unsigned long long>(hg::mixing_budget_experiment(model.size())));
  return 0;
}

struct SampleFlags {
  std::string model;
  std::size_t runs = 100;
  std::uint64_t steps = 0;
  std::optional<double> tau;
};

int sample(const GlobalFlags& g, const SampleFlags& s) {
  if (!g.seed && g.config.empty()) throw hg::SchemaError("experiment.seed", "pass --seed");
  const auto spec = model_from(g, s.model);
  std::uint64_t seed = g.seed.value_or(0);
  if (!g.seed) seed = hg::load_config_file(g.config).seed;
  const auto model = hg::build_model(spec);
  const std::uint64_t steps = s.steps ? s.steps : hg::mixing_budget_experiment(model.size());
  const std::size_t runs = std::max<std::size_t>(1, static_cast<std::size_t>(s.runs / g.scale));
  const std::size_t workers = g.threads.value_or(hg::default_workers());
  const hg::RngStream rng(seed, 0);
  std::vector<hg::Configuration> samples;
  if (s.tau) {
    samples = hg::hogwild_batch(model, runs, steps, hg::DelayModel::geometric_with_mean(*s.tau), rng, workers);
  } else {
    samples = hg::sample_batch(model, runs, steps, rng, workers);
  }
  const std::string dir = g.out.empty() ? "." : g.out;
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / "samples.csv");
  out << "run,magnetization,bilinear\n";
  for (std::size_t r = 0; r < samples.size(); ++r) {
    long m = 0;
    for (auto v : samples[r].spins()) m += v;
    out << r << ',' << m << ',' << (m * m - static_cast<long>(model.size())) << '\n';
  }
  // Trajectory of run 0, replayed on the same stream.
  std::ofstream traj(std::filesystem::path(dir) / "trajectory.csv");
  hg::TrajectoryCsv csv(traj);
  auto stream = rng.substream(0);
  if (!s.tau) hg::run_sequential(model, steps, stream, csv.observer());
  std::printf("wrote %zu samples of %llu steps to %s\n", samples.size(), static_cast<unsigned long long>(steps),
              dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HOGWILD! Gibbs sampling experiments on Ising models"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--config", g.config, "Experiment config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed override");
  app.add_option("--threads", g.threads, "Hardware thread count (required for delay probes); worker count otherwise")
      ->check(CLI::PositiveNumber);
  app.add_option("--scale", g.scale, "Divide run counts by this factor")->check(CLI::Range(1.0, 1e9));
  app.add_option("--out", g.out, "Output directory");

  auto* model_cmd = app.add_subcommand("model", "Model utilities");
  model_cmd->require_subcommand(1);
  std::string model_path;
  auto* inspect_cmd = model_cmd->add_subcommand("inspect", "Print n, edge count and Dobrushin alpha");
  inspect_cmd->add_option("--model", model_path, "Model description file")->check(CLI::ExistingFile);

  SampleFlags sf;
  auto* sample_cmd = app.add_subcommand("sample", "Draw independent restarts and write samples.csv");
  sample_cmd->add_option("--model", sf.model, "Model description file")->check(CLI::ExistingFile);
  sample_cmd->add_option("--runs", sf.runs, "Number of restarts");
  sample_cmd->add_option("--steps", sf.steps, "Steps per restart (default 10 n log2 n)");
  sample_cmd->add_option("--tau", sf.tau, "Use simulated HOGWILD! with geometric delays of this mean");

  auto* probe_cmd = app.add_subcommand("delay-probe", "Hardware delay measurements (delay-probe or tau-vs-threads)");
  auto* couple_cmd = app.add_subcommand("couple", "Coupled sequential/HOGWILD! Hamming study");
  auto* bias_cmd = app.add_subcommand("bias", "Bias of a function under HOGWILD! with error bars");
  auto* variance_cmd = app.add_subcommand("variance", "Variance envelope of a function under HOGWILD!");
  auto* stationarity_cmd = app.add_subcommand("stationarity", "TV distance of the sequential sampler to the oracle");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*inspect_cmd) return inspect(g, model_path);
    if (*sample_cmd) return sample(g, sf);
    if (*probe_cmd) return run_kind(g, hg::ExperimentKind::kDelayProbe, true);
    if (*couple_cmd) return run_kind(g, hg::ExperimentKind::kCoupledHamming);
    if (*bias_cmd) return run_kind(g, hg::ExperimentKind::kBias);
    if (*variance_cmd) return run_kind(g, hg::ExperimentKind::kVariance);
    if (*stationarity_cmd) return run_kind(g, hg::ExperimentKind::kStationarity);
  } catch (const hg::SchemaError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
