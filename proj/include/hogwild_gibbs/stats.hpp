#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "async.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "multilinear.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace hogwild {

enum class EstimateMethod { kSequential, kHogwildSimulated, kHogwildHardware, kExact };

inline std::string_view to_string(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::kSequential: return "sequential";
    case EstimateMethod::kHogwildSimulated: return "hogwild-sim";
    case EstimateMethod::kHogwildHardware: return "hogwild-hw";
    case EstimateMethod::kExact: return "exact";
  }
  return "?";
}

struct EstimateReport {
  double mean = 0.0;
  double std_error = 0.0;
  double stdev = 0.0;  // sample standard deviation
  std::size_t count = 0;
  EstimateMethod method = EstimateMethod::kSequential;
};

inline std::vector<double> evaluate_all(const MultilinearFunction& f,
                                        const std::vector<Configuration>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& x : samples) out.push_back(f(x.spins()));
  return out;
}

// Mean, unbiased sample stdev and stdev/sqrt(count).
inline EstimateReport summarize(std::span<const double> values, EstimateMethod method) {
  if (values.size() < 2) throw InsufficientDataError("need at least 2 samples");
  long double sum = 0;
  for (double v : values) sum += v;
  const long double mean = sum / values.size();
  long double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = static_cast<double>(ss / (values.size() - 1));
  EstimateReport r;
  r.mean = static_cast<double>(mean);
  r.stdev = std::sqrt(var);
  r.std_error = r.stdev / std::sqrt(static_cast<double>(values.size()));
  r.count = values.size();
  r.method = method;
  return r;
}

inline EstimateReport estimate_mean(const MultilinearFunction& f,
                                    const std::vector<Configuration>& samples,
                                    EstimateMethod method = EstimateMethod::kSequential) {
  if (samples.size() < 2) throw InsufficientDataError("need at least 2 samples");
  const auto values = evaluate_all(f, samples);
  return summarize(values, method);
}

// Unbiased sample variance of f over the samples.
inline double empirical_variance(const MultilinearFunction& f, const std::vector<Configuration>& samples) {
  const auto r = estimate_mean(f, samples);
  return r.stdev * r.stdev;
}

inline double exact_expectation(const IsingModel& model, const MultilinearFunction& f,
                                std::size_t limit = kDefaultEnumerationLimit) {
  const auto probs = exact_distribution(model, limit);
  const std::size_t n = model.size();
  long double e = 0;
  for (std::uint64_t s = 0; s < probs.size(); ++s) {
    e += probs[s] * f(Configuration::from_index(s, n).spins());
  }
  return static_cast<double>(e);
}

struct BiasExperiment {
  std::size_t sequential_runs = 5000;
  std::size_t hogwild_runs = 5000;
  std::uint64_t steps = 0;  // per run
  std::size_t workers = 1;
};

struct BiasReport {
  EstimateReport sequential;
  EstimateReport hogwild;
  double bias = 0.0;             // |mean_seq - mean_hog|
  double combined_stderr = 0.0;  // sqrt(se_seq^2 + se_hog^2)
};

/// Compares f between independent sequential restarts and simulated
/// HOGWILD! restarts of the same length. The two batches use the
/// substreams kSequentialBatchTag and kHogwildBatchTag of `rng`.
inline BiasReport estimate_bias(const IsingModel& model, const MultilinearFunction& f,
                                const DelayModel& dm, const BiasExperiment& sizes,
                                const RngStream& rng) {
  if (sizes.sequential_runs < 2 || sizes.hogwild_runs < 2) {
    throw InsufficientDataError("bias estimation needs at least 2 runs per sampler");
  }
  const auto seq = sample_batch(model, sizes.sequential_runs, sizes.steps,
                                rng.substream(kSequentialBatchTag), sizes.workers);
  const auto hog = hogwild_batch(model, sizes.hogwild_runs, sizes.steps, dm,
                                 rng.substream(kHogwildBatchTag), sizes.workers);
  BiasReport r;
  r.sequential = estimate_mean(f, seq, EstimateMethod::kSequential);
  r.hogwild = estimate_mean(f, hog, EstimateMethod::kHogwildSimulated);
  r.bias = std::abs(r.sequential.mean - r.hogwild.mean);
  r.combined_stderr = std::hypot(r.sequential.std_error, r.hogwild.std_error);
  return r;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line y = intercept + slope·x. With weights w_k the fit
/// minimizes Σ w_k (y_k - line)^2 and slope_stderr is sqrt(1/Σ w_k (x_k - x̄)^2),
/// the standard error when w_k = 1/var(y_k). Unweighted fits estimate the
/// residual variance (needs 3+ points for a stderr; 2 points give 0).
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y,
                          std::span<const double> w = {}) {
  if (x.size() != y.size()) throw DimensionError("x and y differ in length");
  if (!w.empty() && w.size() != x.size()) throw DimensionError("weights differ in length");
  if (x.size() < 2) throw InsufficientDataError("line fit needs at least 2 points");
  const std::size_t m = x.size();
  auto weight = [&](std::size_t k) { return w.empty() ? 1.0 : w[k]; };
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    sw += weight(k);
    sx += weight(k) * x[k];
    sy += weight(k) * y[k];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    sxx += weight(k) * (x[k] - mx) * (x[k] - mx);
    sxy += weight(k) * (x[k] - mx) * (y[k] - my);
    syy += weight(k) * (y[k] - my) * (y[k] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgumentError("line fit needs at least two distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ss_res = std::max(0.0, syy - f.slope * sxy);
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  if (!w.empty()) {
    f.slope_stderr = std::sqrt(1.0 / sxx);
  } else if (m > 2) {
    f.slope_stderr = std::sqrt(ss_res / static_cast<double>(m - 2) / sxx);
  }
  return f;
}

// Spearman rank correlation; ties get their average rank.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("x and y differ in length");
  if (x.size() < 2) throw InsufficientDataError("rank correlation needs at least 2 points");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < order.size();) {
      std::size_t m = k;
      while (m < order.size() && v[order[m]] == v[order[k]]) ++m;
      for (std::size_t q = k; q < m; ++q) r[order[q]] = 0.5 * static_cast<double>(k + m - 1);
      k = m;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

}  // namespace hogwild
