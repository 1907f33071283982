#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hogwild_gibbs/async.hpp"
#include "hogwild_gibbs/multilinear.hpp"
#include "hogwild_gibbs/sampler.hpp"
#include "test_support.hpp"

using namespace hogwild;

TEST(DelayModel, ConstantAndShared) {
  RngStream rng(1, 0);
  const std::vector<NodeId> nodes{0, 1, 2, 3, 4};
  for (auto d : sample_delays(DelayModel::constant(3), nodes, rng)) EXPECT_EQ(d, 3u);
  for (auto d : sample_delays(DelayModel::constant(0), nodes, rng)) EXPECT_EQ(d, 0u);
  for (int k = 0; k < 100; ++k) {
    const auto ds = sample_delays(DelayModel::geometric_with_mean(4, true), nodes, rng);
    for (auto d : ds) ASSERT_EQ(d, ds[0]);
  }
}

TEST(DelayModel, UniformIntRangeAndMean) {
  RngStream rng(2, 0);
  const auto dm = DelayModel::uniform_int(6);
  std::vector<int> hits(7, 0);
  double sum = 0;
  const int N = 70000;
  for (int k = 0; k < N; ++k) {
    const auto d = dm.draw(rng);
    ASSERT_LE(d, 6u);
    ++hits[d];
    sum += d;
  }
  for (int h : hits) EXPECT_GT(h, 0);
  EXPECT_NEAR(sum / N, dm.mean(), 3 * std::sqrt(4.0 / N));
  EXPECT_EQ(dm.mean(), 3.0);
}

TEST(DelayModel, TruncatedGeometricMean) {
  const auto dm = DelayModel::geometric(0.25, 100);
  EXPECT_NEAR(dm.mean(), oracle::truncated_geometric_mean(0.25, 100), 1e-10);
  RngStream rng(3, 0);
  double sum = 0, sumsq = 0;
  const int N = 100000;
  for (int k = 0; k < N; ++k) {
    const double d = dm.draw(rng);
    ASSERT_LE(d, 100);
    sum += d;
    sumsq += d * d;
  }
  const double mean = sum / N, se = std::sqrt((sumsq / N - mean * mean) / N);
  EXPECT_NEAR(mean, dm.mean(), 3 * se);
}

TEST(DelayModel, GeometricDistributionShape) {
  // P(K = 0) = p and P(K = cap) = (1-p)^cap after clamping.
  const auto dm = DelayModel::geometric(0.5, 3);
  RngStream rng(4, 0);
  std::vector<int> c(4, 0);
  const int N = 200000;
  for (int k = 0; k < N; ++k) ++c[dm.draw(rng)];
  const double expect[] = {0.5, 0.25, 0.125, 0.125};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(c[k] / double(N), expect[k], 4 * std::sqrt(expect[k] / N));
}

TEST(DelayModel, GeometricWithMean) {
  const auto dm = DelayModel::geometric_with_mean(4);
  EXPECT_DOUBLE_EQ(dm.p(), 0.2);
  EXPECT_EQ(dm.max_delay(), 40u);
  EXPECT_DOUBLE_EQ(dm.tau_bound(), 4.0);
  EXPECT_LE(dm.mean(), dm.tau_bound());
  EXPECT_NEAR(dm.mean(), oracle::truncated_geometric_mean(0.2, 40), 1e-12);
  EXPECT_EQ(DelayModel::geometric_with_mean(0).max_delay(), 0u);
  EXPECT_THROW(DelayModel::geometric(0.0, 5), InvalidArgumentError);
  EXPECT_THROW(DelayModel::geometric_with_mean(-1), InvalidArgumentError);
}

TEST(VersionedTrace, ReadAtSemantics) {
  VersionedTrace tr(Configuration(std::vector<Spin>{1, 1}));
  tr.write(0, -1);  // step 1
  tr.write(1, -1);  // step 2
  tr.write(0, 1);   // step 3
  EXPECT_EQ(tr.step(), 3u);
  EXPECT_EQ(tr.read_at(0, 0), 1);
  EXPECT_EQ(tr.read_at(0, 1), -1);
  EXPECT_EQ(tr.read_at(0, 2), -1);
  EXPECT_EQ(tr.read_at(0, 3), 1);
  EXPECT_EQ(tr.read_at(1, 1), 1);
  EXPECT_EQ(tr.read_at(1, 2), -1);
  EXPECT_THROW(tr.read_at(0, 4), BoundsError);
  EXPECT_THROW(tr.read_at(2, 0), BoundsError);
  // Delays beyond the current step clamp to the initial value.
  EXPECT_EQ(tr.read_delayed(0, 3), 1);
  EXPECT_EQ(tr.read_delayed(0, 1000), 1);
  EXPECT_EQ(tr.read_delayed(0, 1), -1);
  EXPECT_EQ(tr.last_write(0), 3u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& h = tr.history(i);
    for (std::size_t k = 1; k < h.size(); ++k) EXPECT_LT(h[k - 1].step, h[k].step);
  }
}

TEST(VersionedTrace, PruningKeepsReachableReads) {
  RngStream rng(5, 0);
  const std::size_t n = 5;
  const std::uint64_t window = 7;
  VersionedTrace full(Configuration::uniform_random(n, rng));
  VersionedTrace pruned(full.current(), window);
  for (int t = 0; t < 3000; ++t) {
    const auto i = rng.index(n);
    const Spin v = rng.uniform() < 0.5 ? 1 : -1;
    full.write(i, v);
    pruned.write(i, v);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::uint32_t d = 0; d <= window; ++d) ASSERT_EQ(full.read_delayed(j, d), pruned.read_delayed(j, d));
    }
  }
  std::size_t kept = 0;
  for (std::size_t j = 0; j < n; ++j) kept += pruned.history(j).size();
  EXPECT_LT(kept, 3 * window + n);
}

TEST(DelayLog, CsvAndEstimate) {
  DelayLog log;
  EXPECT_THROW(estimate_tau(log), EmptyInputError);
  log.add(0, 1, 1);
  log.add(1, 2, 2);
  log.add(2, 0, 3);
  EXPECT_DOUBLE_EQ(estimate_tau(log), 2.0);
  std::ostringstream os;
  log.write_csv(os);
  EXPECT_EQ(os.str(), "write_index,node,delay\n0,1,1\n1,2,2\n2,0,3\n");
  DelayLog zeros;
  zeros.add(0, 0, 0);
  EXPECT_EQ(estimate_tau(zeros), 0.0);
}

TEST(Simulated, ZeroDelayIsSequential) {
  const auto m = build_torus_grid(3, 0.5);
  RngStream a(9, 0), b(9, 0);
  const auto seq = run_sequential(m, 20000, a).config;
  const auto hog = run_hogwild_simulated(m, 20000, DelayModel::constant(0), b).final;
  EXPECT_EQ(seq, hog);
}

TEST(Simulated, ConstantDelayLogIsExact) {
  const auto m = build_curie_weiss(10, 0.5);
  RngStream rng(10, 0);
  DelayLog log;
  HogwildOptions opt;
  opt.log = &log;
  run_hogwild_simulated(m, 500, DelayModel::constant(3), rng, opt);
  EXPECT_EQ(log.size(), 500u * 9);
  EXPECT_EQ(estimate_tau(log), 3.0);
}

TEST(Simulated, ZeroStepsAndDeterminism) {
  const auto m = build_curie_weiss(12, 0.5);
  const auto dm = DelayModel::geometric_with_mean(4);
  RngStream r(1, 1);
  const auto init = Configuration::uniform_random(12, r);
  RngStream a(3, 0), b(3, 0);
  EXPECT_EQ(run_hogwild_simulated(m, 0, dm, init, a).final, init);
  HogwildOptions full;
  full.full_history = true;
  const auto x = run_hogwild_simulated(m, 4000, dm, init, a, full);
  RngStream c(3, 0);
  (void)run_hogwild_simulated(m, 0, dm, init, c);
  const auto y = run_hogwild_simulated(m, 4000, dm, init, c, full);
  EXPECT_TRUE(x.trace == y.trace);
}

// Reference engine: full history, one delay drawn per neighbor read in
// neighbor order, clamped reads, threshold update.
Configuration naive_hogwild(const IsingModel& m, std::uint64_t steps, const DelayModel& dm, Configuration init,
                            RngStream& rng) {
  const std::size_t n = m.size();
  std::vector<std::vector<Spin>> hist(n);  // hist[i][t] = x_i after t writes
  for (std::size_t i = 0; i < n; ++i) hist[i].push_back(init[i]);
  RngStream delays = rng.substream(kDelayStreamTag);
  for (std::uint64_t t = 0; t < steps; ++t) {
    const std::size_t i = rng.index(n);
    const double u = rng.uniform();
    double h = m.node_weight(i);
    for (const auto& nb : m.neighbors(i)) {
      const std::uint64_t d = dm.draw(delays);
      const std::uint64_t s = d >= t ? 0 : t - d;
      h += nb.weight * hist[nb.node][s];
    }
    const Spin v = u < (1 + std::tanh(h)) / 2 ? 1 : -1;
    for (std::size_t j = 0; j < n; ++j) hist[j].push_back(j == i ? v : hist[j][t]);
  }
  std::vector<Spin> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = hist[j].back();
  return Configuration(out);
}

TEST(Simulated, LoggedRunMatchesReferenceEngine) {
  const auto m = build_torus_grid(4, 0.5);
  for (const auto& dm : {DelayModel::geometric_with_mean(4), DelayModel::uniform_int(5), DelayModel::constant(2)}) {
    RngStream r(11, 0);
    const auto init = Configuration::uniform_random(16, r);
    RngStream a(12, 0), b(12, 0);
    DelayLog log;
    HogwildOptions opt;
    opt.log = &log;
    const auto got = run_hogwild_simulated(m, 3000, dm, init, a, opt).final;
    EXPECT_EQ(got, naive_hogwild(m, 3000, dm, init, b));
  }
}

TEST(Simulated, LazyDrawsPreserveTheLaw) {
  // Same final-state law with and without drawing every read's delay.
  const auto m = build_curie_weiss(4, 0.5);
  const auto dm = DelayModel::uniform_int(6);
  std::vector<std::uint64_t> lazy(16, 0), eager(16, 0);
  const int R = 40000;
  for (int r = 0; r < R; ++r) {
    RngStream a(13, r), b(14, r);
    ++lazy[run_hogwild_simulated(m, 30, dm, a).final.index()];
    DelayLog log;
    HogwildOptions opt;
    opt.log = &log;
    ++eager[run_hogwild_simulated(m, 30, dm, b, opt).final.index()];
  }
  EXPECT_LE(total_variation(normalize_histogram(lazy), normalize_histogram(eager)), 0.02);
}

TEST(Simulated, DelaysIgnoreTheConfiguration) {
  const auto m = build_curie_weiss(15, 0.5);
  const auto dm = DelayModel::geometric_with_mean(3);
  RngStream r(15, 0);
  const auto init = Configuration::uniform_random(15, r);
  RngStream a(16, 0), b(16, 0);
  DelayLog la, lb;
  HogwildOptions oa, ob;
  oa.log = &la;
  ob.log = &lb;
  run_hogwild_simulated(m, 2000, dm, init, a, oa);
  run_hogwild_simulated(m, 2000, dm, init.negated(), b, ob);
  EXPECT_EQ(la, lb);
}

TEST(Simulated, SingleNodeMarginalIsFair) {
  const IsingModel m(Graph(1, {}), {});
  int plus = 0;
  const int R = 20000;
  for (int r = 0; r < R; ++r) {
    RngStream rng(17, r);
    plus += run_hogwild_simulated(m, 3, DelayModel::constant(5), rng).final[0] == 1;
  }
  EXPECT_NEAR(plus / double(R), 0.5, 4 * 0.5 / std::sqrt(R));
}

TEST(Simulated, DelayBeyondHistoryReadsInitialValues) {
  // With a huge constant delay every read sees the initial configuration.
  const auto m = build_curie_weiss(6, 0.5);
  RngStream r(18, 0);
  const auto init = Configuration::uniform_random(6, r);
  RngStream rng(19, 0), check(19, 0);
  VersionedTrace tr(init);
  auto delays = rng.substream(kDelayStreamTag);
  const auto dm = DelayModel::constant(1000000);
  for (int t = 0; t < 200; ++t) {
    const auto i = hogwild_step_simulated(m, tr, dm, rng, delays);
    const auto si = check.index(6);
    const double u = check.uniform();
    ASSERT_EQ(i, si);
    ASSERT_EQ(tr.current(i), threshold_spin(u, conditional(m, init, i).p_plus));
  }
}

TEST(Simulated, LinearStatisticIsUnbiased) {
  const auto m = build_curie_weiss(30, 0.5);
  const auto xs = hogwild_batch(m, 3000, mixing_budget_experiment(30), DelayModel::geometric_with_mean(4),
                                RngStream(20, 0));
  const auto f = linear_sum(30);
  double s = 0, ss = 0;
  for (const auto& x : xs) {
    const double v = f(x.spins());
    s += v;
    ss += v * v;
  }
  const double mean = s / xs.size(), se = std::sqrt((ss / xs.size() - mean * mean) / xs.size());
  EXPECT_LE(std::abs(mean), 3 * se);
}

TEST(Simulated, BatchIndependentOfWorkers) {
  const auto m = build_curie_weiss(20, 0.5);
  const auto dm = DelayModel::geometric_with_mean(2);
  EXPECT_EQ(hogwild_batch(m, 6, 200, dm, RngStream(21, 0), 1), hogwild_batch(m, 6, 200, dm, RngStream(21, 0), 4));
}
