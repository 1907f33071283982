#include <gtest/gtest.h>

#include <cmath>

#include "hogwild_gibbs/model.hpp"
#include "test_support.hpp"

using namespace hogwild;

namespace {

IsingModel two_node(double w) { return IsingModel(Graph(2, {{0, 1}}), {w}); }

IsingModel random_model(std::size_t n, double edge_prob, bool with_field, RngStream& rng) {
  std::vector<Edge> edges;
  std::vector<double> w;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (rng.uniform() < edge_prob) {
        edges.push_back({u, v});
        w.push_back(rng.uniform() * 1.2 - 0.6);
      }
    }
  }
  std::vector<double> f(n, 0.0);
  if (with_field) {
    for (auto& x : f) x = rng.uniform() - 0.5;
  }
  return IsingModel(Graph(n, edges), w, f);
}

}  // namespace

TEST(CurieWeiss, WeightsAndEdgeCount) {
  const auto m = build_curie_weiss(100, 0.5);
  EXPECT_EQ(m.graph().edges().size(), 4950u);
  for (double w : m.edge_weights()) EXPECT_DOUBLE_EQ(w, 0.5 / 99);
  EXPECT_NEAR(m.edge_weights()[0], 0.0050505, 1e-7);
  EXPECT_TRUE(m.zero_field());
}

TEST(CurieWeiss, SmallCases) {
  const auto m2 = build_curie_weiss(2, 0.5);
  ASSERT_EQ(m2.graph().edges().size(), 1u);
  EXPECT_DOUBLE_EQ(m2.edge_weights()[0], 0.5);
  const auto m4 = build_curie_weiss(4, 0.3);
  ASSERT_EQ(m4.graph().edges().size(), 6u);
  for (double w : m4.edge_weights()) EXPECT_NEAR(w, 0.1, 1e-15);
  EXPECT_THROW(build_curie_weiss(1, 0.5), InvalidModelError);
}

TEST(TorusGrid, StructureForK3) {
  const auto m = build_torus_grid(3, 0.5);
  EXPECT_EQ(m.size(), 9u);
  EXPECT_EQ(m.graph().edges().size(), 18u);
  for (double w : m.edge_weights()) EXPECT_DOUBLE_EQ(w, 0.125);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(m.graph().degree(i), 4u);
}

TEST(TorusGrid, EdgeCountIsTwoKSquared) {
  for (std::size_t k : {3, 4, 10, 20}) {
    const auto m = build_torus_grid(k, 0.5);
    EXPECT_EQ(m.size(), k * k);
    EXPECT_EQ(m.graph().edges().size(), 2 * k * k);
  }
  EXPECT_THROW(build_torus_grid(2, 0.5), InvalidModelError);
}

TEST(TorusGrid, NeighborsWrapAround) {
  const auto m = build_torus_grid(4, 0.5);
  // node (0,0) = 0 touches (0,1)=1, (0,3)=3, (1,0)=4, (3,0)=12
  std::vector<NodeId> nb;
  for (const auto& x : m.neighbors(0)) nb.push_back(x.node);
  EXPECT_EQ(nb, (std::vector<NodeId>{1, 3, 4, 12}));
}

TEST(Graph, RejectsInvalidEdges) {
  EXPECT_THROW(Graph(3, {{0, 0}}), InvalidModelError);
  EXPECT_THROW(Graph(3, {{0, 1}, {1, 0}}), InvalidModelError);
  EXPECT_THROW(Graph(3, {{0, 3}}), InvalidModelError);
  EXPECT_THROW(Graph(0, {}), InvalidModelError);
}

TEST(IsingModel, RejectsBadWeights) {
  EXPECT_THROW(IsingModel(Graph(2, {{0, 1}}), {}), InvalidModelError);
  EXPECT_THROW(IsingModel(Graph(2, {{0, 1}}), {NAN}), InvalidModelError);
  EXPECT_THROW(IsingModel(Graph(2, {{0, 1}}), {0.1}, {0.0, INFINITY}), InvalidModelError);
  EXPECT_FALSE(IsingModel(Graph(2, {{0, 1}}), {0.1}, {0.0, 0.2}).zero_field());
}

TEST(IsingModel, EdgeWeightLookupIsSymmetric) {
  const IsingModel m(Graph(3, {{2, 0}, {0, 1}}), {0.3, -0.2});
  EXPECT_DOUBLE_EQ(*m.edge_weight(0, 2), 0.3);
  EXPECT_DOUBLE_EQ(*m.edge_weight(2, 0), 0.3);
  EXPECT_DOUBLE_EQ(*m.edge_weight(1, 0), -0.2);
  EXPECT_FALSE(m.edge_weight(1, 2).has_value());
}

TEST(Configuration, ValidatesSpins) {
  EXPECT_THROW(Configuration(std::vector<Spin>{1, 0}), ValidationError);
  Configuration x(3);
  EXPECT_THROW(x.set(0, 2), ValidationError);
  EXPECT_THROW(x.at(3), BoundsError);
}

TEST(Configuration, IndexRoundTrip) {
  for (std::uint64_t s = 0; s < 64; ++s) {
    const auto x = Configuration::from_index(s, 6);
    EXPECT_EQ(x.index(), s);
    for (int i = 0; i < 6; ++i) EXPECT_EQ(x[i], oracle::spin(s, i));
  }
}

TEST(Conditional, Examples) {
  const IsingModel isolated(Graph(1, {}), {});
  EXPECT_DOUBLE_EQ(conditional(isolated, Configuration(1), 0).p_plus, 0.5);

  const IsingModel path(Graph(3, {{0, 1}, {1, 2}}), {0.125, 0.125});
  EXPECT_NEAR(conditional(path, Configuration(std::vector<Spin>{1, -1, 1}), 1).p_plus, 0.62246, 1e-5);
  EXPECT_NEAR(conditional(path, Configuration(std::vector<Spin>{1, 1, 1}), 1).p_plus,
              (1 + std::tanh(0.25)) / 2, 1e-15);
  EXPECT_DOUBLE_EQ(conditional(path, Configuration(std::vector<Spin>{1, 1, -1}), 1).p_plus, 0.5);
  EXPECT_THROW(conditional(path, Configuration(3), 3), BoundsError);
  EXPECT_THROW(conditional(path, Configuration(2), 0), DimensionError);
}

TEST(Conditional, MatchesEnumeratedJoint) {
  RngStream rng(123, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 6;
    const auto m = random_model(n, 0.6, trial % 2 == 1, rng);
    const auto p = oracle::joint(m);
    for (std::uint64_t s = 0; s < p.size(); ++s) {
      const auto x = Configuration::from_index(s, n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t plus = s | (std::uint64_t{1} << i), minus = s & ~(std::uint64_t{1} << i);
        const double exact = p[plus] / (p[plus] + p[minus]);
        ASSERT_NEAR(conditional(m, x, i).p_plus, exact, 1e-10);
        // Invariant to x_i's own value.
        ASSERT_EQ(conditional(m, x, i).p_plus,
                  conditional(m, Configuration::from_index(s ^ (std::uint64_t{1} << i), n), i).p_plus);
      }
    }
  }
}

TEST(Influence, Examples) {
  const auto grid = build_torus_grid(3, 0.5);
  EXPECT_NEAR(influence(grid, 1, 0), 0.124353, 1e-6);
  EXPECT_NEAR(influence(grid, 1, 0), std::tanh(0.125), 1e-15);
  EXPECT_EQ(influence(build_torus_grid(4, 0.5), 5, 0), 0.0);
  EXPECT_EQ(influence(IsingModel(Graph(2, {{0, 1}}), {0.0}), 0, 1), 0.0);
  EXPECT_THROW(influence(grid, 2, 2), InvalidArgumentError);
}

// Def. 2.2 evaluated literally: maximize TV between the conditionals of i over
// all pairs of full configurations that differ only at j.
double influence_by_definition(const IsingModel& m, std::size_t j, std::size_t i) {
  const std::size_t n = m.size();
  double best = 0;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
    const auto x = Configuration::from_index(s, n);
    const auto y = Configuration::from_index(s ^ (std::uint64_t{1} << j), n);
    best = std::max(best, std::abs(conditional(m, x, i).p_plus - conditional(m, y, i).p_plus));
  }
  return best;
}

// tanh|θ| is the supremum over the rest of i's field, so it bounds the
// definition from above and is attained whenever that field can vanish.
TEST(Influence, ClosedFormBoundsDefinitionForZeroField) {
  RngStream rng(77, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_model(6, 0.7, false, rng);
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 6; ++j) {
        if (i == j) continue;
        const double def = influence_by_definition(m, j, i);
        ASSERT_GE(influence(m, j, i), def - 1e-12);
        ASSERT_NEAR(influence(m, j, i, InfluenceMode::kBruteForce), def, 1e-10);
      }
    }
  }
}

TEST(Influence, ClosedFormEqualsDefinitionWhenFieldCanCancel) {
  // CW(6) and CW(8): i has an even number of equal-weight other neighbors.
  for (std::size_t n : {6, 8}) {
    const auto m = build_curie_weiss(n, 0.7);
    for (std::size_t j = 1; j < n; ++j) {
      ASSERT_NEAR(influence(m, j, 0), influence_by_definition(m, j, 0), 1e-10);
      ASSERT_NEAR(influence(m, j, 0, InfluenceMode::kBruteForce), influence(m, j, 0), 1e-10);
    }
  }
  // A star: each leaf's only neighbor is the center.
  RngStream rng(79, 0);
  std::vector<Edge> edges;
  std::vector<double> w;
  for (NodeId v = 1; v < 7; ++v) {
    edges.push_back({0, v});
    w.push_back(rng.uniform() * 2 - 1);
  }
  const IsingModel star(Graph(7, edges), w);
  for (NodeId v = 1; v < 7; ++v) {
    ASSERT_NEAR(influence(star, 0, v), influence_by_definition(star, 0, v), 1e-10);
  }
}

TEST(Influence, BruteForceHandlesExternalField) {
  RngStream rng(78, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_model(5, 0.8, true, rng);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        if (i != j) ASSERT_NEAR(influence(m, j, i), influence_by_definition(m, j, i), 1e-10);
      }
    }
  }
}

TEST(Influence, BruteForceRespectsEnumerationLimit) {
  const auto m = build_curie_weiss(23, 0.5);  // 21 other neighbors
  EXPECT_THROW(influence(m, 1, 0, InfluenceMode::kBruteForce), CapacityError);
  EXPECT_NO_THROW(influence(build_curie_weiss(21, 0.5), 1, 0, InfluenceMode::kBruteForce));
}

TEST(Dobrushin, Examples) {
  EXPECT_NEAR(dobrushin_alpha(build_curie_weiss(100, 0.5)), 99 * std::tanh(0.5 / 99), 1e-12);
  EXPECT_NEAR(dobrushin_alpha(build_curie_weiss(100, 0.5)), 0.499996, 1e-6);
  EXPECT_NEAR(dobrushin_alpha(build_torus_grid(3, 0.5)), 0.497412, 1e-6);
  EXPECT_EQ(dobrushin_alpha(IsingModel(Graph(4, {}), {})), 0.0);
}

TEST(Dobrushin, PresetsStayBelowAlpha) {
  for (double a : {0.1, 0.5, 0.9}) {
    for (std::size_t n : {2, 10, 100, 400}) EXPECT_LE(dobrushin_alpha(build_curie_weiss(n, a)), a);
    for (std::size_t k : {3, 5, 20}) EXPECT_LE(dobrushin_alpha(build_torus_grid(k, a)), a);
  }
}

TEST(LogWeight, Examples) {
  const auto m = two_node(0.5);
  EXPECT_DOUBLE_EQ(log_weight(m, Configuration(std::vector<Spin>{1, 1})), 0.5);
  EXPECT_DOUBLE_EQ(log_weight(m, Configuration(std::vector<Spin>{1, -1})), -0.5);
  EXPECT_EQ(log_weight(two_node(0.0), Configuration(std::vector<Spin>{-1, 1})), 0.0);
  EXPECT_THROW(log_weight(m, Configuration(3)), DimensionError);
}

TEST(LogWeight, FlipSymmetricWithoutField) {
  RngStream rng(5, 5);
  const auto m = random_model(8, 0.5, false, rng);
  const auto p = exact_distribution(m);
  for (std::uint64_t s = 0; s < 256; ++s) {
    const auto x = Configuration::from_index(s, 8);
    ASSERT_DOUBLE_EQ(log_weight(m, x), log_weight(m, x.negated()));
    ASSERT_NEAR(p[s], p[x.negated().index()], 1e-15);
  }
}

TEST(ExactDistribution, Examples) {
  const auto one = exact_distribution(IsingModel(Graph(1, {}), {}));
  ASSERT_EQ(one.size(), 2u);
  EXPECT_DOUBLE_EQ(one[0], 0.5);
  EXPECT_DOUBLE_EQ(one[1], 0.5);

  const auto p = exact_distribution(two_node(0.5));
  double e = 0;
  for (std::uint64_t s = 0; s < 4; ++s) e += p[s] * oracle::spin(s, 0) * oracle::spin(s, 1);
  EXPECT_NEAR(e, std::tanh(0.5), 1e-12);
  EXPECT_NEAR(e, 0.462117, 1e-6);

  for (double v : exact_distribution(two_node(0.0))) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(ExactDistribution, MatchesDirectOracleAndNormalizes) {
  RngStream rng(9, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_model(7, 0.5, trial % 2 == 0, rng);
    const auto p = exact_distribution(m);
    const auto q = oracle::joint(m);
    double total = 0;
    for (std::size_t s = 0; s < p.size(); ++s) {
      ASSERT_NEAR(p[s], q[s], 1e-13);
      total += p[s];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(ExactDistribution, RefusesLargeModels) {
  EXPECT_THROW(exact_distribution(build_curie_weiss(21, 0.5)), CapacityError);
  EXPECT_THROW(exact_distribution(build_curie_weiss(9, 0.5), 8), CapacityError);
}

TEST(TotalVariation, Basics) {
  const std::vector<double> p{0.5, 0.5}, q{0.2, 0.8};
  EXPECT_DOUBLE_EQ(total_variation(p, q), 0.3);
  EXPECT_EQ(total_variation(p, p), 0.0);
  EXPECT_THROW(total_variation(p, std::vector<double>{1.0}), DimensionError);
}
