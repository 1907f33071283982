#include <gtest/gtest.h>

#include <cmath>

#include "hogwild_gibbs/bounds.hpp"

using namespace hogwild;

TEST(Bounds, MarginalsExample) {
  EXPECT_NEAR(bound_marginals(1.0, 100, 2, 0.5), 14736.5, 0.1);
  EXPECT_NEAR(bound_marginals(3.0, 100, 2, 0.5), 3 * bound_marginals(1.0, 100, 2, 0.5), 1e-6);
}

TEST(Bounds, BiasDegreeTwoRatio) {
  const double r = bound_bias_degree_d(1, 2, 4, 0.5, 400) / bound_bias_degree_d(1, 2, 4, 0.5, 100);
  const double oracle = (std::log(400.0) / std::log(100.0)) * std::sqrt(400 * std::log(400.0) / (100 * std::log(100.0)));
  EXPECT_NEAR(r, oracle, 1e-12);
  EXPECT_NEAR(r, 2.968, 1e-3);
  EXPECT_NEAR(bound_bias_degree_d(2, 3, 4, 0.5, 100), 2 * 100 * std::log(100.0), 1e-9);
  EXPECT_NEAR(bound_bias_degree_d(1, 1, 4, 0.5, 100), 1.0, 1e-15);
}

TEST(Bounds, MixingError) {
  EXPECT_NEAR(bound_mixing_error(1, 10, 0.5, 0), 10.0, 1e-12);
  EXPECT_NEAR(bound_mixing_error(2, 10, 0.5, 20), 20 * std::exp(-1.0), 1e-12);
}

TEST(Bounds, LipschitzBias) {
  EXPECT_NEAR(bound_lipschitz_bias(1, 1, 4, 0.5, std::exp(1.0)), 5.0, 1e-12);
  EXPECT_NEAR(bound_lipschitz_bias(2, 2, 4, 0.5, std::exp(2.0), 3.0), 2 * (3 * 4 + 1), 1e-12);
  EXPECT_THROW(bound_lipschitz_bias(1, 0, 4, 0.5, 10), DomainError);
}

TEST(Bounds, ConcentrationTail) {
  EXPECT_NEAR(bound_concentration_tail(1, 2, 0.5, 100, 0), 2.0, 1e-15);
  EXPECT_NEAR(bound_concentration_tail(1, 2, 0.5, 100, 200, 1), 2 * std::exp(-1.0), 1e-12);
  EXPECT_NEAR(bound_concentration_tail(2, 1, 0.5, 100, 40, 2), 2 * std::exp(-0.5 * 1600 / (2 * 4 * 100)), 1e-12);
  EXPECT_THROW(bound_concentration_tail(1, 2, 0.5, 100, -1), DomainError);
}

TEST(Bounds, DomainErrors) {
  EXPECT_THROW(bound_mixing_error(1, 10, 1.0, 1), DomainError);
  EXPECT_THROW(bound_marginals(1, 10, 2, 1.2), DomainError);
  EXPECT_THROW(bound_bias_degree_d(1, 2, 4, -0.1, 10), DomainError);
  EXPECT_THROW(bound_bias_degree_d(1, 0, 4, 0.5, 10), DomainError);
  EXPECT_THROW(bound_concentration_tail(1, 0, 0.5, 10, 1), DomainError);
}

TEST(Bounds, Monotonicity) {
  double prev = 0;
  for (double n : {10.0, 100.0, 1000.0, 10000.0}) {
    const double b = bound_bias_degree_d(1, 2, 4, 0.5, n);
    EXPECT_GT(b, prev);
    prev = b;
  }
  EXPECT_LT(bound_bias_degree_d(1, 2, 4, 0.3, 100), bound_bias_degree_d(1, 2, 4, 0.6, 100));
  EXPECT_GT(bound_concentration_tail(1, 2, 0.5, 100, 10), bound_concentration_tail(1, 2, 0.5, 100, 20));
  EXPECT_GT(bound_mixing_error(1, 100, 0.5, 10), bound_mixing_error(1, 100, 0.5, 100));
}
