#include "algdich/growth_rate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace algdich;

namespace {

std::vector<double> uniform_grid(double lo, double hi, int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * i / (points - 1);
  return g;
}

}  // namespace

TEST(GrowthRate, ExponentialPassesAllAxioms) {
  const auto grid = uniform_grid(-10, 10, 201);
  const auto report = validate_growth_rate(rates::exponential(), grid, 1e-9);
  EXPECT_TRUE(report.pass());
  EXPECT_EQ(report.proxy.small, 1e-3);
  EXPECT_EQ(report.proxy.large, 1e3);
}

TEST(GrowthRate, ArctanExponentialPassesAllAxioms) {
  const auto grid = uniform_grid(-10, 10, 201);
  const auto g = rates::arctan_exponential();
  const auto report = validate_growth_rate(g, grid, 1e-9);
  EXPECT_TRUE(report.pass());
  // Closed form at 0: (2/pi) * 1 * (pi/2) = 1.
  EXPECT_NEAR(g.mu(0.0), 1.0, 1e-15);
  // mu'/mu = 1 + 1/((pi/2 + atan t)(1 + t^2)). The denominator is minimal near
  // t = -0.42898, where the ratio peaks at 1.72461.
  for (double t : grid) {
    const double r = g.log_derivative(t);
    EXPECT_GT(r, 1.0);
    EXPECT_LT(r, 1.7246114);
  }
  EXPECT_NEAR(g.log_derivative(-0.4289779), 1.7246113538, 1e-9);
}

TEST(GrowthRate, ArctanRatioExceedsOnePlusTwoOverPi) {
  // The commonly quoted upper bound 1 + 2/pi is the value at t = 0, not the sup.
  const auto g = rates::arctan_exponential();
  EXPECT_NEAR(g.log_derivative(0.0), 1.0 + 2.0 / std::numbers::pi, 1e-15);
  EXPECT_GT(g.log_derivative(-0.5), 1.0 + 2.0 / std::numbers::pi);
}

TEST(GrowthRate, AlgebraicRateIsNormalizedAndIncreasing) {
  const auto g = rates::algebraic();
  EXPECT_EQ(g.mu(0.0), 1.0);
  // mu' = 1 + t/sqrt(1+t^2), evaluated independently of the library formula.
  for (double t : uniform_grid(-10, 10, 41)) {
    EXPECT_NEAR(g.mu_prime(t), 1.0 + t / std::sqrt(1.0 + t * t), 1e-12 * g.mu(t) + 1e-15);
  }
  // Its limits are only polynomial, so on [-10, 10] the proxies must be loosened.
  const auto grid = uniform_grid(-10, 10, 201);
  EXPECT_TRUE(validate_growth_rate(g, grid, 1e-9, LimitProxy{0.1, 10.0}).pass());
  const auto strict = validate_growth_rate(g, grid, 1e-9);
  ASSERT_EQ(strict.violations.size(), 2u);
  EXPECT_EQ(strict.violations[0].check, "limit_left");
  EXPECT_EQ(strict.violations[1].check, "limit_right");
  // With the default proxies a wide grid passes.
  EXPECT_TRUE(validate_growth_rate(g, uniform_grid(-1000, 1000, 2001), 1e-9).pass());
}

TEST(GrowthRate, ValidationReportsOffendingPoints) {
  GrowthRate bad{[](double t) { return 1.0 + 0.5 * std::sin(t); },
                 [](double t) { return 0.5 * std::cos(t); },
                 [](double t) { return std::log(1.0 + 0.5 * std::sin(t)); }, "bad"};
  const auto report = validate_growth_rate(bad, uniform_grid(-4, 4, 9), 1e-9);
  EXPECT_FALSE(report.pass());
  bool saw_decrease = false;
  for (const auto& v : report.violations) saw_decrease |= v.check == "increasing";
  EXPECT_TRUE(saw_decrease);
}

TEST(GrowthRate, NonFiniteEvaluationIsAnError) {
  GrowthRate g = rates::exponential();
  g.mu_prime = [](double t) { return t > 1 ? std::nan("") : std::exp(t); };
  const auto grid = uniform_grid(-2, 2, 5);
  EXPECT_THROW(validate_growth_rate(g, grid, 1e-9), EvaluationError);
}

TEST(GrowthRate, GridPreconditions) {
  const std::vector<double> one{0.0};
  const std::vector<double> unsorted{0.0, -1.0};
  EXPECT_THROW(validate_growth_rate(rates::exponential(), one, 1e-9), PreconditionError);
  EXPECT_THROW(validate_growth_rate(rates::exponential(), unsorted, 1e-9), PreconditionError);
}

TEST(WeightRatio, Examples) {
  EXPECT_EQ(weight_ratio(rates::exponential(), 2.5, 2.5, 3.0), 1.0);
  EXPECT_NEAR(weight_ratio(rates::exponential(), 1.0, 0.0, 2.0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(weight_ratio(rates::exponential(), 1.0, 0.0, 2.0), 0.1353353, 1e-7);
  const double oracle = (-3.0 + std::sqrt(10.0)) / 1.0;
  EXPECT_NEAR(weight_ratio(rates::algebraic(), 0.0, -3.0, 1.0), oracle, 1e-14);
  EXPECT_NEAR(oracle, 0.1622777, 1e-7);
  EXPECT_THROW(weight_ratio(rates::exponential(), 1, 0, 0.0), PreconditionError);
}

TEST(WeightRatio, CocycleAndMonotoneDecayProperties) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> time(-20.0, 20.0);
  std::uniform_real_distribution<double> expo(0.1, 3.0);
  for (const auto& g : {rates::exponential(), rates::arctan_exponential(), rates::algebraic()}) {
    for (int i = 0; i < 500; ++i) {
      const double t = time(rng), s = time(rng), r = time(rng), a = expo(rng);
      EXPECT_EQ(weight_ratio(g, t, t, a), 1.0);
      const double lhs = weight_ratio(g, t, s, a) * weight_ratio(g, s, r, a);
      const double rhs = weight_ratio(g, t, r, a);
      EXPECT_NEAR(lhs / rhs, 1.0, 1e-12) << g.label;
      const double hi = std::max(t, s), lo = std::min(t, s);
      if (hi > lo) EXPECT_LT(weight_ratio(g, hi, lo, a), 1.0);
    }
  }
}
