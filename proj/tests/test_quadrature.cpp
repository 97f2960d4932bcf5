#include "algdich/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace algdich;

TEST(Quadrature, PolynomialIsExactOnOnePanel) {
  auto f = [](double x) {
    Vector v(2);
    v << x * x * x, 1.0;
    return v;
  };
  const auto r = integrate_adaptive(f, 0.0, 2.0, 2, AdaptiveOptions{1e-12, 10, 10.0});
  EXPECT_NEAR(r.value[0], 4.0, 1e-14);
  EXPECT_NEAR(r.value[1], 2.0, 1e-14);
  EXPECT_EQ(r.panels, 1u);
}

TEST(Quadrature, ExponentialTailAgainstClosedForm) {
  auto f = [](double s) { return Vector::Constant(1, std::exp(-(5.0 - s))); };
  const auto r = integrate_adaptive(f, -20.0, 5.0, 1, AdaptiveOptions{1e-12});
  EXPECT_NEAR(r.value[0], 1.0 - std::exp(-25.0), 1e-12);
  EXPECT_LE(r.error_estimate, 1e-12);
}

TEST(Quadrature, OscillatoryIntegrandRefines) {
  auto f = [](double x) { return Vector::Constant(1, std::sin(50.0 * x)); };
  const auto r = integrate_adaptive(f, 0.0, std::numbers::pi / 5.0 * 3.0, 1,
                                    AdaptiveOptions{1e-10});
  // Integral of sin(50x) over whole periods plus a half period: 2/50.
  EXPECT_NEAR(r.value[0], (1.0 - std::cos(50.0 * std::numbers::pi * 0.6)) / 50.0, 1e-10);
  EXPECT_GT(r.panels, 1u);
}

TEST(Quadrature, MagnitudeBoundStopsUselessRefinement) {
  // Wildly oscillating, tiny integrand: the bound certifies it without refinement.
  auto f = [](double x) { return Vector::Constant(1, 1e-12 * std::sin(1e6 * x)); };
  MagnitudeBound bound = [](double a, double b) { return 1e-12 * (b - a); };
  const auto r = integrate_adaptive(f, 0.0, 1.0, 1, AdaptiveOptions{1e-10}, bound);
  EXPECT_EQ(r.panels, 1u);
  EXPECT_LE(std::abs(r.value[0]), 1e-11);
}

TEST(Quadrature, PanelBudgetExhaustionIsReported) {
  auto f = [](double x) { return Vector::Constant(1, std::sin(1e5 * x)); };
  EXPECT_THROW(integrate_adaptive(f, 0.0, 1.0, 1, AdaptiveOptions{1e-14, 50}), QuadratureError);
}
