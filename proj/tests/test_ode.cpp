#include "algdich/ode.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace algdich;

TEST(Dopri5, ScalarDecayForwardAndBackward) {
  const OdeRhs rhs = [](double, const Vector& y, Vector& dy) { dy = -y; };
  Vector y0(1);
  y0 << 1.0;
  IntegratorConfig cfg;
  EXPECT_NEAR(integrate(rhs, 0.0, y0, 1.0, cfg)[0], std::exp(-1.0), 1e-9);
  EXPECT_NEAR(integrate(rhs, 0.0, y0, -3.0, cfg)[0], std::exp(3.0), 1e-8 * std::exp(3.0));
  EXPECT_EQ(integrate(rhs, 2.0, y0, 2.0, cfg)[0], 1.0);
}

TEST(Dopri5, DenseOutputMatchesClosedForm) {
  // Harmonic oscillator: (cos t, -sin t).
  const OdeRhs rhs = [](double, const Vector& y, Vector& dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  Vector y0(2);
  y0 << 1.0, 0.0;
  IntegratorConfig cfg;
  cfg.max_step = 0.1;
  const auto traj = integrate_dense(rhs, 0.0, y0, 10.0, cfg);
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double t = 0.01 * i;
    const Vector y = traj(t);
    worst = std::max(worst, std::abs(y[0] - std::cos(t)) + std::abs(y[1] + std::sin(t)));
  }
  EXPECT_LT(worst, 1e-9);
  EXPECT_THROW(traj(10.5), IntervalError);

  const auto back = integrate_dense(rhs, 0.0, y0, -5.0, cfg);
  EXPECT_NEAR(back(-2.345)[0], std::cos(-2.345), 1e-9);
  EXPECT_NEAR(back(-2.345)[1], -std::sin(-2.345), 1e-9);
}

TEST(Dopri5, NonFiniteStateIsAnIntegrationError) {
  // y' = y^2 from y(0)=1 blows up at t = 1.
  const OdeRhs rhs = [](double, const Vector& y, Vector& dy) { dy = y.cwiseProduct(y); };
  Vector y0(1);
  y0 << 1.0;
  EXPECT_THROW(integrate(rhs, 0.0, y0, 2.0, IntegratorConfig{}), IntegrationError);
}

TEST(Dopri5, ErrorMessageNamesSubinterval) {
  const OdeRhs rhs = [](double, const Vector& y, Vector& dy) { dy = y.cwiseProduct(y); };
  Vector y0(1);
  y0 << 1.0;
  try {
    integrate(rhs, 0.0, y0, 2.0, IntegratorConfig{});
    FAIL();
  } catch (const IntegrationError& e) {
    EXPECT_NE(std::string(e.what()).find("[0, 2]"), std::string::npos) << e.what();
  }
}
