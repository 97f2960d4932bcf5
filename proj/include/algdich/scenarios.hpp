#pragma once

// Builtin problem instances with declared constants and closed-form oracles.

#include "algdich/conjugacy.hpp"
#include "algdich/dichotomy.hpp"
#include "algdich/evolution.hpp"
#include "algdich/growth_rate.hpp"
#include "algdich/problem.hpp"
#include "algdich/types.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace algdich {

/// Closed forms attached to a scenario; any member may be empty.
struct ScenarioOracle {
  std::function<Matrix(double, double)> transition;              // T(t, s)
  std::function<Vector(double, double, const Vector&)> flow;     // X(t, t0, x0)
  std::function<Vector(double, const Vector&)> H;
  std::function<Vector(double, const Vector&)> G;
};

struct Scenario {
  std::string label;
  std::map<std::string, double> parameters;
  LinearSystem system;
  GrowthRate rate;
  DichotomySpec spec;
  std::optional<NonlinearTerm> perturbation;
  ScenarioOracle oracle;
  std::vector<std::string> notes;
  /// Interval on which the evolution operator is precomputed.
  Interval working{-40.0, 40.0};
  /// Default grid for dichotomy checks.
  Interval pair_interval{-5.0, 5.0};
  int pair_points = 15;

  PairGrid default_pairs() const { return uniform_pair_grid(pair_interval, pair_points); }

  /// Conjugacy problem of the scenario (zero perturbation when none is declared).
  ConjugacyProblem problem(ProblemOptions options = {}) const {
    return ConjugacyProblem(system, working, spec,
                            perturbation ? *perturbation : zero_term(system.dimension, rate),
                            std::move(options));
  }
};

/// Smallest and largest mu'/mu on a grid.
inline std::pair<double, double> log_derivative_range(const GrowthRate& g,
                                                      std::span<const double> grid) {
  double lo = INFINITY, hi = -INFINITY;
  for (double t : grid) {
    const double r = g.log_derivative(t);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo, hi};
}

namespace detail {

/// Supremum of mu'/mu over the real line for the builtin rates; sampled
/// otherwise (with a 5% margin).
inline double sup_log_derivative(const GrowthRate& g) {
  if (g.label == "exponential" || g.label == "algebraic") return 1.0;
  // Maximum of 1 + 1/((pi/2 + atan t)(1 + t^2)), attained near t = -0.42898.
  if (g.label == "arctan_exponential") return 1.7246113537767090;
  std::vector<double> grid;
  for (int i = 0; i <= 4000; ++i) grid.push_back(-100.0 + 0.05 * i);
  return 1.05 * log_derivative_range(g, grid).second;
}

inline LinearSystem diagonal_rate_system(const GrowthRate& g, double eta1, double eta2,
                                         std::string label) {
  return LinearSystem{2,
                      [g, eta1, eta2](double t) {
                        const double r = g.log_derivative(t);
                        Matrix a = Matrix::Zero(2, 2);
                        a(0, 0) = -eta1 * r;
                        a(1, 1) = eta2 * r;
                        return a;
                      },
                      std::max(eta1, eta2) * sup_log_derivative(g), false, std::move(label)};
}

inline Matrix first_coordinate_projector(double) {
  Matrix p = Matrix::Zero(2, 2);
  p(0, 0) = 1.0;
  return p;
}

inline void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw PreconditionError(std::string(name) + " must be positive");
}

}  // namespace detail

/// x1' = -eta1 (mu'/mu) x1, x2' = eta2 (mu'/mu) x2 with P = diag(1, 0).
inline Scenario example_2_2(double eta1, double eta2, const GrowthRate& rate) {
  detail::require_positive(eta1, "eta1");
  detail::require_positive(eta2, "eta2");
  Scenario sc;
  sc.label = "example_2_2";
  sc.parameters = {{"eta1", eta1}, {"eta2", eta2}};
  sc.rate = rate;
  sc.system = detail::diagonal_rate_system(rate, eta1, eta2, "diagonal " + rate.label);
  sc.spec = DichotomySpec{detail::first_coordinate_projector, 1.0, std::min(eta1, eta2), rate};
  sc.working = {-6.0, 6.0};
  sc.oracle.transition = [rate, eta1, eta2](double t, double s) {
    const double lq = rate.log_mu(t) - rate.log_mu(s);
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = std::exp(-eta1 * lq);
    m(1, 1) = std::exp(eta2 * lq);
    return m;
  };
  sc.notes.push_back(
      "alpha = min(eta1, eta2): the source takes alpha = max(eta1, eta2), but the stable bound "
      "(mu(t)/mu(s))^-eta1 <= (mu(t)/mu(s))^-alpha for t >= s requires alpha <= eta1, and "
      "likewise alpha <= eta2 on the unstable side");
  sc.notes.push_back(
      "the source writes the solution as x1 = (mu'(t)/mu(t))^-eta1 V1; the transition matrix "
      "(mu(t)/mu(s))^-eta1 solves the equation and is what is implemented");
  return sc;
}

/// Two-dimensional perturbed system with the arctan growth rate and
/// f(t,x) = (eps sin(x1 + t), eps cos(x1 + t)); beta = gamma = 2 eps.
inline Scenario section5(double eta1, double eta2, double epsilon) {
  detail::require_positive(eta1, "eta1");
  detail::require_positive(eta2, "eta2");
  if (!(epsilon >= 0.0)) throw PreconditionError("epsilon must be nonnegative");
  const auto rate = rates::arctan_exponential();
  Scenario sc;
  sc.label = "section5";
  sc.parameters = {{"eta1", eta1}, {"eta2", eta2}, {"epsilon", epsilon}};
  sc.rate = rate;
  sc.system = detail::diagonal_rate_system(rate, eta1, eta2, "arctan diagonal");
  sc.spec = DichotomySpec{detail::first_coordinate_projector, 1.0, std::min(eta1, eta2), rate};
  sc.perturbation = NonlinearTerm{
      [epsilon](double t, const Vector& x) {
        Vector f(2);
        f(0) = epsilon * std::sin(x(0) + t);
        f(1) = epsilon * std::cos(x(0) + t);
        return f;
      },
      2.0 * epsilon, 2.0 * epsilon, rate};
  sc.oracle.transition = example_2_2(eta1, eta2, rate).oracle.transition;
  if (epsilon == 0.0) {
    sc.oracle.H = [](double, const Vector& x) { return x; };
    sc.oracle.G = [](double, const Vector& y) { return y; };
  }
  const double eta3 = std::min(eta1, eta2);
  sc.notes.push_back("source states the hypotheses hold for 0 < eps < eta3/8 = " +
                     std::to_string(eta3 / 8.0) + "; the gate 6*K*gamma/alpha < 1 with gamma = "
                     "2 eps requires eps < eta3/12 = " + std::to_string(eta3 / 12.0));
  sc.notes.push_back(
      "the source's Lipschitz display drops the |z1 - z2| factor; gamma = 2 eps is used with the "
      "factor retained");
  sc.notes.push_back(
      "source bounds mu'/mu by 1 + 2/pi = 1.63662; the supremum is 1.72461 (near t = -0.429), "
      "which is the value used for M");
  sc.notes.push_back(
      "source's proof bounds |H - x| and |G - y| by 2*K*gamma/alpha; the statement's "
      "2*K*beta/alpha is used");
  sc.notes.push_back(
      "source declares 0 < p', q' < 1 for the inverse map, while its proof gives p' = 1 + lambda "
      "> 1; the proof's constants are reported");
  return sc;
}

/// x' = -a x + c with mu = e^t: h = -c/a, g = c/a.
inline Scenario scalar_oracle(double a, double c) {
  detail::require_positive(a, "a");
  const auto rate = rates::exponential();
  Scenario sc;
  sc.label = "scalar_oracle";
  sc.parameters = {{"a", a}, {"c", c}};
  sc.rate = rate;
  sc.system = LinearSystem{1, [a](double) { return Matrix::Constant(1, 1, -a).eval(); }, a, false,
                           "scalar decay"};
  sc.spec = DichotomySpec{[](double) { return Matrix::Identity(1, 1).eval(); }, 1.0, a, rate};
  sc.perturbation =
      NonlinearTerm{[c](double, const Vector&) { return Vector::Constant(1, c).eval(); },
                    std::abs(c), 0.0, rate};
  sc.oracle.transition = [a](double t, double s) {
    return Matrix::Constant(1, 1, std::exp(-a * (t - s))).eval();
  };
  sc.oracle.flow = [a, c](double t, double t0, const Vector& x0) {
    const double eq = c / a;
    return Vector::Constant(1, eq + (x0(0) - eq) * std::exp(-a * (t - t0))).eval();
  };
  sc.oracle.H = [a, c](double, const Vector& x) { return (x.array() - c / a).matrix().eval(); };
  sc.oracle.G = [a, c](double, const Vector& y) { return (y.array() + c / a).matrix().eval(); };
  return sc;
}

}  // namespace algdich
