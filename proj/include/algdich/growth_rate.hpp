#pragma once

// Growth rates: increasing positive weights mu with mu(0) = 1 that replace
// e^t in dichotomy estimates. Every rate carries closed-form mu, mu' and
// ln(mu); nothing here differentiates numerically.

#include "algdich/errors.hpp"
#include "algdich/types.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace algdich {

struct GrowthRate {
  ScalarFunction mu;
  ScalarFunction mu_prime;
  ScalarFunction log_mu;
  std::string label;

  /// mu'(t)/mu(t), the pointwise weight appearing in the perturbation bounds.
  double log_derivative(double t) const { return mu_prime(t) / mu(t); }
};

namespace rates {

/// mu(t) = e^t.
inline GrowthRate exponential() {
  return GrowthRate{
      [](double t) { return std::exp(t); },
      [](double t) { return std::exp(t); },
      [](double t) { return t; },
      "exponential",
  };
}

namespace detail {
// pi/2 + atan(t), without cancellation for large negative t.
inline double shifted_atan(double t) {
  return t < 0.0 ? std::atan(-1.0 / t) : std::numbers::pi / 2.0 + std::atan(t);
}
}  // namespace detail

/// mu(t) = (2/pi) e^t (pi/2 + atan t).
inline GrowthRate arctan_exponential() {
  using std::numbers::pi;
  auto mu = [](double t) { return 2.0 / pi * std::exp(t) * detail::shifted_atan(t); };
  return GrowthRate{
      mu,
      [mu](double t) {
        return mu(t) * (1.0 + 1.0 / (detail::shifted_atan(t) * (1.0 + t * t)));
      },
      [](double t) { return std::log(2.0 / pi) + t + std::log(detail::shifted_atan(t)); },
      "arctan_exponential",
  };
}

/// mu(t) = t + sqrt(1 + t^2); decays like 1/(2|t|) at -infinity.
inline GrowthRate algebraic() {
  auto mu = [](double t) {
    const double r = std::hypot(1.0, t);
    return t >= 0.0 ? t + r : 1.0 / (r - t);
  };
  return GrowthRate{
      mu,
      [mu](double t) { return mu(t) / std::hypot(1.0, t); },
      [](double t) { return std::asinh(t); },
      "algebraic",
  };
}

/// mu(t) = e^{rate*t}; used by the scalar oracle with rate 1.
inline GrowthRate scaled_exponential(double rate) {
  if (!(rate > 0.0)) throw PreconditionError("scaled exponential growth rate needs rate > 0");
  return GrowthRate{
      [rate](double t) { return std::exp(rate * t); },
      [rate](double t) { return rate * std::exp(rate * t); },
      [rate](double t) { return rate * t; },
      "exponential_" + std::to_string(rate),
  };
}

}  // namespace rates

/// Limit-axiom proxy thresholds: mu(left end) < small, mu(right end) > large.
struct LimitProxy {
  double small = 1e-3;
  double large = 1e3;
};

struct GrowthRateViolation {
  std::string check;
  double t = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<GrowthRateViolation> violations;
  LimitProxy proxy;
  double mu_left = 0.0;
  double mu_right = 0.0;

  bool pass() const noexcept { return violations.empty(); }
};

/// Samples the growth-rate axioms on a strictly increasing grid.
inline ValidationReport validate_growth_rate(const GrowthRate& g, std::span<const double> grid,
                                             double tol, LimitProxy proxy = {}) {
  if (grid.size() < 2) throw PreconditionError("growth-rate grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1]))
      throw PreconditionError("growth-rate grid must be strictly increasing");
  }
  if (!(tol > 0.0)) throw PreconditionError("growth-rate tolerance must be positive");

  ValidationReport report;
  report.proxy = proxy;

  std::vector<double> mu(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    mu[i] = g.mu(t);
    const double dmu = g.mu_prime(t);
    if (!std::isfinite(mu[i]) || !std::isfinite(dmu)) {
      throw EvaluationError("growth rate '" + g.label + "' is not finite at t = " +
                            std::to_string(t));
    }
    if (!(mu[i] > 0.0)) report.violations.push_back({"positive", t, "mu(t) <= 0"});
    if (!(dmu > 0.0)) report.violations.push_back({"mu_prime_positive", t, "mu'(t) <= 0"});
    const double via_log = std::exp(g.log_mu(t));
    if (std::abs(via_log - mu[i]) > tol * std::abs(mu[i])) {
      report.violations.push_back(
          {"log_consistency", t, "exp(log_mu) differs from mu by more than the tolerance"});
    }
    if (i > 0 && !(mu[i] > mu[i - 1]))
      report.violations.push_back({"increasing", t, "mu(t) not above previous grid value"});
  }

  const double mu0 = g.mu(0.0);
  if (std::abs(mu0 - 1.0) > tol) report.violations.push_back({"normalized", 0.0, "mu(0) != 1"});

  report.mu_left = mu.front();
  report.mu_right = mu.back();
  if (!(report.mu_left < proxy.small)) {
    report.violations.push_back({"limit_left", grid.front(),
                                 "mu at left end not below " + std::to_string(proxy.small)});
  }
  if (!(report.mu_right > proxy.large)) {
    report.violations.push_back({"limit_right", grid.back(),
                                 "mu at right end not above " + std::to_string(proxy.large)});
  }
  return report;
}

/// (mu(t)/mu(s))^{-alpha}, evaluated through log_mu.
inline double weight_ratio(const GrowthRate& g, double t, double s, double alpha) {
  if (!(alpha > 0.0)) throw PreconditionError("weight_ratio needs alpha > 0");
  return std::exp(-alpha * (g.log_mu(t) - g.log_mu(s)));
}

}  // namespace algdich
