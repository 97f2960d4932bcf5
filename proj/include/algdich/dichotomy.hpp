#pragma once

// Checking and fitting the constants of an algebraic dichotomy
//
//   ||T(t,s)P(s)|| <= K (mu(t)/mu(s))^{-alpha},   t >= s,
//   ||T(t,s)Q(s)|| <= K (mu(s)/mu(t))^{-alpha},   t <= s,
//
// and of the (h,k) variant, on a finite grid of (t,s) pairs.

#include "algdich/errors.hpp"
#include "algdich/evolution.hpp"
#include "algdich/growth_rate.hpp"
#include "algdich/types.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace algdich {

struct TimePair {
  double t = 0.0;
  double s = 0.0;
};

using PairGrid = std::vector<TimePair>;

/// All ordered pairs (t_i, t_j), i != j, of a uniform grid with `points` nodes.
inline PairGrid uniform_pair_grid(const Interval& iv, int points, bool include_diagonal = false) {
  if (points < 2) throw PreconditionError("pair grid needs at least two points");
  if (!(iv.hi > iv.lo)) throw PreconditionError("pair grid interval must be nonempty");
  std::vector<double> nodes(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    nodes[static_cast<std::size_t>(i)] =
        i + 1 == points ? iv.hi : iv.lo + iv.length() * i / (points - 1);
  }
  PairGrid out;
  for (double t : nodes) {
    for (double s : nodes) {
      if (t != s || include_diagonal) out.push_back({t, s});
    }
  }
  return out;
}

struct DichotomySpec {
  MatrixFunction projector;
  double K = 1.0;
  double alpha = 1.0;
  GrowthRate rate;
};

struct PairViolation {
  double t = 0.0;
  double s = 0.0;
  std::string side;
  double ratio = 0.0;
};

struct DichotomyFit {
  double K = 0.0;
  double alpha = 0.0;
  double residual = 0.0;
  /// Per-side fits; empty when the side carries no data (zero projector).
  std::optional<std::pair<double, double>> stable;    // (K, alpha)
  std::optional<std::pair<double, double>> unstable;  // (K, alpha)
};

struct DichotomyReport {
  double K = 0.0;
  double alpha = 0.0;
  double slack = 0.0;
  double max_stable_ratio = 0.0;
  double max_unstable_ratio = 0.0;
  std::size_t stable_pairs = 0;
  std::size_t unstable_pairs = 0;
  std::vector<PairViolation> violations;
  std::optional<DichotomyFit> fit;

  bool pass() const noexcept {
    return max_stable_ratio <= K * (1.0 + slack) && max_unstable_ratio <= K * (1.0 + slack);
  }
};

namespace detail {

inline Matrix complement(const Matrix& p) {
  return Matrix::Identity(p.rows(), p.cols()) - p;
}

inline void require_projector(const Matrix& p, double s, Eigen::Index n) {
  if (p.rows() != n || p.cols() != n)
    throw PreconditionError("projector has wrong shape at s = " + std::to_string(s));
  const double defect = (p * p - p).norm();
  if (defect > 1e-8 * std::max(1.0, p.norm()))
    throw PreconditionError("projector is not idempotent at s = " + std::to_string(s));
}

/// ||T(t,s)P(s)|| (stable side) or ||T(t,s)Q(s)|| (unstable side).
inline double side_norm(const EvolutionCache& cache, const MatrixFunction& projector, double t,
                        double s, bool stable) {
  if (stable) return spectral_norm(cache.projected_transition(t, s, projector));
  MatrixFunction q = [&projector](double x) { return complement(projector(x)); };
  return spectral_norm(cache.projected_transition(t, s, q));
}

/// Generic pair sweep: `weight(t, s, stable)` is the right-hand side without K.
template <class Weight>
DichotomyReport sweep(const EvolutionCache& cache, const MatrixFunction& projector, double K,
                      double slack, const PairGrid& pairs, Weight&& weight) {
  if (!(K > 0.0)) throw PreconditionError("dichotomy constant K must be positive");
  if (!(slack >= 0.0)) throw PreconditionError("dichotomy slack must be nonnegative");
  DichotomyReport r;
  r.K = K;
  r.slack = slack;
  for (const auto& [t, s] : pairs) {
    cache.require(t, "dichotomy pair");
    cache.require(s, "dichotomy pair");
    require_projector(projector(s), s, cache.dimension());
    for (bool stable : {true, false}) {
      if (stable ? t < s : t > s) continue;
      const double ratio = side_norm(cache, projector, t, s, stable) / weight(t, s, stable);
      if (!std::isfinite(ratio)) {
        throw EvaluationError("dichotomy ratio not finite at (t, s) = (" + std::to_string(t) +
                              ", " + std::to_string(s) + ")");
      }
      double& worst = stable ? r.max_stable_ratio : r.max_unstable_ratio;
      worst = std::max(worst, ratio);
      (stable ? r.stable_pairs : r.unstable_pairs) += 1;
      if (ratio > K * (1.0 + slack))
        r.violations.push_back({t, s, stable ? "stable" : "unstable", ratio});
    }
  }
  return r;
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double residual = 0.0;
};

inline std::optional<LineFit> fit_line(const std::vector<double>& x, const std::vector<double>& y,
                                       const char* side) {
  if (x.empty()) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  double spread = 0.0;
  for (double v : x) spread = std::max(spread, std::abs(v - mx));
  if (x.size() < 2 || spread <= 1e-12 * std::max(1.0, std::abs(mx))) {
    throw FitError(std::string("dichotomy fit on the ") + side +
                   " side needs at least two distinct weight values");
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i)
    f.residual = std::max(f.residual, std::abs(y[i] - f.intercept - f.slope * x[i]));
  return f;
}

}  // namespace detail

/// Checks the algebraic dichotomy inequalities with relative slack.
inline DichotomyReport verify_dichotomy(const EvolutionCache& cache, const DichotomySpec& spec,
                                        const PairGrid& pairs, double slack = 1e-6) {
  if (!(spec.alpha > 0.0)) throw PreconditionError("dichotomy exponent alpha must be positive");
  const GrowthRate& g = spec.rate;
  const double alpha = spec.alpha;
  auto r = detail::sweep(cache, spec.projector, spec.K, slack, pairs,
                         [&g, alpha](double t, double s, bool stable) {
                           return stable ? weight_ratio(g, t, s, alpha)
                                         : weight_ratio(g, s, t, alpha);
                         });
  r.alpha = alpha;
  return r;
}

/// Least-squares fit of log||T P|| against the log weight on each side.
/// Returns the larger K, the smaller alpha and the worst log residual.
inline DichotomyFit fit_dichotomy_constants(const EvolutionCache& cache,
                                            const MatrixFunction& projector,
                                            const GrowthRate& rate, const PairGrid& pairs) {
  std::vector<double> xs[2], ys[2];
  for (const auto& [t, s] : pairs) {
    cache.require(t, "dichotomy pair");
    cache.require(s, "dichotomy pair");
    for (int side = 0; side < 2; ++side) {
      const bool stable = side == 0;
      if (stable ? t < s : t > s) continue;
      const double norm = detail::side_norm(cache, projector, t, s, stable);
      // A zero norm carries no information about the exponent.
      if (norm <= 1e-300) continue;
      const double x = stable ? rate.log_mu(t) - rate.log_mu(s) : rate.log_mu(s) - rate.log_mu(t);
      xs[side].push_back(x);
      ys[side].push_back(std::log(norm));
    }
  }
  DichotomyFit out;
  bool any = false;
  for (int side = 0; side < 2; ++side) {
    const auto line = detail::fit_line(xs[side], ys[side], side == 0 ? "stable" : "unstable");
    if (!line) continue;
    const double K = std::exp(line->intercept);
    const double alpha = -line->slope;
    (side == 0 ? out.stable : out.unstable) = std::make_pair(K, alpha);
    out.K = any ? std::max(out.K, K) : K;
    out.alpha = any ? std::min(out.alpha, alpha) : alpha;
    out.residual = std::max(out.residual, line->residual);
    any = true;
  }
  if (!any) throw FitError("dichotomy fit has no nonzero data on either side");
  return out;
}

/// verify_dichotomy plus the fitted constants on the same grid.
inline DichotomyReport verify_and_fit(const EvolutionCache& cache, const DichotomySpec& spec,
                                      const PairGrid& pairs, double slack = 1e-6) {
  auto r = verify_dichotomy(cache, spec, pairs, slack);
  r.fit = fit_dichotomy_constants(cache, spec.projector, spec.rate, pairs);
  return r;
}

/// How the exponential factor e^{-alpha|t-s|} enters an (h,k) check.
enum class HkExponential {
  /// Use the factor as written.
  include,
  /// Replace it by its maximum 1 (the alpha -> 0 reading that recovers an
  /// algebraic check when h, k are powers of mu).
  bound_by_one,
};

/// (h,k) dichotomy:
///   ||T(t,s)P(s)|| <= K h(t)/h(s) e^{-alpha(t-s)},  t >= s,
///   ||T(t,s)Q(s)|| <= K k(t)/k(s) e^{-alpha(s-t)},  t <= s.
inline DichotomyReport verify_hk_dichotomy(const EvolutionCache& cache, const ScalarFunction& h,
                                           const ScalarFunction& k, double K, double alpha,
                                           const MatrixFunction& projector,
                                           const PairGrid& pairs, double slack = 1e-6,
                                           HkExponential mode = HkExponential::include) {
  if (!(alpha > 0.0)) throw PreconditionError("(h,k) dichotomy exponent alpha must be positive");
  auto weight = [&](double t, double s, bool stable) {
    const double e = mode == HkExponential::include ? std::exp(-alpha * std::abs(t - s)) : 1.0;
    const double w = stable ? h(t) / h(s) : k(t) / k(s);
    if (!(w > 0.0) || !std::isfinite(w))
      throw EvaluationError("(h,k) weights must be positive and finite");
    return w * e;
  };
  auto r = detail::sweep(cache, projector, K, slack, pairs, weight);
  r.alpha = alpha;
  return r;
}

struct CompensationResult {
  bool pass = true;
  double empirical_C = 0.0;
  TimePair worst{};
};

/// k(t)/k(s) <= C h(t)/h(s) for t >= s; reports the largest observed ratio.
inline CompensationResult check_compensation_law(const ScalarFunction& h, const ScalarFunction& k,
                                                 double C, const PairGrid& pairs,
                                                 double slack = 1e-12) {
  if (!(C > 0.0)) throw PreconditionError("compensation constant must be positive");
  CompensationResult out;
  bool first = true;
  for (const auto& pr : pairs) {
    if (pr.t < pr.s) throw PreconditionError("compensation law pairs need t >= s");
    const double ratio = (k(pr.t) / k(pr.s)) / (h(pr.t) / h(pr.s));
    if (!std::isfinite(ratio)) throw EvaluationError("compensation ratio not finite");
    if (first || ratio > out.empirical_C) {
      out.empirical_C = ratio;
      out.worst = pr;
      first = false;
    }
  }
  out.pass = out.empirical_C <= C * (1.0 + slack);
  return out;
}

/// Pairs with t >= s only, as needed by check_compensation_law.
inline PairGrid forward_pairs(const PairGrid& pairs) {
  PairGrid out;
  for (const auto& p : pairs)
    if (p.t >= p.s) out.push_back(p);
  return out;
}

}  // namespace algdich
