#pragma once

// Property suites that check the conclusions of the conjugacy theorems
// numerically: conjugacy of flows, mutual inversion, displacement and Hölder
// bounds, and the absence of nonzero bounded linear solutions.

#include "algdich/conjugacy.hpp"
#include "algdich/dichotomy.hpp"
#include "algdich/errors.hpp"
#include "algdich/evolution.hpp"
#include "algdich/flows.hpp"
#include "algdich/problem.hpp"
#include "algdich/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace algdich {

struct SampleRecord {
  double t = 0.0;
  /// Everything else that identifies the sample (initial time, state, scale...).
  std::vector<double> inputs;
  double residual = 0.0;
  double bound = 0.0;
  bool pass = true;
};

struct SuiteResult {
  std::string suite_name;
  std::size_t samples = 0;
  double worst_residual = 0.0;
  double bound_used = 0.0;
  bool pass = true;
  std::vector<SampleRecord> details;
  /// Free-form remarks (degenerate fits, skipped halves).
  std::vector<std::string> notes;

  SuiteResult() = default;
  SuiteResult(std::string name, double bound) : suite_name(std::move(name)), bound_used(bound) {}

  void add(double t, std::vector<double> inputs, double residual) {
    const bool ok = residual <= bound_used;
    details.push_back({t, std::move(inputs), residual, bound_used, ok});
    ++samples;
    worst_residual = std::max(worst_residual, residual);
    pass = worst_residual <= bound_used;
  }
};

/// One CSV line per sample: suite, t, inputs..., residual, bound, pass.
inline void write_csv(std::ostream& os, std::span<const SuiteResult> suites,
                      bool header = true) {
  if (header) os << "suite,t,inputs,residual,bound,pass\n";
  const auto prec = os.precision(17);
  for (const auto& s : suites) {
    for (const auto& d : s.details) {
      os << s.suite_name << ',' << d.t << ",\"";
      for (std::size_t i = 0; i < d.inputs.size(); ++i) os << (i ? " " : "") << d.inputs[i];
      os << "\"," << d.residual << ',' << d.bound << ',' << (d.pass ? "true" : "false") << '\n';
    }
  }
  os.precision(prec);
}

struct InitialCondition {
  double t0 = 0.0;
  Vector x0;
};

struct TimedState {
  double t = 0.0;
  Vector x;
};

struct ResidualTolerances {
  /// ||H(t,X) - T H(t0,x0)||.
  double forward = 1e-4;
  /// ||G(t,Y) - X(t,t0,G(t0,y0))||.
  double inverse = 1e-3;
};

/// The H-side and G-side halves of a suite.
struct SuitePair {
  SuiteResult forward;
  SuiteResult inverse;

  bool pass() const noexcept { return forward.pass && inverse.pass; }
};

namespace detail {

inline std::vector<double> inputs_of(double t0, const Vector& x) {
  std::vector<double> v{t0};
  for (Eigen::Index i = 0; i < x.size(); ++i) v.push_back(x(i));
  return v;
}

inline Interval hull(double t0, std::span<const double> grid) {
  Interval iv{t0, t0};
  for (double t : grid) {
    iv.lo = std::min(iv.lo, t);
    iv.hi = std::max(iv.hi, t);
  }
  return iv;
}

}  // namespace detail

/// H carries nonlinear solutions to linear ones and G the reverse. The same
/// vector serves as x0 for H and y0 for G.
inline SuitePair conjugacy_residual_suite(const ConjugacyProblem& problem,
                                          std::span<const InitialCondition> initial,
                                          std::span<const double> t_grid,
                                          ResidualTolerances tol = {}) {
  SuitePair out{SuiteResult("conjugacy_residual_H", tol.forward),
                SuiteResult("conjugacy_residual_G", tol.inverse)};
  const auto& cache = problem.cache();
  for (const auto& ic : initial) {
    const auto inputs = detail::inputs_of(ic.t0, ic.x0);
    const Vector h0 = forward_map_H(problem, ic.t0, ic.x0);
    for (double t : t_grid) {
      const Vector xt = nonlinear_flow(problem, ic.t0, ic.x0, t);
      const Vector lhs = forward_map_H(problem, t, xt);
      out.forward.add(t, inputs, (lhs - cache.transition(t, ic.t0) * h0).norm());
    }
    // g(., (t, Y(t))) is the same function for every point of one linear
    // solution, so a single fixed point covers the whole grid.
    const auto g = picard_g(problem, ic.t0, ic.x0, detail::hull(ic.t0, t_grid));
    const Vector g0 = ic.x0 + evaluate_g(problem, g, ic.t0);
    for (double t : t_grid) {
      const Vector yt = cache.transition(t, ic.t0) * ic.x0;
      const Vector lhs = yt + evaluate_g(problem, g, t);
      out.inverse.add(t, inputs, (lhs - nonlinear_flow(problem, ic.t0, g0, t)).norm());
    }
  }
  return out;
}

/// forward: ||G(t,H(t,x)) - x||; inverse: ||H(t,G(t,y)) - y||.
inline SuitePair roundtrip_suite(const ConjugacyProblem& problem,
                                 std::span<const TimedState> points, double tol = 1e-3) {
  SuitePair out{SuiteResult("roundtrip_GH", tol), SuiteResult("roundtrip_HG", tol)};
  for (const auto& p : points) {
    const auto inputs = detail::inputs_of(p.t, p.x);
    const Vector hx = forward_map_H(problem, p.t, p.x);
    out.forward.add(p.t, inputs, (inverse_map_G(problem, p.t, hx) - p.x).norm());
    const Vector gy = inverse_map_G(problem, p.t, p.x);
    out.inverse.add(p.t, inputs, (forward_map_H(problem, p.t, gy) - p.x).norm());
  }
  return out;
}

/// ||H(t,x) - x|| and ||G(t,y) - y|| against 2 K beta / alpha + slack.
inline SuitePair bound_suite(const ConjugacyProblem& problem, std::span<const TimedState> points,
                             double slack = 1e-3) {
  const double bound = problem.displacement_bound() + slack;
  SuitePair out{SuiteResult("displacement_H", bound), SuiteResult("displacement_G", bound)};
  for (const auto& p : points) {
    const auto inputs = detail::inputs_of(p.t, p.x);
    out.forward.add(p.t, inputs, (forward_map_H(problem, p.t, p.x) - p.x).norm());
    out.inverse.add(p.t, inputs, (inverse_map_G(problem, p.t, p.x) - p.x).norm());
  }
  return out;
}

/// Successive-difference ratios of the Picard iteration for g at each point,
/// against the contraction constant 2 K gamma / alpha plus slack.
inline SuiteResult contraction_suite(const ConjugacyProblem& problem,
                                     std::span<const TimedState> points, double slack = 0.02) {
  SuiteResult out("contraction", problem.contraction_constant() + slack);
  for (const auto& p : points) {
    const auto r = picard_g(problem, p.t, p.x, {p.t, p.t});
    out.add(p.t, detail::inputs_of(p.t, p.x), r.max_ratio());
  }
  if (problem.contraction_constant() < 1.0 / 3.0 && out.bound_used > 1.0 / 3.0 + slack) {
    out.bound_used = 1.0 / 3.0 + slack;
    out.pass = out.worst_residual <= out.bound_used;
  }
  return out;
}

struct StatePair {
  double t0 = 0.0;
  Vector a;
  Vector b;
};

/// Worst Gronwall ratio (nonlinear and linear) per pair on t0 + offsets.
inline SuiteResult gronwall_suite(const ConjugacyProblem& problem,
                                  std::span<const StatePair> pairs,
                                  std::span<const double> offsets, double slack = 1e-6) {
  SuiteResult out("gronwall", 1.0 + slack);
  std::vector<double> grid;
  for (const auto& p : pairs) {
    grid.clear();
    for (double d : offsets) {
      if (!(d > 0.0)) throw PreconditionError("gronwall offsets must be positive");
      grid.push_back(p.t0 + d);
    }
    const auto r = gronwall_check(problem, p.t0, p.a, p.b, grid, slack);
    auto inputs = detail::inputs_of(p.t0, p.a);
    for (Eigen::Index i = 0; i < p.b.size(); ++i) inputs.push_back(p.b(i));
    out.add(r.worst_t, std::move(inputs), std::max(r.worst_nonlinear_ratio, r.worst_linear_ratio));
  }
  return out;
}

struct HolderFit {
  /// Least-squares slope and exp(intercept) of log d against log scale;
  /// empty when some displacement is zero.
  std::optional<double> exponent;
  std::optional<double> prefactor;
  /// Samples record d / (p scale^q); the suite passes when all are <= 1.
  SuiteResult suite;
};

struct HolderSuiteResult {
  HolderConstants constants;
  HolderFit forward;
  /// Empty when the G-side constants are undefined.
  std::optional<HolderFit> inverse;

  bool pass() const noexcept { return forward.suite.pass && (!inverse || inverse->suite.pass); }
};

namespace detail {

inline std::optional<std::pair<double, double>> log_log_fit(std::span<const double> scales,
                                                            std::span<const double> d) {
  const auto n = static_cast<double>(scales.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(d[i] > 0.0)) return std::nullopt;
    const double x = std::log(scales[i]), y = std::log(d[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) return std::nullopt;
  const double slope = (n * sxy - sx * sy) / den;
  return std::pair{slope, std::exp((sy - slope * sx) / n)};
}

template <class Map>
HolderFit holder_half(const char* name, Map&& map, double t, const Vector& base,
                      const Vector& direction, std::span<const double> scales, double p,
                      double q) {
  HolderFit out;
  out.suite = SuiteResult(name, 1.0);
  const Vector f0 = map(t, base);
  std::vector<double> d;
  for (double s : scales) {
    d.push_back((map(t, base + s * direction) - f0).norm());
    out.suite.add(t, {s, d.back()}, d.back() / (p * std::pow(s, q)));
  }
  if (const auto fit = log_log_fit(scales, d)) {
    out.exponent = fit->first;
    out.prefactor = fit->second;
  } else {
    out.suite.notes.push_back("degenerate fit: some displacement is zero");
  }
  return out;
}

}  // namespace detail

/// Displacements d_k = ||F(t, base + s_k direction) - F(t, base)|| for F = H
/// and F = G, checked against p s_k^q and p' s_k^q'.
inline HolderSuiteResult holder_suite(const ConjugacyProblem& problem, double t,
                                      const Vector& base, const Vector& direction,
                                      std::span<const double> scales) {
  if (scales.size() < 5) throw PreconditionError("holder_suite needs at least 5 scales");
  if (std::abs(direction.norm() - 1.0) > 1e-12)
    throw PreconditionError("holder_suite direction must be a unit vector");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0 && scales[i] < 1.0))
      throw PreconditionError("holder_suite scales must lie in (0, 1)");
    if (i > 0 && !(scales[i] < scales[i - 1]))
      throw PreconditionError("holder_suite scales must be decreasing");
  }
  HolderSuiteResult out;
  out.constants = theoretical_holder_constants(problem, t, scales);
  const auto& hc = out.constants;
  const auto H = [&](double s, const Vector& x) { return forward_map_H(problem, s, x); };
  const auto G = [&](double s, const Vector& y) { return inverse_map_G(problem, s, y); };
  out.forward = detail::holder_half("holder_H", H, t, base, direction, scales, hc.p, hc.q);
  if (hc.p_prime && hc.q_prime) {
    out.inverse = detail::holder_half("holder_G", G, t, base, direction, scales, *hc.p_prime,
                                      *hc.q_prime);
  }
  return out;
}

struct ProbeResult {
  /// -1 when the stable component predicts growth backward in time, +1 forward.
  int direction = 0;
  double stable_norm = 0.0;
  double unstable_norm = 0.0;
  /// First sampled time at which ||T(t,0)v|| exceeded the threshold.
  std::optional<double> observed_crossing;
  /// First sampled time at which the dichotomy lower bound exceeded it.
  std::optional<double> predicted_crossing;
  double max_norm = 0.0;
  /// Largest lower bound / actual norm over the samples (<= 1 when consistent).
  double worst_bound_ratio = 0.0;
  bool pass = false;
};

/// Follows T(t,0)v in the direction where the dominant component grows and
/// compares it with the dichotomy lower bound
///   (1/K) (mu(0)/mu(t))^alpha ||P v|| - K (mu(0)/mu(t))^-alpha ||Q v||   (t <= 0)
/// or its mirror for the unstable component when P v = 0.
inline ProbeResult no_bounded_solution_probe(const EvolutionCache& cache,
                                             const DichotomySpec& spec, const Vector& v,
                                             double horizon, double threshold,
                                             int samples = 500) {
  if (!(horizon > 0.0) || !(threshold > 0.0) || samples < 1)
    throw PreconditionError("probe needs positive horizon, threshold and sample count");
  if (v.size() != cache.dimension()) throw PreconditionError("probe vector has wrong size");
  const Matrix P = spec.projector(0.0);
  const Vector pv = P * v;
  const Vector qv = v - pv;
  const double scale = std::max(1.0, v.norm());
  ProbeResult out;
  out.stable_norm = pv.norm();
  out.unstable_norm = qv.norm();
  if (out.stable_norm <= 1e-14 * scale && out.unstable_norm <= 1e-14 * scale)
    throw PreconditionError("probe vector has no stable or unstable component");
  out.direction = out.stable_norm > 1e-14 * scale ? -1 : 1;
  const double grow = out.direction < 0 ? out.stable_norm : out.unstable_norm;
  const double decay = out.direction < 0 ? out.unstable_norm : out.stable_norm;

  const auto& g = spec.rate;
  const double l0 = g.log_mu(0.0);
  for (int i = 1; i <= samples; ++i) {
    const double t = out.direction * horizon * i / samples;
    cache.require(t, "no_bounded_solution_probe");
    // w = (mu(0)/mu(t))^alpha backward, (mu(t)/mu(0))^alpha forward; w >= 1.
    const double w = std::exp(spec.alpha * out.direction * (g.log_mu(t) - l0));
    const double lower = grow * w / spec.K - spec.K * decay / w;
    const double actual = cache.transition(t, 0.0).operator*(v).norm();
    out.max_norm = std::max(out.max_norm, actual);
    if (actual > 0.0) out.worst_bound_ratio = std::max(out.worst_bound_ratio, lower / actual);
    if (!out.observed_crossing && actual > threshold) out.observed_crossing = t;
    if (!out.predicted_crossing && lower > threshold) out.predicted_crossing = t;
  }
  const bool consistent = out.worst_bound_ratio <= 1.0 + 1e-6;
  out.pass = consistent && out.observed_crossing.has_value();
  return out;
}

}  // namespace algdich
