#pragma once

// The conjugacy H(t,x) = x + h(t,(t,x)) and its inverse G(t,y) = y + g(t,(t,y)).
//
//   h(t,(tau,xi)) = -int_{-inf}^t T(t,s)P(s) f(s, X(s,tau,xi)) ds
//                   +int_t^{+inf} T(t,s)Q(s) f(s, X(s,tau,xi)) ds
//
// is evaluated directly by adaptive quadrature. g is the fixed point of
//
//   z(t) = int_{-inf}^t T(t,s)P(s) f(s, Y(s)+z(s)) ds - int_t^{+inf} T(t,s)Q(s) f(s, Y(s)+z(s)) ds
//
// solved by Picard iteration on a collocation grid. Both improper integrals
// are cut where the dichotomy tail bound (K beta/alpha) * weight drops below
// tail_tol.

#include "algdich/errors.hpp"
#include "algdich/flows.hpp"
#include "algdich/problem.hpp"
#include "algdich/quadrature.hpp"
#include "algdich/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <queue>
#include <span>
#include <sstream>
#include <vector>

namespace algdich {

enum class Side { stable, unstable };

inline const char* to_string(Side s) { return s == Side::stable ? "stable" : "unstable"; }

/// Smallest T >= 0 with (K beta/alpha) (mu(t-T)/mu(t))^alpha <= tol (stable)
/// or (K beta/alpha) (mu(t)/mu(t+T))^alpha <= tol (unstable).
inline double truncation_radius(const ConjugacyProblem& problem, double t, Side side,
                                double tol) {
  if (!(tol > 0.0)) throw PreconditionError("tail tolerance must be positive");
  const double c = problem.K() * problem.beta() / problem.alpha();
  if (c <= tol) return 0.0;
  const auto& g = problem.rate();
  const double alpha = problem.alpha();
  const double need = std::log(c / tol);  // required alpha * |log mu difference|
  const double lt = g.log_mu(t);
  auto decay = [&](double T) {
    return side == Side::stable ? alpha * (lt - g.log_mu(t - T)) : alpha * (g.log_mu(t + T) - lt);
  };
  double hi = 1.0;
  int doublings = 0;
  while (!(decay(hi) >= need)) {
    hi *= 2.0;
    if (++doublings > 60) {
      throw IntervalError("truncation radius does not exist: the growth rate does not reach " +
                          std::string("the required decay"));
    }
  }
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (decay(mid) >= need ? hi : lo) = mid;
  }
  const double end = side == Side::stable ? t - hi : t + hi;
  if (!problem.working().contains(end)) {
    std::ostringstream os;
    os << "truncated " << to_string(side) << " tail at t = " << t << " needs time " << end
       << ", outside the working interval " << to_string(problem.working())
       << "; enlarge [t_min, t_max] or loosen tail_tol";
    throw IntervalError(os.str());
  }
  return hi;
}

inline double truncation_radius(const ConjugacyProblem& problem, double t, Side side) {
  return truncation_radius(problem, t, side, problem.options().quad.tail_tol);
}

namespace detail {

/// Integral over [a,b] of the dichotomy bound K w(t,s) beta mu'(s)/mu(s).
inline MagnitudeBound tail_magnitude(const ConjugacyProblem& problem, double t, Side side,
                                     double lipschitz_or_sup) {
  const double c = problem.K() * lipschitz_or_sup / problem.alpha();
  const double alpha = problem.alpha();
  const GrowthRate g = problem.rate();
  const double lt = g.log_mu(t);
  return [=](double a, double b) {
    if (side == Side::stable) {
      return c * (std::exp(alpha * (g.log_mu(b) - lt)) - std::exp(alpha * (g.log_mu(a) - lt)));
    }
    return c * (std::exp(-alpha * (g.log_mu(a) - lt)) - std::exp(-alpha * (g.log_mu(b) - lt)));
  };
}

}  // namespace detail

struct GreenIntegral {
  Vector value;
  /// Adaptive quadrature error estimate (both sides).
  double quadrature_error = 0.0;
  /// Tail bound actually cut off (both sides).
  double tail_error = 0.0;
  double stable_radius = 0.0;
  double unstable_radius = 0.0;
  std::size_t panels = 0;
  std::size_t evaluations = 0;
  std::size_t trajectory_steps = 0;
};

/// h(t,(tau,xi)) with its error accounting.
inline GreenIntegral green_integral_h_detailed(const ConjugacyProblem& problem, double t,
                                               double tau, const Vector& xi) {
  const auto& cache = problem.cache();
  cache.require(t, "green_integral_h");
  cache.require(tau, "green_integral_h");
  detail::require_state(problem, xi, "green_integral_h");
  const auto n = problem.dimension();
  const auto& q = problem.options().quad;

  GreenIntegral out;
  out.value = Vector::Zero(n);
  if (problem.beta() == 0.0) return out;

  out.stable_radius = truncation_radius(problem, t, Side::stable);
  out.unstable_radius = truncation_radius(problem, t, Side::unstable);
  const double lo = t - out.stable_radius;
  const double hi = t + out.unstable_radius;
  {
    const double c = problem.K() * problem.beta() / problem.alpha();
    const auto& g = problem.rate();
    out.tail_error = c * std::exp(-problem.alpha() * (g.log_mu(t) - g.log_mu(lo))) +
                     c * std::exp(-problem.alpha() * (g.log_mu(hi) - g.log_mu(t)));
  }

  // X(s, tau, xi) on [min(lo,tau), max(hi,tau)]. An error in X(s) enters h
  // multiplied by the dichotomy weight between s and t, so far from t the
  // trajectory tolerances are relaxed by weight^{-relaxation}.
  const auto& g = problem.rate();
  const double lt = g.log_mu(t);
  const double relax_power = q.trajectory_relaxation * problem.alpha();
  auto relax = [&](double s) {
    return std::min(q.max_relaxation, std::exp(relax_power * std::abs(g.log_mu(s) - lt)));
  };
  const auto back = relaxed_trajectory(problem, tau, xi, std::min(lo, tau), relax);
  const auto fwd = relaxed_trajectory(problem, tau, xi, std::max(hi, tau), relax);
  out.trajectory_steps = back.steps() + fwd.steps();
  auto X = [&](double s) { return s <= tau ? back(s) : fwd(s); };

  AdaptiveOptions opt;
  opt.abs_tol = 0.5 * q.panel_tol;
  opt.max_panels = q.max_panels;
  opt.initial_panel_length = q.initial_panel_length;

  MatrixFunction P = [&problem](double s) { return problem.stable_projector(s); };
  MatrixFunction Q = [&problem](double s) { return problem.unstable_projector(s); };
  const auto& term = problem.term();

  if (lo < t) {
    const auto kernel = cache.anchored(t, P, true);
    auto integrand = [&](double s) -> Vector { return kernel(s) * term(s, X(s)); };
    const auto r = integrate_adaptive(integrand, lo, t, n, opt,
                                      detail::tail_magnitude(problem, t, Side::stable,
                                                             problem.beta()));
    out.value -= r.value;
    out.quadrature_error += r.error_estimate;
    out.panels += r.panels;
    out.evaluations += r.evaluations;
  }
  if (hi > t) {
    const auto kernel = cache.anchored(t, Q, false);
    auto integrand = [&](double s) -> Vector { return kernel(s) * term(s, X(s)); };
    const auto r = integrate_adaptive(integrand, t, hi, n, opt,
                                      detail::tail_magnitude(problem, t, Side::unstable,
                                                             problem.beta()));
    out.value += r.value;
    out.quadrature_error += r.error_estimate;
    out.panels += r.panels;
    out.evaluations += r.evaluations;
  }
  return out;
}

inline Vector green_integral_h(const ConjugacyProblem& problem, double t, double tau,
                               const Vector& xi) {
  return green_integral_h_detailed(problem, t, tau, xi).value;
}

/// H(t,x) = x + h(t,(t,x)).
inline Vector forward_map_H(const ConjugacyProblem& problem, double t, const Vector& x) {
  return x + green_integral_h(problem, t, t, x);
}

// ---------------------------------------------------------------------------
// Picard iteration for g.

struct PicardResult {
  /// Collocation grid r_0 < ... < r_N covering the window; tau is a node.
  std::vector<double> grid;
  /// z and z' on the grid after the last iteration.
  std::vector<Vector> values;
  std::vector<Vector> derivatives;
  /// Y(r_k, tau, xi) on the grid.
  std::vector<Vector> linear;
  Interval window;
  Interval request;
  int iterations = 0;
  double final_delta = 0.0;
  /// Sup-norm of successive differences, one entry per iteration.
  std::vector<double> deltas;
  /// deltas[m] / deltas[m-1] for m >= 1.
  std::vector<double> ratios;
  double max_iterate_norm = 0.0;
  double stop_threshold = 0.0;
  std::size_t nodes = 0;
  std::size_t panels = 0;
  /// Influence-weighted quadrature error estimate of the frozen node set.
  double quadrature_error = 0.0;

  double max_ratio() const {
    double r = 0.0;
    for (double x : ratios) r = std::max(r, x);
    return r;
  }

  /// Piecewise cubic Hermite interpolation of z; zero outside the window.
  Vector operator()(double s) const {
    if (!window.contains(s)) return Vector::Zero(values.front().size());
    std::array<double, 4> w{};
    const std::size_t k = hermite(s, w);
    return w[0] * values[k] + w[1] * derivatives[k] + w[2] * values[k + 1] +
           w[3] * derivatives[k + 1];
  }

  /// Cell k containing s and the Hermite weights of z_k, z'_k, z_{k+1}, z'_{k+1}.
  std::size_t hermite(double s, std::array<double, 4>& w) const {
    const std::size_t last = grid.size() - 1;
    const double h = grid[1] - grid[0];
    auto k = static_cast<std::ptrdiff_t>(std::floor((s - grid.front()) / h));
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(last) - 1);
    const auto ku = static_cast<std::size_t>(k);
    const double x = (s - grid[ku]) / h;
    const double x2 = x * x, x3 = x2 * x;
    w = {2 * x3 - 3 * x2 + 1, h * (x3 - 2 * x2 + x), 3 * x2 - 2 * x3, h * (x3 - x2)};
    return ku;
  }
};

namespace detail {

/// Quadrature nodes of the collocation cells, frozen for all iterations and
/// stored flat: node i of the whole window has time s[i], weight w[i], the
/// linear solution Y(s_i) and the kernels T(r_{k+1},s)P(s), T(r_k,s)Q(s).
struct PicardNodes {
  Eigen::Index n = 0;
  std::vector<std::size_t> cell_begin;  // nodes of cell k: [cell_begin[k], cell_begin[k+1])
  std::vector<double> s;
  std::vector<double> w;
  std::vector<double> y;         // n per node
  std::vector<double> stable;    // n*n per node, column major
  std::vector<double> unstable;  // n*n per node
  std::vector<std::array<double, 4>> hermite;

  std::size_t size() const noexcept { return s.size(); }
};

struct CellPanel {
  std::size_t cell = 0;
  double a = 0.0;
  double b = 0.0;
  double weighted_error = 0.0;
};

}  // namespace detail

/// Fixed point z = g(., (tau, xi)) on a window that extends `request` by the
/// truncation radii. The result can be evaluated anywhere in the window; it is
/// accurate to the configured tolerances on `request`.
inline PicardResult picard_g(const ConjugacyProblem& problem, double tau, const Vector& xi,
                             Interval request) {
  const auto& cache = problem.cache();
  cache.require(tau, "picard_g");
  detail::require_state(problem, xi, "picard_g");
  if (request.hi < request.lo) throw PreconditionError("picard_g request interval is reversed");
  const auto n = problem.dimension();
  const auto& pc = problem.options().picard;
  const auto& g = problem.rate();
  const auto& term = problem.term();

  const double rs = std::max(truncation_radius(problem, request.lo, Side::stable),
                             truncation_radius(problem, request.hi, Side::stable));
  const double ru = std::max(truncation_radius(problem, request.lo, Side::unstable),
                             truncation_radius(problem, request.hi, Side::unstable));
  if (request.lo - rs < problem.working().lo || request.hi + ru > problem.working().hi) {
    std::ostringstream os;
    os << "Picard window for request " << to_string(request) << " needs ["
       << request.lo - rs << ", " << request.hi + ru << "], outside the working interval "
       << to_string(problem.working()) << "; enlarge [t_min, t_max]";
    throw IntervalError(os.str());
  }
  const double h = pc.grid_spacing;
  double wlo = std::min(request.lo - pc.window_factor * rs, tau);
  double whi = std::max(request.hi + pc.window_factor * ru, tau);
  wlo = std::max(wlo, problem.working().lo);
  whi = std::min(whi, problem.working().hi);

  PicardResult res;
  res.request = request;
  {
    auto below = static_cast<long>(std::floor((tau - wlo) / h + 1e-9));
    auto above = static_cast<long>(std::floor((whi - tau) / h + 1e-9));
    while (below + above < 1) {
      // A window needs at least one cell.
      if (tau + static_cast<double>(above + 1) * h <= problem.working().hi) {
        ++above;
      } else {
        ++below;
      }
    }
    for (long k = -below; k <= above; ++k) res.grid.push_back(tau + static_cast<double>(k) * h);
    res.window = {res.grid.front(), res.grid.back()};
    for (double r : res.grid) cache.require(r, "picard_g grid");
  }
  const std::size_t N = res.grid.size() - 1;
  const auto& grid = res.grid;

  // Y on the grid by stepping away from tau (a grid node).
  std::size_t tau_index = 0;
  for (std::size_t k = 0; k <= N; ++k)
    if (std::abs(grid[k] - tau) < std::abs(grid[tau_index] - tau)) tau_index = k;
  std::vector<Vector> ygrid(N + 1);
  ygrid[tau_index] = xi;
  for (std::size_t k = tau_index; k < N; ++k)
    ygrid[k + 1] = cache.transition(grid[k + 1], grid[k]) * ygrid[k];
  for (std::size_t k = tau_index; k > 0; --k)
    ygrid[k - 1] = cache.transition(grid[k - 1], grid[k]) * ygrid[k];
  auto Y = [&](double s, std::size_t k) {
    const std::size_t from = k + 1 <= tau_index ? k + 1 : k;
    return (cache.transition(s, grid[from]) * ygrid[from]).eval();
  };

  const double K = problem.K();
  const double alpha = problem.alpha();
  const double beta = problem.beta();
  auto influence = [&](double a, double b) {
    // K (mu ratio)^{-alpha} from the panel to the nearest request time.
    double d = 0.0;
    if (b < request.lo) d = g.log_mu(request.lo) - g.log_mu(b);
    if (a > request.hi) d = g.log_mu(a) - g.log_mu(request.hi);
    return K * std::exp(-alpha * d);
  };
  auto cell_integrand = [&](std::size_t k) {
    return [&, k](double s) -> Vector {
      const Vector f0 = term(s, Y(s, k));
      Vector v(2 * n);
      v.head(n) = cache.projected_transition(grid[k + 1], s, problem.stable_projector(s)) * f0;
      v.tail(n) = cache.projected_transition(grid[k], s, problem.unstable_projector(s)) * f0;
      return v;
    };
  };
  auto estimate = [&](std::size_t k, double a, double b) {
    const auto p = gk15_panel(cell_integrand(k), a, b);
    // Kernels are bounded by K inside a cell, so the panel integral is at most
    // 2 K beta (log mu(b) - log mu(a)).
    const double bound = 2.0 * K * beta * (g.log_mu(b) - g.log_mu(a));
    const double err = std::min(p.error, p.kronrod.norm() + bound);
    return detail::CellPanel{k, a, b, influence(a, b) * err};
  };

  // Global adaptive refinement of the first iterate's integrand, weighted by
  // each panel's influence on the request interval.
  auto cmp = [](const detail::CellPanel& x, const detail::CellPanel& y) {
    return x.weighted_error < y.weighted_error;
  };
  std::priority_queue<detail::CellPanel, std::vector<detail::CellPanel>, decltype(cmp)> heap(cmp);
  double total = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    auto p = estimate(k, grid[k], grid[k + 1]);
    total += p.weighted_error;
    heap.push(p);
  }
  while (total > pc.quad_tol) {
    if (heap.size() >= pc.max_panels) {
      std::ostringstream os;
      os << "Picard quadrature reached " << pc.max_panels << " panels with weighted error "
         << total << " > " << pc.quad_tol;
      throw QuadratureError(os.str());
    }
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b))
      throw QuadratureError("Picard quadrature panel collapsed near t = " + std::to_string(mid));
    const auto left = estimate(worst.cell, worst.a, mid);
    const auto right = estimate(worst.cell, mid, worst.b);
    total += left.weighted_error + right.weighted_error - worst.weighted_error;
    heap.push(left);
    heap.push(right);
  }
  std::vector<detail::CellPanel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const auto& x, const auto& y) {
    return x.cell != y.cell ? x.cell < y.cell : x.a < y.a;
  });

  detail::PicardNodes nodes;
  nodes.n = n;
  const std::size_t count = 15 * panels.size();
  nodes.s.reserve(count);
  nodes.w.reserve(count);
  nodes.y.reserve(count * static_cast<std::size_t>(n));
  nodes.stable.reserve(count * static_cast<std::size_t>(n * n));
  nodes.unstable.reserve(count * static_cast<std::size_t>(n * n));
  nodes.hermite.reserve(count);
  nodes.cell_begin.assign(N + 1, 0);
  std::size_t next_panel = 0;
  for (std::size_t k = 0; k < N; ++k) {
    nodes.cell_begin[k] = nodes.size();
    for (; next_panel < panels.size() && panels[next_panel].cell == k; ++next_panel) {
      const auto& pn = panels[next_panel];
      const double c = 0.5 * (pn.a + pn.b), hw = 0.5 * (pn.b - pn.a);
      for (std::size_t j = 0; j < 15; ++j) {
        const std::size_t m = j < 8 ? j : 14 - j;
        const double x = j < 7 ? -gk15::nodes[j] : j == 7 ? 0.0 : gk15::nodes[m];
        const double s = c + hw * x;
        nodes.s.push_back(s);
        nodes.w.push_back(hw * gk15::kronrod_weights[m]);
        const Vector y = Y(s, k);
        nodes.y.insert(nodes.y.end(), y.data(), y.data() + n);
        const Matrix ps = cache.projected_transition(grid[k + 1], s, problem.stable_projector(s));
        const Matrix qs = cache.projected_transition(grid[k], s, problem.unstable_projector(s));
        nodes.stable.insert(nodes.stable.end(), ps.data(), ps.data() + n * n);
        nodes.unstable.insert(nodes.unstable.end(), qs.data(), qs.data() + n * n);
        std::array<double, 4> hw4{};
        res.hermite(s, hw4);
        nodes.hermite.push_back(hw4);
      }
    }
  }
  nodes.cell_begin[N] = nodes.size();
  res.nodes = nodes.size();
  res.panels = panels.size();
  res.quadrature_error = total;

  std::vector<Matrix> forward(N), backward(N);
  for (std::size_t k = 0; k < N; ++k) {
    forward[k] = cache.projected_transition(grid[k + 1], grid[k], problem.stable_projector(grid[k]));
    backward[k] =
        cache.projected_transition(grid[k], grid[k + 1], problem.unstable_projector(grid[k + 1]));
  }

  const double rho = problem.contraction_constant();
  res.stop_threshold = rho <= 0.0  ? INFINITY
                       : rho < 1.0 ? pc.stop_tol * (1.0 - rho) / rho
                                   : pc.stop_tol;

  using MapV = Eigen::Map<const Vector>;
  using MapM = Eigen::Map<const Matrix>;
  // Iterate m + 1 solves z' = A z + f(s, Y + z_m); its node derivatives feed
  // the Hermite interpolation used inside the next sweep.
  std::vector<Matrix> agrid(N + 1);
  for (std::size_t k = 0; k <= N; ++k) agrid[k] = problem.system()(grid[k]);
  std::vector<Vector> z(N + 1, Vector::Zero(n)), dz(N + 1, Vector::Zero(n));
  std::vector<Vector> u(N + 1), v(N + 1);
  // Per-node products T(.,s)P(s)F(s) and T(.,s)Q(s)F(s) of the current iterate.
  Vector zs(n), arg(n), fs(n);
  for (int m = 0; m < pc.max_iter; ++m) {
    u[0] = Vector::Zero(n);
    v[N] = Vector::Zero(n);
    std::vector<Vector> cell_stable(N, Vector::Zero(n)), cell_unstable(N, Vector::Zero(n));
    for (std::size_t k = 0; k < N; ++k) {
      for (std::size_t i = nodes.cell_begin[k]; i < nodes.cell_begin[k + 1]; ++i) {
        const auto& hw4 = nodes.hermite[i];
        zs = hw4[0] * z[k] + hw4[1] * dz[k] + hw4[2] * z[k + 1] + hw4[3] * dz[k + 1];
        const auto ni = static_cast<Eigen::Index>(i);
        arg = MapV(nodes.y.data() + ni * n, n) + zs;
        fs = term(nodes.s[i], arg);
        cell_stable[k] += nodes.w[i] * (MapM(nodes.stable.data() + ni * n * n, n, n) * fs);
        cell_unstable[k] += nodes.w[i] * (MapM(nodes.unstable.data() + ni * n * n, n, n) * fs);
      }
    }
    for (std::size_t k = 0; k < N; ++k) u[k + 1] = forward[k] * u[k] + cell_stable[k];
    for (std::size_t k = N; k-- > 0;) v[k] = backward[k] * v[k + 1] + cell_unstable[k];

    double delta = 0.0, norm = 0.0;
    for (std::size_t k = 0; k <= N; ++k) {
      Vector next = u[k] - v[k];
      if (!next.allFinite()) throw EvaluationError("Picard iterate is not finite");
      delta = std::max(delta, (next - z[k]).norm());
      norm = std::max(norm, next.norm());
      dz[k] = agrid[k] * next + term(grid[k], ygrid[k] + z[k]);
      z[k] = std::move(next);
    }
    res.iterations = m + 1;
    if (!res.deltas.empty() && res.deltas.back() > 0.0)
      res.ratios.push_back(delta / res.deltas.back());
    res.deltas.push_back(delta);
    res.final_delta = delta;
    res.max_iterate_norm = std::max(res.max_iterate_norm, norm);
    if (rho <= 0.0 || delta <= res.stop_threshold || delta == 0.0) {
      res.values = std::move(z);
      res.derivatives = std::move(dz);
      res.linear = std::move(ygrid);
      return res;
    }
  }
  std::ostringstream os;
  os << "Picard iteration for g did not converge in " << pc.max_iter
     << " iterations (last delta " << res.final_delta << ", threshold " << res.stop_threshold
     << "); check the conjugacy gate or refine the grid";
  throw ConvergenceError(os.str(), res.final_delta);
}

/// g(s) from the nearest grid node: Y + g is a solution of the perturbed
/// system, so g(s) = X(s, r_k, Y_k + g_k) - T(s, r_k) Y_k. Unlike the Hermite
/// interpolant this stays accurate when g oscillates faster than the grid.
inline Vector evaluate_g(const ConjugacyProblem& problem, const PicardResult& r, double s) {
  if (!r.window.contains(s)) {
    throw IntervalError("g evaluated at t = " + std::to_string(s) + " outside its window " +
                        to_string(r.window));
  }
  const double h = r.grid[1] - r.grid[0];
  const auto k = static_cast<std::size_t>(std::clamp<double>(
      std::round((s - r.grid.front()) / h), 0.0, static_cast<double>(r.grid.size() - 1)));
  const double rk = r.grid[k];
  if (std::abs(s - rk) <= 1e-12 * std::max(1.0, std::abs(s))) return r.values[k];
  const Vector x = nonlinear_flow(problem, rk, r.linear[k] + r.values[k], s);
  return x - problem.cache().transition(s, rk) * r.linear[k];
}

/// G(t,y) = y + g(t,(t,y)).
inline Vector inverse_map_G(const ConjugacyProblem& problem, double t, const Vector& y) {
  const auto r = picard_g(problem, t, y, {t, t});
  return y + r(t);
}

// ---------------------------------------------------------------------------
// Hölder constants of H and G from the regularity proof.

struct HolderConstants {
  double p = 0.0;
  double q = 0.0;
  double M_tilde = 0.0;
  /// Largest tau = ln(1/d)/(M+gamma) over the separations used.
  double tau_max = 0.0;
  double min_separation = 0.0;
  /// G side; empty when 2 K gamma e / alpha >= 1 makes lambda undefined.
  std::optional<double> lambda;
  std::optional<double> p_prime;
  std::optional<double> q_prime;
  /// Whether ln(mu(t+tau)/mu(t)) < 1/alpha held for every separation.
  bool q_prime_log_condition = false;

  double require_p_prime() const {
    if (!p_prime) throw PreconditionError("lambda undefined: 2*K*gamma*e/alpha >= 1");
    return *p_prime;
  }
};

/// Constants at time t, with M~ made concrete for the given separations in (0,1).
inline HolderConstants theoretical_holder_constants(const ConjugacyProblem& problem, double t,
                                                    std::span<const double> separations) {
  const double K = problem.K(), alpha = problem.alpha(), beta = problem.beta(),
               gamma = problem.gamma();
  const double M = problem.system().norm_bound;
  if (!(alpha > gamma)) {
    throw GateError(kHolderGate, std::string("Hölder gate ") + kHolderGate + " fails: alpha = " +
                                     std::to_string(alpha) + ", gamma = " + std::to_string(gamma));
  }
  // gamma = 0 is allowed and gives q = 0, i.e. the bound ||H(x) - H(x')|| <= p.
  if (!(M + gamma > 0.0)) throw PreconditionError("Hölder constants need M + gamma > 0");
  if (separations.empty()) throw PreconditionError("need at least one separation");
  const auto& g = problem.rate();

  HolderConstants hc;
  hc.p = 1.0 + 4.0 * K * beta / alpha + K * gamma / (alpha + gamma) + K * gamma / (alpha - gamma);
  hc.M_tilde = std::max(alpha, M);
  hc.min_separation = separations.front();
  double log_term_min = INFINITY;
  bool log_ok = true;
  const double lt = g.log_mu(t);
  for (double d : separations) {
    if (!(d > 0.0 && d < 1.0)) throw PreconditionError("separations must lie in (0, 1)");
    hc.min_separation = std::min(hc.min_separation, d);
    const double tau = std::log(1.0 / d) / (M + gamma);
    hc.tau_max = std::max(hc.tau_max, tau);
    const double ld = std::log(d);
    const double back = g.log_mu(t - tau) - lt;   // log of mu(t-tau)/mu(t) < 0
    const double ahead = lt - g.log_mu(t + tau);  // log of mu(t)/mu(t+tau) < 0
    hc.M_tilde = std::max(hc.M_tilde, std::floor(ld / back) + 1.0);
    hc.M_tilde = std::max(hc.M_tilde, std::floor(ld / ahead) + 1.0);
    const double growth = -ahead;  // ln(mu(t+tau)/mu(t))
    log_term_min = std::min(log_term_min, alpha / (M * tau) * growth);
    log_ok = log_ok && growth < 1.0 / alpha;
  }
  hc.q = std::min(alpha / hc.M_tilde, gamma / (M + gamma));

  const double denom = 1.0 - 2.0 * K * gamma * std::numbers::e / alpha;
  if (denom > 0.0) {
    const double bound = (4.0 * K * beta / alpha + 2.0 * K * gamma / alpha) / denom;
    hc.lambda = bound * (1.0 + 1e-6);
    hc.p_prime = 1.0 + *hc.lambda;
    hc.q_prime = std::min({alpha / hc.M_tilde, gamma / (M + gamma), log_term_min});
    hc.q_prime_log_condition = log_ok;
  }
  return hc;
}

}  // namespace algdich
