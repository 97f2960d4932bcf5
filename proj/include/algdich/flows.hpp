#pragma once

// Solutions X(t, t0, x0) of the perturbed system and Y(t, t0, y0) of the
// linear one, and the Gronwall-type separation bounds between solutions.

#include "algdich/errors.hpp"
#include "algdich/ode.hpp"
#include "algdich/problem.hpp"
#include "algdich/types.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace algdich {

namespace detail {

inline OdeRhs perturbed_rhs(const ConjugacyProblem& problem) {
  return [&problem](double t, const Vector& x, Vector& dx) {
    dx.noalias() = problem.system()(t) * x;
    dx += problem.term()(t, x);
  };
}

inline void require_state(const ConjugacyProblem& problem, const Vector& x, const char* what) {
  if (x.size() != problem.dimension())
    throw PreconditionError(std::string(what) + ": state has wrong size");
}

}  // namespace detail

/// X(t, t0, x0); t < t0 integrates backward.
inline Vector nonlinear_flow(const ConjugacyProblem& problem, double t0, const Vector& x0,
                             double t) {
  problem.cache().require(t0, "nonlinear_flow");
  problem.cache().require(t, "nonlinear_flow");
  detail::require_state(problem, x0, "nonlinear_flow");
  if (t == t0) return x0;
  return integrate(detail::perturbed_rhs(problem), t0, x0, t, problem.options().flow);
}

/// Dense solution s -> X(s, t0, x0) between t0 and t_end.
inline DenseTrajectory nonlinear_trajectory(const ConjugacyProblem& problem, double t0,
                                            const Vector& x0, double t_end) {
  problem.cache().require(t0, "nonlinear_trajectory");
  problem.cache().require(t_end, "nonlinear_trajectory");
  detail::require_state(problem, x0, "nonlinear_trajectory");
  if (t_end == t0) return DenseTrajectory(t0, x0);
  return integrate_dense(detail::perturbed_rhs(problem), t0, x0, t_end, problem.options().flow);
}

/// Dense solution assembled from consecutive pieces, each integrated with
/// its own tolerances.
class PiecewiseTrajectory {
 public:
  PiecewiseTrajectory(double t0, Vector x0) : t0_(t0), x0_(std::move(x0)) {}

  void append(DenseTrajectory piece) { pieces_.push_back(std::move(piece)); }

  double t_begin() const noexcept { return t0_; }
  double t_end() const noexcept { return pieces_.empty() ? t0_ : pieces_.back().t_end(); }
  const Vector& end_state() const { return pieces_.empty() ? x0_ : pieces_.back().end_state(); }

  std::size_t steps() const noexcept {
    std::size_t n = 0;
    for (const auto& p : pieces_) n += p.steps();
    return n;
  }

  Vector operator()(double s) const {
    if (s == t0_) return x0_;
    // Pieces are ordered away from t0; the first covering piece wins.
    for (const auto& p : pieces_)
      if (p.covers(s)) return p(s);
    std::ostringstream os;
    os << "trajectory from " << t0_ << " to " << t_end() << " queried at t = " << s;
    throw IntervalError(os.str());
  }

 private:
  double t0_;
  Vector x0_;
  std::vector<DenseTrajectory> pieces_;
};

/// X(s, t0, x0) between t0 and t_end, integrated in pieces of length `piece`;
/// the tolerances of a piece are multiplied by relax(r) where r is the end of
/// the piece nearest to t0 (relax >= 1 loosens).
template <class Relax>
PiecewiseTrajectory relaxed_trajectory(const ConjugacyProblem& problem, double t0,
                                       const Vector& x0, double t_end, Relax&& relax,
                                       double piece = 1.0) {
  problem.cache().require(t0, "relaxed_trajectory");
  problem.cache().require(t_end, "relaxed_trajectory");
  detail::require_state(problem, x0, "relaxed_trajectory");
  PiecewiseTrajectory out(t0, x0);
  const double dir = t_end >= t0 ? 1.0 : -1.0;
  const auto rhs = detail::perturbed_rhs(problem);
  double a = t0;
  Vector x = x0;
  while (dir * (t_end - a) > 0.0) {
    const double b = dir * (t_end - a) > piece * 1.000001 ? a + dir * piece : t_end;
    IntegratorConfig cfg = problem.options().flow;
    const double factor = std::max(1.0, relax(a));
    cfg.rtol *= factor;
    cfg.atol *= factor;
    auto traj = integrate_dense(rhs, a, x, b, cfg);
    x = traj.end_state();
    out.append(std::move(traj));
    a = b;
  }
  return out;
}

struct GronwallReport {
  double worst_nonlinear_ratio = 0.0;
  double worst_linear_ratio = 0.0;
  double worst_t = 0.0;
  double slack = 0.0;

  bool pass() const noexcept {
    return worst_nonlinear_ratio <= 1.0 + slack && worst_linear_ratio <= 1.0 + slack;
  }
};

/// Compares ||X(t,t0,x0) - X(t,t0,x0')|| with ||x0-x0'|| e^{M(t-t0)} (mu(t)/mu(t0))^gamma and
/// ||Y - Y'|| with ||y0-y0'|| e^{M(t-t0)} on every t of the grid (t >= t0).
inline GronwallReport gronwall_check(const ConjugacyProblem& problem, double t0, const Vector& x0,
                                     const Vector& x0_alt, std::span<const double> t_grid,
                                     double slack = 1e-6) {
  GronwallReport out;
  out.slack = slack;
  if (t_grid.empty()) return out;
  double t_max = t0;
  for (double t : t_grid) {
    if (t < t0) throw PreconditionError("gronwall_check needs t >= t0 on the grid");
    t_max = std::max(t_max, t);
  }
  const double d0 = (x0 - x0_alt).norm();
  if (d0 == 0.0) return out;

  const auto a = nonlinear_trajectory(problem, t0, x0, t_max);
  const auto b = nonlinear_trajectory(problem, t0, x0_alt, t_max);
  const double M = problem.system().norm_bound;
  const double gamma = problem.gamma();
  const auto& g = problem.rate();
  double worst = -1.0;
  for (double t : t_grid) {
    const double growth = std::exp(M * (t - t0));
    const double weight = std::exp(gamma * (g.log_mu(t) - g.log_mu(t0)));
    const double rn = (a(t) - b(t)).norm() / (d0 * growth * weight);
    const double rl = linear_flow(problem.cache(), t0, x0 - x0_alt, t).norm() / (d0 * growth);
    out.worst_nonlinear_ratio = std::max(out.worst_nonlinear_ratio, rn);
    out.worst_linear_ratio = std::max(out.worst_linear_ratio, rl);
    if (std::max(rn, rl) > worst) {
      worst = std::max(rn, rl);
      out.worst_t = t;
    }
  }
  return out;
}

}  // namespace algdich
