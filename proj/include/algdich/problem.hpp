#pragma once

// The perturbed system x' = A(t)x + f(t,x) together with everything needed to
// build its conjugacy: dichotomy data, numerical configuration and the
// hypotheses (gates) checked once at construction.

#include "algdich/dichotomy.hpp"
#include "algdich/errors.hpp"
#include "algdich/evolution.hpp"
#include "algdich/growth_rate.hpp"
#include "algdich/ode.hpp"
#include "algdich/types.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>

namespace algdich {

using NonlinearFunction = std::function<Vector(double, const Vector&)>;

struct NonlinearTerm {
  NonlinearFunction f;
  /// ||f(t,x)|| <= beta mu'(t)/mu(t).
  double beta = 0.0;
  /// ||f(t,x) - f(t,y)|| <= gamma mu'(t)/mu(t) ||x - y||.
  double gamma = 0.0;
  GrowthRate rate;
  /// Set when beta / gamma were estimated by sampling instead of declared.
  bool beta_estimated = false;
  bool gamma_estimated = false;

  Vector operator()(double t, const Vector& x) const {
    Vector v = f(t, x);
    if (v.size() != x.size() || !v.allFinite()) {
      throw EvaluationError("nonlinear term is not finite or has wrong size at t = " +
                            std::to_string(t));
    }
    return v;
  }
};

/// The zero perturbation in dimension n.
inline NonlinearTerm zero_term(Eigen::Index n, GrowthRate rate) {
  return NonlinearTerm{[n](double, const Vector&) { return Vector::Zero(n).eval(); }, 0.0, 0.0,
                       std::move(rate)};
}

struct TermCheck {
  double worst_sup_ratio = 0.0;        // ||f|| / (beta mu'/mu)
  double worst_lipschitz_ratio = 0.0;  // ||f(x)-f(y)|| / (gamma mu'/mu ||x-y||)
  bool pass = true;
};

/// Samples the two bounds on the given times and states (all pairs of states).
inline TermCheck check_nonlinear_term(const NonlinearTerm& term, std::span<const double> times,
                                      std::span<const Vector> states, double slack = 1e-9) {
  TermCheck out;
  for (double t : times) {
    const double w = term.rate.log_derivative(t);
    for (std::size_t i = 0; i < states.size(); ++i) {
      const Vector fi = term(t, states[i]);
      const double n = fi.norm();
      if (n > 0.0) {
        out.worst_sup_ratio =
            std::max(out.worst_sup_ratio, term.beta > 0.0 ? n / (term.beta * w) : INFINITY);
      }
      for (std::size_t j = i + 1; j < states.size(); ++j) {
        const double dx = (states[i] - states[j]).norm();
        const double df = (fi - term(t, states[j])).norm();
        if (dx == 0.0 || df == 0.0) continue;
        out.worst_lipschitz_ratio = std::max(
            out.worst_lipschitz_ratio, term.gamma > 0.0 ? df / (term.gamma * w * dx) : INFINITY);
      }
    }
  }
  out.pass = out.worst_sup_ratio <= 1.0 + slack && out.worst_lipschitz_ratio <= 1.0 + slack;
  return out;
}

/// Sampled beta and gamma, inflated by 5% and flagged as estimates.
inline NonlinearTerm with_estimated_constants(NonlinearTerm term, std::span<const double> times,
                                              std::span<const Vector> states) {
  term.beta = 1.0;
  term.gamma = 1.0;
  const auto c = check_nonlinear_term(term, times, states);
  term.beta = 1.05 * c.worst_sup_ratio;
  term.gamma = 1.05 * c.worst_lipschitz_ratio;
  term.beta_estimated = true;
  term.gamma_estimated = true;
  return term;
}

struct QuadratureConfig {
  /// Truncation error allowed in each improper tail.
  double tail_tol = 2e-7;
  /// Only "gk15" (adaptive Gauss-Kronrod 7/15) is provided.
  std::string panel_rule = "gk15";
  /// Absolute error target of the adaptive quadrature on the truncated range.
  double panel_tol = 2e-7;
  std::size_t max_panels = 400'000;
  double initial_panel_length = 0.5;
  /// Trajectory tolerances at time s are multiplied by
  /// min(max_relaxation, (dichotomy weight between s and t)^{-trajectory_relaxation}).
  /// Zero disables the relaxation.
  double trajectory_relaxation = 0.5;
  double max_relaxation = 1e6;
};

struct PicardConfig {
  double grid_spacing = 0.1;
  double stop_tol = 1e-7;
  int max_iter = 200;
  /// Target for the influence-weighted quadrature error of one sweep.
  double quad_tol = 1e-5;
  std::size_t max_panels = 400'000;
  /// The collocation window extends the request interval by this multiple of
  /// the truncation radius on each side.
  double window_factor = 1.25;
};

struct ProblemOptions {
  QuadratureConfig quad{};
  PicardConfig picard{};
  /// Integrator for nonlinear and linear trajectories.
  IntegratorConfig flow{};
  EvolutionConfig evolution{};
  /// Construct even when the conjugacy gate fails.
  bool override_gates = false;
};

/// Scales every tolerance of the options down by `factor` (>= 1 tightens).
/// Panel budgets grow by the same factor, since the oscillatory far field
/// needs a number of panels roughly proportional to 1/tolerance; the Picard
/// grid is refined so that its discretisation error shrinks alike.
inline ProblemOptions tightened(ProblemOptions o, double factor) {
  if (!(factor > 0.0)) throw PreconditionError("tightening factor must be positive");
  const auto scale = [factor](std::size_t n) {
    return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * std::max(1.0, factor)));
  };
  o.quad.max_panels = scale(o.quad.max_panels);
  o.picard.max_panels = scale(o.picard.max_panels);
  o.quad.tail_tol /= factor;
  o.quad.panel_tol /= factor;
  o.picard.stop_tol /= factor;
  o.picard.quad_tol /= factor;
  // The collocation error of g is about third order in the spacing; an integer
  // divisor keeps every node of the default grid a node.
  o.picard.grid_spacing /= std::ceil(std::sqrt(std::max(1.0, factor)));
  o.flow = tightened(o.flow, factor);
  o.evolution.integrator = tightened(o.evolution.integrator, factor);
  return o;
}

inline constexpr const char* kConjugacyGate = "6*K*gamma/alpha < 1";
inline constexpr const char* kHolderGate = "alpha > gamma";

class ConjugacyProblem {
 public:
  ConjugacyProblem(const LinearSystem& system, Interval working, DichotomySpec spec,
                   NonlinearTerm term, ProblemOptions options = {})
      : spec_(std::move(spec)), term_(std::move(term)), options_(std::move(options)) {
    if (!(spec_.K > 0.0) || !(spec_.alpha > 0.0))
      throw PreconditionError("dichotomy constants K and alpha must be positive");
    if (!(term_.beta >= 0.0) || !(term_.gamma >= 0.0))
      throw PreconditionError("beta and gamma must be nonnegative");
    const auto& q = options_.quad;
    if (!(q.tail_tol > 0.0) || !(q.panel_tol > 0.0))
      throw PreconditionError("tail_tol and panel_tol must be positive");
    if (q.panel_rule != "gk15")
      throw PreconditionError("unknown panel rule '" + q.panel_rule + "' (only gk15)");
    const auto& p = options_.picard;
    if (!(p.grid_spacing > 0.0) || !(p.stop_tol > 0.0) || !(p.quad_tol > 0.0) || p.max_iter < 1 ||
        !(p.window_factor >= 1.0)) {
      throw PreconditionError("invalid Picard configuration");
    }
    if (!gate_passed() && !options_.override_gates) {
      std::ostringstream os;
      os << "conjugacy gate " << kConjugacyGate << " fails: 6*" << spec_.K << "*" << term_.gamma
         << "/" << spec_.alpha << " = " << gate_value();
      throw GateError(kConjugacyGate, os.str());
    }
    cache_ = std::make_shared<const EvolutionCache>(system, working, options_.evolution);
  }

  const EvolutionCache& cache() const noexcept { return *cache_; }
  const LinearSystem& system() const noexcept { return cache_->system(); }
  const DichotomySpec& spec() const noexcept { return spec_; }
  const NonlinearTerm& term() const noexcept { return term_; }
  const GrowthRate& rate() const noexcept { return spec_.rate; }
  const ProblemOptions& options() const noexcept { return options_; }
  Interval working() const noexcept { return cache_->interval(); }
  Eigen::Index dimension() const noexcept { return cache_->dimension(); }

  double K() const noexcept { return spec_.K; }
  double alpha() const noexcept { return spec_.alpha; }
  double beta() const noexcept { return term_.beta; }
  double gamma() const noexcept { return term_.gamma; }

  double gate_value() const noexcept { return 6.0 * K() * gamma() / alpha(); }
  bool gate_passed() const noexcept { return gate_value() < 1.0; }
  bool holder_gate_passed() const noexcept { return alpha() > gamma(); }
  /// 2 K beta / alpha, the sup bound on H - id and G - id.
  double displacement_bound() const noexcept { return 2.0 * K() * beta() / alpha(); }
  /// 2 K gamma / alpha, the contraction constant of the G iteration.
  double contraction_constant() const noexcept { return 2.0 * K() * gamma() / alpha(); }

  Matrix stable_projector(double s) const { return spec_.projector(s); }
  Matrix unstable_projector(double s) const {
    const Matrix p = spec_.projector(s);
    return Matrix::Identity(p.rows(), p.cols()) - p;
  }

  /// Same problem with every tolerance divided by `factor`.
  ConjugacyProblem tightened(double factor) const {
    return ConjugacyProblem(system(), working(), spec_, term_,
                            algdich::tightened(options_, factor));
  }

 private:
  DichotomySpec spec_;
  NonlinearTerm term_;
  ProblemOptions options_;
  std::shared_ptr<const EvolutionCache> cache_;
};

}  // namespace algdich
