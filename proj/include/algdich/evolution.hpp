#pragma once

// Evolution operator T(t,s) of x' = A(t)x on a declared working interval.
//
// The interval is cut into uniform segments [k_j, k_{j+1}]. For each segment
// the cache integrates, once, four dense matrix trajectories
//
//   x -> T(x, k_j)      x -> T(x, k_{j+1})     (state equation, fwd / bwd)
//   x -> T(k_{j+1}, x)  x -> T(k_j, x)         (adjoint  Psi' = -Psi A)
//
// so any T(t,s) is a product of two short dense factors and whole-segment
// matrices, all obtained by integrating in the direction of the request.
// No fundamental matrix is ever inverted.

#include "algdich/errors.hpp"
#include "algdich/ode.hpp"
#include "algdich/types.hpp"

#include <cmath>
#include <sstream>
#include <span>
#include <string>
#include <vector>

namespace algdich {

struct LinearSystem {
  Eigen::Index dimension = 1;
  MatrixFunction coeff;
  /// M >= sup ||A(t)|| over the working interval.
  double norm_bound = 0.0;
  /// True when norm_bound comes from sampling rather than a closed form.
  bool norm_bound_estimated = false;
  std::string label;

  Matrix operator()(double t) const {
    Matrix a = coeff(t);
    if (a.rows() != dimension || a.cols() != dimension) {
      throw EvaluationError("coefficient matrix of '" + label + "' has wrong shape at t = " +
                            std::to_string(t));
    }
    if (!a.allFinite()) {
      throw EvaluationError("coefficient matrix of '" + label + "' is not finite at t = " +
                            std::to_string(t));
    }
    return a;
  }
};

/// Largest sampled ||A(t)||, for systems without a closed-form bound.
inline double sample_norm_bound(const MatrixFunction& coeff, std::span<const double> grid) {
  double m = 0.0;
  for (double t : grid) m = std::max(m, spectral_norm(coeff(t)));
  return m;
}

struct NormBoundCheck {
  double worst_norm = 0.0;
  double worst_t = 0.0;
  bool pass = true;
};

inline NormBoundCheck check_norm_bound(const LinearSystem& sys, std::span<const double> grid) {
  NormBoundCheck out;
  for (double t : grid) {
    const double n = spectral_norm(sys(t));
    if (n > out.worst_norm) {
      out.worst_norm = n;
      out.worst_t = t;
    }
  }
  out.pass = out.worst_norm <= sys.norm_bound * (1.0 + 1e-12);
  return out;
}

struct EvolutionConfig {
  double knot_spacing = 0.25;
  IntegratorConfig integrator{};
};

class EvolutionCache {
 public:
  EvolutionCache(LinearSystem system, Interval working, EvolutionConfig cfg = {})
      : system_(std::move(system)), working_(working), cfg_(cfg) {
    if (!(working_.hi > working_.lo))
      throw PreconditionError("working interval must be nonempty");
    if (!(cfg_.knot_spacing > 0.0)) throw PreconditionError("knot spacing must be positive");
    if (system_.dimension < 1) throw PreconditionError("system dimension must be positive");
    build();
  }

  const LinearSystem& system() const noexcept { return system_; }
  Interval interval() const noexcept { return working_; }
  const EvolutionConfig& config() const noexcept { return cfg_; }
  Eigen::Index dimension() const noexcept { return system_.dimension; }
  std::size_t segment_count() const noexcept { return segments_.size(); }
  double knot(std::size_t j) const { return j < segments_.size() ? segments_[j].lo : working_.hi; }
  std::size_t knot_count() const noexcept { return segments_.size() + 1; }

  /// Knot nearest to 0, where the fundamental matrix is exactly the identity.
  double anchor() const noexcept { return knot(anchor_index_); }

  void require(double t, const char* what) const {
    if (!working_.contains(t)) {
      std::ostringstream os;
      os << what << ": t = " << t << " outside working interval " << to_string(working_);
      throw IntervalError(os.str());
    }
  }

  /// T(t, s): maps x(s) to x(t).
  Matrix transition(double t, double s) const {
    require(t, "transition");
    require(s, "transition");
    const Eigen::Index n = dimension();
    if (t == s) return Matrix::Identity(n, n);
    return chain(t, s, Matrix::Identity(n, n), nullptr);
  }

  /// T(t, s) * projector, propagating only the projected columns.
  Matrix projected_transition(double t, double s, const Matrix& projector) const {
    require(t, "projected_transition");
    require(s, "projected_transition");
    check_square(projector);
    if (t == s) return projector;
    return chain(t, s, projector, nullptr);
  }

  /// T(t, s) * Pi(s) for a projector family Pi; the propagated columns are
  /// re-projected onto Pi(k) at every crossed knot k, which removes drift
  /// into the complementary subspace.
  Matrix projected_transition(double t, double s, const MatrixFunction& projector) const {
    require(t, "projected_transition");
    require(s, "projected_transition");
    Matrix p = projector(s);
    check_square(p);
    if (t == s) return p;
    return chain(t, s, p, &projector);
  }

  /// Phi(t) = T(t, anchor).
  Matrix fundamental(double t) const { return transition(t, anchor()); }

  /// Evaluates T(t, s) Pi(s) for a fixed t and s on one side of t, with the
  /// knot-to-t factors precomputed. This is the hot path of the Green integrals.
  class AnchoredKernel {
   public:
    Matrix operator()(double s) const {
      cache_->require(s, "anchored kernel");
      if (s == t_) return projector_(s);
      const std::size_t i = cache_->segment_index(s);
      const auto& segs = cache_->segments_;
      if (i == seg_t_) {
        return cache_->factor(segs[i].from_lo, t_) *
               (cache_->factor(segs[i].to_lo, s) * projector_(s));
      }
      if (stable_) {
        if (s > t_) throw PreconditionError("stable kernel evaluated at s > t");
        // s < k_{seg_t}: use knot k_{i+1} = segs[i].hi.
        return table_[i + 1] * (cache_->factor(segs[i].to_hi, s) * projector_(s));
      }
      if (s < t_) throw PreconditionError("unstable kernel evaluated at s < t");
      return table_[i] * (cache_->factor(segs[i].to_lo, s) * projector_(s));
    }

    double t() const noexcept { return t_; }

   private:
    friend class EvolutionCache;
    const EvolutionCache* cache_ = nullptr;
    double t_ = 0.0;
    bool stable_ = true;
    std::size_t seg_t_ = 0;
    MatrixFunction projector_;
    // table_[k] = T(t, knot k) Pi(knot k) for the knots on the requested side.
    std::vector<Matrix> table_;
  };

  /// Kernel s -> T(t,s) Pi(s) for s <= t (stable = true) or s >= t.
  AnchoredKernel anchored(double t, const MatrixFunction& projector, bool stable) const {
    require(t, "anchored kernel");
    AnchoredKernel k;
    k.cache_ = this;
    k.t_ = t;
    k.stable_ = stable;
    k.projector_ = projector;
    const std::size_t j = segment_index(t);
    k.seg_t_ = j;
    k.table_.assign(knot_count(), Matrix());
    const auto& segs = segments_;
    if (stable) {
      k.table_[j] = factor(segs[j].from_lo, t) * projector(segs[j].lo);
      for (std::size_t i = j; i-- > 0;) {
        k.table_[i] = k.table_[i + 1] * segs[i].forward * projector(segs[i].lo);
      }
    } else {
      k.table_[j + 1] = factor(segs[j].from_hi, t) * projector(segs[j].hi);
      for (std::size_t i = j + 1; i < segs.size(); ++i) {
        k.table_[i + 1] = k.table_[i] * segs[i].backward * projector(segs[i].hi);
      }
    }
    return k;
  }

 private:
  struct Segment {
    double lo = 0.0;
    double hi = 0.0;
    Matrix forward;   // T(hi, lo)
    Matrix backward;  // T(lo, hi)
    DenseTrajectory from_lo;  // x -> T(x, lo)
    DenseTrajectory from_hi;  // x -> T(x, hi)
    DenseTrajectory to_hi;    // x -> T(hi, x)
    DenseTrajectory to_lo;    // x -> T(lo, x)
  };

  void check_square(const Matrix& p) const {
    if (p.rows() != dimension() || p.cols() != dimension())
      throw PreconditionError("projector has wrong shape");
  }

  Matrix factor(const DenseTrajectory& traj, double x) const {
    const Eigen::Index n = dimension();
    // segment_index rounds; x may sit an ulp outside the chosen segment.
    const double lo = std::min(traj.t_begin(), traj.t_end());
    const double hi = std::max(traj.t_begin(), traj.t_end());
    Vector flat = traj(std::clamp(x, lo, hi));
    return Eigen::Map<const Matrix>(flat.data(), n, n);
  }

  std::size_t segment_index(double x) const {
    const double rel = (x - working_.lo) / spacing_;
    if (rel <= 0.0) return 0;
    const auto j = static_cast<std::size_t>(std::floor(rel));
    return std::min(j, segments_.size() - 1);
  }

  // Right-to-left product T(t,s) * m. With a projector family, the columns are
  // re-projected at each crossed knot.
  Matrix chain(double t, double s, Matrix m, const MatrixFunction* proj) const {
    const std::size_t it = segment_index(t);
    const std::size_t is = segment_index(s);
    const auto& segs = segments_;
    if (it == is) {
      return factor(segs[it].from_lo, t) * (factor(segs[it].to_lo, s) * m);
    }
    if (t > s) {
      m = factor(segs[is].to_hi, s) * m;
      if (proj) m = (*proj)(segs[is].hi) * m;
      for (std::size_t j = is + 1; j < it; ++j) {
        m = segs[j].forward * m;
        if (proj) m = (*proj)(segs[j].hi) * m;
      }
      return factor(segs[it].from_lo, t) * m;
    }
    m = factor(segs[is].to_lo, s) * m;
    if (proj) m = (*proj)(segs[is].lo) * m;
    for (std::size_t j = is - 1; j > it; --j) {
      m = segs[j].backward * m;
      if (proj) m = (*proj)(segs[j].lo) * m;
    }
    return factor(segs[it].from_hi, t) * m;
  }

  void build() {
    const Eigen::Index n = dimension();
    const auto count = static_cast<std::size_t>(
        std::max(1.0, std::ceil(working_.length() / cfg_.knot_spacing - 1e-9)));
    spacing_ = working_.length() / static_cast<double>(count);

    IntegratorConfig icfg = cfg_.integrator;
    // Dense output accuracy follows the step length; keep several steps per segment.
    icfg.max_step = std::min(icfg.max_step, spacing_ / 4.0);

    const OdeRhs state = [this, n](double x, const Vector& y, Vector& dy) {
      const Matrix a = system_(x);
      Eigen::Map<const Matrix> phi(y.data(), n, n);
      Eigen::Map<Matrix> out(dy.data(), n, n);
      out.noalias() = a * phi;
    };
    const OdeRhs adjoint = [this, n](double x, const Vector& y, Vector& dy) {
      const Matrix a = system_(x);
      Eigen::Map<const Matrix> psi(y.data(), n, n);
      Eigen::Map<Matrix> out(dy.data(), n, n);
      out.noalias() = -psi * a;
    };

    const Matrix eye = Matrix::Identity(n, n);
    const Vector eye_flat = Eigen::Map<const Vector>(eye.data(), n * n);
    segments_.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
      Segment& sg = segments_[j];
      sg.lo = working_.lo + spacing_ * static_cast<double>(j);
      sg.hi = j + 1 == count ? working_.hi : working_.lo + spacing_ * static_cast<double>(j + 1);
      sg.from_lo = integrate_dense(state, sg.lo, eye_flat, sg.hi, icfg);
      sg.from_hi = integrate_dense(state, sg.hi, eye_flat, sg.lo, icfg);
      sg.to_hi = integrate_dense(adjoint, sg.hi, eye_flat, sg.lo, icfg);
      sg.to_lo = integrate_dense(adjoint, sg.lo, eye_flat, sg.hi, icfg);
      sg.forward = Eigen::Map<const Matrix>(sg.from_lo.end_state().data(), n, n);
      sg.backward = Eigen::Map<const Matrix>(sg.from_hi.end_state().data(), n, n);
    }

    anchor_index_ = 0;
    double best = std::abs(working_.lo);
    for (std::size_t j = 1; j <= count; ++j) {
      if (std::abs(knot(j)) < best) {
        best = std::abs(knot(j));
        anchor_index_ = j;
      }
    }
  }

  LinearSystem system_;
  Interval working_;
  EvolutionConfig cfg_;
  double spacing_ = 0.25;
  std::vector<Segment> segments_;
  std::size_t anchor_index_ = 0;
};

/// Y(t, t0, y0) = T(t, t0) y0.
inline Vector linear_flow(const EvolutionCache& cache, double t0, const Vector& y0, double t) {
  if (y0.size() != cache.dimension()) throw PreconditionError("linear_flow: state has wrong size");
  return cache.transition(t, t0) * y0;
}

}  // namespace algdich
