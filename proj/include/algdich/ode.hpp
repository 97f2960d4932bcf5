#pragma once

// Dormand-Prince 5(4) with Hairer's continuous extension. Integrates forward
// or backward in time; the dense trajectory is what the evolution cache and
// the Green integrals sample between steps.

#include "algdich/errors.hpp"
#include "algdich/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace algdich {

struct IntegratorConfig {
  double rtol = 1e-10;
  double atol = 1e-10;
  /// Upper bound on |h|; infinity means unbounded.
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 20'000'000;
};

inline IntegratorConfig tightened(IntegratorConfig cfg, double factor) {
  cfg.rtol /= factor;
  cfg.atol /= factor;
  return cfg;
}

/// dy = rhs(t, y); dy is pre-sized to y.size().
using OdeRhs = std::function<void(double, const Vector&, Vector&)>;

namespace detail {

struct Dopri5 {
  static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                          a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

}  // namespace detail

/// One accepted step with its interpolation coefficients.
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  Vector r1, r2, r3, r4, r5;

  Vector eval(double t) const {
    const double theta = (t - t0) / h;
    const double theta1 = 1.0 - theta;
    return r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
  }
};

/// Piecewise continuous extension of an integration from t_begin to t_end.
class DenseTrajectory {
 public:
  DenseTrajectory() = default;
  DenseTrajectory(double t_begin, Vector y_begin)
      : t_begin_(t_begin), t_end_(t_begin), y_begin_(std::move(y_begin)), y_end_(y_begin_) {}

  double t_begin() const noexcept { return t_begin_; }
  double t_end() const noexcept { return t_end_; }
  const Vector& end_state() const noexcept { return y_end_; }
  std::size_t steps() const noexcept { return steps_.size(); }

  bool covers(double t) const noexcept {
    return t >= std::min(t_begin_, t_end_) && t <= std::max(t_begin_, t_end_);
  }

  Vector operator()(double t) const {
    if (!covers(t)) {
      std::ostringstream os;
      os << "dense trajectory on [" << std::min(t_begin_, t_end_) << ", "
         << std::max(t_begin_, t_end_) << "] queried at t = " << t;
      throw IntervalError(os.str());
    }
    if (steps_.empty() || t == t_begin_) return y_begin_;
    if (t == t_end_) return y_end_;
    const bool forward = t_end_ > t_begin_;
    // steps_ is ordered along the direction of integration.
    auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                               [forward](double value, const DenseStep& st) {
                                 return forward ? value < st.t0 : value > st.t0;
                               });
    if (it != steps_.begin()) --it;
    return it->eval(t);
  }

  void append(DenseStep step, double t_new, const Vector& y_new) {
    steps_.push_back(std::move(step));
    t_end_ = t_new;
    y_end_ = y_new;
  }

 private:
  double t_begin_ = 0.0;
  double t_end_ = 0.0;
  Vector y_begin_;
  Vector y_end_;
  std::vector<DenseStep> steps_;
};

namespace detail {

inline double error_norm(const Vector& err, const Vector& y0, const Vector& y1,
                         const IntegratorConfig& cfg) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sk = cfg.atol + cfg.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = err[i] / sk;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(err.size(), 1)));
}

inline std::string span_text(double t0, double t1) {
  std::ostringstream os;
  os << '[' << std::min(t0, t1) << ", " << std::max(t0, t1) << ']';
  return os.str();
}

// Hairer's starting step heuristic.
inline double initial_step(const OdeRhs& rhs, double t0, const Vector& y0, const Vector& f0,
                           double direction, const IntegratorConfig& cfg) {
  const Eigen::Index n = y0.size();
  double dnf = 0.0, dny = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sk = cfg.atol + cfg.rtol * std::abs(y0[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (y0[i] / sk) * (y0[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, cfg.max_step);
  Vector y1 = y0 + direction * h * f0;
  Vector f1(n);
  rhs(t0 + direction * h, y1, f1);
  double der2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sk = cfg.atol + cfg.rtol * std::abs(y0[i]);
    const double q = (f1[i] - f0[i]) / sk;
    der2 += q * q;
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(der2, std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                   : std::pow(0.01 / der12, 1.0 / 5.0);
  return std::min({100.0 * h, h1, cfg.max_step});
}

template <class StepObserver>
Vector dopri5(const OdeRhs& rhs, double t0, Vector y, double t1, const IntegratorConfig& cfg,
              StepObserver&& observe) {
  using C = Dopri5;
  if (!y.allFinite()) {
    throw IntegrationError("non-finite initial state on " + span_text(t0, t1));
  }
  if (t1 == t0) return y;
  const double direction = t1 > t0 ? 1.0 : -1.0;
  const Eigen::Index n = y.size();
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);

  double t = t0;
  rhs(t, y, k1);
  if (!k1.allFinite()) {
    throw IntegrationError("non-finite right-hand side at t = " + std::to_string(t) + " on " +
                           span_text(t0, t1));
  }
  double h = initial_step(rhs, t, y, k1, direction, cfg);
  bool last_rejected = false;
  std::size_t steps = 0;

  while (direction * (t1 - t) > 0.0) {
    if (++steps > cfg.max_steps) {
      throw IntegrationError("step budget exhausted at t = " + std::to_string(t) + " on " +
                             span_text(t0, t1));
    }
    const double remaining = std::abs(t1 - t);
    const double eps_t = 16.0 * std::numeric_limits<double>::epsilon() *
                         std::max(std::abs(t), 1.0);
    if (h < eps_t) {
      throw IntegrationError("step size underflow at t = " + std::to_string(t) + " on " +
                             span_text(t0, t1));
    }
    bool final_step = false;
    if (h >= remaining || remaining - h < eps_t) {
      h = remaining;
      final_step = true;
    }
    const double hs = direction * h;

    ytmp = y + hs * C::a21 * k1;
    rhs(t + C::c2 * hs, ytmp, k2);
    ytmp = y + hs * (C::a31 * k1 + C::a32 * k2);
    rhs(t + C::c3 * hs, ytmp, k3);
    ytmp = y + hs * (C::a41 * k1 + C::a42 * k2 + C::a43 * k3);
    rhs(t + C::c4 * hs, ytmp, k4);
    ytmp = y + hs * (C::a51 * k1 + C::a52 * k2 + C::a53 * k3 + C::a54 * k4);
    rhs(t + C::c5 * hs, ytmp, k5);
    ytmp = y + hs * (C::a61 * k1 + C::a62 * k2 + C::a63 * k3 + C::a64 * k4 + C::a65 * k5);
    const double t_new = final_step ? t1 : t + hs;
    rhs(t + hs, ytmp, k6);
    ynew = y + hs * (C::a71 * k1 + C::a73 * k3 + C::a74 * k4 + C::a75 * k5 + C::a76 * k6);
    rhs(t_new, ynew, k7);
    err = hs * (C::e1 * k1 + C::e3 * k3 + C::e4 * k4 + C::e5 * k5 + C::e6 * k6 + C::e7 * k7);

    const double en = error_norm(err, y, ynew, cfg);
    if (!std::isfinite(en) || !ynew.allFinite()) {
      if (h <= eps_t) {
        throw IntegrationError("non-finite state at t = " + std::to_string(t) + " on " +
                               span_text(t0, t1));
      }
      h *= 0.2;
      last_rejected = true;
      continue;
    }
    if (en <= 1.0) {
      if (observe.wants_dense()) {
        DenseStep st;
        st.t0 = t;
        st.h = hs;
        const Vector ydiff = ynew - y;
        const Vector bspl = hs * k1 - ydiff;
        st.r1 = y;
        st.r2 = ydiff;
        st.r3 = bspl;
        st.r4 = ydiff - hs * k7 - bspl;
        st.r5 = hs * (C::d1 * k1 + C::d3 * k3 + C::d4 * k4 + C::d5 * k5 + C::d6 * k6 +
                      C::d7 * k7);
        observe(std::move(st), t_new, ynew);
      }
      t = t_new;
      y = ynew;
      k1 = k7;
      double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      h = std::min(h * fac, cfg.max_step);
      last_rejected = false;
    } else {
      h *= std::clamp(0.9 * std::pow(en, -0.2), 0.2, 1.0);
      last_rejected = true;
    }
  }
  return y;
}

struct NoDense {
  bool wants_dense() const { return false; }
  void operator()(DenseStep&&, double, const Vector&) const {}
};

struct CollectDense {
  DenseTrajectory* out;
  bool wants_dense() const { return true; }
  void operator()(DenseStep&& st, double t_new, const Vector& y_new) const {
    out->append(std::move(st), t_new, y_new);
  }
};

}  // namespace detail

/// Solution at t1 of y' = rhs(t, y), y(t0) = y0. t1 < t0 integrates backward.
inline Vector integrate(const OdeRhs& rhs, double t0, const Vector& y0, double t1,
                        const IntegratorConfig& cfg) {
  return detail::dopri5(rhs, t0, y0, t1, cfg, detail::NoDense{});
}

/// Same as integrate(), keeping the continuous extension of every step.
inline DenseTrajectory integrate_dense(const OdeRhs& rhs, double t0, const Vector& y0, double t1,
                                       const IntegratorConfig& cfg) {
  DenseTrajectory traj(t0, y0);
  detail::dopri5(rhs, t0, y0, t1, cfg, detail::CollectDense{&traj});
  return traj;
}

}  // namespace algdich
