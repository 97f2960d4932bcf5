#pragma once

// Vector-valued Gauss-Kronrod (7/15) quadrature with global adaptive
// bisection, plus the fixed Gauss-Legendre rule used by collocation sweeps.

#include "algdich/errors.hpp"
#include "algdich/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>
#include <vector>

namespace algdich {

namespace gk15 {
// Kronrod abscissae on [0,1) (the negatives are implied); index 7 is the centre.
inline constexpr std::array<double, 8> nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for nodes 1, 3, 5 and the centre.
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
}  // namespace gk15

namespace gauss_legendre4 {
inline constexpr std::array<double, 4> nodes = {-0.861136311594052575223946488892809,
                                                -0.339981043584856264802665759103245,
                                                0.339981043584856264802665759103245,
                                                0.861136311594052575223946488892809};
inline constexpr std::array<double, 4> weights = {0.347854845137453857373063949221999,
                                                  0.652145154862546142626936050778001,
                                                  0.652145154862546142626936050778001,
                                                  0.347854845137453857373063949221999};
}  // namespace gauss_legendre4

struct PanelEstimate {
  double a = 0.0;
  double b = 0.0;
  Vector kronrod;
  double error = 0.0;
};

/// Kronrod value and |Kronrod - Gauss| on one panel.
template <class F>
PanelEstimate gk15_panel(F&& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  Vector fc = f(centre);
  Vector k = gk15::kronrod_weights[7] * fc;
  Vector g = gk15::gauss_weights[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * gk15::nodes[j];
    Vector sum = f(centre - dx);
    sum += f(centre + dx);
    k += gk15::kronrod_weights[j] * sum;
    if (j % 2 == 1) g += gk15::gauss_weights[j / 2] * sum;
  }
  PanelEstimate p;
  p.a = a;
  p.b = b;
  p.kronrod = half * k;
  p.error = half * (k - g).norm();
  return p;
}

struct QuadratureResult {
  Vector value;
  double error_estimate = 0.0;
  std::size_t panels = 0;
  std::size_t evaluations = 0;
};

struct AdaptiveOptions {
  double abs_tol = 1e-10;
  std::size_t max_panels = 200'000;
  /// Initial uniform panels are at most this long.
  double initial_panel_length = 1.0;
};

/// Optional a priori bound B(a,b) >= integral of |f| over [a,b]. When given,
/// a panel's error is taken as min(|K - G|, |K| + B): a panel whose whole
/// contribution is provably below tolerance is never refined.
using MagnitudeBound = std::function<double(double, double)>;

/// Global adaptive GK15: bisects the worst panel until the summed error
/// estimate is at most abs_tol.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, Eigen::Index dim,
                                    const AdaptiveOptions& opt,
                                    const MagnitudeBound& bound = nullptr) {
  QuadratureResult out;
  out.value = Vector::Zero(dim);
  if (a == b) return out;
  if (b < a) throw PreconditionError("integrate_adaptive needs a <= b");

  auto panel_error = [&](PanelEstimate& p) {
    if (bound) p.error = std::min(p.error, p.kronrod.norm() + bound(p.a, p.b));
  };
  auto cmp = [](const PanelEstimate& x, const PanelEstimate& y) { return x.error < y.error; };
  std::priority_queue<PanelEstimate, std::vector<PanelEstimate>, decltype(cmp)> heap(cmp);

  const auto initial = static_cast<std::size_t>(
      std::max(1.0, std::ceil((b - a) / opt.initial_panel_length)));
  double total_error = 0.0;
  const double width = (b - a) / static_cast<double>(initial);
  for (std::size_t i = 0; i < initial; ++i) {
    const double lo = a + width * static_cast<double>(i);
    const double hi = i + 1 == initial ? b : lo + width;
    PanelEstimate p = gk15_panel(f, lo, hi);
    panel_error(p);
    total_error += p.error;
    heap.push(std::move(p));
  }
  out.evaluations = 15 * initial;

  while (total_error > opt.abs_tol) {
    if (heap.size() >= opt.max_panels) {
      std::ostringstream os;
      os << "adaptive quadrature on [" << a << ", " << b << "] reached " << opt.max_panels
         << " panels with error estimate " << total_error << " > " << opt.abs_tol;
      throw QuadratureError(os.str());
    }
    PanelEstimate worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Panel cannot be split further in floating point.
      throw QuadratureError("adaptive quadrature panel collapsed near t = " +
                            std::to_string(mid));
    }
    PanelEstimate left = gk15_panel(f, worst.a, mid);
    PanelEstimate right = gk15_panel(f, mid, worst.b);
    panel_error(left);
    panel_error(right);
    out.evaluations += 30;
    total_error += left.error + right.error - worst.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
  }

  // Summation in panel order keeps results independent of heap internals.
  std::vector<PanelEstimate> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(),
            [](const PanelEstimate& x, const PanelEstimate& y) { return x.a < y.a; });
  total_error = 0.0;
  for (const auto& p : panels) {
    out.value += p.kronrod;
    total_error += p.error;
  }
  out.error_estimate = total_error;
  out.panels = panels.size();
  return out;
}

}  // namespace algdich
