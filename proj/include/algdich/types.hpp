#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <sstream>
#include <string>

namespace algdich {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Matrix-valued function of time, e.g. A(t) or P(t).
using MatrixFunction = std::function<Matrix(double)>;
/// Positive scalar weight function of time, e.g. h(t) in an (h,k) dichotomy.
using ScalarFunction = std::function<double(double)>;

/// Closed time interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double t) const noexcept { return t >= lo && t <= hi; }
  double length() const noexcept { return hi - lo; }
};

inline std::string to_string(const Interval& iv) {
  std::ostringstream os;
  os << '[' << iv.lo << ", " << iv.hi << ']';
  return os.str();
}

/// Operator 2-norm (largest singular value).
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace algdich
