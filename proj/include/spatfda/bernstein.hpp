// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "spatfda/errors.hpp"

namespace spatfda {

// Bernstein polynomial basis of degree p over a bounded interval [a, b].
// The p+1 basis functions are non-negative and sum to one everywhere on
// the interval; values at the endpoints collapse onto the first/last
// basis function.
struct BasisSpec {
  int degree = 3;
  double a = 0.0;
  double b = 1.0;

  BasisSpec() = default;
  BasisSpec(int degree_, double a_, double b_) : degree(degree_), a(a_), b(b_) {
    validate();
  }

  void validate() const {
    if (degree < 0) throw ConfigError("BasisSpec: degree must be >= 0");
    if (!(b - a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
      throw ConfigError("BasisSpec: degenerate interval [" +
                        std::to_string(a) + ", " + std::to_string(b) + "]");
    }
  }

  int n_basis() const { return degree + 1; }

  // Affine rescaling of t in [a,b] onto x in [0,1]. Points within interval
  // noise (1e-12, scaled by the interval magnitude) of an endpoint are
  // clamped to it; anything further outside is a domain violation.
  double rescale(double t) const {
    const double span = b - a;
    const double tol = 1e-12 * std::max(1.0, std::abs(a) + std::abs(b));
    if (t < a - tol || t > b + tol) {
      throw InputError("basis evaluation point " + std::to_string(t) +
                       " outside interval [" + std::to_string(a) + ", " +
                       std::to_string(b) + "]");
    }
    const double x = (t - a) / span;
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x;
  }
};

// Design matrix of a basis over ordered evaluation points: entry (i, r) is
// the r-th basis function at times[i]. Rows sum to one.
struct BasisMatrix {
  std::vector<double> times;
  Eigen::MatrixXd values;  // n x (p+1)

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
};

namespace detail {

// Binomial coefficients stay exactly representable in double well past
// p = 15, where the evaluation switches to log space anyway.
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) {
    c *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return c;
}

inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace detail

// Evaluate all p+1 basis functions at t via the closed form. Degrees above
// 15 go through log space per term to dodge overflow in the binomials.
inline Eigen::VectorXd eval_basis(const BasisSpec& spec, double t) {
  spec.validate();
  const int p = spec.degree;
  const double x = spec.rescale(t);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p + 1);
  if (x == 0.0) {
    out(0) = 1.0;
    return out;
  }
  if (x == 1.0) {
    out(p) = 1.0;
    return out;
  }
  if (p <= 15) {
    for (int r = 0; r <= p; ++r) {
      out(r) = detail::binomial(p, r) * std::pow(x, r) * std::pow(1.0 - x, p - r);
    }
  } else {
    const double lx = std::log(x);
    const double l1mx = std::log1p(-x);
    for (int r = 0; r <= p; ++r) {
      out(r) = std::exp(detail::log_binomial(p, r) + r * lx + (p - r) * l1mx);
    }
  }
  return out;
}

// Same vector computed by raising the degree one step at a time from the
// constant basis. Serves as an internal cross-check for eval_basis.
inline Eigen::VectorXd eval_basis_recursive(const BasisSpec& spec, double t) {
  spec.validate();
  const int p = spec.degree;
  const double x = spec.rescale(t);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p + 1);
  b(0) = 1.0;
  for (int q = 1; q <= p; ++q) {
    // In-place degree raise, filled from the top index down.
    b(q) = x * b(q - 1);
    for (int r = q - 1; r >= 1; --r) {
      b(r) = (1.0 - x) * b(r) + x * b(r - 1);
    }
    b(0) = (1.0 - x) * b(0);
  }
  return b;
}

// Evaluate the basis at strictly increasing points.
inline BasisMatrix design_matrix(const BasisSpec& spec,
                                 const std::vector<double>& times) {
  spec.validate();
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw InputError("design_matrix: times must be strictly increasing "
                       "(violated at index " + std::to_string(i) + ")");
    }
  }
  BasisMatrix m;
  m.times = times;
  m.values.resize(static_cast<Eigen::Index>(times.size()), spec.n_basis());
  for (std::size_t i = 0; i < times.size(); ++i) {
    m.values.row(static_cast<Eigen::Index>(i)) = eval_basis(spec, times[i]).transpose();
  }
  return m;
}

}  // namespace spatfda
