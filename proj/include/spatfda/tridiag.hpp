// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "spatfda/errors.hpp"

namespace spatfda {

// Cholesky factor of a symmetric positive definite tridiagonal matrix,
// A = L L^T with L lower bidiagonal. Factor, solve, and sampling back-solve
// all run in O(n). Used for the AR(1) random-effect full conditionals,
// whose precision is tridiagonal.
class TridiagChol {
 public:
  // diag has length n, sub (the first off-diagonal) length n-1.
  TridiagChol(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub)
      : l_diag_(diag.size()), l_sub_(sub.size()) {
    const Eigen::Index n = diag.size();
    if (sub.size() != n - 1 && !(n == 1 && sub.size() == 0)) {
      throw InputError("TridiagChol: off-diagonal has wrong length");
    }
    double prev = diag(0);
    if (!(prev > 0.0)) throw NumericalError("TridiagChol: matrix not SPD");
    l_diag_(0) = std::sqrt(prev);
    for (Eigen::Index i = 1; i < n; ++i) {
      l_sub_(i - 1) = sub(i - 1) / l_diag_(i - 1);
      const double d = diag(i) - l_sub_(i - 1) * l_sub_(i - 1);
      if (!(d > 0.0)) throw NumericalError("TridiagChol: matrix not SPD");
      l_diag_(i) = std::sqrt(d);
    }
  }

  Eigen::Index size() const { return l_diag_.size(); }

  // Solve A x = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = solve_lower(b);
    solve_upper_inplace(x);
    return x;
  }

  // Solve L y = b (forward substitution).
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& b) const {
    const Eigen::Index n = size();
    Eigen::VectorXd y(n);
    y(0) = b(0) / l_diag_(0);
    for (Eigen::Index i = 1; i < n; ++i) {
      y(i) = (b(i) - l_sub_(i - 1) * y(i - 1)) / l_diag_(i);
    }
    return y;
  }

  // Solve L^T x = z in place. With z standard normal this yields a draw
  // from N(0, A^{-1}).
  void solve_upper_inplace(Eigen::VectorXd& z) const {
    const Eigen::Index n = size();
    z(n - 1) /= l_diag_(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i) {
      z(i) = (z(i) - l_sub_(i) * z(i + 1)) / l_diag_(i);
    }
  }

  double log_det() const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < l_diag_.size(); ++i) s += std::log(l_diag_(i));
    return 2.0 * s;
  }

 private:
  Eigen::VectorXd l_diag_;
  Eigen::VectorXd l_sub_;
};

}  // namespace spatfda
