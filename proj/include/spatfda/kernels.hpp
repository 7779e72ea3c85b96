// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "spatfda/errors.hpp"

namespace spatfda {

enum class KernelFamily { gaussian, exponential };

inline std::string to_string(KernelFamily f) {
  return f == KernelFamily::gaussian ? "gaussian" : "exponential";
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "gaussian") return KernelFamily::gaussian;
  if (s == "exponential") return KernelFamily::exponential;
  throw ConfigError("unknown kernel family '" + s + "'");
}

// Isotropic spatial covariance. The gaussian form is
// C(h) = kappa2 * exp(-(decay*h)^2); the exponential form is
// C(h) = kappa2 * exp(-decay*h). Both satisfy C(0) = kappa2 and are
// non-increasing in h.
struct SpatialKernel {
  KernelFamily family = KernelFamily::gaussian;
  double kappa2 = 1.0;
  double decay = 1.0;

  double operator()(double h) const {
    if (!(kappa2 > 0.0) || !(decay > 0.0)) {
      throw InputError("SpatialKernel: variance and decay must be positive");
    }
    if (family == KernelFamily::gaussian) {
      const double z = decay * h;
      return kappa2 * std::exp(-z * z);
    }
    return kappa2 * std::exp(-decay * h);
  }
};

// Pairwise Euclidean distances between planar sites given as an m x 2 matrix.
inline Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& coords) {
  const Eigen::Index m = coords.rows();
  Eigen::MatrixXd d(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      d(i, j) = (coords.row(i) - coords.row(j)).norm();
      d(j, i) = d(i, j);
    }
  }
  return d;
}

// Covariance matrix induced by a kernel over site coordinates. No jitter is
// applied here; factorizations add it.
inline Eigen::MatrixXd kernel_matrix(const SpatialKernel& kernel,
                                     const Eigen::MatrixXd& coords) {
  if (coords.rows() < 1) throw InputError("kernel_matrix: need at least one site");
  if (!coords.allFinite()) throw InputError("kernel_matrix: non-finite coordinates");
  const Eigen::MatrixXd d = distance_matrix(coords);
  Eigen::MatrixXd k(d.rows(), d.cols());
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      k(i, j) = kernel(d(i, j));
    }
  }
  return k;
}

// Correlation matrix of a kernel (unit diagonal), shared across all basis
// coefficient indices; the full covariance is kappa2 times this.
inline Eigen::MatrixXd correlation_matrix(KernelFamily family, double decay,
                                          const Eigen::MatrixXd& dists) {
  Eigen::MatrixXd r(dists.rows(), dists.cols());
  for (Eigen::Index i = 0; i < dists.rows(); ++i) {
    for (Eigen::Index j = 0; j < dists.cols(); ++j) {
      if (family == KernelFamily::gaussian) {
        const double z = decay * dists(i, j);
        r(i, j) = std::exp(-z * z);
      } else {
        r(i, j) = std::exp(-decay * dists(i, j));
      }
    }
  }
  return r;
}

// Cholesky factorization with diagonal jitter. Starts from 1e-9 times the
// mean diagonal (1e-9 * kappa2 for a kernel matrix) and doubles up to six
// times before reporting a numerical failure.
struct JitteredChol {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;

  double log_det() const {
    // llt stores L in the lower triangle; |A| = prod diag(L)^2.
    double s = 0.0;
    for (Eigen::Index i = 0; i < llt.matrixLLT().rows(); ++i) {
      s += std::log(llt.matrixLLT()(i, i));
    }
    return 2.0 * s;
  }

  template <class Rhs>
  auto solve(const Eigen::MatrixBase<Rhs>& b) const {
    return llt.solve(b.derived());
  }
};

inline JitteredChol chol_with_jitter(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw NumericalError("cholesky: matrix has non-finite entries");
  double scale = m.diagonal().mean();
  if (!(scale > 0.0)) scale = 1.0;
  double jitter = 1e-9 * scale;
  for (int attempt = 0; attempt <= 6; ++attempt) {
    Eigen::MatrixXd j = m;
    j.diagonal().array() += jitter;
    JitteredChol result;
    result.llt.compute(j);
    result.jitter = jitter;
    if (result.llt.info() == Eigen::Success) return result;
    jitter *= 2.0;
  }
  throw NumericalError("cholesky failed after max jitter on a " +
                       std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + " matrix");
}

}  // namespace spatfda
