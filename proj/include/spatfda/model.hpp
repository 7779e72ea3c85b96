// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "spatfda/bernstein.hpp"
#include "spatfda/data.hpp"
#include "spatfda/errors.hpp"
#include "spatfda/kernels.hpp"

namespace spatfda {

// AR coefficient linking consecutive random effects separated by a time gap:
// exp(-ar_decay * gap). Equals one at gap zero, so the first point of every
// chain has coefficient one by the d_0 = 0 convention.
inline double ar_coefficient(double ar_decay, double gap) {
  if (!(ar_decay > 0.0)) throw InputError("ar_coefficient: decay must be positive");
  if (!(gap >= 0.0)) throw InputError("ar_coefficient: gap must be non-negative");
  return std::exp(-ar_decay * gap);
}

inline double log_normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

// Inverse gamma with (shape a, scale b): density b^a/Gamma(a) x^{-a-1} e^{-b/x}.
inline double log_inv_gamma_pdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) -
         (shape + 1.0) * std::log(x) - scale / x;
}

struct IgPrior {
  double shape = 2.0;
  double scale = 1.0;
};

// Hyperparameters of all priors in the hierarchy. Defaults follow the
// simulation-study table: IG(2,1) on both decays and on tau2/kappa2,
// IG(3,2) on nu2, N(0, 50^2) on the coefficient means.
struct PriorSpec {
  IgPrior spatial_decay{2.0, 1.0};
  IgPrior ar_decay{2.0, 1.0};
  IgPrior tau2{2.0, 1.0};
  IgPrior kappa2{2.0, 1.0};
  IgPrior nu2{3.0, 2.0};
  double mu_mean = 0.0;
  double mu_variance = 2500.0;

  void validate() const {
    for (const IgPrior* p :
         {&spatial_decay, &ar_decay, &tau2, &kappa2, &nu2}) {
      if (!(p->shape > 0.0) || !(p->scale > 0.0)) {
        throw ConfigError("PriorSpec: IG shape/scale must be positive");
      }
    }
    if (!(mu_variance > 0.0)) {
      throw ConfigError("PriorSpec: mu_theta prior variance must be positive");
    }
  }
};

// One point in parameter space. theta is (p+1) x m with column j holding the
// basis coefficients of site j; delta has one chain per site covering every
// time point, masked positions included.
struct ModelState {
  Eigen::MatrixXd theta;
  Eigen::VectorXd mu_theta;
  std::vector<Eigen::VectorXd> delta;
  double tau2 = 1.0;
  double nu2 = 1.0;
  double kappa2 = 1.0;
  double spatial_decay = 1.0;
  double ar_decay = 1.0;

  void validate_positive() const {
    if (!(tau2 > 0.0) || !(nu2 > 0.0) || !(kappa2 > 0.0) ||
        !(spatial_decay > 0.0) || !(ar_decay > 0.0)) {
      throw InputError("ModelState: variance and decay parameters must be positive");
    }
  }
};

// Everything the likelihood needs, precomputed once per fit: per-curve design
// matrices, gaps, masks, and pairwise site distances.
struct FitData {
  struct Curve {
    std::vector<double> times;
    Eigen::VectorXd values;  // entries at masked positions are ignored
    std::vector<bool> missing;
    Eigen::VectorXd gaps;    // gaps[0] = 0
    Eigen::MatrixXd basis;   // n x (p+1)
  };

  BasisSpec basis;
  KernelFamily kernel_family = KernelFamily::gaussian;
  std::vector<std::string> site_ids;
  Eigen::MatrixXd coords;  // m x 2
  Eigen::MatrixXd dists;   // m x m
  std::vector<Curve> curves;
  std::size_t n_unmasked = 0;
  std::size_t n_points = 0;

  int n_sites() const { return static_cast<int>(curves.size()); }
  int n_basis() const { return basis.n_basis(); }

  static FitData prepare(const Dataset& data, const BasisSpec& spec,
                         KernelFamily family = KernelFamily::gaussian) {
    data.validate();
    spec.validate();
    FitData fd;
    fd.basis = spec;
    fd.kernel_family = family;
    const int m = static_cast<int>(data.n_sites());
    fd.coords.resize(m, 2);
    for (int j = 0; j < m; ++j) {
      const SiteSeries& s = data.sites[static_cast<std::size_t>(j)];
      fd.site_ids.push_back(s.site_id);
      fd.coords(j, 0) = s.x;
      fd.coords(j, 1) = s.y;
      Curve c;
      c.times = s.times;
      c.missing = s.missing;
      c.values.resize(static_cast<Eigen::Index>(s.values.size()));
      for (std::size_t i = 0; i < s.values.size(); ++i) {
        c.values(static_cast<Eigen::Index>(i)) = s.values[i];
      }
      const std::vector<double> g = gap_vector(s.times);
      c.gaps = Eigen::Map<const Eigen::VectorXd>(g.data(),
                                                 static_cast<Eigen::Index>(g.size()));
      c.basis = design_matrix(spec, s.times).values;
      fd.n_points += s.size();
      fd.n_unmasked += s.n_observed();
      fd.curves.push_back(std::move(c));
    }
    fd.dists = distance_matrix(fd.coords);
    return fd;
  }
};

// Shared-range basis: one family over the min/max observed time across all
// curves in the dataset.
inline BasisSpec basis_for_dataset(const Dataset& data, int degree) {
  const auto [lo, hi] = data.time_range();
  return BasisSpec(degree, lo, hi);
}

// Additive pieces of the joint log density. Splitting them keeps each term
// testable against a naive implementation in isolation.
struct LogJointTerms {
  double likelihood = 0.0;
  double theta_prior = 0.0;
  double delta_prior = 0.0;
  double mu_prior = 0.0;
  double hyper_prior = 0.0;

  double total() const {
    return likelihood + theta_prior + delta_prior + mu_prior + hyper_prior;
  }
};

inline LogJointTerms log_joint_terms(const FitData& fd, const ModelState& state,
                                     const PriorSpec& priors) {
  state.validate_positive();
  priors.validate();
  const int m = fd.n_sites();
  const int nb = fd.n_basis();
  if (state.theta.rows() != nb || state.theta.cols() != m ||
      state.mu_theta.size() != nb ||
      state.delta.size() != static_cast<std::size_t>(m)) {
    throw InputError("log_joint: state shape does not match data");
  }

  LogJointTerms terms;

  // (i) Gaussian likelihood over unmasked observations.
  for (int j = 0; j < m; ++j) {
    const FitData::Curve& c = fd.curves[static_cast<std::size_t>(j)];
    const Eigen::VectorXd& d = state.delta[static_cast<std::size_t>(j)];
    if (d.size() != static_cast<Eigen::Index>(c.times.size())) {
      throw InputError("log_joint: delta length mismatch at site " +
                       fd.site_ids[static_cast<std::size_t>(j)]);
    }
    const Eigen::VectorXd fit = c.basis * state.theta.col(j);
    for (Eigen::Index i = 0; i < fit.size(); ++i) {
      if (c.missing[static_cast<std::size_t>(i)]) continue;
      terms.likelihood +=
          log_normal_pdf(c.values(i), fit(i) + d(i), state.tau2);
    }
  }

  // (ii) MVN prior of each coefficient row over sites, one shared kernel.
  {
    const Eigen::MatrixXd corr =
        correlation_matrix(fd.kernel_family, state.spatial_decay, fd.dists);
    const JitteredChol chol = chol_with_jitter(state.kappa2 * corr);
    const double log_det = chol.log_det();
    for (int r = 0; r < nb; ++r) {
      const Eigen::VectorXd x =
          state.theta.row(r).transpose().array() - state.mu_theta(r);
      const double quad = x.dot(chol.solve(x));
      terms.theta_prior +=
          -0.5 * (m * std::log(2.0 * std::numbers::pi) + log_det + quad);
    }
  }

  // (iii) AR(1) random-effect chains over every time point.
  for (int j = 0; j < m; ++j) {
    const FitData::Curve& c = fd.curves[static_cast<std::size_t>(j)];
    const Eigen::VectorXd& d = state.delta[static_cast<std::size_t>(j)];
    if (d.size() == 0) continue;
    terms.delta_prior += log_normal_pdf(d(0), 0.0, state.nu2);
    for (Eigen::Index i = 1; i < d.size(); ++i) {
      const double phi = ar_coefficient(state.ar_decay, c.gaps(i));
      terms.delta_prior += log_normal_pdf(d(i), phi * d(i - 1), state.nu2);
    }
  }

  // (iv) Normal priors on the coefficient means.
  for (int r = 0; r < nb; ++r) {
    terms.mu_prior +=
        log_normal_pdf(state.mu_theta(r), priors.mu_mean, priors.mu_variance);
  }

  // (v) Inverse gamma priors on both decays and all variances.
  terms.hyper_prior =
      log_inv_gamma_pdf(state.spatial_decay, priors.spatial_decay.shape,
                        priors.spatial_decay.scale) +
      log_inv_gamma_pdf(state.ar_decay, priors.ar_decay.shape,
                        priors.ar_decay.scale) +
      log_inv_gamma_pdf(state.tau2, priors.tau2.shape, priors.tau2.scale) +
      log_inv_gamma_pdf(state.kappa2, priors.kappa2.shape, priors.kappa2.scale) +
      log_inv_gamma_pdf(state.nu2, priors.nu2.shape, priors.nu2.scale);

  if (!std::isfinite(terms.total())) {
    throw NumericalError("log_joint: non-finite result");
  }
  return terms;
}

inline double log_joint(const FitData& fd, const ModelState& state,
                        const PriorSpec& priors) {
  return log_joint_terms(fd, state, priors).total();
}

}  // namespace spatfda
