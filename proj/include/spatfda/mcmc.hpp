// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "spatfda/data.hpp"
#include "spatfda/errors.hpp"
#include "spatfda/kernels.hpp"
#include "spatfda/metrics.hpp"
#include "spatfda/model.hpp"
#include "spatfda/rng.hpp"
#include "spatfda/tridiag.hpp"

namespace spatfda {

// Chain protocol: single chain, burn-in discarded, every thin-th iteration
// retained afterwards.
struct SamplerConfig {
  long total_iterations = 25000;
  long burn_in = 5000;
  long thin = 10;
  std::uint64_t seed = 1;
  long adapt_window = -1;  // iterations with step-size adaptation; <0 = burn-in
  double target_acceptance = 0.44;
  bool include_random_effect = true;

  long retained() const { return (total_iterations - burn_in) / thin; }

  void validate() const {
    if (total_iterations < 1 || burn_in < 0 || burn_in >= total_iterations) {
      throw ConfigError("SamplerConfig: need 0 <= burn_in < total_iterations");
    }
    if (thin < 1) throw ConfigError("SamplerConfig: thin must be >= 1");
    if (!(target_acceptance > 0.0) || !(target_acceptance < 1.0)) {
      throw ConfigError("SamplerConfig: target acceptance must be in (0,1)");
    }
  }
};

struct AcceptanceStats {
  long proposals = 0;
  long accepts = 0;
  long post_adapt_proposals = 0;
  long post_adapt_accepts = 0;

  double rate() const {
    return proposals > 0 ? static_cast<double>(accepts) / proposals : 0.0;
  }
  double post_adapt_rate() const {
    return post_adapt_proposals > 0
               ? static_cast<double>(post_adapt_accepts) / post_adapt_proposals
               : 0.0;
  }
};

// Adaptive random-walk Metropolis on a positive scalar, proposing in log
// space with the Jacobian folded into the acceptance ratio. Robbins-Monro
// scaling of the log step size runs only while `adapt` is passed, so the
// kernel is a fixed valid Metropolis update afterwards.
class AdaptiveRwm {
 public:
  explicit AdaptiveRwm(double initial_step = 0.5, double target_rate = 0.44)
      : log_step_(std::log(std::max(initial_step, 1e-300))),
        target_(target_rate) {
    if (initial_step == 0.0) log_step_ = -std::numeric_limits<double>::infinity();
  }

  // log_target evaluates the log density of the parameter itself (not of its
  // logarithm). Returns the new value; rejections return x unchanged.
  template <class F>
  double update(double x, F&& log_target, Rng& rng, bool adapt) {
    const double step = std::exp(log_step_);
    const double proposal = x * std::exp(step * rng.normal());
    double log_ratio;
    if (proposal == x) {
      log_ratio = 0.0;
    } else {
      log_ratio = log_target(proposal) - log_target(x) + std::log(proposal) -
                  std::log(x);
    }
    const double alpha = std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
    ++stats_.proposals;
    if (!adapt) ++stats_.post_adapt_proposals;
    bool accepted = false;
    if (std::log(rng.uniform_pos()) < log_ratio) {
      accepted = true;
      ++stats_.accepts;
      if (!adapt) ++stats_.post_adapt_accepts;
    }
    if (adapt && std::isfinite(log_step_)) {
      ++adapt_count_;
      const double gain = std::pow(static_cast<double>(adapt_count_), -0.6);
      log_step_ += gain * (alpha - target_);
    }
    return accepted ? proposal : x;
  }

  double step_size() const { return std::exp(log_step_); }
  const AcceptanceStats& stats() const { return stats_; }

 private:
  double log_step_;
  double target_;
  long adapt_count_ = 0;
  AcceptanceStats stats_;
};

// Thinned post-burn-in chain with per-draw joint log densities and the
// Metropolis acceptance bookkeeping for both decay parameters.
struct PosteriorDraws {
  std::vector<ModelState> states;
  std::vector<double> log_joint;
  AcceptanceStats accept_spatial_decay;
  AcceptanceStats accept_ar_decay;
  SamplerConfig config;

  std::size_t size() const { return states.size(); }
};

namespace detail {

// Draw from N(mean, P^{-1}) given the Cholesky factor of the precision P.
inline Eigen::VectorXd sample_from_precision(const Eigen::LLT<Eigen::MatrixXd>& llt,
                                             const Eigen::VectorXd& mean,
                                             Rng& rng) {
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  // Solve L^T x = z so that x ~ N(0, P^{-1}).
  llt.matrixU().solveInPlace(z);
  return mean + z;
}

}  // namespace detail

// Metropolis-within-Gibbs sampler for the full hierarchy. Blocks are public
// so each full conditional can be exercised against a closed-form oracle in
// isolation; run() applies them in the fixed scan order
// theta, delta, mu_theta, tau2, nu2, kappa2, spatial_decay, ar_decay.
class Sampler {
 public:
  Sampler(FitData data, PriorSpec priors, SamplerConfig config)
      : fd_(std::move(data)),
        priors_(std::move(priors)),
        config_(config),
        rwm_spatial_(0.5, config.target_acceptance),
        rwm_ar_(0.5, config.target_acceptance) {
    config_.validate();
    priors_.validate();
    const int m = fd_.n_sites();
    const int nb = fd_.n_basis();
    // Per-(r, j) sums of squared basis values over unmasked rows; fixed for
    // the whole chain because the mask never changes.
    b2sums_.resize(nb, m);
    b2sums_.setZero();
    for (int j = 0; j < m; ++j) {
      const FitData::Curve& c = fd_.curves[static_cast<std::size_t>(j)];
      for (Eigen::Index i = 0; i < c.basis.rows(); ++i) {
        if (c.missing[static_cast<std::size_t>(i)]) continue;
        for (int r = 0; r < nb; ++r) {
          b2sums_(r, j) += c.basis(i, r) * c.basis(i, r);
        }
      }
    }
  }

  const FitData& data() const { return fd_; }
  const PriorSpec& priors() const { return priors_; }
  const SamplerConfig& config() const { return config_; }

  // Swap in new observation vectors (same shapes/masks/times). Used by
  // posterior-predictive style workflows that alternate parameter updates
  // with data redraws.
  void replace_values(const std::vector<Eigen::VectorXd>& values) {
    if (values.size() != fd_.curves.size()) {
      throw InputError("replace_values: wrong number of sites");
    }
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (values[j].size() != fd_.curves[j].values.size()) {
        throw InputError("replace_values: wrong length at site " +
                         std::to_string(j));
      }
      fd_.curves[j].values = values[j];
    }
  }

  // Ridge least squares per site for theta, zero random effects, unit
  // variances and decays, coefficient means from the across-site average.
  ModelState initial_state() const {
    const int m = fd_.n_sites();
    const int nb = fd_.n_basis();
    ModelState s;
    s.theta.resize(nb, m);
    for (int j = 0; j < m; ++j) {
      const FitData::Curve& c = fd_.curves[static_cast<std::size_t>(j)];
      Eigen::MatrixXd btb = Eigen::MatrixXd::Zero(nb, nb);
      Eigen::VectorXd bty = Eigen::VectorXd::Zero(nb);
      for (Eigen::Index i = 0; i < c.basis.rows(); ++i) {
        if (c.missing[static_cast<std::size_t>(i)]) continue;
        btb.noalias() += c.basis.row(i).transpose() * c.basis.row(i);
        bty.noalias() += c.basis.row(i).transpose() * c.values(i);
      }
      btb.diagonal().array() += 1e-6;
      s.theta.col(j) = btb.ldlt().solve(bty);
    }
    s.mu_theta = s.theta.rowwise().mean();
    s.delta.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      s.delta[static_cast<std::size_t>(j)] = Eigen::VectorXd::Zero(
          static_cast<Eigen::Index>(fd_.curves[static_cast<std::size_t>(j)].times.size()));
    }
    s.tau2 = s.nu2 = s.kappa2 = s.spatial_decay = s.ar_decay = 1.0;
    return s;
  }

  struct GaussianConditional {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
  };

  // Full conditional of the m-vector theta_r given everything else.
  GaussianConditional theta_conditional(const ModelState& state, int r) const {
    ensure_correlation(state.spatial_decay);
    const int m = fd_.n_sites();
    Eigen::MatrixXd precision = corr_inverse_ / state.kappa2;
    Eigen::VectorXd rhs = (state.mu_theta(r) / state.kappa2) * corr_inv_one_;
    for (int j = 0; j < m; ++j) {
      const FitData::Curve& c = fd_.curves[static_cast<std::size_t>(j)];
      const Eigen::VectorXd& d = state.delta[static_cast<std::size_t>(j)];
      double cr = 0.0;
      for (Eigen::Index i = 0; i < c.basis.rows(); ++i) {
        if (c.missing[static_cast<std::size_t>(i)]) continue;
        double partial = 0.0;  // fit from all other coefficients
        for (int q = 0; q < fd_.n_basis(); ++q) {
          if (q == r) continue;
          partial += c.basis(i, q) * state.theta(q, j);
        }
        cr += c.basis(i, r) * (c.values(i) - partial - d(i));
      }
      precision(j, j) += b2sums_(r, j) / state.tau2;
      rhs(j) += cr / state.tau2;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("theta conditional precision not SPD");
    }
    GaussianConditional out;
    out.mean = llt.solve(rhs);
    out.covariance = llt.solve(Eigen::MatrixXd::Identity(m, m));
    return out;
  }

  // Gibbs draw of every coefficient row, cycling r = 0..p with the shared
  // spatial factor reused across rows.
  void update_theta(ModelState& state, Rng& rng) {
    ensure_correlation(state.spatial_decay);
    const int m = fd_.n_sites();
    const int nb = fd_.n_basis();
    // Residuals y - B theta - delta with masked entries zeroed.
    std::vector<Eigen::VectorXd> resid(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      const FitData::Curve& c = fd_.curves[static_cast<std::size_t>(j)];
      Eigen::VectorXd rj =
          c.values - c.basis * state.theta.col(j) - state.delta[static_cast<std::size_t>(j)];
      for (Eigen::Index i = 0; i < rj.size(); ++i) {
        if (c.missing[static_cast<std::size_t>(i)]) rj(i) = 0.0;
      }
      resid[static_cast<std::size_t>(j)] = std::move(rj);
    }
    for (int r = 0; r < nb; ++r) {
      Eigen::MatrixXd precision = corr_inverse_ / state.kappa2;
      Eigen::VectorXd rhs = (state.mu_theta(r) / state.kappa2) * corr_inv_one_;
      for (int j = 0; j < m; ++j) {
        const FitData::Curve& c = fd_.curves[static_cast<std::size_t>(j)];
        const Eigen::VectorXd& rj = resid[static_cast<std::size_t>(j)];
        double cr = 0.0;
        for (Eigen::Index i = 0; i < c.basis.rows(); ++i) {
          if (c.missing[static_cast<std::size_t>(i)]) continue;
          cr += c.basis(i, r) * (rj(i) + c.basis(i, r) * state.theta(r, j));
        }
        precision(j, j) += b2sums_(r, j) / state.tau2;
        rhs(j) += cr / state.tau2;
      }
      Eigen::LLT<Eigen::MatrixXd> llt(precision);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("theta conditional precision not SPD");
      }
      const Eigen::VectorXd mean = llt.solve(rhs);
      const Eigen::VectorXd draw = detail::sample_from_precision(llt, mean, rng);
      for (int j = 0; j < m; ++j) {
        const double shift = draw(j) - state.theta(r, j);
        if (shift != 0.0) {
          resid[static_cast<std::size_t>(j)].noalias() -=
              fd_.curves[static_cast<std::size_t>(j)].basis.col(r) * shift;
        }
        state.theta(r, j) = draw(j);
      }
    }
  }

  // Tridiagonal precision of one site's delta conditional: AR(1) prior plus
  // diagonal likelihood precision at unmasked points.
  struct DeltaSystem {
    Eigen::VectorXd diag;
    Eigen::VectorXd sub;
    Eigen::VectorXd rhs;
  };

  DeltaSystem delta_system(const ModelState& state, int site) const {
    const FitData::Curve& c = fd_.curves[static_cast<std::size_t>(site)];
    const Eigen::Index n = static_cast<Eigen::Index>(c.times.size());
    DeltaSystem sys;
    sys.diag.resize(n);
    sys.sub.resize(std::max<Eigen::Index>(n - 1, 0));
    sys.rhs = Eigen::VectorXd::Zero(n);
    const double inv_nu2 = 1.0 / state.nu2;
    for (Eigen::Index i = 0; i < n; ++i) {
      double d = inv_nu2;
      if (i + 1 < n) {
        const double phi_next = ar_coefficient(state.ar_decay, c.gaps(i + 1));
        d += phi_next * phi_next * inv_nu2;
        sys.sub(i) = -phi_next * inv_nu2;
      }
      sys.diag(i) = d;
    }
    const Eigen::VectorXd fit = c.basis * state.theta.col(site);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (c.missing[static_cast<std::size_t>(i)]) continue;
      sys.diag(i) += 1.0 / state.tau2;
      sys.rhs(i) += (c.values(i) - fit(i)) / state.tau2;
    }
    return sys;
  }

  GaussianConditional delta_conditional(const ModelState& state, int site) const {
    const DeltaSystem sys = delta_system(state, site);
    const TridiagChol chol(sys.diag, sys.sub);
    GaussianConditional out;
    out.mean = chol.solve(sys.rhs);
    const Eigen::Index n = sys.diag.size();
    out.covariance.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      out.covariance.col(k) = chol.solve(Eigen::VectorXd::Unit(n, k));
    }
    return out;
  }

  // Joint Gibbs draw of each site's random-effect chain via the banded
  // factorization; O(n) per site.
  void update_delta(ModelState& state, Rng& rng) {
    if (!config_.include_random_effect) return;
    for (int j = 0; j < fd_.n_sites(); ++j) {
      const DeltaSystem sys = delta_system(state, j);
      const TridiagChol chol(sys.diag, sys.sub);
      Eigen::VectorXd draw = chol.solve(sys.rhs);
      Eigen::VectorXd z(sys.diag.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
      chol.solve_upper_inplace(z);
      draw += z;
      state.delta[static_cast<std::size_t>(j)] = std::move(draw);
    }
  }

  struct ScalarConditional {
    double mean = 0.0;
    double variance = 0.0;
  };

  ScalarConditional mu_theta_conditional(const ModelState& state, int r) const {
    ensure_correlation(state.spatial_decay);
    const double prior_prec = 1.0 / priors_.mu_variance;
    const double like_prec = one_corr_inv_one_ / state.kappa2;
    const double prec = prior_prec + like_prec;
    const double lin = priors_.mu_mean * prior_prec +
                       corr_inv_one_.dot(state.theta.row(r).transpose()) / state.kappa2;
    return {lin / prec, 1.0 / prec};
  }

  void update_mu_theta(ModelState& state, Rng& rng) {
    for (int r = 0; r < fd_.n_basis(); ++r) {
      const ScalarConditional c = mu_theta_conditional(state, r);
      state.mu_theta(r) = rng.normal(c.mean, std::sqrt(c.variance));
    }
  }

  // Conjugate IG parameters for the observation variance: shape gains half
  // the unmasked count, scale gains half the sum of squared residuals.
  IgPrior tau2_conditional(const ModelState& state) const {
    double ssr = 0.0;
    for (int j = 0; j < fd_.n_sites(); ++j) {
      const FitData::Curve& c = fd_.curves[static_cast<std::size_t>(j)];
      const Eigen::VectorXd fit = c.basis * state.theta.col(j);
      const Eigen::VectorXd& d = state.delta[static_cast<std::size_t>(j)];
      for (Eigen::Index i = 0; i < fit.size(); ++i) {
        if (c.missing[static_cast<std::size_t>(i)]) continue;
        const double e = c.values(i) - fit(i) - d(i);
        ssr += e * e;
      }
    }
    return {priors_.tau2.shape + 0.5 * static_cast<double>(fd_.n_unmasked),
            priors_.tau2.scale + 0.5 * ssr};
  }

  void update_tau2(ModelState& state, Rng& rng) {
    const IgPrior c = tau2_conditional(state);
    if (!(c.scale > 0.0)) throw NumericalError("tau2 update: non-positive IG scale");
    state.tau2 = rng.inv_gamma(c.shape, c.scale);
  }

  // Conjugate IG parameters for the innovation variance, from the AR
  // innovations over every time point (masked ones included).
  IgPrior nu2_conditional(const ModelState& state) const {
    double ss = 0.0;
    for (int j = 0; j < fd_.n_sites(); ++j) {
      const FitData::Curve& c = fd_.curves[static_cast<std::size_t>(j)];
      const Eigen::VectorXd& d = state.delta[static_cast<std::size_t>(j)];
      if (d.size() == 0) continue;
      ss += d(0) * d(0);
      for (Eigen::Index i = 1; i < d.size(); ++i) {
        const double e = d(i) - ar_coefficient(state.ar_decay, c.gaps(i)) * d(i - 1);
        ss += e * e;
      }
    }
    return {priors_.nu2.shape + 0.5 * static_cast<double>(fd_.n_points),
            priors_.nu2.scale + 0.5 * ss};
  }

  void update_nu2(ModelState& state, Rng& rng) {
    if (!config_.include_random_effect) return;
    const IgPrior c = nu2_conditional(state);
    if (!(c.scale > 0.0)) throw NumericalError("nu2 update: non-positive IG scale");
    state.nu2 = rng.inv_gamma(c.shape, c.scale);
  }

  IgPrior kappa2_conditional(const ModelState& state) const {
    ensure_correlation(state.spatial_decay);
    const int nb = fd_.n_basis();
    double qf = 0.0;
    for (int r = 0; r < nb; ++r) {
      const Eigen::VectorXd x =
          state.theta.row(r).transpose().array() - state.mu_theta(r);
      qf += x.dot(corr_chol_.solve(x));
    }
    return {priors_.kappa2.shape + 0.5 * fd_.n_sites() * nb,
            priors_.kappa2.scale + 0.5 * qf};
  }

  void update_kappa2(ModelState& state, Rng& rng) {
    const IgPrior c = kappa2_conditional(state);
    if (!(c.scale > 0.0)) throw NumericalError("kappa2 update: non-positive IG scale");
    state.kappa2 = rng.inv_gamma(c.shape, c.scale);
  }

  // Log conditional of the spatial decay given theta, mu, kappa2 (up to a
  // constant): MVN rows plus the IG prior.
  double spatial_decay_log_target(const ModelState& state, double decay) const {
    const Eigen::MatrixXd corr =
        correlation_matrix(fd_.kernel_family, decay, fd_.dists);
    JitteredChol chol = chol_with_jitter(corr);
    const int nb = fd_.n_basis();
    double quad = 0.0;
    for (int r = 0; r < nb; ++r) {
      const Eigen::VectorXd x =
          state.theta.row(r).transpose().array() - state.mu_theta(r);
      quad += x.dot(chol.solve(x));
    }
    return -0.5 * nb * chol.log_det() - 0.5 * quad / state.kappa2 +
           log_inv_gamma_pdf(decay, priors_.spatial_decay.shape,
                             priors_.spatial_decay.scale);
  }

  void update_spatial_decay(ModelState& state, Rng& rng, bool adapt) {
    const double updated = rwm_spatial_.update(
        state.spatial_decay,
        [&](double d) { return spatial_decay_log_target(state, d); }, rng, adapt);
    if (updated != state.spatial_decay) {
      state.spatial_decay = updated;
      ensure_correlation(updated);
    }
  }

  // Log conditional of the AR decay given delta and nu2.
  double ar_decay_log_target(const ModelState& state, double decay) const {
    double ss = 0.0;
    for (int j = 0; j < fd_.n_sites(); ++j) {
      const FitData::Curve& c = fd_.curves[static_cast<std::size_t>(j)];
      const Eigen::VectorXd& d = state.delta[static_cast<std::size_t>(j)];
      for (Eigen::Index i = 1; i < d.size(); ++i) {
        const double e = d(i) - std::exp(-decay * c.gaps(i)) * d(i - 1);
        ss += e * e;
      }
    }
    return -0.5 * ss / state.nu2 +
           log_inv_gamma_pdf(decay, priors_.ar_decay.shape, priors_.ar_decay.scale);
  }

  void update_ar_decay(ModelState& state, Rng& rng, bool adapt) {
    if (!config_.include_random_effect) return;
    state.ar_decay = rwm_ar_.update(
        state.ar_decay,
        [&](double d) { return ar_decay_log_target(state, d); }, rng, adapt);
  }

  // One full scan in the fixed order.
  void scan(ModelState& state, Rng& rng, bool adapt) {
    update_theta(state, rng);
    update_delta(state, rng);
    update_mu_theta(state, rng);
    update_tau2(state, rng);
    update_nu2(state, rng);
    update_kappa2(state, rng);
    update_spatial_decay(state, rng, adapt);
    update_ar_decay(state, rng, adapt);
  }

  PosteriorDraws run() {
    if (fd_.n_unmasked == 0) {
      throw InputError("run_chain: need at least one unmasked observation");
    }
    Rng rng(config_.seed);
    ModelState state = initial_state();
    const long adapt_limit =
        config_.adapt_window < 0
            ? config_.burn_in
            : std::min(config_.adapt_window, config_.burn_in);
    PosteriorDraws draws;
    draws.config = config_;
    draws.states.reserve(static_cast<std::size_t>(config_.retained()));
    for (long iter = 1; iter <= config_.total_iterations; ++iter) {
      try {
        scan(state, rng, iter <= adapt_limit);
      } catch (const NumericalError& e) {
        throw NumericalError("iteration " + std::to_string(iter) + ": " +
                             e.what());
      }
      if (iter > config_.burn_in && (iter - config_.burn_in) % config_.thin == 0) {
        draws.states.push_back(state);
        draws.log_joint.push_back(log_joint(fd_, state, priors_));
      }
    }
    draws.accept_spatial_decay = rwm_spatial_.stats();
    draws.accept_ar_decay = rwm_ar_.stats();
    return draws;
  }

  const AdaptiveRwm& rwm_spatial() const { return rwm_spatial_; }
  const AdaptiveRwm& rwm_ar() const { return rwm_ar_; }

 private:
  // Refresh the cached correlation factorization when the decay changes.
  void ensure_correlation(double decay) const {
    if (decay == cached_decay_) return;
    const Eigen::MatrixXd corr =
        correlation_matrix(fd_.kernel_family, decay, fd_.dists);
    corr_chol_ = chol_with_jitter(corr);
    const Eigen::Index m = corr.rows();
    corr_inverse_ = corr_chol_.solve(Eigen::MatrixXd::Identity(m, m));
    corr_inv_one_ = corr_chol_.solve(Eigen::VectorXd::Ones(m));
    one_corr_inv_one_ = corr_inv_one_.sum();
    cached_decay_ = decay;
  }

  FitData fd_;
  PriorSpec priors_;
  SamplerConfig config_;
  Eigen::MatrixXd b2sums_;  // (p+1) x m
  AdaptiveRwm rwm_spatial_;
  AdaptiveRwm rwm_ar_;
  mutable double cached_decay_ = std::numeric_limits<double>::quiet_NaN();
  mutable JitteredChol corr_chol_;
  mutable Eigen::MatrixXd corr_inverse_;
  mutable Eigen::VectorXd corr_inv_one_;
  mutable double one_corr_inv_one_ = 0.0;
};

inline PosteriorDraws run_chain(const Dataset& data, const BasisSpec& basis,
                                const PriorSpec& priors,
                                const SamplerConfig& config,
                                KernelFamily family = KernelFamily::gaussian) {
  Sampler sampler(FitData::prepare(data, basis, family), priors, config);
  return sampler.run();
}

// Posterior predictive draws for every masked observation slot: one stream
// per masked point, one value per retained draw, with mean and HPD summary.
struct ImputedPoint {
  int site = 0;
  int index = 0;
  std::string site_id;
  double t = 0.0;
  std::vector<double> draws;
  double mean = 0.0;
  HpdInterval interval;
};

inline std::vector<ImputedPoint> impute_missing(const PosteriorDraws& draws,
                                                const FitData& fd,
                                                std::uint64_t seed,
                                                double mass = 0.95) {
  if (draws.size() == 0) throw InputError("impute_missing: no draws");
  Rng rng(derive_seed(seed, 0x11117u));
  std::vector<ImputedPoint> out;
  for (int j = 0; j < fd.n_sites(); ++j) {
    const FitData::Curve& c = fd.curves[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      if (!c.missing[i]) continue;
      ImputedPoint pt;
      pt.site = j;
      pt.index = static_cast<int>(i);
      pt.site_id = fd.site_ids[static_cast<std::size_t>(j)];
      pt.t = c.times[i];
      pt.draws.reserve(draws.size());
      for (const ModelState& s : draws.states) {
        const double fit =
            c.basis.row(static_cast<Eigen::Index>(i)).dot(s.theta.col(j)) +
            s.delta[static_cast<std::size_t>(j)](static_cast<Eigen::Index>(i));
        pt.draws.push_back(fit + std::sqrt(s.tau2) * rng.normal());
      }
      double m = 0.0;
      for (double v : pt.draws) m += v;
      pt.mean = m / static_cast<double>(pt.draws.size());
      pt.interval = hpd(pt.draws, mass);
      out.push_back(std::move(pt));
    }
  }
  return out;
}

}  // namespace spatfda
