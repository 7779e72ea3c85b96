// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "spatfda/bernstein.hpp"
#include "spatfda/errors.hpp"
#include "spatfda/kernels.hpp"
#include "spatfda/mcmc.hpp"
#include "spatfda/metrics.hpp"
#include "spatfda/model.hpp"
#include "spatfda/rng.hpp"

namespace spatfda {

struct PredictionTarget {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  std::vector<double> times;  // strictly increasing, inside the basis interval
};

struct PredictionRequest {
  std::vector<PredictionTarget> targets;
  bool include_delta = true;
  bool include_obs_noise = true;
  std::uint64_t seed = 1;
  double hpd_mass = 0.95;
  bool keep_samples = false;
};

struct PredictedCurve {
  std::string site_id;
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> hpd_lo;
  std::vector<double> hpd_hi;
  // draw-major samples, only filled when requested
  std::vector<std::vector<double>> samples;
};

// Conditioning system of the coefficient field at new sites given observed
// sites, shared across all basis indices r because the kernel is. Built from
// the jointly jittered covariance so that conditioning the dense joint matrix
// reproduces it exactly.
struct KrigeSystem {
  Eigen::MatrixXd weights;   // m x k, Sigma_oo^{-1} Sigma_ot
  Eigen::MatrixXd cond_cov;  // k x k
  Eigen::LLT<Eigen::MatrixXd> cond_chol;
};

inline KrigeSystem krige_system(const SpatialKernel& kernel,
                                const Eigen::MatrixXd& obs_coords,
                                const Eigen::MatrixXd& target_coords) {
  const Eigen::Index m = obs_coords.rows();
  const Eigen::Index k = target_coords.rows();
  if (m < 1 || k < 1) throw InputError("krige_system: need observed and target sites");
  Eigen::MatrixXd all(m + k, 2);
  all.topRows(m) = obs_coords;
  all.bottomRows(k) = target_coords;
  Eigen::MatrixXd joint = kernel_matrix(kernel, all);
  joint.diagonal().array() += 1e-9 * kernel.kappa2;

  const Eigen::MatrixXd sigma_oo = joint.topLeftCorner(m, m);
  const Eigen::MatrixXd sigma_ot = joint.topRightCorner(m, k);
  const Eigen::MatrixXd sigma_tt = joint.bottomRightCorner(k, k);

  Eigen::LLT<Eigen::MatrixXd> oo(sigma_oo);
  if (oo.info() != Eigen::Success) {
    throw NumericalError("krige_system: observed covariance not SPD");
  }
  KrigeSystem sys;
  sys.weights = oo.solve(sigma_ot);
  sys.cond_cov = sigma_tt - sigma_ot.transpose() * sys.weights;
  // Coincident target/observed pairs push the conditional variance to the
  // jitter floor; factor with escalation rather than failing outright.
  const JitteredChol jc = chol_with_jitter(sys.cond_cov);
  sys.cond_chol = jc.llt;
  return sys;
}

inline Eigen::VectorXd krige_conditional_mean(const KrigeSystem& sys,
                                              const Eigen::VectorXd& theta_obs,
                                              double mu_r) {
  return Eigen::VectorXd::Constant(sys.weights.cols(), mu_r) +
         sys.weights.transpose() *
             (theta_obs.array() - mu_r).matrix();
}

// Draw the (p+1) x k coefficient block at target sites from its conditional
// MVN given one posterior draw.
inline Eigen::MatrixXd krige_theta(const ModelState& draw,
                                   const Eigen::MatrixXd& obs_coords,
                                   const Eigen::MatrixXd& target_coords,
                                   KernelFamily family, Rng& rng) {
  const SpatialKernel kernel{family, draw.kappa2, draw.spatial_decay};
  const KrigeSystem sys = krige_system(kernel, obs_coords, target_coords);
  const Eigen::Index k = target_coords.rows();
  const int nb = static_cast<int>(draw.theta.rows());
  Eigen::MatrixXd out(nb, k);
  for (int r = 0; r < nb; ++r) {
    const Eigen::VectorXd mean = krige_conditional_mean(
        sys, draw.theta.row(r).transpose(), draw.mu_theta(r));
    Eigen::VectorXd z(k);
    for (Eigen::Index i = 0; i < k; ++i) z(i) = rng.normal();
    out.row(r) = (mean + sys.cond_chol.matrixL() * z).transpose();
  }
  return out;
}

namespace detail {

// Fresh AR(1) chain over a target grid from one draw's decay and innovation
// variance; new sites carry no cross-site random-effect information to
// condition on.
inline Eigen::VectorXd simulate_delta(const std::vector<double>& times,
                                      double ar_decay, double nu2, Rng& rng) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(times.size()));
  const double sd = std::sqrt(nu2);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i == 0) {
      d(0) = sd * rng.normal();
    } else {
      const double phi = std::exp(-ar_decay * (times[i] - times[i - 1]));
      d(static_cast<Eigen::Index>(i)) =
          phi * d(static_cast<Eigen::Index>(i - 1)) + sd * rng.normal();
    }
  }
  return d;
}

inline PredictedCurve predict_one_target(const PosteriorDraws& draws,
                                         const PredictionTarget& target,
                                         const BasisSpec& basis,
                                         const Eigen::MatrixXd& obs_coords,
                                         KernelFamily family,
                                         const PredictionRequest& request,
                                         std::uint64_t target_seed) {
  if (target.times.empty()) {
    throw InputError("predict: target '" + target.id + "' has no times");
  }
  const BasisMatrix bm = design_matrix(basis, target.times);
  Eigen::MatrixXd target_coords(1, 2);
  target_coords << target.x, target.y;
  Rng rng(target_seed);

  const std::size_t n_t = target.times.size();
  std::vector<std::vector<double>> per_time(n_t);
  for (auto& v : per_time) v.reserve(draws.size());

  PredictedCurve curve;
  curve.site_id = target.id;
  curve.times = target.times;
  if (request.keep_samples) curve.samples.reserve(draws.size());

  for (const ModelState& s : draws.states) {
    const Eigen::MatrixXd theta_t =
        krige_theta(s, obs_coords, target_coords, family, rng);
    Eigen::VectorXd values = bm.values * theta_t.col(0);
    if (request.include_delta) {
      values += simulate_delta(target.times, s.ar_decay, s.nu2, rng);
    }
    if (request.include_obs_noise) {
      const double sd = std::sqrt(s.tau2);
      for (Eigen::Index i = 0; i < values.size(); ++i) {
        values(i) += sd * rng.normal();
      }
    }
    std::vector<double> sample(n_t);
    for (std::size_t i = 0; i < n_t; ++i) {
      sample[i] = values(static_cast<Eigen::Index>(i));
      per_time[i].push_back(sample[i]);
    }
    if (request.keep_samples) curve.samples.push_back(std::move(sample));
  }

  curve.mean.resize(n_t);
  curve.hpd_lo.resize(n_t);
  curve.hpd_hi.resize(n_t);
  for (std::size_t i = 0; i < n_t; ++i) {
    double m = 0.0;
    for (double v : per_time[i]) m += v;
    curve.mean[i] = m / static_cast<double>(per_time[i].size());
    const HpdInterval h = hpd(per_time[i], request.hpd_mass);
    curve.hpd_lo[i] = h.lower;
    curve.hpd_hi[i] = h.upper;
  }
  return curve;
}

}  // namespace detail

// Posterior predictive curves at unmonitored coordinates. Each target is
// processed independently (marginal summaries do not depend on cross-target
// correlation), with its own derived random stream, so results do not depend
// on thread count or target order.
inline std::vector<PredictedCurve> predict_curves(
    const PosteriorDraws& draws, const PredictionRequest& request,
    const BasisSpec& basis, const Eigen::MatrixXd& obs_coords,
    KernelFamily family = KernelFamily::gaussian, int n_threads = 1) {
  if (draws.size() == 0) throw InputError("predict: no posterior draws");
  for (const PredictionTarget& t : request.targets) {
    for (double tt : t.times) {
      basis.rescale(tt);  // throws InputError when outside the interval
    }
  }
  std::vector<PredictedCurve> out(request.targets.size());
  const int threads =
      std::max(1, std::min<int>(n_threads, static_cast<int>(request.targets.size())));
  auto work = [&](int shard) {
    for (std::size_t i = static_cast<std::size_t>(shard); i < request.targets.size();
         i += static_cast<std::size_t>(threads)) {
      out[i] = detail::predict_one_target(
          draws, request.targets[i], basis, obs_coords, family, request,
          derive_seed(request.seed, 0xF00D + i));
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int s = 0; s < threads; ++s) pool.emplace_back(work, s);
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace spatfda
