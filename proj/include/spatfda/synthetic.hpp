// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "spatfda/bernstein.hpp"
#include "spatfda/data.hpp"
#include "spatfda/errors.hpp"
#include "spatfda/kernels.hpp"
#include "spatfda/rng.hpp"

namespace spatfda {

// Distribution of consecutive time gaps within a curve. uniform01 and beta12
// reproduce the two irregular-spacing scenarios of the simulation studies;
// fixed gives equispaced points for controlled tests.
enum class GapScheme { uniform01, beta12, fixed };

inline std::string to_string(GapScheme s) {
  switch (s) {
    case GapScheme::uniform01: return "uniform01";
    case GapScheme::beta12: return "beta12";
    case GapScheme::fixed: return "fixed";
  }
  return "uniform01";
}

inline GapScheme gap_scheme_from_string(const std::string& s) {
  if (s == "uniform01") return GapScheme::uniform01;
  if (s == "beta12") return GapScheme::beta12;
  if (s == "fixed") return GapScheme::fixed;
  throw ConfigError("unknown gap scheme '" + s + "'");
}

inline double draw_gap(GapScheme scheme, Rng& rng) {
  switch (scheme) {
    case GapScheme::uniform01: {
      double g;
      do {
        g = rng.uniform();
      } while (!(g > 0.0));
      return g;
    }
    case GapScheme::beta12:
      // Beta(1,2) by inverse CDF: F(x) = 1 - (1-x)^2.
      return 1.0 - std::sqrt(1.0 - rng.uniform());
    case GapScheme::fixed:
      return 1.0;
  }
  return 1.0;
}

// Monte Carlo replication plan. Replicate seeds derive deterministically
// from the master seed; the site grid is shared by all replicates.
struct McPlan {
  int replicates = 100;
  int sites = 15;
  int points_per_curve = 200;
  std::uint64_t master_seed = 1;
};

// Jittered square grid on the unit square with the trailing points dropped;
// for 15 sites this is a 4x4 layout minus one corner, giving a mix of
// clustered and isolated locations.
inline Eigen::MatrixXd default_site_grid(int m, std::uint64_t seed) {
  if (m < 1) throw InputError("default_site_grid: need at least one site");
  int k = 1;
  while (k * k < m) ++k;
  Rng rng(derive_seed(seed, 0x517E));
  Eigen::MatrixXd coords(m, 2);
  const double cell = k > 1 ? 1.0 / (k - 1) : 1.0;
  int idx = 0;
  for (int row = 0; row < k && idx < m; ++row) {
    for (int col = 0; col < k && idx < m; ++col) {
      const double jx = rng.uniform(-0.25 * cell, 0.25 * cell);
      const double jy = rng.uniform(-0.25 * cell, 0.25 * cell);
      coords(idx, 0) = (k > 1 ? col * cell : 0.5) + jx;
      coords(idx, 1) = (k > 1 ? row * cell : 0.5) + jy;
      ++idx;
    }
  }
  return coords;
}

inline std::string site_name(int j) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%02d", j + 1);
  return buf;
}

// Irregular times spanning exactly [0, 1]: cumulative gap sums rescaled per
// curve. The raw (pre-rescale) gaps are returned alongside because the
// random-effect simulation acts on them.
struct TimeGrid {
  std::vector<double> times;     // rescaled to [0, 1]
  std::vector<double> raw_gaps;  // raw_gaps[0] = 0
};

inline TimeGrid draw_time_grid(int n, GapScheme scheme, Rng& rng) {
  if (n < 2) throw InputError("draw_time_grid: need at least 2 points");
  TimeGrid grid;
  grid.raw_gaps.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> raw(static_cast<std::size_t>(n), 0.0);
  for (int i = 1; i < n; ++i) {
    grid.raw_gaps[static_cast<std::size_t>(i)] = draw_gap(scheme, rng);
    raw[static_cast<std::size_t>(i)] =
        raw[static_cast<std::size_t>(i - 1)] + grid.raw_gaps[static_cast<std::size_t>(i)];
  }
  const double span = raw.back();
  grid.times.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    grid.times[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(i)] / span;
  }
  grid.times.front() = 0.0;
  grid.times.back() = 1.0;
  return grid;
}

// AR(1) random-effect chain over the given gaps (gaps[0] ignored).
inline Eigen::VectorXd simulate_ar_chain(const std::vector<double>& gaps,
                                         double ar_decay, double nu2, Rng& rng) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(gaps.size()));
  const double sd = std::sqrt(nu2);
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (i == 0) {
      d(0) = sd * rng.normal();
    } else {
      d(static_cast<Eigen::Index>(i)) =
          std::exp(-ar_decay * gaps[i]) * d(static_cast<Eigen::Index>(i - 1)) +
          sd * rng.normal();
    }
  }
  return d;
}

// Generating values of the model-based study; defaults are the published
// simulation settings.
struct Study1Params {
  std::vector<double> mu_theta{3.0, 29.0, 15.0, 7.0};
  double kappa2 = 2.0;
  double spatial_decay = 1.0;
  double ar_decay = 0.2;  // acts on the raw gap scale
  double nu2 = 0.5;
  double tau2 = 1.0;

  int degree() const { return static_cast<int>(mu_theta.size()) - 1; }
};

// Ground truth kept apart from the data so fitting code cannot touch it.
struct Study1Truth {
  Eigen::MatrixXd theta;                     // (p+1) x m
  std::vector<std::vector<double>> target;   // noiseless basis curve per site
  Study1Params params;
};

struct Study1Replicate {
  Dataset data;
  Study1Truth truth;
};

inline Study1Replicate generate_study1_replicate(int m, int n, GapScheme scheme,
                                                 const Study1Params& params,
                                                 const Eigen::MatrixXd& coords,
                                                 std::uint64_t seed) {
  const int nb = params.degree() + 1;
  const BasisSpec basis(params.degree(), 0.0, 1.0);
  const SpatialKernel kernel{KernelFamily::gaussian, params.kappa2,
                             params.spatial_decay};
  const JitteredChol chol = chol_with_jitter(kernel_matrix(kernel, coords));

  Rng theta_rng = Rng::from_stream(seed, 0);
  Study1Replicate rep;
  rep.truth.params = params;
  rep.truth.theta.resize(nb, m);
  for (int r = 0; r < nb; ++r) {
    Eigen::VectorXd z(m);
    for (int j = 0; j < m; ++j) z(j) = theta_rng.normal();
    rep.truth.theta.row(r) =
        (Eigen::VectorXd::Constant(m, params.mu_theta[static_cast<std::size_t>(r)]) +
         chol.llt.matrixL() * z)
            .transpose();
  }

  for (int j = 0; j < m; ++j) {
    Rng site_rng = Rng::from_stream(seed, 100 + static_cast<std::uint64_t>(j));
    const TimeGrid grid = draw_time_grid(n, scheme, site_rng);
    const Eigen::VectorXd delta =
        simulate_ar_chain(grid.raw_gaps, params.ar_decay, params.nu2, site_rng);
    SiteSeries s;
    s.site_id = site_name(j);
    s.x = coords(j, 0);
    s.y = coords(j, 1);
    s.times = grid.times;
    const double obs_sd = std::sqrt(params.tau2);
    std::vector<double> target(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd b = eval_basis(basis, grid.times[static_cast<std::size_t>(i)]);
      const double x = b.dot(rep.truth.theta.col(j));
      target[static_cast<std::size_t>(i)] = x;
      s.values.push_back(x + delta(i) + obs_sd * site_rng.normal());
      s.missing.push_back(false);
    }
    rep.truth.target.push_back(std::move(target));
    rep.data.sites.push_back(std::move(s));
  }
  rep.data.canonicalize();
  rep.data.validate();
  return rep;
}

inline std::vector<Study1Replicate> generate_study1(const McPlan& plan,
                                                    GapScheme scheme,
                                                    const Study1Params& params) {
  const Eigen::MatrixXd coords =
      default_site_grid(plan.sites, derive_seed(plan.master_seed, 0xC0));
  std::vector<Study1Replicate> out;
  out.reserve(static_cast<std::size_t>(plan.replicates));
  for (int rep = 0; rep < plan.replicates; ++rep) {
    out.push_back(generate_study1_replicate(
        plan.sites, plan.points_per_curve, scheme, params, coords,
        derive_seed(plan.master_seed, 1000 + static_cast<std::uint64_t>(rep))));
  }
  return out;
}

// Spatially correlated Fourier curves: intercept plus four sine/cosine
// harmonics, coefficient vectors correlated across sites by an exponential
// kernel.
struct Study2Params {
  double beta_mean = 10.0;
  double kappa2 = 2.0;
  double decay = 1.0;  // exponential kernel rate
  double sigma2 = 2.0;
  double period = 1.0;  // T; the default spans one fundamental cycle
  GapScheme gaps = GapScheme::uniform01;
};

struct FourierTarget {
  Eigen::MatrixXd beta;  // 9 x m: intercept, then (sin, cos) per harmonic
  double omega = 2.0 * std::numbers::pi;

  double value(int site, double t) const {
    double v = beta(0, site);
    for (int r = 1; r <= 4; ++r) {
      v += beta(2 * r - 1, site) * std::sin(r * omega * t) +
           beta(2 * r, site) * std::cos(r * omega * t);
    }
    return v;
  }
};

struct Study2Truth {
  FourierTarget fourier;
  std::vector<std::vector<double>> target;  // noiseless values per site
  Study2Params params;
};

struct Study2Replicate {
  Dataset data;
  Study2Truth truth;
};

inline Study2Replicate generate_study2_replicate(int m, int n,
                                                 const Study2Params& params,
                                                 const Eigen::MatrixXd& coords,
                                                 std::uint64_t seed) {
  const SpatialKernel kernel{KernelFamily::exponential, params.kappa2,
                             params.decay};
  const JitteredChol chol = chol_with_jitter(kernel_matrix(kernel, coords));

  Study2Replicate rep;
  rep.truth.params = params;
  rep.truth.fourier.omega = 2.0 * std::numbers::pi / params.period;
  rep.truth.fourier.beta.resize(9, m);
  Rng beta_rng = Rng::from_stream(seed, 0);
  for (int l = 0; l < 9; ++l) {
    Eigen::VectorXd z(m);
    for (int j = 0; j < m; ++j) z(j) = beta_rng.normal();
    rep.truth.fourier.beta.row(l) =
        (Eigen::VectorXd::Constant(m, params.beta_mean) + chol.llt.matrixL() * z)
            .transpose();
  }

  const double obs_sd = std::sqrt(params.sigma2);
  for (int j = 0; j < m; ++j) {
    Rng site_rng = Rng::from_stream(seed, 100 + static_cast<std::uint64_t>(j));
    const TimeGrid grid = draw_time_grid(n, params.gaps, site_rng);
    SiteSeries s;
    s.site_id = site_name(j);
    s.x = coords(j, 0);
    s.y = coords(j, 1);
    s.times = grid.times;
    std::vector<double> target(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double x =
          rep.truth.fourier.value(j, grid.times[static_cast<std::size_t>(i)]);
      target[static_cast<std::size_t>(i)] = x;
      s.values.push_back(x + obs_sd * site_rng.normal());
      s.missing.push_back(false);
    }
    rep.truth.target.push_back(std::move(target));
    rep.data.sites.push_back(std::move(s));
  }
  rep.data.canonicalize();
  rep.data.validate();
  return rep;
}

inline std::vector<Study2Replicate> generate_study2(const McPlan& plan,
                                                    const Study2Params& params) {
  const Eigen::MatrixXd coords =
      default_site_grid(plan.sites, derive_seed(plan.master_seed, 0xC0));
  std::vector<Study2Replicate> out;
  out.reserve(static_cast<std::size_t>(plan.replicates));
  for (int rep = 0; rep < plan.replicates; ++rep) {
    out.push_back(generate_study2_replicate(
        plan.sites, plan.points_per_curve, params, coords,
        derive_seed(plan.master_seed, 1000 + static_cast<std::uint64_t>(rep))));
  }
  return out;
}

// One held-out observation hidden by the mask.
struct HeldOutPoint {
  std::string site_id;
  int site = 0;
  int index = 0;
  double t = 0.0;
  double value = 0.0;
};

struct MaskedDataset {
  Dataset data;  // masked slots carry NaN values
  std::vector<HeldOutPoint> held_out;
};

// Hide `count` uniformly chosen unmasked observations (without replacement).
// The same seed always selects the same slots, which keeps mask positions
// constant across Monte Carlo replicates.
inline MaskedDataset apply_missing_mask(const Dataset& data, std::size_t count,
                                        std::uint64_t seed) {
  data.validate();
  std::vector<std::pair<int, int>> slots;
  for (std::size_t j = 0; j < data.sites.size(); ++j) {
    for (std::size_t i = 0; i < data.sites[j].size(); ++i) {
      if (!data.sites[j].missing[i]) {
        slots.emplace_back(static_cast<int>(j), static_cast<int>(i));
      }
    }
  }
  if (count > slots.size()) {
    throw InputError("apply_missing_mask: count " + std::to_string(count) +
                     " exceeds " + std::to_string(slots.size()) +
                     " available observations");
  }
  Rng rng(derive_seed(seed, 0xA5D));
  // Partial Fisher-Yates: the first `count` entries become the sample.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t pick =
        i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(slots.size() - i));
    std::swap(slots[i], slots[std::min(pick, slots.size() - 1)]);
  }
  MaskedDataset out;
  out.data = data;
  for (std::size_t i = 0; i < count; ++i) {
    const auto [j, idx] = slots[i];
    SiteSeries& s = out.data.sites[static_cast<std::size_t>(j)];
    HeldOutPoint h;
    h.site_id = s.site_id;
    h.site = j;
    h.index = idx;
    h.t = s.times[static_cast<std::size_t>(idx)];
    h.value = s.values[static_cast<std::size_t>(idx)];
    out.held_out.push_back(h);
    s.missing[static_cast<std::size_t>(idx)] = true;
    s.values[static_cast<std::size_t>(idx)] =
        std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace spatfda
