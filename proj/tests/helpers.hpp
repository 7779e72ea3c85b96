// Apache License, Version 2.0, refer to LICENSE.txt
//
// Test-only oracles, independent of the library's computation paths:
// naive dense log densities, distribution CDFs, KS machinery, and fixture
// builders shared by the unit and acceptance suites.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "spatfda/data.hpp"
#include "spatfda/kernels.hpp"
#include "spatfda/mcmc.hpp"
#include "spatfda/model.hpp"
#include "spatfda/pm10.hpp"
#include "spatfda/rng.hpp"
#include "spatfda/synthetic.hpp"

namespace testutil {

// ---------------------------------------------------------------------------
// Naive joint log density: explicit dense inverse and determinant, plain
// loops, no sharing with the library implementation beyond the model itself.
// ---------------------------------------------------------------------------

struct NaiveTerms {
  double likelihood = 0.0;
  double theta_prior = 0.0;
  double delta_prior = 0.0;
  double mu_prior = 0.0;
  double hyper_prior = 0.0;
  double total() const {
    return likelihood + theta_prior + delta_prior + mu_prior + hyper_prior;
  }
};

inline double naive_normal_logpdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) -
         (x - mean) * (x - mean) / (2.0 * var);
}

inline double naive_ig_logpdf(double x, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

inline NaiveTerms naive_log_joint(const spatfda::FitData& fd,
                                  const spatfda::ModelState& s,
                                  const spatfda::PriorSpec& pr) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  NaiveTerms t;
  const int m = fd.n_sites();
  const int nb = fd.n_basis();

  for (int j = 0; j < m; ++j) {
    const auto& c = fd.curves[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      if (c.missing[i]) continue;
      double fit = 0.0;
      for (int r = 0; r < nb; ++r) {
        fit += c.basis(static_cast<Eigen::Index>(i), r) * s.theta(r, j);
      }
      fit += s.delta[static_cast<std::size_t>(j)](static_cast<Eigen::Index>(i));
      t.likelihood += naive_normal_logpdf(c.values(static_cast<Eigen::Index>(i)),
                                          fit, s.tau2);
    }
  }

  // Same jitter convention as the implementation, different linear algebra.
  MatrixXd sigma(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const double h = fd.dists(a, b);
      const double cov =
          fd.kernel_family == spatfda::KernelFamily::gaussian
              ? s.kappa2 * std::exp(-(s.spatial_decay * h) * (s.spatial_decay * h))
              : s.kappa2 * std::exp(-s.spatial_decay * h);
      sigma(a, b) = cov;
    }
  }
  sigma.diagonal().array() += 1e-9 * s.kappa2;
  const MatrixXd sigma_inv = sigma.inverse();
  const double sigma_logdet = std::log(sigma.determinant());
  for (int r = 0; r < nb; ++r) {
    VectorXd x(m);
    for (int j = 0; j < m; ++j) x(j) = s.theta(r, j) - s.mu_theta(r);
    double quad = 0.0;
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) quad += x(a) * sigma_inv(a, b) * x(b);
    }
    t.theta_prior +=
        -0.5 * (m * std::log(2.0 * std::numbers::pi) + sigma_logdet + quad);
  }

  for (int j = 0; j < m; ++j) {
    const auto& c = fd.curves[static_cast<std::size_t>(j)];
    const VectorXd& d = s.delta[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (i == 0) {
        t.delta_prior += naive_normal_logpdf(d(0), 0.0, s.nu2);
      } else {
        const double phi = std::exp(-s.ar_decay * c.gaps(i));
        t.delta_prior += naive_normal_logpdf(d(i), phi * d(i - 1), s.nu2);
      }
    }
  }

  for (int r = 0; r < nb; ++r) {
    t.mu_prior += naive_normal_logpdf(s.mu_theta(r), pr.mu_mean, pr.mu_variance);
  }

  t.hyper_prior =
      naive_ig_logpdf(s.spatial_decay, pr.spatial_decay.shape, pr.spatial_decay.scale) +
      naive_ig_logpdf(s.ar_decay, pr.ar_decay.shape, pr.ar_decay.scale) +
      naive_ig_logpdf(s.tau2, pr.tau2.shape, pr.tau2.scale) +
      naive_ig_logpdf(s.kappa2, pr.kappa2.shape, pr.kappa2.scale) +
      naive_ig_logpdf(s.nu2, pr.nu2.shape, pr.nu2.scale);
  return t;
}

// ---------------------------------------------------------------------------
// Dense covariance of one AR(1) chain started at N(0, nu2):
// V_0 = nu2, V_i = phi_i^2 V_{i-1} + nu2, Cov(d_i, d_j) = prod(phi) * V_min.
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd ar_chain_covariance(const std::vector<double>& gaps,
                                           double ar_decay, double nu2) {
  const int n = static_cast<int>(gaps.size());
  std::vector<double> v(static_cast<std::size_t>(n));
  std::vector<double> phi(static_cast<std::size_t>(n), 1.0);
  v[0] = nu2;
  for (int i = 1; i < n; ++i) {
    phi[static_cast<std::size_t>(i)] = std::exp(-ar_decay * gaps[static_cast<std::size_t>(i)]);
    v[static_cast<std::size_t>(i)] =
        phi[static_cast<std::size_t>(i)] * phi[static_cast<std::size_t>(i)] *
            v[static_cast<std::size_t>(i - 1)] +
        nu2;
  }
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i) {
    cov(i, i) = v[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      double prod = 1.0;
      for (int k = i + 1; k <= j; ++k) prod *= phi[static_cast<std::size_t>(k)];
      cov(i, j) = prod * v[static_cast<std::size_t>(i)];
      cov(j, i) = cov(i, j);
    }
  }
  return cov;
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma functions (series + continued fraction), for
// gamma/inverse-gamma CDFs in distributional tests.
// ---------------------------------------------------------------------------

inline double gamma_p(double a, double x);

inline double gamma_q(double a, double x) {
  if (x < a + 1.0) return 1.0 - gamma_p(a, x);
  // Lentz continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= a + 1.0) return 1.0 - gamma_q(a, x);
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n <= 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// CDF of Gamma(shape a, rate 1) is P(a, x); inverse gamma (a, scale b) has
// CDF Q(a, b / x).
inline double inv_gamma_cdf(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  return gamma_q(a, b / x);
}

inline double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

inline double inv_gamma_quantile(double p, double a, double b) {
  double lo = 1e-12, hi = 1e12;
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (inv_gamma_cdf(mid, a, b) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::sqrt(lo * hi);
}

// One-sample Kolmogorov-Smirnov against a continuous CDF.
struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

template <class Cdf>
KsResult ks_test(std::vector<double> sample, Cdf&& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  const double sqrt_n = std::sqrt(n);
  const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += 2.0 * sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return {d, std::min(std::max(p, 0.0), 1.0)};
}

// ---------------------------------------------------------------------------
// Micro model fixtures.
// ---------------------------------------------------------------------------

inline spatfda::Dataset random_micro_dataset(int m, int n, double mask_prob,
                                             spatfda::Rng& rng) {
  spatfda::Dataset data;
  for (int j = 0; j < m; ++j) {
    spatfda::SiteSeries s;
    s.site_id = spatfda::site_name(j);
    s.x = rng.uniform();
    s.y = rng.uniform();
    double t = 0.0;
    bool any_observed = false;
    for (int i = 0; i < n; ++i) {
      t += 0.05 + rng.uniform();
      s.times.push_back(t);
      const bool masked = rng.uniform() < mask_prob && !(i == n - 1 && !any_observed);
      s.missing.push_back(masked);
      if (!masked) any_observed = true;
      s.values.push_back(masked ? std::nan("") : rng.normal(0.0, 2.0));
    }
    data.sites.push_back(std::move(s));
  }
  data.canonicalize();
  data.validate();
  return data;
}

inline spatfda::ModelState random_state(const spatfda::FitData& fd,
                                        spatfda::Rng& rng) {
  spatfda::ModelState s;
  const int m = fd.n_sites();
  const int nb = fd.n_basis();
  s.theta.resize(nb, m);
  for (int r = 0; r < nb; ++r) {
    for (int j = 0; j < m; ++j) s.theta(r, j) = rng.normal(0.0, 1.5);
  }
  s.mu_theta.resize(nb);
  for (int r = 0; r < nb; ++r) s.mu_theta(r) = rng.normal(0.0, 1.0);
  s.delta.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(fd.curves[static_cast<std::size_t>(j)].times.size()));
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = rng.normal(0.0, 0.7);
    s.delta[static_cast<std::size_t>(j)] = d;
  }
  s.tau2 = 0.5 + rng.uniform();
  s.nu2 = 0.5 + rng.uniform();
  s.kappa2 = 0.5 + rng.uniform();
  s.spatial_decay = 0.5 + rng.uniform();
  s.ar_decay = 0.5 + rng.uniform();
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic hourly year for the preprocessing pipeline: per-month target
// missing percentages plus a count of deliberately blanked full windows.
// Scattered missing hours are spread deterministically (stride pattern) on
// top of the blanked windows until the target share is met.
// ---------------------------------------------------------------------------

struct MonthProfile {
  double missing_percent = 10.0;  // target share of missing hours
  int blank_windows = 0;          // full aggregation windows wiped out
};

inline spatfda::RawHourlySeries synthetic_year(
    const std::string& site_id, double x, double y, int year,
    const std::vector<MonthProfile>& months, spatfda::Rng& rng) {
  spatfda::RawHourlySeries raw;
  raw.site_id = site_id;
  raw.x = x;
  raw.y = y;
  raw.year = year;
  const int total_hours = spatfda::hours_in_year(year);
  raw.values.assign(static_cast<std::size_t>(total_hours), 0.0);
  raw.missing.assign(static_cast<std::size_t>(total_hours), false);
  for (int h = 0; h < total_hours; ++h) {
    // Positive, mildly seasonal values so log transforms are safe.
    raw.values[static_cast<std::size_t>(h)] =
        40.0 + 25.0 * std::sin(2.0 * std::numbers::pi * h / total_hours) +
        10.0 * rng.uniform();
  }
  int month_start = 0;
  for (int month = 1; month <= 12; ++month) {
    const int hours = spatfda::days_in_month(year, month) * 24;
    const MonthProfile prof = months[static_cast<std::size_t>(month - 1)];
    const int window =
        spatfda::window_hours_for_missing_percent(prof.missing_percent);
    int missing_target =
        static_cast<int>(std::floor(prof.missing_percent / 100.0 * hours));
    int placed = 0;
    for (int w = 0; w < prof.blank_windows; ++w) {
      // Blank interior complete windows, skipping the first.
      const int w0 = (w + 1) * window;
      if (w0 + window > hours) break;
      for (int h = w0; h < w0 + window; ++h) {
        raw.missing[static_cast<std::size_t>(month_start + h)] = true;
        ++placed;
      }
    }
    // Spread the remaining missing hours with a stride-2 pattern (odd hours
    // first, then even), which never blanks a full window accidentally.
    std::vector<int> order;
    for (int h = 1; h < hours; h += 2) order.push_back(h);
    for (int h = 2; h < hours; h += 2) order.push_back(h);
    for (int h : order) {
      if (placed >= missing_target) break;
      const std::size_t idx = static_cast<std::size_t>(month_start + h);
      if (!raw.missing[idx]) {
        raw.missing[idx] = true;
        ++placed;
      }
    }
    month_start += hours;
  }
  return raw;
}

// Boxplot-style spread: interquartile range plus the span between the
// extreme points lying within the 1.5 IQR fences.
inline double boxplot_spread(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double q1 = spatfda::quantile_sorted(values, 0.25);
  const double q3 = spatfda::quantile_sorted(values, 0.75);
  const double iqr = q3 - q1;
  const double lo_fence = q1 - 1.5 * iqr;
  const double hi_fence = q3 + 1.5 * iqr;
  double wlo = q1, whi = q3;
  for (double v : values) {
    if (v >= lo_fence) {
      wlo = v;
      break;
    }
  }
  for (auto it = values.rbegin(); it != values.rend(); ++it) {
    if (*it <= hi_fence) {
      whi = *it;
      break;
    }
  }
  return iqr + (whi - wlo);
}

}  // namespace testutil
