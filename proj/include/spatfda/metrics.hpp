// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "spatfda/errors.hpp"

namespace spatfda {

// An estimated curve and its target sampled on one common strictly
// increasing grid.
struct CurvePair {
  std::vector<double> t;
  std::vector<double> estimate;
  std::vector<double> target;

  CurvePair(std::vector<double> grid, std::vector<double> est,
            std::vector<double> tgt)
      : t(std::move(grid)), estimate(std::move(est)), target(std::move(tgt)) {
    if (estimate.size() != t.size() || target.size() != t.size()) {
      throw InputError("CurvePair: mismatched grids");
    }
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (!(t[i] > t[i - 1])) {
        throw InputError("CurvePair: grid not strictly increasing");
      }
    }
  }
};

// Integrated squared error via the trapezoid rule on the native (possibly
// irregular) grid. Exact whenever the squared discrepancy is piecewise
// linear between grid points.
inline double ise(const CurvePair& pair) {
  if (pair.t.size() < 2) throw InputError("ise: need at least 2 grid points");
  double total = 0.0;
  double prev_sq = 0.0;
  for (std::size_t i = 0; i < pair.t.size(); ++i) {
    const double d = pair.estimate[i] - pair.target[i];
    const double sq = d * d;
    if (i > 0) total += 0.5 * (sq + prev_sq) * (pair.t[i] - pair.t[i - 1]);
    prev_sq = sq;
  }
  return total;
}

struct MseDecomposition {
  double bias2 = 0.0;
  double variance = 0.0;
  double mse = 0.0;
};

// Empirical bias^2 / variance split of replicate estimates of a fixed
// target value; population-variance convention makes mse = bias2 + variance
// an exact identity.
inline MseDecomposition mse_decomposition(const std::vector<double>& estimates,
                                          double truth) {
  if (estimates.size() < 2) {
    throw InputError("mse_decomposition: need at least 2 replicates");
  }
  const double n = static_cast<double>(estimates.size());
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= n;
  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  var /= n;
  MseDecomposition out;
  out.bias2 = (mean - truth) * (mean - truth);
  out.variance = var;
  out.mse = out.bias2 + out.variance;
  return out;
}

struct HpdInterval {
  double lower = 0.0;
  double upper = 0.0;
  double mass = 0.95;
};

// Shortest contiguous window of sorted draws containing ceil(mass * n) of
// them. Assumes a unimodal posterior; multimodal targets would need HPD
// regions, which are out of scope.
inline HpdInterval hpd(std::vector<double> draws, double mass = 0.95) {
  if (draws.size() < 10) throw InputError("hpd: need at least 10 draws");
  if (!(mass > 0.0) || !(mass < 1.0)) {
    throw InputError("hpd: mass must be in (0, 1)");
  }
  std::sort(draws.begin(), draws.end());
  const std::size_t n = draws.size();
  std::size_t k = static_cast<std::size_t>(
      std::ceil(mass * static_cast<double>(n)));
  k = std::min(std::max<std::size_t>(k, 1), n);
  HpdInterval best{draws.front(), draws[k - 1], mass};
  for (std::size_t i = 1; i + k <= n; ++i) {
    if (draws[i + k - 1] - draws[i] < best.upper - best.lower) {
      best.lower = draws[i];
      best.upper = draws[i + k - 1];
    }
  }
  return best;
}

// Type-7 quantile of already sorted values.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InputError("quantile: empty sample");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double idx = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
  const double w = idx - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

struct ChainDiagnostics {
  double ess = 0.0;
  double geweke_z = 0.0;
  bool degenerate = false;
};

namespace detail {

inline double chain_mean(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  return m / static_cast<double>(x.size());
}

// Lag-k autocovariance with the biased (1/n) normalization.
inline double autocov(const std::vector<double>& x, double mean, std::size_t k) {
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i + k < n; ++i) {
    s += (x[i] - mean) * (x[i + k] - mean);
  }
  return s / static_cast<double>(n);
}

// Integrated autocorrelation time via Geyer's initial positive sequence:
// accumulate paired autocorrelations while each pair sum stays positive.
inline double integrated_autocorr_time(const std::vector<double>& x) {
  const std::size_t n = x.size();
  const double mean = chain_mean(x);
  const double g0 = autocov(x, mean, 0);
  // Degenerate when the variance is zero up to roundoff in the mean.
  if (!(g0 > 1e-20 * std::max(1.0, mean * mean))) return -1.0;
  double sum_pairs = 0.0;
  for (std::size_t t = 0;; ++t) {
    const std::size_t k0 = 2 * t;
    const std::size_t k1 = 2 * t + 1;
    if (k1 >= n) break;
    const double pair = (autocov(x, mean, k0) + autocov(x, mean, k1)) / g0;
    if (pair <= 0.0) break;
    sum_pairs += pair;
  }
  return std::max(1.0, 2.0 * sum_pairs - 1.0);
}

}  // namespace detail

// Effective sample size of one scalar chain.
inline ChainDiagnostics ess_only(const std::vector<double>& chain) {
  ChainDiagnostics d;
  const double tau = detail::integrated_autocorr_time(chain);
  if (tau < 0.0) {
    d.degenerate = true;
    d.ess = 0.0;
    return d;
  }
  d.ess = static_cast<double>(chain.size()) / tau;
  return d;
}

// ESS plus a Geweke-style z score comparing the first 10% of the chain with
// the last 50%, each standardized by its own ESS-adjusted standard error.
inline ChainDiagnostics chain_diagnostics(const std::vector<double>& chain) {
  if (chain.size() < 100) {
    throw InputError("chain_diagnostics: need at least 100 draws");
  }
  ChainDiagnostics d = ess_only(chain);
  if (d.degenerate) return d;

  const std::size_t n = chain.size();
  const std::vector<double> head(chain.begin(),
                                 chain.begin() + static_cast<long>(n / 10));
  const std::vector<double> tail(chain.begin() + static_cast<long>(n / 2),
                                 chain.end());
  const ChainDiagnostics dh = ess_only(head);
  const ChainDiagnostics dt = ess_only(tail);
  if (dh.degenerate || dt.degenerate) {
    d.geweke_z = 0.0;
    return d;
  }
  const double mh = detail::chain_mean(head);
  const double mt = detail::chain_mean(tail);
  const double vh = detail::autocov(head, mh, 0);
  const double vt = detail::autocov(tail, mt, 0);
  const double se2 = vh / dh.ess + vt / dt.ess;
  d.geweke_z = (se2 > 0.0) ? (mh - mt) / std::sqrt(se2) : 0.0;
  return d;
}

}  // namespace spatfda
