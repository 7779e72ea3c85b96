// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "spatfda/errors.hpp"

namespace spatfda {

// One monitored location: planar coordinates plus an ordered series of
// observations with a missing mask. Values at masked positions are ignored
// by all likelihood code; their times still belong to the series (gaps are
// unaffected by missingness).
struct SiteSeries {
  std::string site_id;
  double x = 0.0;
  double y = 0.0;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<bool> missing;

  std::size_t size() const { return times.size(); }

  std::size_t n_observed() const {
    std::size_t n = 0;
    for (bool m : missing) {
      if (!m) ++n;
    }
    return n;
  }

  void validate() const {
    if (values.size() != times.size() || missing.size() != times.size()) {
      throw InputError("SiteSeries '" + site_id +
                       "': times/values/missing lengths differ");
    }
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw InputError("SiteSeries '" + site_id + "': non-finite coordinates");
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!std::isfinite(times[i])) {
        throw InputError("SiteSeries '" + site_id + "': non-finite time");
      }
      if (i > 0 && !(times[i] > times[i - 1])) {
        throw InputError("SiteSeries '" + site_id +
                         "': times not strictly increasing at index " +
                         std::to_string(i));
      }
      if (!missing[i] && !std::isfinite(values[i])) {
        throw InputError("SiteSeries '" + site_id +
                         "': non-finite value at unmasked index " +
                         std::to_string(i));
      }
    }
  }
};

// Consecutive time gaps d_i = t_i - t_{i-1}, with d_0 := 0 so the AR
// coefficient of the first point is exactly one.
inline std::vector<double> gap_vector(const std::vector<double>& times) {
  std::vector<double> gaps(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    gaps[i] = times[i] - times[i - 1];
    if (!(gaps[i] > 0.0)) {
      throw InputError("gap_vector: times not strictly increasing at index " +
                       std::to_string(i));
    }
  }
  return gaps;
}

// A set of curves over a common functional domain. Sites are kept in
// canonical order (sorted by site_id) so that downstream results do not
// depend on file row order.
struct Dataset {
  std::vector<SiteSeries> sites;

  std::size_t n_sites() const { return sites.size(); }

  std::size_t total_observations() const {
    std::size_t n = 0;
    for (const auto& s : sites) n += s.size();
    return n;
  }

  std::size_t total_unmasked() const {
    std::size_t n = 0;
    for (const auto& s : sites) n += s.n_observed();
    return n;
  }

  std::size_t total_masked() const {
    return total_observations() - total_unmasked();
  }

  // Observed time range across all curves, masked positions included. This
  // is the default Bernstein interval shared by every curve.
  std::pair<double, double> time_range() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : sites) {
      if (s.times.empty()) continue;
      lo = std::min(lo, s.times.front());
      hi = std::max(hi, s.times.back());
    }
    if (!(lo < hi)) throw InputError("Dataset: empty or degenerate time range");
    return {lo, hi};
  }

  void canonicalize() {
    std::sort(sites.begin(), sites.end(),
              [](const SiteSeries& a, const SiteSeries& b) {
                return a.site_id < b.site_id;
              });
  }

  void validate() const {
    if (sites.empty()) throw InputError("Dataset: no sites");
    for (const auto& s : sites) s.validate();
    for (std::size_t j = 1; j < sites.size(); ++j) {
      if (sites[j].site_id == sites[j - 1].site_id) {
        throw InputError("Dataset: duplicate site_id '" + sites[j].site_id + "'");
      }
    }
  }
};

}  // namespace spatfda
