// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "spatfda/data.hpp"
#include "spatfda/errors.hpp"
#include "spatfda/kriging.hpp"
#include "spatfda/mcmc.hpp"
#include "spatfda/model.hpp"

namespace spatfda {

// All numeric output goes through one formatter: %.17g round-trips doubles
// exactly and is byte-stable across runs, which the determinism contract of
// the CLI depends on.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_double(const std::string& s, std::size_t line_no,
                           const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw InputError("row " + std::to_string(line_no) + ": cannot parse " +
                     what + " from '" + s + "'");
  }
  return v;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace detail

inline const char* kDatasetHeader = "site_id,x,y_coord,t,value,missing";

inline void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out = detail::open_out(path);
  out << kDatasetHeader << "\n";
  for (const SiteSeries& s : data.sites) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.site_id << ',' << format_double(s.x) << ','
          << format_double(s.y) << ',' << format_double(s.times[i]) << ','
          << format_double(s.values[i]) << ',' << (s.missing[i] ? 1 : 0)
          << "\n";
    }
  }
}

// Parse and validate a dataset file; sites come back in canonical (site_id)
// order regardless of row order in the file.
inline Dataset load_dataset(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path + "': empty file");
  if (detail::split_csv_line(line) != detail::split_csv_line(kDatasetHeader)) {
    throw InputError("'" + path + "': expected header '" +
                     std::string(kDatasetHeader) + "'");
  }
  Dataset data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv_line(line);
    if (f.size() != 6) {
      throw InputError("row " + std::to_string(line_no) + ": expected 6 fields, got " +
                       std::to_string(f.size()));
    }
    const std::string& id = f[0];
    SiteSeries* site = nullptr;
    for (SiteSeries& s : data.sites) {
      if (s.site_id == id) {
        site = &s;
        break;
      }
    }
    const double x = detail::parse_double(f[1], line_no, "x");
    const double y = detail::parse_double(f[2], line_no, "y_coord");
    if (site == nullptr) {
      SiteSeries s;
      s.site_id = id;
      s.x = x;
      s.y = y;
      data.sites.push_back(std::move(s));
      site = &data.sites.back();
    } else if (site->x != x || site->y != y) {
      throw InputError("row " + std::to_string(line_no) +
                       ": inconsistent coordinates for site '" + id + "'");
    }
    const double t = detail::parse_double(f[3], line_no, "t");
    const bool missing = f[5] == "1";
    double value;
    if (missing) {
      // Masked rows may carry 'nan' (or any placeholder the writer used).
      char* end = nullptr;
      value = std::strtod(f[4].c_str(), &end);
      if (end == f[4].c_str()) value = std::numeric_limits<double>::quiet_NaN();
    } else {
      if (f[5] != "0") {
        throw InputError("row " + std::to_string(line_no) +
                         ": missing flag must be 0 or 1");
      }
      value = detail::parse_double(f[4], line_no, "value");
    }
    if (!site->times.empty() && !(t > site->times.back())) {
      throw InputError("row " + std::to_string(line_no) + ": site '" + id +
                       "' times not strictly increasing");
    }
    site->times.push_back(t);
    site->values.push_back(value);
    site->missing.push_back(missing);
  }
  if (data.sites.empty()) throw InputError("'" + path + "': no data rows");
  data.canonicalize();
  data.validate();
  return data;
}

// Flat per-draw table: scalars, coefficient means, then theta_r_j in
// row-major (r, j) order with j indexing the canonical site order.
inline void write_draws_csv(const std::string& path, const PosteriorDraws& draws) {
  if (draws.size() == 0) throw InputError("write_draws_csv: no draws");
  const int nb = static_cast<int>(draws.states.front().theta.rows());
  const int m = static_cast<int>(draws.states.front().theta.cols());
  std::ofstream out = detail::open_out(path);
  out << "draw,log_joint,tau2,nu2,kappa2,spatial_decay,ar_decay";
  for (int r = 0; r < nb; ++r) out << ",mu_theta_" << r;
  for (int r = 0; r < nb; ++r) {
    for (int j = 0; j < m; ++j) out << ",theta_" << r << '_' << j;
  }
  out << "\n";
  for (std::size_t d = 0; d < draws.size(); ++d) {
    const ModelState& s = draws.states[d];
    out << d << ',' << format_double(draws.log_joint[d]) << ','
        << format_double(s.tau2) << ',' << format_double(s.nu2) << ','
        << format_double(s.kappa2) << ',' << format_double(s.spatial_decay)
        << ',' << format_double(s.ar_decay);
    for (int r = 0; r < nb; ++r) out << ',' << format_double(s.mu_theta(r));
    for (int r = 0; r < nb; ++r) {
      for (int j = 0; j < m; ++j) out << ',' << format_double(s.theta(r, j));
    }
    out << "\n";
  }
}

// Reconstruct the per-draw states needed for prediction (theta, mu, scalars;
// random-effect chains are not stored in the table).
inline std::vector<ModelState> load_draws_csv(const std::string& path,
                                              int n_basis, int n_sites) {
  std::ifstream in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path + "': empty draws file");
  const std::vector<std::string> header = detail::split_csv_line(line);
  const std::size_t expected =
      7 + static_cast<std::size_t>(n_basis) +
      static_cast<std::size_t>(n_basis) * static_cast<std::size_t>(n_sites);
  if (header.size() != expected) {
    throw InputError("'" + path + "': draws header has " +
                     std::to_string(header.size()) + " columns, expected " +
                     std::to_string(expected));
  }
  std::vector<ModelState> states;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv_line(line);
    if (f.size() != expected) {
      throw InputError("row " + std::to_string(line_no) + ": wrong field count");
    }
    ModelState s;
    s.tau2 = detail::parse_double(f[2], line_no, "tau2");
    s.nu2 = detail::parse_double(f[3], line_no, "nu2");
    s.kappa2 = detail::parse_double(f[4], line_no, "kappa2");
    s.spatial_decay = detail::parse_double(f[5], line_no, "spatial_decay");
    s.ar_decay = detail::parse_double(f[6], line_no, "ar_decay");
    s.mu_theta.resize(n_basis);
    std::size_t col = 7;
    for (int r = 0; r < n_basis; ++r) {
      s.mu_theta(r) = detail::parse_double(f[col++], line_no, "mu_theta");
    }
    s.theta.resize(n_basis, n_sites);
    for (int r = 0; r < n_basis; ++r) {
      for (int j = 0; j < n_sites; ++j) {
        s.theta(r, j) = detail::parse_double(f[col++], line_no, "theta");
      }
    }
    states.push_back(std::move(s));
  }
  if (states.empty()) throw InputError("'" + path + "': no draws");
  return states;
}

// Full random-effect dump, one row per (draw, site, index); large, so only
// written on request.
inline void write_delta_csv(const std::string& path, const PosteriorDraws& draws,
                            const FitData& fd) {
  std::ofstream out = detail::open_out(path);
  out << "draw,site_id,index,t,delta\n";
  for (std::size_t d = 0; d < draws.size(); ++d) {
    const ModelState& s = draws.states[d];
    for (int j = 0; j < fd.n_sites(); ++j) {
      const FitData::Curve& c = fd.curves[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < c.times.size(); ++i) {
        out << d << ',' << fd.site_ids[static_cast<std::size_t>(j)] << ',' << i
            << ',' << format_double(c.times[i]) << ','
            << format_double(s.delta[static_cast<std::size_t>(j)](
                   static_cast<Eigen::Index>(i)))
            << "\n";
      }
    }
  }
}

inline void write_predictions_csv(const std::string& path,
                                  const std::vector<PredictedCurve>& curves) {
  std::ofstream out = detail::open_out(path);
  out << "site_id,t,mean,hpd_lo,hpd_hi\n";
  for (const PredictedCurve& c : curves) {
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      out << c.site_id << ',' << format_double(c.times[i]) << ','
          << format_double(c.mean[i]) << ',' << format_double(c.hpd_lo[i])
          << ',' << format_double(c.hpd_hi[i]) << "\n";
    }
  }
}

inline std::vector<PredictedCurve> load_predictions_csv(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path + "': empty file");
  std::vector<PredictedCurve> curves;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv_line(line);
    if (f.size() != 5) {
      throw InputError("row " + std::to_string(line_no) + ": expected 5 fields");
    }
    if (curves.empty() || curves.back().site_id != f[0]) {
      PredictedCurve c;
      c.site_id = f[0];
      curves.push_back(std::move(c));
    }
    PredictedCurve& c = curves.back();
    c.times.push_back(detail::parse_double(f[1], line_no, "t"));
    c.mean.push_back(detail::parse_double(f[2], line_no, "mean"));
    c.hpd_lo.push_back(detail::parse_double(f[3], line_no, "hpd_lo"));
    c.hpd_hi.push_back(detail::parse_double(f[4], line_no, "hpd_hi"));
  }
  return curves;
}

struct MetricRow {
  long replicate = 0;
  std::string site_id;
  std::string metric;
  double value = 0.0;
};

inline void write_metrics_csv(const std::string& path,
                              const std::vector<MetricRow>& rows) {
  std::ofstream out = detail::open_out(path);
  out << "replicate,site_id,metric,value\n";
  for (const MetricRow& r : rows) {
    out << r.replicate << ',' << r.site_id << ',' << r.metric << ','
        << format_double(r.value) << "\n";
  }
}

inline void write_imputations_csv(const std::string& path,
                                  const std::vector<ImputedPoint>& points) {
  std::ofstream out = detail::open_out(path);
  out << "site_id,index,t,mean,hpd_lo,hpd_hi\n";
  for (const ImputedPoint& p : points) {
    out << p.site_id << ',' << p.index << ',' << format_double(p.t) << ','
        << format_double(p.mean) << ',' << format_double(p.interval.lower)
        << ',' << format_double(p.interval.upper) << "\n";
  }
}

}  // namespace spatfda
