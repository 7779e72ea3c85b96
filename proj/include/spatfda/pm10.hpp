// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "spatfda/csv.hpp"
#include "spatfda/data.hpp"
#include "spatfda/errors.hpp"

namespace spatfda {

inline bool is_leap_year(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

inline int days_in_month(int year, int month) {
  static const int days[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) throw InputError("days_in_month: bad month");
  if (month == 2 && is_leap_year(year)) return 29;
  return days[month - 1];
}

inline int hours_in_year(int year) { return is_leap_year(year) ? 8784 : 8760; }

// One station's raw record: one calendar year of contiguous hourly values.
struct RawHourlySeries {
  std::string site_id;
  double x = 0.0;
  double y = 0.0;
  int year = 2022;
  std::vector<double> values;
  std::vector<bool> missing;

  void validate() const {
    const std::size_t expect = static_cast<std::size_t>(hours_in_year(year));
    if (values.size() != expect || missing.size() != expect) {
      throw InputError("RawHourlySeries '" + site_id + "': expected " +
                       std::to_string(expect) + " hourly slots, got " +
                       std::to_string(values.size()));
    }
  }
};

// Aggregation window (hours) for a month with the given percentage of
// missing hours. Category bounds are upper-inclusive: exactly 20% still
// maps to the 24 h window.
inline int window_hours_for_missing_percent(double percent) {
  if (percent < 0.0 || percent > 100.0) {
    throw InputError("missing percentage outside [0, 100]");
  }
  if (percent <= 20.0) return 24;
  if (percent <= 40.0) return 24;
  if (percent <= 60.0) return 48;
  if (percent <= 80.0) return 72;
  return 120;
}

namespace detail {

inline double median_of(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Collapse a year of hourly readings into one irregular daily-domain series
// per site. Month by month: classify by missing share, partition into
// consecutive windows of the mapped width, and emit each window's median of
// the non-missing hours at t = first day of the window (days since Jan 1).
// Fully-missing complete windows become masked points; a trailing partial
// window is kept only when it has at least one reading.
inline SiteSeries preprocess_site(const RawHourlySeries& raw, bool log_transform) {
  raw.validate();
  SiteSeries out;
  out.site_id = raw.site_id;
  out.x = raw.x;
  out.y = raw.y;

  int month_start_hour = 0;
  for (int month = 1; month <= 12; ++month) {
    const int month_hours = days_in_month(raw.year, month) * 24;
    int missing_count = 0;
    for (int h = month_start_hour; h < month_start_hour + month_hours; ++h) {
      if (raw.missing[static_cast<std::size_t>(h)]) ++missing_count;
    }
    const double percent = 100.0 * missing_count / month_hours;
    const int window = window_hours_for_missing_percent(percent);

    for (int w0 = 0; w0 < month_hours; w0 += window) {
      const int w1 = std::min(w0 + window, month_hours);
      const bool partial = (w1 - w0) < window;
      std::vector<double> vals;
      for (int h = w0; h < w1; ++h) {
        const std::size_t idx = static_cast<std::size_t>(month_start_hour + h);
        if (!raw.missing[idx]) vals.push_back(raw.values[idx]);
      }
      const double t = static_cast<double>(month_start_hour + w0) / 24.0;
      if (vals.empty()) {
        if (partial) continue;
        out.times.push_back(t);
        out.values.push_back(std::numeric_limits<double>::quiet_NaN());
        out.missing.push_back(true);
        continue;
      }
      double v = detail::median_of(vals);
      if (log_transform) {
        if (!(v > 0.0)) {
          throw InputError("preprocess_pm10: non-positive window median at site '" +
                           raw.site_id + "'; disable the log transform or clean the data");
        }
        v = std::log(v);
      }
      out.times.push_back(t);
      out.values.push_back(v);
      out.missing.push_back(false);
    }
    month_start_hour += month_hours;
  }
  out.validate();
  return out;
}

inline Dataset preprocess_pm10(const std::vector<RawHourlySeries>& raw,
                               bool log_transform = true) {
  if (raw.empty()) throw InputError("preprocess_pm10: no input series");
  Dataset out;
  for (const RawHourlySeries& r : raw) {
    out.sites.push_back(preprocess_site(r, log_transform));
  }
  out.canonicalize();
  out.validate();
  return out;
}

inline const char* kHourlyHeader = "site_id,x,y_coord,hour,value,missing";

inline void write_hourly_csv(const std::string& path,
                             const std::vector<RawHourlySeries>& series) {
  std::ofstream out = detail::open_out(path);
  out << kHourlyHeader << "\n";
  for (const RawHourlySeries& s : series) {
    for (std::size_t h = 0; h < s.values.size(); ++h) {
      out << s.site_id << ',' << format_double(s.x) << ',' << format_double(s.y)
          << ',' << h << ',' << format_double(s.values[h]) << ','
          << (s.missing[h] ? 1 : 0) << "\n";
    }
  }
}

// Hourly input: every site must supply hour indices 0..H-1 in order, H being
// the slot count of the configured year.
inline std::vector<RawHourlySeries> read_hourly_csv(const std::string& path,
                                                    int year) {
  std::ifstream in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path + "': empty file");
  if (detail::split_csv_line(line) != detail::split_csv_line(kHourlyHeader)) {
    throw InputError("'" + path + "': expected header '" +
                     std::string(kHourlyHeader) + "'");
  }
  std::vector<RawHourlySeries> series;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv_line(line);
    if (f.size() != 6) {
      throw InputError("row " + std::to_string(line_no) + ": expected 6 fields");
    }
    RawHourlySeries* s = nullptr;
    for (RawHourlySeries& r : series) {
      if (r.site_id == f[0]) {
        s = &r;
        break;
      }
    }
    if (s == nullptr) {
      RawHourlySeries r;
      r.site_id = f[0];
      r.x = detail::parse_double(f[1], line_no, "x");
      r.y = detail::parse_double(f[2], line_no, "y_coord");
      r.year = year;
      series.push_back(std::move(r));
      s = &series.back();
    }
    const double hour = detail::parse_double(f[3], line_no, "hour");
    if (hour != static_cast<double>(s->values.size())) {
      throw InputError("row " + std::to_string(line_no) + ": site '" + f[0] +
                       "' hours not contiguous from 0");
    }
    const bool missing = f[5] == "1";
    double value = 0.0;
    if (!missing) value = detail::parse_double(f[4], line_no, "value");
    s->values.push_back(missing ? std::numeric_limits<double>::quiet_NaN() : value);
    s->missing.push_back(missing);
  }
  if (series.empty()) throw InputError("'" + path + "': no data rows");
  for (const RawHourlySeries& s : series) s.validate();
  return series;
}

}  // namespace spatfda
