// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spatfda/errors.hpp"
#include "spatfda/kernels.hpp"
#include "spatfda/kriging.hpp"
#include "spatfda/mcmc.hpp"
#include "spatfda/model.hpp"
#include "spatfda/synthetic.hpp"

namespace spatfda {

using ordered_json = nlohmann::ordered_json;

struct BasisConfig {
  int degree = 3;
  std::vector<int> count_sweep{4, 12, 18};
  bool auto_interval = true;
  double interval_a = 0.0;
  double interval_b = 1.0;

  BasisSpec spec_for(const Dataset& data) const {
    if (auto_interval) return basis_for_dataset(data, degree);
    return BasisSpec(degree, interval_a, interval_b);
  }
};

struct SimulateConfig {
  int study = 1;
  int replicates = 10;
  int sites = 15;
  int points_per_curve = 200;
  GapScheme gap_scheme = GapScheme::uniform01;
  std::size_t missing_count = 0;
  Study1Params study1;
  Study2Params study2;
};

struct TimesConfig {
  std::string mode = "uniform";  // uniform over the fitted interval
  int count = 250;
  std::vector<double> values;    // used when mode == "explicit"
};

struct PredictConfig {
  std::vector<PredictionTarget> targets;  // times filled from `times`
  TimesConfig times;
  bool include_delta = true;
  bool include_obs_noise = true;
};

struct Thresholds {
  double who = 3.0;
  double nom_annual = 3.6;
  double nom_acute = 4.3;

  void validate() const {
    if (!(who < nom_annual && nom_annual < nom_acute)) {
      throw ConfigError("thresholds must be strictly increasing (who < annual < acute)");
    }
  }
};

struct Pm10Config {
  int year = 2022;
  bool log_transform = true;
};

struct PathsConfig {
  std::string data;
  std::string fit;
  std::string predictions;
  std::string truth;
};

struct RunConfig {
  BasisConfig basis;
  PriorSpec priors;
  SamplerConfig sampler;
  KernelFamily kernel_family = KernelFamily::gaussian;
  SimulateConfig simulate;
  PredictConfig predict;
  Pm10Config pm10;
  Thresholds thresholds;
  PathsConfig paths;
};

namespace detail {

inline bool path_exists(const std::string& path) {
  std::ifstream f(path);
  return f.good();
}

template <class T>
T get_or(const ordered_json& j, const std::string& key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config field '" + key + "': " + e.what());
  }
}

}  // namespace detail

inline ordered_json default_config_json() {
  ordered_json j;
  const RunConfig d;
  j["basis"] = {{"degree", d.basis.degree},
                {"count_sweep", d.basis.count_sweep},
                {"interval", "auto"}};
  j["kernel_family"] = to_string(d.kernel_family);
  j["priors"] = {
      {"spatial_decay", {d.priors.spatial_decay.shape, d.priors.spatial_decay.scale}},
      {"ar_decay", {d.priors.ar_decay.shape, d.priors.ar_decay.scale}},
      {"tau2", {d.priors.tau2.shape, d.priors.tau2.scale}},
      {"kappa2", {d.priors.kappa2.shape, d.priors.kappa2.scale}},
      {"nu2", {d.priors.nu2.shape, d.priors.nu2.scale}},
      {"mu_theta", {{"mean", d.priors.mu_mean}, {"variance", d.priors.mu_variance}}}};
  j["sampler"] = {{"iterations", d.sampler.total_iterations},
                  {"burn_in", d.sampler.burn_in},
                  {"thin", d.sampler.thin},
                  {"seed", d.sampler.seed},
                  {"adapt_window", d.sampler.adapt_window},
                  {"target_acceptance", d.sampler.target_acceptance},
                  {"include_random_effect", d.sampler.include_random_effect}};
  j["simulate"] = {{"study", d.simulate.study},
                   {"replicates", d.simulate.replicates},
                   {"sites", d.simulate.sites},
                   {"points_per_curve", d.simulate.points_per_curve},
                   {"gap_scheme", to_string(d.simulate.gap_scheme)},
                   {"missing_count", d.simulate.missing_count},
                   {"study1",
                    {{"mu_theta", d.simulate.study1.mu_theta},
                     {"kappa2", d.simulate.study1.kappa2},
                     {"spatial_decay", d.simulate.study1.spatial_decay},
                     {"ar_decay", d.simulate.study1.ar_decay},
                     {"nu2", d.simulate.study1.nu2},
                     {"tau2", d.simulate.study1.tau2}}},
                   {"study2",
                    {{"beta_mean", d.simulate.study2.beta_mean},
                     {"kappa2", d.simulate.study2.kappa2},
                     {"decay", d.simulate.study2.decay},
                     {"sigma2", d.simulate.study2.sigma2},
                     {"period", d.simulate.study2.period}}}};
  j["predict"] = {{"targets", ordered_json::array()},
                  {"times", {{"mode", "uniform"}, {"count", 250}}},
                  {"include_delta", d.predict.include_delta},
                  {"include_obs_noise", d.predict.include_obs_noise}};
  j["pm10"] = {{"year", d.pm10.year}, {"log_transform", d.pm10.log_transform}};
  j["thresholds"] = {{"who", d.thresholds.who},
                     {"nom_annual", d.thresholds.nom_annual},
                     {"nom_acute", d.thresholds.nom_acute}};
  j["paths"] = {{"data", ""}, {"fit", ""}, {"predictions", ""}, {"truth", ""}};
  return j;
}

inline IgPrior parse_ig(const ordered_json& j, const std::string& key,
                        const IgPrior& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) {
    throw ConfigError("prior '" + key + "' must be a [shape, scale] pair");
  }
  return IgPrior{v[0].get<double>(), v[1].get<double>()};
}

inline RunConfig parse_config(const ordered_json& j) {
  RunConfig c;
  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    c.basis.degree = detail::get_or(b, "degree", c.basis.degree);
    c.basis.count_sweep = detail::get_or(b, "count_sweep", c.basis.count_sweep);
    if (b.contains("interval") && !b.at("interval").is_string()) {
      const auto& iv = b.at("interval");
      if (!iv.is_array() || iv.size() != 2) {
        throw ConfigError("basis.interval must be \"auto\" or [a, b]");
      }
      c.basis.auto_interval = false;
      c.basis.interval_a = iv[0].get<double>();
      c.basis.interval_b = iv[1].get<double>();
      BasisSpec(c.basis.degree, c.basis.interval_a, c.basis.interval_b);  // validates
    }
  }
  c.kernel_family = kernel_family_from_string(
      detail::get_or<std::string>(j, "kernel_family", to_string(c.kernel_family)));
  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    c.priors.spatial_decay = parse_ig(p, "spatial_decay", c.priors.spatial_decay);
    c.priors.ar_decay = parse_ig(p, "ar_decay", c.priors.ar_decay);
    c.priors.tau2 = parse_ig(p, "tau2", c.priors.tau2);
    c.priors.kappa2 = parse_ig(p, "kappa2", c.priors.kappa2);
    c.priors.nu2 = parse_ig(p, "nu2", c.priors.nu2);
    if (p.contains("mu_theta")) {
      c.priors.mu_mean = detail::get_or(p.at("mu_theta"), "mean", c.priors.mu_mean);
      c.priors.mu_variance =
          detail::get_or(p.at("mu_theta"), "variance", c.priors.mu_variance);
    }
    c.priors.validate();
  }
  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    c.sampler.total_iterations =
        detail::get_or(s, "iterations", c.sampler.total_iterations);
    c.sampler.burn_in = detail::get_or(s, "burn_in", c.sampler.burn_in);
    c.sampler.thin = detail::get_or(s, "thin", c.sampler.thin);
    c.sampler.seed = detail::get_or(s, "seed", c.sampler.seed);
    c.sampler.adapt_window = detail::get_or(s, "adapt_window", c.sampler.adapt_window);
    c.sampler.target_acceptance =
        detail::get_or(s, "target_acceptance", c.sampler.target_acceptance);
    c.sampler.include_random_effect = detail::get_or(
        s, "include_random_effect", c.sampler.include_random_effect);
    c.sampler.validate();
  }
  if (j.contains("simulate")) {
    const auto& s = j.at("simulate");
    c.simulate.study = detail::get_or(s, "study", c.simulate.study);
    c.simulate.replicates = detail::get_or(s, "replicates", c.simulate.replicates);
    c.simulate.sites = detail::get_or(s, "sites", c.simulate.sites);
    c.simulate.points_per_curve =
        detail::get_or(s, "points_per_curve", c.simulate.points_per_curve);
    c.simulate.gap_scheme = gap_scheme_from_string(detail::get_or<std::string>(
        s, "gap_scheme", to_string(c.simulate.gap_scheme)));
    c.simulate.missing_count =
        detail::get_or(s, "missing_count", c.simulate.missing_count);
    if (c.simulate.study != 1 && c.simulate.study != 2) {
      throw ConfigError("simulate.study must be 1 or 2");
    }
    if (s.contains("study1")) {
      const auto& t = s.at("study1");
      c.simulate.study1.mu_theta =
          detail::get_or(t, "mu_theta", c.simulate.study1.mu_theta);
      c.simulate.study1.kappa2 = detail::get_or(t, "kappa2", c.simulate.study1.kappa2);
      c.simulate.study1.spatial_decay =
          detail::get_or(t, "spatial_decay", c.simulate.study1.spatial_decay);
      c.simulate.study1.ar_decay =
          detail::get_or(t, "ar_decay", c.simulate.study1.ar_decay);
      c.simulate.study1.nu2 = detail::get_or(t, "nu2", c.simulate.study1.nu2);
      c.simulate.study1.tau2 = detail::get_or(t, "tau2", c.simulate.study1.tau2);
    }
    if (s.contains("study2")) {
      const auto& t = s.at("study2");
      c.simulate.study2.beta_mean =
          detail::get_or(t, "beta_mean", c.simulate.study2.beta_mean);
      c.simulate.study2.kappa2 = detail::get_or(t, "kappa2", c.simulate.study2.kappa2);
      c.simulate.study2.decay = detail::get_or(t, "decay", c.simulate.study2.decay);
      c.simulate.study2.sigma2 = detail::get_or(t, "sigma2", c.simulate.study2.sigma2);
      c.simulate.study2.period = detail::get_or(t, "period", c.simulate.study2.period);
      c.simulate.study2.gaps = c.simulate.gap_scheme;
    }
  }
  if (j.contains("predict")) {
    const auto& p = j.at("predict");
    if (p.contains("targets")) {
      for (const auto& t : p.at("targets")) {
        PredictionTarget target;
        target.id = detail::get_or<std::string>(t, "id", "");
        if (target.id.empty()) throw ConfigError("predict.targets entries need an id");
        target.x = detail::get_or(t, "x", 0.0);
        target.y = detail::get_or(t, "y", 0.0);
        c.predict.targets.push_back(std::move(target));
      }
    }
    if (p.contains("times")) {
      const auto& t = p.at("times");
      c.predict.times.mode = detail::get_or<std::string>(t, "mode", "uniform");
      c.predict.times.count = detail::get_or(t, "count", c.predict.times.count);
      c.predict.times.values =
          detail::get_or(t, "values", c.predict.times.values);
      if (c.predict.times.mode != "uniform" && c.predict.times.mode != "explicit") {
        throw ConfigError("predict.times.mode must be 'uniform' or 'explicit'");
      }
      if (c.predict.times.mode == "uniform" && c.predict.times.count < 2) {
        throw ConfigError("predict.times.count must be >= 2");
      }
    }
    c.predict.include_delta =
        detail::get_or(p, "include_delta", c.predict.include_delta);
    c.predict.include_obs_noise =
        detail::get_or(p, "include_obs_noise", c.predict.include_obs_noise);
  }
  if (j.contains("pm10")) {
    c.pm10.year = detail::get_or(j.at("pm10"), "year", c.pm10.year);
    c.pm10.log_transform =
        detail::get_or(j.at("pm10"), "log_transform", c.pm10.log_transform);
  }
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    c.thresholds.who = detail::get_or(t, "who", c.thresholds.who);
    c.thresholds.nom_annual = detail::get_or(t, "nom_annual", c.thresholds.nom_annual);
    c.thresholds.nom_acute = detail::get_or(t, "nom_acute", c.thresholds.nom_acute);
  }
  c.thresholds.validate();
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    c.paths.data = detail::get_or<std::string>(p, "data", "");
    c.paths.fit = detail::get_or<std::string>(p, "fit", "");
    c.paths.predictions = detail::get_or<std::string>(p, "predictions", "");
    c.paths.truth = detail::get_or<std::string>(p, "truth", "");
    for (const std::string* path :
         {&c.paths.data, &c.paths.predictions, &c.paths.truth}) {
      if (!path->empty() && !detail::path_exists(*path)) {
        throw ConfigError("configured path does not exist: " + *path);
      }
    }
    if (!c.paths.fit.empty() &&
        !detail::path_exists(c.paths.fit + "/manifest.json")) {
      throw ConfigError("configured fit directory has no manifest.json: " +
                        c.paths.fit);
    }
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

// Fit output manifest: everything predict/report need to reconstruct the
// fitted model from draws.csv, plus run provenance. `created_at` and
// `wall_time_seconds` are the only fields allowed to differ between
// identically seeded runs.
struct FitManifest {
  int basis_degree = 3;
  double basis_a = 0.0;
  double basis_b = 1.0;
  KernelFamily kernel_family = KernelFamily::gaussian;
  std::vector<std::string> site_ids;
  std::vector<double> site_x;
  std::vector<double> site_y;
  std::uint64_t seed = 0;
  long retained = 0;
  double accept_rate_spatial = 0.0;
  double accept_rate_ar = 0.0;
  double wall_time_seconds = 0.0;
  std::string created_at;
};

inline void write_fit_manifest(const std::string& path, const FitManifest& m,
                               const ordered_json& config_echo) {
  ordered_json j;
  j["schema"] = "spatfda-fit-manifest/1";
  j["basis"] = {{"degree", m.basis_degree}, {"a", m.basis_a}, {"b", m.basis_b}};
  j["kernel_family"] = to_string(m.kernel_family);
  ordered_json sites = ordered_json::array();
  for (std::size_t i = 0; i < m.site_ids.size(); ++i) {
    sites.push_back({{"id", m.site_ids[i]}, {"x", m.site_x[i]}, {"y", m.site_y[i]}});
  }
  j["sites"] = sites;
  j["seed"] = m.seed;
  j["retained"] = m.retained;
  j["acceptance"] = {{"spatial_decay", m.accept_rate_spatial},
                     {"ar_decay", m.accept_rate_ar}};
  j["wall_time_seconds"] = m.wall_time_seconds;
  j["created_at"] = m.created_at;
  j["config"] = config_echo;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

inline FitManifest load_fit_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest '" + path + "'");
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("manifest '" + path + "': " + e.what());
  }
  FitManifest m;
  try {
    m.basis_degree = j.at("basis").at("degree").get<int>();
    m.basis_a = j.at("basis").at("a").get<double>();
    m.basis_b = j.at("basis").at("b").get<double>();
    m.kernel_family = kernel_family_from_string(j.at("kernel_family").get<std::string>());
    for (const auto& s : j.at("sites")) {
      m.site_ids.push_back(s.at("id").get<std::string>());
      m.site_x.push_back(s.at("x").get<double>());
      m.site_y.push_back(s.at("y").get<double>());
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    m.retained = j.at("retained").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("manifest '" + path + "': " + e.what());
  }
  return m;
}

}  // namespace spatfda
