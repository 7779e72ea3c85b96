// Apache License, Version 2.0, refer to LICENSE.txt
//
// Command-line surface: simulate / fit / predict / report / preprocess-pm10
// plus `config init`. Exit codes: 0 ok, 2 input error, 3 numerical error,
// 4 config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "spatfda/config.hpp"
#include "spatfda/csv.hpp"
#include "spatfda/errors.hpp"
#include "spatfda/kriging.hpp"
#include "spatfda/mcmc.hpp"
#include "spatfda/metrics.hpp"
#include "spatfda/pm10.hpp"
#include "spatfda/synthetic.hpp"

namespace fs = std::filesystem;
using namespace spatfda;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = ".";
  long seed_override = -1;
  int bases_override = 0;
  int threads = 1;
};

RunConfig load_run_config(const GlobalOptions& g) {
  RunConfig cfg = g.config_path.empty() ? parse_config(default_config_json())
                                        : load_config(g.config_path);
  if (g.seed_override >= 0) {
    cfg.sampler.seed = static_cast<std::uint64_t>(g.seed_override);
  }
  if (g.bases_override > 0) {
    if (g.bases_override < 1) throw ConfigError("--bases must be >= 1");
    cfg.basis.degree = g.bases_override - 1;
  }
  return cfg;
}

ordered_json config_echo(const GlobalOptions& g) {
  if (g.config_path.empty()) return default_config_json();
  std::ifstream in(g.config_path);
  ordered_json j;
  in >> j;
  return j;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory '" + dir + "': " + ec.message());
}

std::string timestamp_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_truth_csv(const std::string& path, const Dataset& data,
                     const std::vector<std::vector<double>>& target) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << "site_id,t,target\n";
  for (std::size_t j = 0; j < data.sites.size(); ++j) {
    const SiteSeries& s = data.sites[j];
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.site_id << ',' << format_double(s.times[i]) << ','
          << format_double(target[j][i]) << "\n";
    }
  }
}

void write_holdout_csv(const std::string& path,
                       const std::vector<HeldOutPoint>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << "site_id,index,t,value\n";
  for (const HeldOutPoint& h : points) {
    out << h.site_id << ',' << h.index << ',' << format_double(h.t) << ','
        << format_double(h.value) << "\n";
  }
}

// Truth targets are generated in canonical site order already (generators
// canonicalize before returning), so row j of `target` matches sites[j].

int cmd_config_init(const std::string& out_path) {
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + out_path + "' for writing");
  out << default_config_json().dump(2) << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_simulate(const GlobalOptions& g) {
  const RunConfig cfg = load_run_config(g);
  ensure_dir(g.out_dir);
  McPlan plan;
  plan.replicates = cfg.simulate.replicates;
  plan.sites = cfg.simulate.sites;
  plan.points_per_curve = cfg.simulate.points_per_curve;
  plan.master_seed = cfg.sampler.seed;

  const int threads = std::max(1, g.threads);
  std::vector<std::string> summaries(static_cast<std::size_t>(plan.replicates));
  auto run_replicate = [&](int rep) {
    char sub[32];
    std::snprintf(sub, sizeof(sub), "replicate_%03d", rep);
    const std::string dir = g.out_dir + "/" + sub;
    ensure_dir(dir);
    const std::uint64_t rep_seed =
        derive_seed(plan.master_seed, 1000 + static_cast<std::uint64_t>(rep));
    const Eigen::MatrixXd coords =
        default_site_grid(plan.sites, derive_seed(plan.master_seed, 0xC0));

    Dataset data;
    std::vector<std::vector<double>> target;
    if (cfg.simulate.study == 1) {
      auto r = generate_study1_replicate(plan.sites, plan.points_per_curve,
                                         cfg.simulate.gap_scheme,
                                         cfg.simulate.study1, coords, rep_seed);
      data = std::move(r.data);
      target = std::move(r.truth.target);
    } else {
      Study2Params params = cfg.simulate.study2;
      params.gaps = cfg.simulate.gap_scheme;
      auto r = generate_study2_replicate(plan.sites, plan.points_per_curve,
                                         params, coords, rep_seed);
      data = std::move(r.data);
      target = std::move(r.truth.target);
    }
    write_truth_csv(dir + "/truth.csv", data, target);
    if (cfg.simulate.missing_count > 0) {
      // One mask seed for every replicate keeps the masked slots constant.
      const MaskedDataset masked = apply_missing_mask(
          data, cfg.simulate.missing_count, derive_seed(plan.master_seed, 0x3A5C));
      write_dataset_csv(dir + "/data.csv", masked.data);
      write_holdout_csv(dir + "/holdout.csv", masked.held_out);
    } else {
      write_dataset_csv(dir + "/data.csv", data);
    }
    summaries[static_cast<std::size_t>(rep)] = sub;
  };

  if (threads == 1 || plan.replicates == 1) {
    for (int rep = 0; rep < plan.replicates; ++rep) run_replicate(rep);
  } else {
    std::vector<std::thread> pool;
    for (int s = 0; s < threads; ++s) {
      pool.emplace_back([&, s]() {
        for (int rep = s; rep < plan.replicates; rep += threads) run_replicate(rep);
      });
    }
    for (auto& th : pool) th.join();
  }
  std::cout << "simulated " << plan.replicates << " replicate(s) under "
            << g.out_dir << "\n";
  return 0;
}

int cmd_fit(const GlobalOptions& g, const std::string& data_flag, bool dump_delta) {
  const RunConfig cfg = load_run_config(g);
  const std::string data_path = data_flag.empty() ? cfg.paths.data : data_flag;
  if (data_path.empty()) {
    throw ConfigError("fit: supply --data or set paths.data in the config");
  }
  ensure_dir(g.out_dir);
  const Dataset data = load_dataset(data_path);
  const BasisSpec basis = cfg.basis.spec_for(data);
  const FitData fd = FitData::prepare(data, basis, cfg.kernel_family);

  const auto t0 = std::chrono::steady_clock::now();
  Sampler sampler(fd, cfg.priors, cfg.sampler);
  const PosteriorDraws draws = sampler.run();
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_draws_csv(g.out_dir + "/draws.csv", draws);
  if (dump_delta) write_delta_csv(g.out_dir + "/delta.csv", draws, fd);
  if (data.total_masked() > 0) {
    const auto imputed = impute_missing(draws, fd, cfg.sampler.seed);
    write_imputations_csv(g.out_dir + "/imputations.csv", imputed);
  }

  FitManifest manifest;
  manifest.basis_degree = basis.degree;
  manifest.basis_a = basis.a;
  manifest.basis_b = basis.b;
  manifest.kernel_family = cfg.kernel_family;
  manifest.site_ids = fd.site_ids;
  for (int j = 0; j < fd.n_sites(); ++j) {
    manifest.site_x.push_back(fd.coords(j, 0));
    manifest.site_y.push_back(fd.coords(j, 1));
  }
  manifest.seed = cfg.sampler.seed;
  manifest.retained = static_cast<long>(draws.size());
  manifest.accept_rate_spatial = draws.accept_spatial_decay.post_adapt_rate();
  manifest.accept_rate_ar = draws.accept_ar_decay.post_adapt_rate();
  manifest.wall_time_seconds = wall;
  manifest.created_at = timestamp_now();
  write_fit_manifest(g.out_dir + "/manifest.json", manifest, config_echo(g));

  std::cout << "fit: " << draws.size() << " retained draws in "
            << format_double(wall) << " s, acceptance (spatial, ar) = ("
            << format_double(manifest.accept_rate_spatial) << ", "
            << format_double(manifest.accept_rate_ar) << ")\n";
  return 0;
}

int cmd_predict(const GlobalOptions& g, const std::string& fit_flag) {
  const RunConfig cfg = load_run_config(g);
  const std::string fit_dir = fit_flag.empty() ? cfg.paths.fit : fit_flag;
  if (fit_dir.empty()) {
    throw ConfigError("predict: supply --fit or set paths.fit in the config");
  }
  if (cfg.predict.targets.empty()) {
    throw ConfigError("predict: config has no predict.targets");
  }
  ensure_dir(g.out_dir);
  const FitManifest manifest = load_fit_manifest(fit_dir + "/manifest.json");
  const BasisSpec basis(manifest.basis_degree, manifest.basis_a, manifest.basis_b);
  const auto states =
      load_draws_csv(fit_dir + "/draws.csv", basis.n_basis(),
                     static_cast<int>(manifest.site_ids.size()));

  PosteriorDraws draws;
  draws.states = states;
  draws.log_joint.assign(states.size(), 0.0);

  Eigen::MatrixXd obs_coords(static_cast<Eigen::Index>(manifest.site_ids.size()), 2);
  for (std::size_t j = 0; j < manifest.site_ids.size(); ++j) {
    obs_coords(static_cast<Eigen::Index>(j), 0) = manifest.site_x[j];
    obs_coords(static_cast<Eigen::Index>(j), 1) = manifest.site_y[j];
  }

  std::vector<double> times;
  if (cfg.predict.times.mode == "explicit") {
    times = cfg.predict.times.values;
    if (times.size() < 2) throw ConfigError("predict.times.values needs >= 2 points");
  } else {
    const int n = cfg.predict.times.count;
    for (int i = 0; i < n; ++i) {
      times.push_back(manifest.basis_a +
                      (manifest.basis_b - manifest.basis_a) * i / (n - 1.0));
    }
  }

  PredictionRequest request;
  request.include_delta = cfg.predict.include_delta;
  request.include_obs_noise = cfg.predict.include_obs_noise;
  request.seed = cfg.sampler.seed;
  for (const PredictionTarget& t : cfg.predict.targets) {
    PredictionTarget full = t;
    full.times = times;
    request.targets.push_back(std::move(full));
  }

  const auto curves = predict_curves(draws, request, basis, obs_coords,
                                     manifest.kernel_family, std::max(1, g.threads));
  write_predictions_csv(g.out_dir + "/predictions.csv", curves);

  ordered_json meta;
  meta["include_delta"] = request.include_delta;
  meta["include_obs_noise"] = request.include_obs_noise;
  meta["n_draws"] = draws.size();
  meta["n_targets"] = request.targets.size();
  meta["n_times"] = times.size();
  meta["seed"] = request.seed;
  std::ofstream side(g.out_dir + "/predictions_meta.json", std::ios::binary);
  side << meta.dump(2) << "\n";

  std::cout << "predicted " << curves.size() << " curve(s) at " << times.size()
            << " time points\n";
  return 0;
}

struct TruthTable {
  std::vector<std::string> site_ids;
  std::vector<std::vector<double>> times;
  std::vector<std::vector<double>> values;

  int find(const std::string& id) const {
    for (std::size_t j = 0; j < site_ids.size(); ++j) {
      if (site_ids[j] == id) return static_cast<int>(j);
    }
    return -1;
  }
};

TruthTable load_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open truth file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path + "': empty file");
  TruthTable t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 3) {
      throw InputError("row " + std::to_string(line_no) + ": expected 3 fields");
    }
    int j = t.find(f[0]);
    if (j < 0) {
      t.site_ids.push_back(f[0]);
      t.times.emplace_back();
      t.values.emplace_back();
      j = static_cast<int>(t.site_ids.size()) - 1;
    }
    t.times[static_cast<std::size_t>(j)].push_back(
        detail::parse_double(f[1], line_no, "t"));
    t.values[static_cast<std::size_t>(j)].push_back(
        detail::parse_double(f[2], line_no, "target"));
  }
  return t;
}

int cmd_report(const GlobalOptions& g, const std::string& pred_flag,
               const std::string& truth_flag) {
  const RunConfig cfg = load_run_config(g);
  const std::string pred_path =
      pred_flag.empty() ? cfg.paths.predictions : pred_flag;
  if (pred_path.empty()) {
    throw ConfigError("report: supply --predictions or set paths.predictions");
  }
  ensure_dir(g.out_dir);
  const auto curves = load_predictions_csv(pred_path);
  if (curves.empty()) throw InputError("report: no predicted curves in " + pred_path);

  // Threshold exceedance: share of time points whose posterior mean (and
  // interval ends) sit above each regulatory level.
  struct Level {
    const char* name;
    double value;
  };
  const Level levels[3] = {{"who", cfg.thresholds.who},
                           {"nom_annual", cfg.thresholds.nom_annual},
                           {"nom_acute", cfg.thresholds.nom_acute}};
  {
    std::ofstream out(g.out_dir + "/exceedance.csv", std::ios::binary);
    out << "site_id,threshold_name,threshold,frac_mean_above,frac_lo_above,"
           "frac_hi_above,flagged\n";
    for (const PredictedCurve& c : curves) {
      for (const Level& lvl : levels) {
        const double n = static_cast<double>(c.times.size());
        double above_mean = 0.0, above_lo = 0.0, above_hi = 0.0;
        for (std::size_t i = 0; i < c.times.size(); ++i) {
          if (c.mean[i] > lvl.value) above_mean += 1.0;
          if (c.hpd_lo[i] > lvl.value) above_lo += 1.0;
          if (c.hpd_hi[i] > lvl.value) above_hi += 1.0;
        }
        out << c.site_id << ',' << lvl.name << ',' << format_double(lvl.value)
            << ',' << format_double(above_mean / n) << ','
            << format_double(above_lo / n) << ',' << format_double(above_hi / n)
            << ',' << ((above_mean / n) > 0.5 ? 1 : 0) << "\n";
      }
    }
  }

  // Prediction bands are already plot-ready; copy them next to the report.
  {
    std::ifstream src(pred_path, std::ios::binary);
    std::ofstream dst(g.out_dir + "/bands.csv", std::ios::binary);
    dst << src.rdbuf();
  }

  const std::string truth_path = truth_flag.empty() ? cfg.paths.truth : truth_flag;
  if (!truth_path.empty()) {
    const TruthTable truth = load_truth_csv(truth_path);
    std::vector<MetricRow> rows;
    for (const PredictedCurve& c : curves) {
      const int j = truth.find(c.site_id);
      if (j < 0) continue;
      if (truth.times[static_cast<std::size_t>(j)] != c.times) {
        throw InputError("report: truth grid differs from prediction grid for site '" +
                         c.site_id + "'; predict at the truth times");
      }
      rows.push_back({0, c.site_id, "ise",
                      ise(CurvePair(c.times, c.mean,
                                    truth.values[static_cast<std::size_t>(j)]))});
    }
    write_metrics_csv(g.out_dir + "/ise.csv", rows);
  }

  std::cout << "report written under " << g.out_dir << "\n";
  return 0;
}

int cmd_preprocess(const GlobalOptions& g, const std::string& input) {
  const RunConfig cfg = load_run_config(g);
  if (input.empty()) throw ConfigError("preprocess-pm10: supply --input");
  ensure_dir(g.out_dir);
  const auto raw = read_hourly_csv(input, cfg.pm10.year);
  const Dataset data = preprocess_pm10(raw, cfg.pm10.log_transform);
  write_dataset_csv(g.out_dir + "/dataset.csv", data);
  std::cout << "preprocessed " << raw.size() << " site(s), "
            << data.total_observations() << " points ("
            << data.total_masked() << " masked)\n";
  return 0;
}

void emit_error(const std::string& type, const std::string& message, int code) {
  nlohmann::json j;
  j["error"] = {{"type", type}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spatial functional curves: simulate, fit, predict, report"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON config (defaults when omitted)");
  app.add_option("--seed", g.seed_override, "override the config seed");
  app.add_option("--bases", g.bases_override, "override the basis count (degree+1)");
  app.add_option("--threads", g.threads, "worker threads for replicates/targets");
  app.add_option("--out", g.out_dir, "output directory");

  auto* config_cmd = app.add_subcommand("config", "configuration utilities");
  std::string config_out = "config.json";
  auto* init_cmd = config_cmd->add_subcommand("init", "write the default config");
  init_cmd->add_option("--out", config_out, "output path");
  config_cmd->require_subcommand(1);
  config_cmd->fallthrough();
  init_cmd->fallthrough();

  auto* simulate_cmd = app.add_subcommand("simulate", "generate synthetic datasets");
  simulate_cmd->fallthrough();

  auto* fit_cmd = app.add_subcommand("fit", "run the sampler on a dataset");
  std::string fit_data;
  bool dump_delta = false;
  fit_cmd->add_option("--data", fit_data, "dataset CSV (overrides paths.data)");
  fit_cmd->add_flag("--dump-delta", dump_delta, "also write the full delta draws");
  fit_cmd->fallthrough();

  auto* predict_cmd = app.add_subcommand("predict", "predict curves at new sites");
  std::string predict_fit;
  predict_cmd->add_option("--fit", predict_fit, "fit output directory");
  predict_cmd->fallthrough();

  auto* report_cmd = app.add_subcommand("report", "metrics and threshold summaries");
  std::string report_pred, report_truth;
  report_cmd->add_option("--predictions", report_pred, "predictions CSV");
  report_cmd->add_option("--truth", report_truth, "truth CSV for ISE scoring");
  report_cmd->fallthrough();

  auto* preprocess_cmd =
      app.add_subcommand("preprocess-pm10", "aggregate hourly pollutant data");
  std::string preprocess_input;
  preprocess_cmd->add_option("--input", preprocess_input, "hourly CSV");
  preprocess_cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    emit_error("input", e.what(), 2);
    return 2;
  }

  try {
    if (init_cmd->parsed()) return cmd_config_init(config_out);
    if (simulate_cmd->parsed()) return cmd_simulate(g);
    if (fit_cmd->parsed()) return cmd_fit(g, fit_data, dump_delta);
    if (predict_cmd->parsed()) return cmd_predict(g, predict_fit);
    if (report_cmd->parsed()) return cmd_report(g, report_pred, report_truth);
    if (preprocess_cmd->parsed()) return cmd_preprocess(g, preprocess_input);
    emit_error("input", "no subcommand given", 2);
    return 2;
  } catch (const ConfigError& e) {
    emit_error("config", e.what(), 4);
    return 4;
  } catch (const NumericalError& e) {
    emit_error("numerical", e.what(), 3);
    return 3;
  } catch (const InputError& e) {
    emit_error("input", e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    emit_error("internal", e.what(), 1);
    return 1;
  }
}
