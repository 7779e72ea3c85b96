// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "spatfda/config.hpp"
#include "spatfda/csv.hpp"
#include "spatfda/kriging.hpp"
#include "spatfda/synthetic.hpp"

using namespace spatfda;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("dataset csv round trip is the identity", "[io]") {
  McPlan plan;
  plan.replicates = 1;
  plan.sites = 4;
  plan.points_per_curve = 12;
  plan.master_seed = 5;
  auto reps = generate_study1(plan, GapScheme::uniform01, Study1Params{});
  const MaskedDataset masked = apply_missing_mask(reps[0].data, 6, 9);

  TempFile f1("io_roundtrip_1.csv");
  TempFile f2("io_roundtrip_2.csv");
  write_dataset_csv(f1.path, masked.data);
  const Dataset loaded = load_dataset(f1.path);
  write_dataset_csv(f2.path, loaded);
  CHECK(slurp(f1.path) == slurp(f2.path));

  REQUIRE(loaded.n_sites() == 4);
  CHECK(loaded.total_masked() == 6);
  // Masked rows keep their time stamps.
  for (std::size_t j = 0; j < loaded.sites.size(); ++j) {
    CHECK(loaded.sites[j].times == masked.data.sites[j].times);
    CHECK(loaded.sites[j].missing == masked.data.sites[j].missing);
  }
}

TEST_CASE("dataset loading validates structure", "[io]") {
  TempFile f("io_invalid.csv");
  {
    std::ofstream out(f.path);
  }
  CHECK_THROWS_AS(load_dataset(f.path), InputError);

  {
    std::ofstream out(f.path);
    out << "wrong,header\n";
  }
  CHECK_THROWS_AS(load_dataset(f.path), InputError);

  {
    std::ofstream out(f.path);
    out << kDatasetHeader << "\n";
    out << "a,0,0,1.0,2.5,0\n";
    out << "a,0,0,0.5,2.5,0\n";  // non-monotone
  }
  try {
    load_dataset(f.path);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }

  CHECK_THROWS_AS(load_dataset("does_not_exist.csv"), InputError);
}

TEST_CASE("loading is independent of row order", "[io]") {
  McPlan plan;
  plan.replicates = 1;
  plan.sites = 3;
  plan.points_per_curve = 6;
  plan.master_seed = 15;
  auto reps = generate_study1(plan, GapScheme::uniform01, Study1Params{});

  TempFile canonical("io_order_1.csv");
  write_dataset_csv(canonical.path, reps[0].data);

  // Interleave sites: all first rows, then all second rows, etc.
  TempFile shuffled("io_order_2.csv");
  {
    std::ofstream out(shuffled.path, std::ios::binary);
    out << kDatasetHeader << "\n";
    for (int i = 0; i < 6; ++i) {
      for (const SiteSeries& s : reps[0].data.sites) {
        out << s.site_id << ',' << format_double(s.x) << ',' << format_double(s.y)
            << ',' << format_double(s.times[static_cast<std::size_t>(i)]) << ','
            << format_double(s.values[static_cast<std::size_t>(i)]) << ",0\n";
      }
    }
  }
  const Dataset a = load_dataset(canonical.path);
  const Dataset b = load_dataset(shuffled.path);
  REQUIRE(a.n_sites() == b.n_sites());
  for (std::size_t j = 0; j < a.sites.size(); ++j) {
    CHECK(a.sites[j].site_id == b.sites[j].site_id);
    CHECK(a.sites[j].times == b.sites[j].times);
    CHECK(a.sites[j].values == b.sites[j].values);
  }

  // Identical inputs mean bit-identical chains and predictions regardless of
  // input row order.
  SamplerConfig cfg;
  cfg.total_iterations = 80;
  cfg.burn_in = 20;
  cfg.thin = 3;
  cfg.seed = 77;
  const BasisSpec basis = basis_for_dataset(a, 2);
  const PosteriorDraws da = run_chain(a, basis, PriorSpec{}, cfg);
  const PosteriorDraws db = run_chain(b, basis, PriorSpec{}, cfg);
  REQUIRE(da.size() == db.size());
  for (std::size_t i = 0; i < da.size(); ++i) {
    CHECK(da.log_joint[i] == db.log_joint[i]);
  }

  Eigen::MatrixXd coords(3, 2);
  for (int j = 0; j < 3; ++j) {
    coords(j, 0) = a.sites[static_cast<std::size_t>(j)].x;
    coords(j, 1) = a.sites[static_cast<std::size_t>(j)].y;
  }
  PredictionRequest req;
  req.seed = 5;
  PredictionTarget t;
  t.id = "new";
  t.x = 0.5;
  t.y = 0.5;
  const auto range = a.time_range();
  for (int i = 0; i < 10; ++i) {
    t.times.push_back(range.first + (range.second - range.first) * i / 9.0);
  }
  req.targets.push_back(t);
  const auto pa = predict_curves(da, req, basis, coords);
  const auto pb = predict_curves(db, req, basis, coords);
  for (std::size_t i = 0; i < pa[0].times.size(); ++i) {
    CHECK(pa[0].mean[i] == pb[0].mean[i]);
    CHECK(pa[0].hpd_lo[i] == pb[0].hpd_lo[i]);
    CHECK(pa[0].hpd_hi[i] == pb[0].hpd_hi[i]);
  }
}

TEST_CASE("draws csv round trips the states used for prediction", "[io]") {
  Rng rng(31);
  const Dataset data = testutil::random_micro_dataset(3, 8, 0.1, rng);
  SamplerConfig cfg;
  cfg.total_iterations = 60;
  cfg.burn_in = 20;
  cfg.thin = 4;
  cfg.seed = 3;
  const PosteriorDraws draws = run_chain(data, basis_for_dataset(data, 2), PriorSpec{}, cfg);

  TempFile f("io_draws.csv");
  write_draws_csv(f.path, draws);
  const auto states = load_draws_csv(f.path, 3, 3);
  REQUIRE(states.size() == draws.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    CHECK((states[i].theta - draws.states[i].theta).cwiseAbs().maxCoeff() == 0.0);
    CHECK((states[i].mu_theta - draws.states[i].mu_theta).cwiseAbs().maxCoeff() == 0.0);
    CHECK(states[i].tau2 == draws.states[i].tau2);
    CHECK(states[i].kappa2 == draws.states[i].kappa2);
    CHECK(states[i].spatial_decay == draws.states[i].spatial_decay);
    CHECK(states[i].ar_decay == draws.states[i].ar_decay);
  }
  CHECK_THROWS_AS(load_draws_csv(f.path, 4, 3), InputError);
}

TEST_CASE("metric and prediction tables", "[io]") {
  TempFile f("io_metrics.csv");
  write_metrics_csv(f.path, {{0, "s01", "ise", 0.125}, {1, "s02", "ise", 0.5}});
  const std::string content = slurp(f.path);
  CHECK(content.find("replicate,site_id,metric,value") == 0);
  CHECK(content.find("0,s01,ise,0.125") != std::string::npos);

  std::vector<PredictedCurve> curves(1);
  curves[0].site_id = "t1";
  curves[0].times = {0.0, 0.5};
  curves[0].mean = {1.0, 2.0};
  curves[0].hpd_lo = {0.5, 1.5};
  curves[0].hpd_hi = {1.5, 2.5};
  TempFile p("io_pred.csv");
  write_predictions_csv(p.path, curves);
  const auto loaded = load_predictions_csv(p.path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].times == curves[0].times);
  CHECK(loaded[0].mean == curves[0].mean);
}

TEST_CASE("default config parses to defaults and validates", "[io]") {
  const RunConfig c = parse_config(default_config_json());
  CHECK(c.basis.degree == 3);
  CHECK(c.basis.count_sweep == std::vector<int>{4, 12, 18});
  CHECK(c.priors.nu2.shape == 3.0);
  CHECK(c.priors.mu_variance == 2500.0);
  CHECK(c.sampler.total_iterations == 25000);
  CHECK(c.sampler.burn_in == 5000);
  CHECK(c.sampler.thin == 10);
  CHECK(c.thresholds.who == 3.0);
  CHECK(c.thresholds.nom_annual == 3.6);
  CHECK(c.thresholds.nom_acute == 4.3);
  CHECK(c.pm10.year == 2022);
  CHECK(c.pm10.log_transform);

  ordered_json bad = default_config_json();
  bad["thresholds"]["who"] = 5.0;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);

  bad = default_config_json();
  bad["sampler"]["burn_in"] = 999999;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);

  bad = default_config_json();
  bad["paths"]["data"] = "no_such_file.csv";
  CHECK_THROWS_AS(parse_config(bad), ConfigError);

  bad = default_config_json();
  bad["basis"]["interval"] = ordered_json::array({1.0, 1.0});
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("fit manifest round trip", "[io]") {
  FitManifest m;
  m.basis_degree = 5;
  m.basis_a = 0.25;
  m.basis_b = 9.75;
  m.kernel_family = KernelFamily::gaussian;
  m.site_ids = {"a", "b"};
  m.site_x = {0.0, 1.0};
  m.site_y = {2.0, 3.0};
  m.seed = 42;
  m.retained = 150;
  m.accept_rate_spatial = 0.41;
  m.accept_rate_ar = 0.46;
  m.created_at = "test";

  TempFile f("io_manifest.json");
  write_fit_manifest(f.path, m, ordered_json::object());
  const FitManifest r = load_fit_manifest(f.path);
  CHECK(r.basis_degree == 5);
  CHECK(r.basis_a == 0.25);
  CHECK(r.basis_b == 9.75);
  CHECK(r.site_ids == m.site_ids);
  CHECK(r.seed == 42);
  CHECK(r.retained == 150);
}
