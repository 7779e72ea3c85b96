// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "spatfda/model.hpp"

using namespace spatfda;

TEST_CASE("ar coefficient closed form and monotonicity", "[model]") {
  CHECK(ar_coefficient(0.2, 0.0) == 1.0);
  CHECK(ar_coefficient(0.2, 1.0) == Catch::Approx(0.8187307530779818).epsilon(1e-14));
  const double far = ar_coefficient(5.0, 10.0);
  CHECK(far == Catch::Approx(1.9287498479639178e-22).epsilon(1e-12));
  CHECK(far < ar_coefficient(5.0, 1.0));

  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const double eta = 0.1 + rng.uniform() * 4.0;
    const double gap = rng.uniform() * 3.0;
    CHECK(ar_coefficient(eta, gap + 0.1) < ar_coefficient(eta, gap));
    CHECK(ar_coefficient(eta + 0.1, gap + 0.01) < ar_coefficient(eta, gap + 0.01));
  }
  CHECK_THROWS_AS(ar_coefficient(0.0, 1.0), InputError);
  CHECK_THROWS_AS(ar_coefficient(1.0, -1.0), InputError);
}

namespace {

FitData single_point_data() {
  Dataset d;
  SiteSeries s;
  s.site_id = "s01";
  s.times = {0.3, 0.7};
  s.values = {0.0, 0.0};
  s.missing = {false, true};  // one unmasked point
  d.sites.push_back(s);
  return FitData::prepare(d, BasisSpec(0, 0.0, 1.0));
}

ModelState zero_state(const FitData& fd) {
  ModelState s;
  s.theta = Eigen::MatrixXd::Zero(fd.n_basis(), fd.n_sites());
  s.mu_theta = Eigen::VectorXd::Zero(fd.n_basis());
  s.delta.resize(static_cast<std::size_t>(fd.n_sites()));
  for (int j = 0; j < fd.n_sites(); ++j) {
    s.delta[static_cast<std::size_t>(j)] = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(fd.curves[static_cast<std::size_t>(j)].times.size()));
  }
  return s;
}

}  // namespace

TEST_CASE("single standard normal observation contributes -log(2 pi)/2", "[model]") {
  const FitData fd = single_point_data();
  const ModelState s = zero_state(fd);
  const LogJointTerms terms = log_joint_terms(fd, s, PriorSpec{});
  CHECK(terms.likelihood ==
        Catch::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("log joint matches the naive dense implementation", "[model]") {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform() * 3.0);   // 2..4
    const int n = 4 + static_cast<int>(rng.uniform() * 5.0);   // 4..8
    const int p = static_cast<int>(rng.uniform() * 3.0);       // 0..2
    const Dataset data = testutil::random_micro_dataset(m, n, 0.2, rng);
    const FitData fd = FitData::prepare(data, basis_for_dataset(data, p));
    const ModelState state = testutil::random_state(fd, rng);
    const PriorSpec priors;

    const LogJointTerms ours = log_joint_terms(fd, state, priors);
    const testutil::NaiveTerms naive = testutil::naive_log_joint(fd, state, priors);

    const double rel =
        std::abs(ours.total() - naive.total()) / std::abs(naive.total());
    CHECK(rel < 1e-8);
    // Term-group decomposition agrees too.
    CHECK(ours.likelihood == Catch::Approx(naive.likelihood).epsilon(1e-8).margin(1e-10));
    CHECK(ours.theta_prior == Catch::Approx(naive.theta_prior).epsilon(1e-8).margin(1e-10));
    CHECK(ours.delta_prior == Catch::Approx(naive.delta_prior).epsilon(1e-8).margin(1e-10));
    CHECK(ours.mu_prior == Catch::Approx(naive.mu_prior).epsilon(1e-8).margin(1e-10));
    CHECK(ours.hyper_prior == Catch::Approx(naive.hyper_prior).epsilon(1e-8).margin(1e-10));
  }
}

TEST_CASE("masking one observation removes exactly its likelihood term", "[model]") {
  Rng rng(5);
  Dataset data = testutil::random_micro_dataset(3, 6, 0.0, rng);
  const BasisSpec basis = basis_for_dataset(data, 2);
  const FitData fd = FitData::prepare(data, basis);
  const ModelState state = testutil::random_state(fd, rng);
  const PriorSpec priors;
  const double full = log_joint(fd, state, priors);

  // Mask site 1, index 2 and recompute.
  Dataset masked = data;
  masked.sites[1].missing[2] = true;
  const FitData fd2 = FitData::prepare(masked, basis);
  const double reduced = log_joint(fd2, state, priors);

  const auto& c = fd.curves[1];
  const double fit = c.basis.row(2).dot(state.theta.col(1)) + state.delta[1](2);
  const double term = log_normal_pdf(c.values(2), fit, state.tau2);
  CHECK(full - reduced == Catch::Approx(term).epsilon(1e-10));
}

TEST_CASE("equal-gap random-effect prior equals the dense AR(1) density", "[model]") {
  // Constant gaps: chain covariance has the textbook product form.
  Dataset data;
  SiteSeries s;
  s.site_id = "s01";
  for (int i = 0; i < 5; ++i) {
    s.times.push_back(static_cast<double>(i));
    s.values.push_back(0.0);
    s.missing.push_back(false);
  }
  data.sites.push_back(s);
  const FitData fd = FitData::prepare(data, BasisSpec(1, 0.0, 4.0));

  Rng rng(9);
  ModelState state = testutil::random_state(fd, rng);
  state.ar_decay = 0.4;
  state.nu2 = 0.8;

  const LogJointTerms terms = log_joint_terms(fd, state, PriorSpec{});

  const Eigen::MatrixXd cov =
      testutil::ar_chain_covariance({0.0, 1.0, 1.0, 1.0, 1.0}, 0.4, 0.8);
  const Eigen::VectorXd& d = state.delta[0];
  const double quad = d.dot(cov.inverse() * d);
  const double dense = -0.5 * (5.0 * std::log(2.0 * std::numbers::pi) +
                               std::log(cov.determinant()) + quad);
  CHECK(terms.delta_prior == Catch::Approx(dense).epsilon(1e-10));
}

TEST_CASE("invalid states are rejected", "[model]") {
  const FitData fd = single_point_data();
  ModelState s = zero_state(fd);
  s.tau2 = -1.0;
  CHECK_THROWS_AS(log_joint(fd, s, PriorSpec{}), InputError);
  s.tau2 = 1.0;
  s.theta.resize(3, 1);
  CHECK_THROWS_AS(log_joint(fd, s, PriorSpec{}), InputError);
}
