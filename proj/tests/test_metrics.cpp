// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "spatfda/metrics.hpp"
#include "spatfda/rng.hpp"

using namespace spatfda;

TEST_CASE("ise basics", "[metrics]") {
  std::vector<double> grid{0.0, 0.3, 0.7, 1.0};
  std::vector<double> same{1.0, 2.0, 3.0, 4.0};
  CHECK(ise(CurvePair(grid, same, same)) == 0.0);

  // Constant offset c over length L integrates to c^2 L exactly.
  std::vector<double> shifted{1.5, 2.5, 3.5, 4.5};
  CHECK(ise(CurvePair(grid, shifted, same)) == Catch::Approx(0.25).epsilon(1e-14));

  // Symmetric in estimate/target.
  std::vector<double> other{2.0, 1.0, 5.0, 3.0};
  CHECK(ise(CurvePair(grid, same, other)) ==
        Catch::Approx(ise(CurvePair(grid, other, same))).epsilon(1e-14));

  CHECK_THROWS_AS(CurvePair({0.0, 1.0}, {1.0}, {1.0, 2.0}), InputError);
  CHECK_THROWS_AS(CurvePair({0.0, 0.0}, {1.0, 1.0}, {1.0, 2.0}), InputError);
  CHECK_THROWS_AS(ise(CurvePair({0.5}, {1.0}, {2.0})), InputError);
}

TEST_CASE("ise of a linear discrepancy approaches the analytic integral", "[metrics]") {
  const int n = 2000;
  std::vector<double> grid(n + 1), est(n + 1), tgt(n + 1, 0.0);
  for (int i = 0; i <= n; ++i) {
    grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
    est[static_cast<std::size_t>(i)] = grid[static_cast<std::size_t>(i)];
  }
  // integral of t^2 over [0,1] = 1/3; trapezoid error is O(1/n^2).
  CHECK(ise(CurvePair(grid, est, tgt)) == Catch::Approx(1.0 / 3.0).margin(1e-6));
}

TEST_CASE("mse decomposition", "[metrics]") {
  const MseDecomposition exact = mse_decomposition({2.0, 2.0, 2.0}, 2.0);
  CHECK(exact.bias2 == 0.0);
  CHECK(exact.variance == 0.0);
  CHECK(exact.mse == 0.0);

  const MseDecomposition two = mse_decomposition({0.0, 2.0}, 0.0);
  CHECK(two.bias2 == Catch::Approx(1.0));
  CHECK(two.variance == Catch::Approx(1.0));
  CHECK(two.mse == Catch::Approx(2.0));

  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> est;
    for (int i = 0; i < 20; ++i) est.push_back(rng.normal(1.0, 3.0));
    const double truth = rng.normal();
    const MseDecomposition d = mse_decomposition(est, truth);
    double direct = 0.0;
    for (double e : est) direct += (e - truth) * (e - truth);
    direct /= static_cast<double>(est.size());
    CHECK(std::abs(d.bias2 + d.variance - direct) < 1e-12);
  }
  CHECK_THROWS_AS(mse_decomposition({1.0}, 0.0), InputError);
}

TEST_CASE("hpd interval of a uniform ladder", "[metrics]") {
  std::vector<double> draws;
  for (int i = 1; i <= 100; ++i) draws.push_back(static_cast<double>(i));
  const HpdInterval h = hpd(draws, 0.95);
  CHECK(h.upper - h.lower == 94.0);

  const HpdInterval all = hpd(draws, 0.999999);
  CHECK(all.lower == 1.0);
  CHECK(all.upper == 100.0);

  CHECK_THROWS_AS(hpd({1.0, 2.0}, 0.95), InputError);
  CHECK_THROWS_AS(hpd(draws, 1.5), InputError);
}

TEST_CASE("hpd of a symmetric sample is roughly symmetric and nested", "[metrics]") {
  Rng rng(21);
  std::vector<double> draws;
  for (int i = 0; i < 50000; ++i) draws.push_back(rng.normal(3.0, 1.0));
  const HpdInterval h95 = hpd(draws, 0.95);
  CHECK(std::abs((h95.upper - 3.0) - (3.0 - h95.lower)) < 0.15);
  CHECK(h95.lower == Catch::Approx(3.0 - 1.96).margin(0.1));
  CHECK(h95.upper == Catch::Approx(3.0 + 1.96).margin(0.1));

  // Width shrinks with mass.
  const HpdInterval h80 = hpd(draws, 0.80);
  const HpdInterval h50 = hpd(draws, 0.50);
  CHECK(h80.upper - h80.lower <= h95.upper - h95.lower);
  CHECK(h50.upper - h50.lower <= h80.upper - h80.lower);
}

TEST_CASE("ess of a white-noise chain is close to its length", "[metrics]") {
  Rng rng(17);
  std::vector<double> chain;
  for (int i = 0; i < 20000; ++i) chain.push_back(rng.normal());
  const ChainDiagnostics d = chain_diagnostics(chain);
  CHECK_FALSE(d.degenerate);
  CHECK(d.ess > 0.8 * 20000);
  CHECK(d.ess < 1.2 * 20000);
  CHECK(std::abs(d.geweke_z) < 4.0);
}

TEST_CASE("ess of an AR(1) chain matches the analytic value", "[metrics]") {
  Rng rng(19);
  const double rho = 0.5;
  std::vector<double> chain;
  double x = 0.0;
  for (int i = 0; i < 40000; ++i) {
    x = rho * x + rng.normal();
    chain.push_back(x);
  }
  const ChainDiagnostics d = chain_diagnostics(chain);
  const double expected = 40000.0 * (1.0 - rho) / (1.0 + rho);
  CHECK(d.ess > 0.75 * expected);
  CHECK(d.ess < 1.25 * expected);
}

TEST_CASE("constant chains are flagged degenerate", "[metrics]") {
  std::vector<double> chain(500, 3.14);
  const ChainDiagnostics d = chain_diagnostics(chain);
  CHECK(d.degenerate);
  CHECK(d.ess == 0.0);
  CHECK_THROWS_AS(chain_diagnostics(std::vector<double>(50, 1.0)), InputError);
}
