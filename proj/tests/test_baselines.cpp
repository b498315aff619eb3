#include "doctest.h"
#include "partibandits/baselines.hpp"
#include "partibandits/envs.hpp"

#include <cmath>

using namespace pb;

TEST_CASE("SRS") {
  SUBCASE("all-zero pool") {
    const LabeledPool zeros(std::vector<double>(50, 0.3), std::vector<double>(50, 0.0), LabelAlphabet::binary());
    LabelOracle o(zeros, 10);
    Rng rng(1);
    CHECK(run_srs(o, 10, rng).estimate.value == 0.0);
  }
  SUBCASE("census returns the pool mean") {
    const auto gp = gen_threshold_pool(0.5, 0.1, 0.1, 300, 2);
    LabelOracle o(gp.pool, 300);
    Rng rng(2);
    CHECK(std::abs(run_srs(o, 300, rng).estimate.value - gp.pool.population_mean()) <= 1e-12);
  }
  SUBCASE("pool smaller than the budget") {
    const auto gp = gen_threshold_pool(0.5, 0.1, 0.1, 5, 2);
    LabelOracle o(gp.pool, 6);
    Rng rng(2);
    CHECK_THROWS_AS(run_srs(o, 6, rng), Error);
  }
}

TEST_CASE("proportional allocation examples") {
  CHECK(proportional_allocation(std::vector<double>{0.5, 0.5}, 10) == std::vector<std::size_t>{5, 5});
  CHECK(proportional_allocation(std::vector<double>{0.5, 0.3, 0.2}, 10) == std::vector<std::size_t>{5, 3, 2});
  CHECK(proportional_allocation(std::vector<double>{0.7, 0.3}, 5) == std::vector<std::size_t>{4, 1});
  CHECK(proportional_allocation(std::vector<double>{0.98, 0.01, 0.01}, 10) == std::vector<std::size_t>{8, 1, 1});
  CHECK_THROWS_AS(proportional_allocation(std::vector<double>{0.5, 0.5}, 1), Error);
}

TEST_CASE("proportional allocation properties") {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t g = 1 + rng.index(8);
    std::vector<double> w(g);
    double total = 0.0;
    for (double& x : w) total += (x = 0.2 + rng.uniform());
    for (double& x : w) x /= total;
    const std::size_t n = g + rng.index(500);
    const auto alloc = proportional_allocation(w, n);
    std::size_t sum = 0;
    for (std::size_t i = 0; i < g; ++i) {
      sum += alloc[i];
      CHECK(alloc[i] >= 1);
      // the unit floor may push a group further from P_g N only when P_g N < 1
      if (w[i] * static_cast<double>(n) >= 1.0) CHECK(std::abs(static_cast<double>(alloc[i]) - w[i] * n) <= 1.0);
    }
    CHECK(sum == n);
  }
}

TEST_CASE("StRS") {
  const auto gp = gen_threshold_pool(0.5, 0.05, 0.05, 5000, 3);
  const std::vector<double> cuts{0.5};
  const auto scheme = analytic_scheme(UniformLaw{0, 1}, cuts);
  LabelOracle o(gp.pool, 10);
  Rng rng(1);
  const auto run = run_strs(o, scheme, 10, rng);
  CHECK(run.estimate.per_group[0].count == 5);
  CHECK(run.estimate.per_group[1].count == 5);
  LabelOracle o2(gp.pool, 1);
  CHECK_THROWS_AS(run_strs(o2, scheme, 1, rng), Error);
}

TEST_CASE("Thompson configuration and errors") {
  ThompsonConfig bad;
  bad.prior_alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  const LabeledPool tri({0.1, 0.5, 0.9}, {0, 1, 2}, LabelAlphabet::classes(2));
  LabelOracle o(tri, 3);
  Rng rng(1);
  CHECK_THROWS_AS(run_thompson(o, ThompsonConfig{}, 3, rng), Error);
}

TEST_CASE("single-bin Thompson is SRS") {
  const auto gp = gen_threshold_pool(0.5, 0.05, 0.05, 3000, 4);
  ThompsonConfig one;
  one.bins = 1;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    LabelOracle o1(gp.pool, 60), o2(gp.pool, 60);
    Rng r1(seed), r2(seed);
    const auto th = run_thompson(o1, one, 60, r1);
    const auto srs = run_srs(o2, 60, r2);
    CHECK(th.trace == srs.trace);
    CHECK(th.estimate.value == srs.estimate.value);
  }
}

TEST_CASE("Thompson binned estimate uses the prior mean for unpulled bins") {
  const auto gp = gen_threshold_pool(0.5, 0.0, 0.0, 3000, 4);
  LabelOracle o(gp.pool, 1);
  Rng rng(3);
  const auto run = run_thompson(o, ThompsonConfig{}, 1, rng);
  std::size_t pulled = 0;
  double expected = 0.0;
  const auto bins = thompson_bins(ThompsonConfig{}, gp.pool);
  for (std::size_t g = 0; g < run.pulls.size(); ++g) {
    pulled += run.pulls[g];
    expected += run.pulls[g] ? bins[g].weight * run.trace[0].label : bins[g].weight * 0.5;
  }
  CHECK(pulled == 1);
  CHECK(run.estimate.value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fixed-arm Thompson favours the best arm") {
  const ArmEnvironment env{{0.1, 0.5, 0.8}};
  CHECK(env.mean() == doctest::Approx(1.4 / 3.0));
  Rng rng(7);
  const auto run = run_thompson(env, ThompsonConfig{ThompsonMode::fixed_arms}, 3000, rng);
  CHECK(run.pulls[2] > 1500);
  CHECK(run.pulls[0] + run.pulls[1] + run.pulls[2] == 3000);
}
