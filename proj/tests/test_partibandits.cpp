#include "doctest.h"
#include "partibandits/baselines.hpp"
#include "partibandits/envs.hpp"
#include "partibandits/partibandits.hpp"

#include <cmath>
#include <limits>

using namespace pb;

TEST_CASE("PartiBanditsConfig budgets") {
  PartiBanditsConfig c;
  c.budget = 101;
  CHECK(c.stage1() == 50);
  CHECK(c.stage2() == 51);
  c.budget = 1;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("budget"), Error);
  c.budget = 10;
  c.stage1_budget = 10;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("stage1_budget"), Error);
  c.stage1_budget.reset();
  c.delta = 1.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("delta"), Error);
}

TEST_CASE("budget split exactness") {
  const auto gp = gen_threshold_pool(0.5, 0.05, 0.05, 10000, 2);
  for (std::size_t n : {2u, 3u, 10u, 37u, 100u, 250u}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      LabelOracle o(gp.pool, n);
      PartiBanditsConfig c;
      c.budget = n;
      Rng rng(seed);
      const auto run = run_partibandits(o, c, rng);
      CHECK(run.stage1.labels_spent <= n / 2);
      CHECK(o.spent() <= n);
      CHECK(run.estimate.labels_spent == o.spent());
      std::size_t stage2 = 0;
      for (const auto& g : run.estimate.per_group) stage2 += g.count;
      CHECK(stage2 == n - n / 2);
      double sum = 0.0;
      for (const auto& g : run.estimate.per_group) sum += g.weighted_mean;
      CHECK(std::abs(sum - run.estimate.value) <= 1e-12);
      // no point revealed twice across stages
      std::vector<PointId> ids;
      for (const auto& e : run.trace) ids.push_back(e.point);
      std::sort(ids.begin(), ids.end());
      CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
    }
  }
}

TEST_CASE("constant stage-1 learner reduces to SRS on the stage-2 budget") {
  const auto gp = gen_threshold_pool(0.5, 0.05, 0.05, 5000, 3);
  for (std::size_t n : {11u, 100u}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      LabelOracle o1(gp.pool, n), o2(gp.pool, n);
      PartiBanditsConfig c;
      c.budget = n;
      c.subroutine = "constant";
      Rng r1(seed), r2(seed);
      const auto pb_run = run_partibandits(o1, c, r1);
      const auto srs = run_srs(o2, (n + 1) / 2, r2);
      CHECK(pb_run.trace == srs.trace);
      CHECK(pb_run.estimate.value == srs.estimate.value);
    }
  }
}

TEST_CASE("noiseless threshold: error far below SRS") {
  double pb_mse = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const auto gp = gen_threshold_pool(0.5, 0.0, 0.0, 10000, 1000 + r);
    LabelOracle o(gp.pool, 100);
    PartiBanditsConfig c;
    c.budget = 100;
    Rng rng(static_cast<std::uint64_t>(r));
    const auto run = run_partibandits(o, c, rng);
    pb_mse += std::pow(run.estimate.value - gp.truth.true_mean, 2);
  }
  pb_mse /= reps;
  MESSAGE("PartiBandits MSE at N=100, rho=0: " << pb_mse);
  CHECK(pb_mse < 0.25 / 100 / 4);
}

TEST_CASE("coarsening merges the lightest strata") {
  using Part = StratificationScheme::Part;
  const double inf = std::numeric_limits<double>::infinity();
  const StratificationScheme s({{{{-inf, 0.2}}, 0.2}, {{{0.2, 0.3}}, 0.1}, {{{0.3, 0.6}}, 0.3}, {{{0.6, inf}}, 0.4}},
                               Provenance::learned);
  const auto merged = merge_lightest(s);
  REQUIRE(merged.size() == 3);
  CHECK(merged[0].weight == doctest::Approx(0.3));
  REQUIRE(merged[0].membership.size() == 1);
  CHECK(merged[0].membership[0] == Interval{-inf, 0.3});

  const auto gp = gen_threshold_pool(0.5, 0.0, 0.0, 1000, 1);
  LabelOracle o(gp.pool, 10);
  std::vector<std::string> log;
  const auto coarse = coarsen_for_stage2(s, o, 2, &log);
  CHECK(coarse.size() == 2);
  CHECK(log.size() == 2);
  double total = 0.0;
  for (double w : coarse.weights()) total += w;
  CHECK(std::abs(total - 1.0) <= 1e-12);
}

TEST_CASE("tiny budgets coarsen instead of failing") {
  const auto gp = gen_threshold_pool(0.5, 0.1, 0.1, 2000, 5);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    LabelOracle o(gp.pool, 3);
    PartiBanditsConfig c;
    c.budget = 3;
    c.subroutine = "a2-threshold-het";
    Rng rng(seed);
    CHECK_NOTHROW(run_partibandits(o, c, rng));
  }
}
