#include "doctest.h"
#include "oracles.hpp"
#include "partibandits/envs.hpp"
#include "partibandits/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

using namespace pb;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("pb_envs_" + name);
  std::ofstream(path, std::ios::binary) << body;
  return path;
}

double pool_mean(const LabeledPool& pool) { return pool.population_mean(); }

}  // namespace

TEST_CASE("threshold pool: noiseless truth") {
  const auto gp = gen_threshold_pool(0.5, 0.0, 0.0, 1000, 1);
  CHECK(gp.truth.true_mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(gp.truth.sigma1 == 0.0);
  REQUIRE(gp.truth.bayes_risk);
  CHECK(*gp.truth.bayes_risk == 0.0);
  for (std::size_t i = 0; i < gp.pool.size(); ++i) {
    LabelOracle o(gp.pool, 1);
    CHECK(o.reveal(i) == (gp.pool.x(i) >= 0.5 ? 1.0 : 0.0));
  }
}

TEST_CASE("threshold pool: flip noise") {
  const auto gp = gen_threshold_pool(0.5, 0.05, 0.05, 10000, 9);
  CHECK(gp.truth.true_mean == doctest::Approx(0.5).epsilon(1e-15));
  REQUIRE(gp.truth.cond_variances.size() == 2);
  CHECK(gp.truth.cond_variances[0] == doctest::Approx(0.0475).epsilon(1e-12));
  CHECK(gp.truth.cond_variances[1] == doctest::Approx(0.0475).epsilon(1e-12));
  CHECK(gp.truth.sigma1 == doctest::Approx(0.0475).epsilon(1e-12));

  // asymmetric rates: mu = (1-t)(1-rho_gt) + t rho_le
  const auto asym = gen_threshold_pool(0.3, 0.1, 0.2, 10, 1);
  CHECK(asym.truth.true_mean == doctest::Approx(0.7 * 0.8 + 0.3 * 0.1).epsilon(1e-14));
  CHECK(*asym.truth.bayes_risk == doctest::Approx(0.3 * 0.1 + 0.7 * 0.2).epsilon(1e-14));

  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = gen_threshold_pool(0.5, 0.10, 0.10, 10000, seed);
    CHECK(std::abs(pool_mean(p.pool) - 0.5) <= 3.0 * std::sqrt(0.25 / 10000.0));
  }
}

TEST_CASE("pool generation errors and warnings") {
  CHECK_THROWS_AS(gen_threshold_pool(0.5, 0.0, 0.0, 0, 1), Error);
  CHECK_THROWS_WITH_AS(validate(ThresholdFlip{0.5, -0.1, 0.0}), doctest::Contains("rho_le"), Error);
  CHECK(validate(ThresholdFlip{0.5, 0.3, 0.0}).size() == 1);
  CHECK(validate(ThresholdFlip{0.5, 0.25, 0.25}).empty());
  CHECK_THROWS_AS(validate(LogitDgp{0.0}), Error);
  CHECK_THROWS_AS(validate(ProbitDgp{-1.0}), Error);
}

TEST_CASE("logit DGP against quadrature") {
  for (double nu : {0.05, 0.1, 1.0, 10.0}) CHECK(prob_one(LogitDgp{nu}, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(true_model(LogitDgp{1e6}, natural_scheme(LogitDgp{1e6})).true_mean == doctest::Approx(0.5).epsilon(1e-9));

  for (double nu : {0.1, 0.25}) {
    const DgpSpec dgp = LogitDgp{nu};
    const TrueModel tm = true_model(dgp, natural_scheme(dgp));
    const double left = 2.0 * oracle::simpson([nu](double x) { return oracle::logistic((2 * x - 1) / nu); }, 0.0, 0.5);
    const double frozen = nu == 0.1 ? oracle::logit_left_mean_nu01 : oracle::logit_left_mean_nu025;
    CHECK(std::abs(left - frozen) <= 1e-10);
    CHECK(std::abs(tm.true_mean - 0.5) <= 1e-8);
    CHECK(std::abs(tm.cond_variances[0] - frozen * (1 - frozen)) <= 1e-8);
    CHECK(tm.sigma1 <= tm.variance + 1e-12);
  }

  const auto gp = gen_logit_pool(0.1, 10000, 4);
  const double mu = gp.truth.true_mean;
  CHECK(std::abs(pool_mean(gp.pool) - mu) <= 3.0 * std::sqrt(mu * (1 - mu) / 10000.0));
}

TEST_CASE("probit DGP against quadrature") {
  for (double nu : {0.01, 1.0, 5.0}) CHECK(prob_one(ProbitDgp{nu}, 0.25) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(true_model(ProbitDgp{1e-6}, natural_scheme(ProbitDgp{1e-6})).true_mean ==
        doctest::Approx(0.475).epsilon(1e-8));
  CHECK(covariate_law(ProbitDgp{1.0}).lo == -5.0);
  CHECK(covariate_law(ProbitDgp{1.0}).hi == 5.0);

  struct Case {
    double nu;
    double frozen;
  };
  for (const Case c : {Case{1.0, oracle::probit_mu_nu1}, Case{2.0, oracle::probit_mu_nu2}, Case{5.0, oracle::probit_mu_nu5}}) {
    const double simpson =
        oracle::simpson([&](double x) { return oracle::normal_cdf((x - 0.25) / c.nu); }, -5.0, 5.0) / 10.0;
    CHECK(std::abs(simpson - c.frozen) <= 1e-10);
    const TrueModel tm = true_model(ProbitDgp{c.nu}, natural_scheme(ProbitDgp{c.nu}));
    CHECK(std::abs(tm.true_mean - c.frozen) <= 1e-8);
  }
  const TrueModel tm2 = true_model(ProbitDgp{2.0}, natural_scheme(ProbitDgp{2.0}));
  CHECK(tm2.weights[0] == doctest::Approx(0.525).epsilon(1e-12));
  const double m = oracle::probit_left_mean_nu2;
  CHECK(std::abs(tm2.cond_variances[0] - m * (1 - m)) <= 1e-8);

  const auto gp = gen_probit_pool(1.0, 10000, 5);
  const double mu = gp.truth.true_mean;
  CHECK(std::abs(pool_mean(gp.pool) - mu) <= 3.0 * std::sqrt(mu * (1 - mu) / 10000.0));
}

TEST_CASE("law of total variance on assorted schemes") {
  const std::vector<DgpSpec> dgps{ThresholdFlip{0.5, 0.05, 0.05}, ThresholdFlip{0.3, 0.2, 0.0}, LogitDgp{0.1},
                                  ProbitDgp{1.0}};
  for (const auto& dgp : dgps) {
    const UniformLaw law = covariate_law(dgp);
    for (int cuts = 0; cuts < 5; ++cuts) {
      std::vector<double> c;
      for (int i = 1; i <= cuts; ++i) c.push_back(law.lo + (law.hi - law.lo) * i / (cuts + 1.0) * 0.97);
      const TrueModel tm = true_model(dgp, analytic_scheme(law, c));
      CHECK(tm.sigma1 <= tm.variance + 1e-12);
      double s = 0.0;
      for (std::size_t g = 0; g < tm.weights.size(); ++g) s += tm.weights[g] * tm.cond_variances[g];
      CHECK(std::abs(s - tm.sigma1) <= 1e-12);
    }
  }
}

TEST_CASE("pools are deterministic in their seed") {
  const auto a = gen_threshold_pool(0.5, 0.05, 0.05, 2000, 77);
  const auto b = gen_threshold_pool(0.5, 0.05, 0.05, 2000, 77);
  const auto c = gen_threshold_pool(0.5, 0.05, 0.05, 2000, 78);
  CHECK(a.pool.fingerprint() == b.pool.fingerprint());
  CHECK(a.pool.fingerprint() != c.pool.fingerprint());
}

TEST_CASE("empirical stratum fractions track analytic weights") {
  const auto gp = gen_threshold_pool(0.5, 0.05, 0.05, 10000, 12);
  const std::vector<double> cuts{0.2, 0.5, 0.9};
  const auto scheme = analytic_scheme(UniformLaw{0.0, 1.0}, cuts);
  for (const auto& s : scheme.strata()) {
    const double frac = static_cast<double>(gp.pool.count_in(s)) / 10000.0;
    CHECK(std::abs(frac - s.weight) <= 3.0 * std::sqrt(s.weight * (1 - s.weight) / 10000.0));
  }
}

TEST_CASE("label oracle accounting") {
  const auto gp = gen_threshold_pool(0.5, 0.0, 0.0, 10, 1);
  LabelOracle o(gp.pool, 3);
  o.reveal(4);
  o.reveal(4);
  CHECK(o.spent() == 1);
  o.reveal(1);
  o.reveal(2);
  CHECK(o.spent() == 3);
  CHECK(o.remaining() == 0);
  CHECK_THROWS_AS(o.reveal(5), Error);
  o.reveal(1);  // memoized reveals stay free
  CHECK(o.reveal_order() == std::vector<PointId>{4, 1, 2});
}

TEST_CASE("sample_from_stratum") {
  const LabeledPool pool({0.1, 0.2, 0.6, 0.9}, {0, 0, 1, 1}, LabelAlphabet::binary());
  Rng rng(5);
  SUBCASE("whole space, fresh oracle") {
    LabelOracle o(pool, 4);
    const Stratum all{0, {{-INFINITY, INFINITY}}, 1.0};
    sample_from_stratum(o, all, rng);
    CHECK(o.spent() == 1);
  }
  SUBCASE("forced choice and exhaustion") {
    LabelOracle o(pool, 4);
    const Stratum right{0, {{0.5, INFINITY}}, 0.5};
    std::set<PointId> seen;
    seen.insert(sample_from_stratum(o, right, rng).point);
    const Draw last = sample_from_stratum(o, right, rng);
    seen.insert(last.point);
    CHECK(seen == std::set<PointId>{2, 3});
    try {
      sample_from_stratum(o, right, rng);
      FAIL("expected exhaustion");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::stratum_exhausted);
    }
  }
  SUBCASE("budget exhaustion") {
    LabelOracle o(pool, 1);
    const Stratum all{0, {{-INFINITY, INFINITY}}, 1.0};
    sample_from_stratum(o, all, rng);
    try {
      sample_from_stratum(o, all, rng);
      FAIL("expected budget exhaustion");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::budget_exhausted);
    }
  }
}

TEST_CASE("CSV pools") {
  SUBCASE("binary smoke") {
    const auto p = write_temp("bin.csv", "x,y\n0.1,0\n0.5,1\n0.9,1\n");
    const LabeledPool pool = load_csv_pool(p);
    CHECK(pool.size() == 3);
    CHECK(pool.alphabet().is_binary());
    CHECK_FALSE(pool.law());
  }
  SUBCASE("multiclass alphabet") {
    const auto p = write_temp("multi.csv", "score,grade\n0.1,0\n0.5,2\n0.9,1\n");
    CsvPoolOptions opts;
    opts.x_column = "score";
    opts.y_column = "grade";
    const LabeledPool pool = load_csv_pool(p, opts);
    CHECK(pool.alphabet().k() == 2);
  }
  SUBCASE("quoted fields, CRLF and BOM") {
    const auto p = write_temp("quoted.csv", "\xEF\xBB\xBF\"x\",\"y\"\r\n\"0.25\",1\r\n0.75,0\r\n");
    CHECK(load_csv_pool(p).size() == 2);
  }
  SUBCASE("non-numeric label names the row") {
    const auto p = write_temp("bad.csv", "x,y\n0.1,0\n0.2,yes\n");
    CHECK_THROWS_WITH_AS(load_csv_pool(p), doctest::Contains(":3"), Error);
  }
  SUBCASE("missing column") {
    const auto p = write_temp("nocol.csv", "a,b\n1,2\n");
    CHECK_THROWS_WITH_AS(load_csv_pool(p), doctest::Contains("'x'"), Error);
  }
  SUBCASE("alphabet overflow") {
    std::string body = "x,y\n";
    for (int i = 0; i < 40; ++i) body += std::to_string(i) + "," + std::to_string(i * 0.5 + 0.25) + "\n";
    const auto p = write_temp("overflow.csv", body);
    CHECK_THROWS_WITH_AS(load_csv_pool(p), doctest::Contains("overflow"), Error);
  }
  SUBCASE("tail filter keeps both tails") {
    std::string body = "x,y\n";
    for (int i = 0; i < 100; ++i) body += std::to_string(i) + "," + std::to_string(i % 2) + "\n";
    const auto p = write_temp("tails.csv", body);
    CsvPoolOptions opts;
    opts.tail_quantile = 0.05;
    const LabeledPool pool = load_csv_pool(p, opts);
    CHECK(pool.size() == 10);
    CHECK(pool.min_x() == 0.0);
    CHECK(pool.max_x() == 99.0);
    for (double x : pool.covariates()) CHECK((x <= 4.0 || x >= 95.0));
  }
}
