#include "doctest.h"
#include "partibandits/cli.hpp"
#include "partibandits/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace pb;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "partibandits");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("pb_cli_" + name);
  std::ofstream(path, std::ios::binary) << body;
  return path.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("every preset parses and validates") {
  for (const auto& p : presets()) {
    CAPTURE(p.name);
    const ConfigDocument doc = parse_config(p.toml, p.name);
    CHECK_FALSE(doc.has_seed);
    if (p.name != "csv-tails") CHECK_NOTHROW(doc.config.validate());
  }
  const auto right = parse_config(find_preset("fig1-right").toml).config;
  CHECK(right.budgets.front() == 50);
  CHECK(right.budgets.back() == 200);
  CHECK(right.replications == 500);
  CHECK(right.percentile == 0.9);
  const auto left = parse_config(find_preset("fig1-left").toml).config;
  CHECK(left.budgets.front() == 10);
  CHECK(left.budgets.back() == 100);
  CHECK(left.scenarios.size() == 6);
  CHECK_THROWS_AS(find_preset("nope"), Error);
}

TEST_CASE("config errors name the key") {
  CHECK_THROWS_WITH_AS(parse_config("replications = 0\n"), doctest::Contains("replications"), Error);
  CHECK_THROWS_WITH_AS(parse_config("bogus = 1\n"), doctest::Contains("bogus"), Error);
  CHECK_THROWS_WITH_AS(parse_config("[[scenario]]\nrho_le = -0.1\n"), doctest::Contains("scenario[0].rho_le"), Error);
  CHECK_THROWS_WITH_AS(parse_config("[[algorithm]]\nkind = \"ucb1\"\n"), doctest::Contains("algorithm[0].kind"),
                       Error);
  CHECK_THROWS_WITH_AS(parse_config("metric = \"cubic\"\n"), doctest::Contains("metric"), Error);
  CHECK_THROWS_WITH_AS(parse_config("budgets = [1, \"x\"]\n"), doctest::Contains("budgets"), Error);
  CHECK_THROWS_AS(parse_config("this is not toml"), Error);
}

TEST_CASE("budget lists") {
  CHECK(parse_budget_list("10,20,30") == std::vector<std::size_t>{10, 20, 30});
  CHECK(parse_budget_list("10:30:10") == std::vector<std::size_t>{10, 20, 30});
  CHECK(parse_budget_list("5:7") == std::vector<std::size_t>{5, 6, 7});
  CHECK_THROWS_AS(parse_budget_list("10,,20"), Error);
  CHECK_THROWS_AS(parse_budget_list("0"), Error);
}

TEST_CASE("overrides compose with the loaded document") {
  ConfigDocument doc = parse_config(find_preset("fig1-right").toml);
  Overrides o;
  o.replications = 7;
  o.budgets = std::vector<std::size_t>{60};
  ExperimentConfig c = compose(doc, o, std::nullopt);
  CHECK(c.replications == 7);
  CHECK(c.budgets == std::vector<std::size_t>{60});
  CHECK(c.roster.size() == 4);
  CHECK(c.seed == 1);

  CHECK(compose(doc, {}, 42).seed == 42);
  o.seed = 9;
  CHECK(compose(doc, o, 42).seed == 9);
  doc.has_seed = true;
  doc.config.seed = 3;
  CHECK(compose(doc, {}, 42).seed == 3);
}

TEST_CASE("cli: presets") {
  const Result list = cli({"presets"});
  CHECK(list.code == 0);
  CHECK(list.out.find("fig1-left") != std::string::npos);
  CHECK(list.out.find("thompson-proto") != std::string::npos);
  const Result show = cli({"presets", "--show", "fig1-right"});
  CHECK(show.code == 0);
  CHECK(show.out == find_preset("fig1-right").toml);
}

TEST_CASE("cli: validate") {
  const std::string bad = temp_file("bad.toml", "[[scenario]]\ndgp = \"threshold\"\nrho = -0.1\n");
  const Result r = cli({"validate", "--config", bad});
  CHECK(r.code == 2);
  CHECK(r.err.find("rho") != std::string::npos);

  CHECK(cli({"validate", "--preset", "fig1-left"}).code == 0);
  CHECK(cli({"validate", "--preset", "fig1-left", "--budgets", "20,10"}).code == 2);
  CHECK(cli({"validate"}).code == 2);
  CHECK(cli({"validate", "--preset", "fig1-left", "--config", bad}).code == 2);
}

TEST_CASE("cli: unknown flags and subcommands") {
  CHECK(cli({"run", "--preset", "fig1-right", "--frobnicate"}).code == 2);
  CHECK(cli({"explode"}).code == 2);
  CHECK(cli({"run", "--preset", "fig1-right", "--metric", "cubic"}).code == 2);
}

TEST_CASE("cli: run writes the CSV and honours overrides") {
  const auto out = (std::filesystem::temp_directory_path() / "pb_cli_run.csv").string();
  const Result r = cli({"run", "--preset", "fig1-right", "--out", out, "--reps", "5", "--budgets", "50:200:50",
                        "--seed", "3", "--metric", "squared"});
  CHECK(r.code == 0);
  const std::string body = slurp(out);
  CHECK(body.rfind("algorithm,budget,percentile_error,mean_error,sem,replications,seed\n", 0) == 0);
  CHECK(body.find("srs,50,") != std::string::npos);
  CHECK(body.find("ws-ucb@0.5,200,") != std::string::npos);
  CHECK(std::count(body.begin(), body.end(), '\n') == 1 + 4 * 4);
  CHECK(body.find(",5,3\n") != std::string::npos);
}

TEST_CASE("cli: runtime failures exit 3 with replay coordinates") {
  const std::string cfg = temp_file("fail.toml",
                                    "budgets = [3]\nreplications = 2\n[[scenario]]\nname = \"t\"\n"
                                    "[[algorithm]]\nname = \"fine\"\nkind = \"strs\"\nsplits = [0.2, 0.4, 0.6, 0.8]\n");
  const Result r = cli({"run", "--config", cfg, "--out", temp_file("fail.csv", "")});
  CHECK(r.code == 3);
  CHECK(r.err.find("replay --seed 1 --scenario t --algo fine --budget 3 --rep 0") != std::string::npos);
}

TEST_CASE("cli: replay is deterministic") {
  const Result a = cli({"replay", "--seed", "7", "--algo", "partibandits", "--budget", "100", "--rep", "42"});
  const Result b = cli({"replay", "--seed", "7", "--algo", "partibandits", "--budget", "100", "--rep", "42"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("stage,round,group,point,x,label,scores") != std::string::npos);
  const Result c = cli({"replay", "--seed", "8", "--algo", "partibandits", "--budget", "100", "--rep", "42"});
  CHECK(c.out != a.out);
  CHECK(cli({"replay", "--algo", "nope", "--budget", "10", "--rep", "0"}).code == 2);
}

TEST_CASE("cli: PARTIBANDITS_SEED fills in a missing seed") {
  ::setenv("PARTIBANDITS_SEED", "11", 1);
  CHECK(cli({"validate", "--preset", "fig1-right"}).out.find("seed 11") != std::string::npos);
  CHECK(cli({"validate", "--preset", "fig1-right", "--seed", "4"}).out.find("seed 4") != std::string::npos);
  ::setenv("PARTIBANDITS_SEED", "eleven", 1);
  CHECK(cli({"validate", "--preset", "fig1-right"}).code == 2);
  ::unsetenv("PARTIBANDITS_SEED");
}
