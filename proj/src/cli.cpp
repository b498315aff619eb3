#include "partibandits/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "partibandits/config.hpp"
#include "partibandits/harness.hpp"
#include "partibandits/trace.hpp"

namespace pb {

namespace {

struct SourceFlags {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string budgets;
  std::optional<std::size_t> reps;
  std::string metric;
  std::optional<unsigned> parallelism;
};

void add_source_flags(CLI::App* cmd, SourceFlags& f) {
  auto* preset = cmd->add_option("--preset", f.preset, "built-in preset name");
  auto* config = cmd->add_option("--config", f.config, "TOML config file");
  preset->excludes(config);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--budgets", f.budgets, "budget grid, e.g. 10,20,30 or 10:100:10");
  cmd->add_option("--reps", f.reps, "replications per (algorithm, budget)");
  cmd->add_option("--metric", f.metric, "squared or absolute")->check(CLI::IsMember({"squared", "absolute"}));
  cmd->add_option("--parallelism", f.parallelism, "worker threads")->check(CLI::PositiveNumber);
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("PARTIBANDITS_SEED");
  if (!raw || !*raw) return std::nullopt;
  const std::string_view s(raw);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error(Errc::config, "PARTIBANDITS_SEED: not an unsigned integer: '" + std::string(s) + "'");
  }
  return v;
}

ExperimentConfig effective_config(const SourceFlags& f, const char* fallback_preset) {
  ConfigDocument doc;
  if (!f.config.empty()) {
    doc = load_config(f.config);
  } else if (!f.preset.empty()) {
    const Preset& p = find_preset(f.preset);
    doc = parse_config(p.toml, "preset " + p.name);
  } else if (fallback_preset) {
    const Preset& p = find_preset(fallback_preset);
    doc = parse_config(p.toml, "preset " + p.name);
  } else {
    throw Error(Errc::config, "exactly one of --preset or --config is required");
  }
  Overrides o;
  o.seed = f.seed;
  if (!f.budgets.empty()) o.budgets = parse_budget_list(f.budgets);
  o.replications = f.reps;
  if (!f.metric.empty()) o.metric = parse_metric(f.metric);
  o.parallelism = f.parallelism;
  return compose(doc, o, env_seed());
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active-learning mean estimation simulator"};
  app.name("partibandits");
  app.require_subcommand(1);

  SourceFlags run_flags;
  std::string out_path = "results.csv";
  std::string plot_dir;
  auto* run = app.add_subcommand("run", "run an experiment and write the result CSV");
  add_source_flags(run, run_flags);
  run->add_option("--out", out_path, "output CSV path");
  run->add_option("--plot", plot_dir, "write SVG charts into this directory");

  std::string show;
  auto* list = app.add_subcommand("presets", "list built-in presets or print one");
  list->add_option("--show", show, "print the TOML of a preset");

  SourceFlags validate_flags;
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  add_source_flags(validate, validate_flags);

  SourceFlags replay_flags;
  std::string algo;
  std::string scenario;
  std::size_t budget = 0;
  std::size_t rep = 0;
  auto* replay_cmd = app.add_subcommand("replay", "re-run one replication and print its trace");
  add_source_flags(replay_cmd, replay_flags);
  replay_cmd->add_option("--algo", algo, "algorithm name from the roster")->required();
  replay_cmd->add_option("--budget", budget, "label budget")->required()->check(CLI::PositiveNumber);
  replay_cmd->add_option("--rep", rep, "replication index")->required();
  replay_cmd->add_option("--scenario", scenario, "scenario name (default: the first)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return exit_ok;
    }
    err << "error: " << e.what() << "\n";
    return exit_config;
  }

  try {
    if (*list) {
      if (!show.empty()) {
        out << find_preset(show).toml;
        return exit_ok;
      }
      for (const auto& p : presets()) out << p.name << "\t" << p.provenance << "\n";
      return exit_ok;
    }

    if (*validate) {
      const ExperimentConfig config = effective_config(validate_flags, nullptr);
      for (const auto& w : config.validate()) err << "warning: " << w << "\n";
      out << "ok: " << config.scenarios.size() << " scenario(s), " << config.roster.size() << " algorithm(s), "
          << config.budgets.size() << " budget(s), " << config.replications << " replication(s), seed "
          << config.seed << "\n";
      return exit_ok;
    }

    if (*run) {
      const ExperimentConfig config = effective_config(run_flags, nullptr);
      for (const auto& w : config.validate()) err << "warning: " << w << "\n";
      const ResultTable table = run_experiment(config);
      emit_csv(table, out_path);
      if (!plot_dir.empty()) {
        for (const auto& p : emit_plots(table, plot_dir)) err << "wrote " << p.string() << "\n";
      }
      err << "wrote " << table.rows.size() << " rows to " << out_path << "\n";
      return exit_ok;
    }

    if (*replay_cmd) {
      const ExperimentConfig config = effective_config(replay_flags, "quickstart");
      config.validate();
      std::size_t s = 0;
      if (!scenario.empty()) {
        while (s < config.scenarios.size() && config.scenarios[s].name != scenario) ++s;
        if (s == config.scenarios.size()) throw Error(Errc::config, "--scenario: no scenario named '" + scenario + "'");
      }
      std::size_t a = 0;
      while (a < config.roster.size() && config.roster[a].name != algo) ++a;
      if (a == config.roster.size()) throw Error(Errc::config, "--algo: no algorithm named '" + algo + "' in the roster");
      if (rep >= config.replications) {
        err << "note: replication " << rep << " lies beyond the configured " << config.replications << "\n";
      }
      const RunOutcome outcome = replay(config, s, a, budget, rep);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "# estimate=%.12g truth=%.12g labels=%zu seed=%llu\n", outcome.estimate.value,
                    outcome.truth, outcome.estimate.labels_spent, static_cast<unsigned long long>(config.seed));
      out << buf;
      write_trace(out, outcome.trace);
      return exit_ok;
    }
  } catch (const ReplicationFailure& e) {
    err << "error: " << e.what() << "\n";
    err << "replay with: replay --seed " << e.seed << " --scenario " << e.scenario << " --algo " << e.algorithm
        << " --budget " << e.budget << " --rep " << e.replication << "\n";
    return exit_runtime;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::config ? exit_config : exit_runtime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  return exit_config;
}

}  // namespace pb
