#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "partibandits/harness.hpp"

namespace pb {

/// A parsed config file. `has_seed` records whether the file set `seed`
/// explicitly, which decides whether PARTIBANDITS_SEED may fill it in.
struct ConfigDocument {
  ExperimentConfig config;
  bool has_seed = false;
};

/// Parses the TOML config schema described in the README. Errors are
/// Errc::config and name the offending key, e.g. "scenario[0].rho_le".
ConfigDocument parse_config(std::string_view text, std::string_view origin = "<config>");
ConfigDocument load_config(const std::filesystem::path& path);

struct Preset {
  std::string name;
  std::string provenance;
  std::string toml;
};

const std::vector<Preset>& presets();
const Preset& find_preset(std::string_view name);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::size_t>> budgets;
  std::optional<std::size_t> replications;
  std::optional<ErrorMetric> metric;
  std::optional<unsigned> parallelism;
};

/// Override wins; everything else stays as loaded. `env_seed` only applies
/// when neither the override nor the document set a seed.
ExperimentConfig compose(const ConfigDocument& doc, const Overrides& overrides,
                         std::optional<std::uint64_t> env_seed = std::nullopt);

/// "10,20,30" or "10:100:10" (inclusive range with step).
std::vector<std::size_t> parse_budget_list(std::string_view text);

}  // namespace pb
