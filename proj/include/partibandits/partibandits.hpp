#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "partibandits/core.hpp"
#include "partibandits/envs.hpp"
#include "partibandits/rng.hpp"
#include "partibandits/stage1.hpp"
#include "partibandits/trace.hpp"
#include "partibandits/ws_ucb.hpp"

namespace pb {

struct PartiBanditsConfig {
  std::string subroutine = "a2-threshold";
  std::size_t budget = 100;
  double delta = 0.1;
  double tau = 0.5;
  /// Zero means derive from the label alphabet.
  double c1 = 0.0;
  double c2 = 0.0;
  /// Defaults to floor(N / 2).
  std::optional<std::size_t> stage1_budget;

  std::size_t stage1() const { return stage1_budget.value_or(budget / 2); }
  std::size_t stage2() const { return budget - stage1(); }
  /// Throws Errc::config naming the offending field.
  void validate() const;
};

struct PartiBanditsRun {
  MeanEstimate estimate;
  SubroutineResult stage1;
  /// Scheme handed to stage 2, after any coarsening.
  StratificationScheme scheme = StratificationScheme::whole_space();
  /// Stage-1 queries followed by stage-2 rounds.
  SamplerTrace trace;
  std::vector<std::string> log;
};

/// Merges the lightest stratum into an interval-adjacent neighbour.
StratificationScheme merge_lightest(const StratificationScheme& scheme);

/// Coarsens until the scheme has at most `max_groups` strata and every stratum
/// still has an unrevealed pool point. Appends one log line per merge.
StratificationScheme coarsen_for_stage2(const StratificationScheme& scheme, const LabelOracle& oracle,
                                        std::size_t max_groups, std::vector<std::string>* log = nullptr);

PartiBanditsRun run_partibandits(LabelOracle& oracle, const PartiBanditsConfig& config, Rng& rng);

/// Same, with the stage-1 learner supplied directly.
PartiBanditsRun run_partibandits(LabelOracle& oracle, const PartiBanditsConfig& config, const Subroutine& learner,
                                 Rng& rng);

}  // namespace pb
