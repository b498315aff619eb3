#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "partibandits/core.hpp"
#include "partibandits/envs.hpp"
#include "partibandits/rng.hpp"
#include "partibandits/trace.hpp"

namespace pb {

/// Confidence width C_N(delta) exactly as the two-term formula, before the
/// floor at 1. Radicands that go negative (c2 <= delta) are clamped to zero.
double compute_cn_raw(double delta, double c1, double c2, std::size_t budget);
/// max(compute_cn_raw(...), 1).
double compute_cn(double delta, double c1, double c2, std::size_t budget);

/// max(1, (range/2)^2) for a bounded label alphabet; range = max - min.
double default_subgaussian_constant(const LabelAlphabet& alphabet);

struct UcbConstants {
  double c1 = 1.0;
  double c2 = 1.0;
  double delta = 0.1;
  std::size_t budget = 1;
  double cn = 1.0;

  static UcbConstants make(double delta, double c1, double c2, std::size_t budget);
};

struct WarmStartPlan {
  double tau = 0.5;
  std::size_t per_group_floor = 0;

  /// m = floor(tau * N / G).
  static WarmStartPlan make(double tau, std::size_t budget, std::size_t groups);
};

/// (sigma_hat + C_N / sqrt(n)) / n, or +inf while sigma_hat is undefined (n < 2).
double ucb_score(const GroupState& state, const UcbConstants& consts);

/// Index of the largest active score, lowest id on ties; -1 if none is active.
/// Infinite scores are ordered by fewer samples first.
int argmax_score(std::span<const double> scores, std::span<const std::size_t> counts,
                 const std::vector<bool>& active);

/// Warm phase: the active group with the fewest samples among those below the
/// floor (round-robin). Afterwards: argmax of ucb_score. Throws all_exhausted.
int select_group(std::span<const GroupState> states, const std::vector<bool>& active, const WarmStartPlan& plan,
                 const UcbConstants& consts);

struct WsUcbOptions {
  double delta = 0.1;
  double tau = 0.5;
  /// Sub-gaussian bounds; zero means derive from the pool's alphabet.
  double c1 = 0.0;
  double c2 = 0.0;
};

/// WarmStart-UCB over a fixed scheme for `budget` rounds.
SamplerRun run_warmstart_ucb(LabelOracle& oracle, const StratificationScheme& scheme, std::size_t budget,
                             const WsUcbOptions& options, Rng& rng);

}  // namespace pb
