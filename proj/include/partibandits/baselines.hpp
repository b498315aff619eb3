#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "partibandits/core.hpp"
#include "partibandits/envs.hpp"
#include "partibandits/rng.hpp"
#include "partibandits/trace.hpp"

namespace pb {

/// Simple random sample of N points without replacement; estimate is the sample mean.
SamplerRun run_srs(LabelOracle& oracle, std::size_t budget, Rng& rng);

/// Largest-remainder rounding of P_g * N (ties to the lower index), with every
/// group floored at one label.
std::vector<std::size_t> proportional_allocation(std::span<const double> weights, std::size_t budget);

/// Stratified random sampling with proportional allocation.
SamplerRun run_strs(LabelOracle& oracle, const StratificationScheme& scheme, std::size_t budget, Rng& rng);

enum class ThompsonMode { fixed_arms, binned_covariate };

struct ThompsonConfig {
  ThompsonMode mode = ThompsonMode::binned_covariate;
  /// Bins over [bin_lo, bin_hi) in binned mode; the outer bins extend to +-inf.
  std::size_t bins = 5;
  double bin_lo = 0.0;
  double bin_hi = 1.0;
  double prior_alpha = 1.0;
  double prior_beta = 1.0;

  void validate() const;
};

/// Equal-width bins over the configured range, weighted analytically when the
/// pool has a known covariate law and by pool fraction otherwise.
StratificationScheme thompson_bins(const ThompsonConfig& config, const LabeledPool& pool);

struct ThompsonRun {
  MeanEstimate estimate;
  SamplerTrace trace;
  std::vector<std::size_t> pulls;
};

/// Beta-Bernoulli Thompson sampling over covariate bins of a pool. The estimate
/// is sum_g P_g * (empirical mean of bin g), with unpulled bins falling back to
/// the prior mean. A single active bin is pulled without a posterior draw.
ThompsonRun run_thompson(LabelOracle& oracle, const ThompsonConfig& config, std::size_t budget, Rng& rng);

/// Bernoulli arms with known success probabilities.
struct ArmEnvironment {
  std::vector<double> success;

  double mean() const;
};

/// Fixed-arm variant: arms are weighted equally in the estimate.
ThompsonRun run_thompson(const ArmEnvironment& arms, const ThompsonConfig& config, std::size_t rounds, Rng& rng);

}  // namespace pb
