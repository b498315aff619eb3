#include "partibandits/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pb {

SamplerRun run_srs(LabelOracle& oracle, std::size_t budget, Rng& rng) {
  if (oracle.pool().size() < budget) {
    throw Error(Errc::infeasible_coverage, "pool has fewer points than the SRS budget");
  }
  const StratificationScheme whole = StratificationScheme::whole_space();
  StratumSampler sampler(oracle, whole);
  GroupState state(1.0);
  SamplerRun run;
  run.trace.reserve(budget);
  for (std::size_t t = 0; t < budget; ++t) {
    const Draw d = sampler.draw(oracle, 0, rng);
    state.push(d.label);
    run.trace.push_back(TraceEntry{Stage::stage2, t, 0, d.point, d.x, d.label, {}});
  }
  run.estimate = aggregate(std::span<const GroupState>(&state, 1), budget);
  return run;
}

std::vector<std::size_t> proportional_allocation(std::span<const double> weights, std::size_t budget) {
  const std::size_t groups = weights.size();
  if (groups == 0) throw Error(Errc::domain, "allocation needs at least one group");
  if (budget < groups) {
    throw Error(Errc::infeasible_coverage, "budget " + std::to_string(budget) + " cannot cover " +
                                               std::to_string(groups) + " strata with one label each");
  }
  const double n = static_cast<double>(budget);
  std::vector<std::size_t> alloc(groups);
  std::vector<double> remainder(groups);
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const double exact = weights[g] * n;
    alloc[g] = static_cast<std::size_t>(std::floor(exact));
    remainder[g] = exact - std::floor(exact);
    assigned += alloc[g];
  }
  std::vector<std::size_t> order(groups);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < budget; i = (i + 1) % groups) {
    ++alloc[order[i]];
    ++assigned;
  }
  while (assigned > budget) {
    // weights summing slightly above one; trim the most over-allocated group
    std::size_t worst = 0;
    for (std::size_t g = 1; g < groups; ++g) {
      if (alloc[g] - weights[g] * n > alloc[worst] - weights[worst] * n) worst = g;
    }
    --alloc[worst];
    --assigned;
  }
  for (std::size_t g = 0; g < groups; ++g) {
    if (alloc[g] > 0) continue;
    std::optional<std::size_t> donor;
    for (std::size_t h = 0; h < groups; ++h) {
      if (alloc[h] < 2) continue;
      const double surplus = static_cast<double>(alloc[h]) - weights[h] * n;
      if (!donor || surplus > static_cast<double>(alloc[*donor]) - weights[*donor] * n) donor = h;
    }
    --alloc[*donor];
    alloc[g] = 1;
  }
  return alloc;
}

SamplerRun run_strs(LabelOracle& oracle, const StratificationScheme& scheme, std::size_t budget, Rng& rng) {
  const auto weights = scheme.weights();
  const auto alloc = proportional_allocation(weights, budget);
  StratumSampler sampler(oracle, scheme);
  std::vector<GroupState> states;
  for (double w : weights) states.emplace_back(w);
  SamplerRun run;
  run.trace.reserve(budget);
  std::size_t round = 0;
  for (std::size_t g = 0; g < scheme.size(); ++g) {
    for (std::size_t k = 0; k < alloc[g]; ++k) {
      const Draw d = sampler.draw(oracle, g, rng);
      states[g].push(d.label);
      run.trace.push_back(TraceEntry{Stage::stage2, round++, static_cast<int>(g), d.point, d.x, d.label, {}});
    }
  }
  run.estimate = aggregate(states, budget);
  return run;
}

// ---------------------------------------------------------------------------

void ThompsonConfig::validate() const {
  if (bins < 1) throw Error(Errc::config, "bins: need at least one arm");
  if (!(prior_alpha > 0.0) || !(prior_beta > 0.0)) throw Error(Errc::config, "prior: alpha and beta must be > 0");
  if (mode == ThompsonMode::binned_covariate && !(bin_lo < bin_hi)) {
    throw Error(Errc::config, "bin range: lower edge must be below the upper edge");
  }
}

StratificationScheme thompson_bins(const ThompsonConfig& config, const LabeledPool& pool) {
  std::vector<double> cuts;
  const double width = (config.bin_hi - config.bin_lo) / static_cast<double>(config.bins);
  for (std::size_t i = 1; i < config.bins; ++i) cuts.push_back(config.bin_lo + width * static_cast<double>(i));
  if (pool.law()) return analytic_scheme(*pool.law(), cuts);

  std::vector<double> weights(cuts.size() + 1, 0.0);
  for (double x : pool.covariates()) {
    const auto it = std::upper_bound(cuts.begin(), cuts.end(), x);
    weights[static_cast<std::size_t>(it - cuts.begin())] += 1.0;
  }
  for (double& w : weights) w /= static_cast<double>(pool.size());
  return StratificationScheme::from_cuts(cuts, weights);
}

namespace {

struct Posterior {
  double alpha;
  double beta;
};

int choose_arm(std::vector<Posterior>& post, const std::vector<bool>& active, Rng& rng, std::vector<double>& draws) {
  const auto live = std::count(active.begin(), active.end(), true);
  draws.assign(post.size(), -std::numeric_limits<double>::infinity());
  if (live == 0) throw Error(Errc::all_exhausted, "every arm is exhausted");
  if (live == 1) {
    draws.clear();
    return static_cast<int>(std::find(active.begin(), active.end(), true) - active.begin());
  }
  int best = -1;
  for (std::size_t a = 0; a < post.size(); ++a) {
    if (!active[a]) continue;
    draws[a] = rng.beta(post[a].alpha, post[a].beta);
    if (best < 0 || draws[a] > draws[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
  }
  return best;
}

MeanEstimate bandit_estimate(const std::vector<GroupState>& states, double prior_mean, std::size_t spent) {
  MeanEstimate est;
  est.labels_spent = spent;
  for (std::size_t g = 0; g < states.size(); ++g) {
    const double m = states[g].count() > 0 ? states[g].weighted_mean() : states[g].weight() * prior_mean;
    est.per_group.push_back({static_cast<int>(g), states[g].count(), m});
    est.value += m;
  }
  return est;
}

}  // namespace

ThompsonRun run_thompson(LabelOracle& oracle, const ThompsonConfig& config, std::size_t budget, Rng& rng) {
  config.validate();
  if (!oracle.pool().alphabet().is_binary()) {
    throw Error(Errc::unsupported_label, "Thompson sampling needs binary {0, 1} labels");
  }
  const StratificationScheme scheme = thompson_bins(config, oracle.pool());
  StratumSampler sampler(oracle, scheme);
  const std::size_t arms = scheme.size();
  std::vector<Posterior> post(arms, Posterior{config.prior_alpha, config.prior_beta});
  std::vector<GroupState> states;
  std::vector<bool> active(arms);
  for (std::size_t g = 0; g < arms; ++g) {
    states.emplace_back(scheme[g].weight);
    active[g] = !sampler.exhausted(g);
  }
  ThompsonRun run;
  run.pulls.assign(arms, 0);
  std::vector<double> draws;
  for (std::size_t t = 0; t < budget; ++t) {
    const int g = choose_arm(post, active, rng, draws);
    const auto gi = static_cast<std::size_t>(g);
    const Draw d = sampler.draw(oracle, gi, rng);
    states[gi].push(d.label);
    post[gi].alpha += d.label;
    post[gi].beta += 1.0 - d.label;
    ++run.pulls[gi];
    if (sampler.exhausted(gi)) active[gi] = false;
    run.trace.push_back(TraceEntry{Stage::stage2, t, g, d.point, d.x, d.label, draws});
  }
  const double prior_mean = config.prior_alpha / (config.prior_alpha + config.prior_beta);
  run.estimate = bandit_estimate(states, prior_mean, budget);
  return run;
}

double ArmEnvironment::mean() const {
  if (success.empty()) throw Error(Errc::domain, "arm environment has no arms");
  return std::accumulate(success.begin(), success.end(), 0.0) / static_cast<double>(success.size());
}

ThompsonRun run_thompson(const ArmEnvironment& env, const ThompsonConfig& config, std::size_t rounds, Rng& rng) {
  config.validate();
  const std::size_t arms = env.success.size();
  if (arms == 0) throw Error(Errc::domain, "arm environment has no arms");
  for (double p : env.success) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::domain, "arm success probabilities must lie in [0, 1]");
  }
  std::vector<Posterior> post(arms, Posterior{config.prior_alpha, config.prior_beta});
  std::vector<GroupState> states(arms, GroupState(1.0 / static_cast<double>(arms)));
  const std::vector<bool> active(arms, true);
  ThompsonRun run;
  run.pulls.assign(arms, 0);
  std::vector<double> draws;
  for (std::size_t t = 0; t < rounds; ++t) {
    const int a = choose_arm(post, active, rng, draws);
    const auto ai = static_cast<std::size_t>(a);
    const double reward = rng.bernoulli(env.success[ai]) ? 1.0 : 0.0;
    states[ai].push(reward);
    post[ai].alpha += reward;
    post[ai].beta += 1.0 - reward;
    ++run.pulls[ai];
    run.trace.push_back(TraceEntry{Stage::stage2, t, a, 0, 0.0, reward, draws});
  }
  const double prior_mean = config.prior_alpha / (config.prior_alpha + config.prior_beta);
  run.estimate = bandit_estimate(states, prior_mean, rounds);
  return run;
}

}  // namespace pb
