#include "partibandits/ws_ucb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pb {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw Error(Errc::domain, message);
}

}  // namespace

double compute_cn_raw(double delta, double c1, double c2, std::size_t budget) {
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(c1 > 0.0 && std::isfinite(c1), "c1 must be > 0");
  require(c2 > 0.0 && std::isfinite(c2), "c2 must be > 0");
  require(budget >= 1, "label budget N must be >= 1");
  const double log2d = std::log(2.0 / delta);
  const double logc2d = std::log(c2 / delta);
  const double n = static_cast<double>(budget);
  const double leading = 2.0 * std::sqrt(std::max(0.0, 2.0 * c1 * log2d * logc2d));
  const double numer = 2.0 * std::sqrt(std::max(0.0, c1 * log2d * (1.0 + c2 + logc2d)));
  const double denom = (1.0 - delta) * std::sqrt(2.0 * log2d);
  return leading + numer / denom / (n * n);
}

double compute_cn(double delta, double c1, double c2, std::size_t budget) {
  return std::max(1.0, compute_cn_raw(delta, c1, c2, budget));
}

double default_subgaussian_constant(const LabelAlphabet& alphabet) {
  const double half_range = 0.5 * (alphabet.max() - alphabet.min());
  return std::max(1.0, half_range * half_range);
}

UcbConstants UcbConstants::make(double delta, double c1, double c2, std::size_t budget) {
  return UcbConstants{c1, c2, delta, budget, compute_cn(delta, c1, c2, budget)};
}

WarmStartPlan WarmStartPlan::make(double tau, std::size_t budget, std::size_t groups) {
  require(tau >= 0.0 && tau <= 1.0, "buffer fraction tau must lie in [0, 1]");
  require(groups >= 1, "scheme needs at least one group");
  const auto floor = static_cast<std::size_t>(std::floor(tau * static_cast<double>(budget) / static_cast<double>(groups)));
  return WarmStartPlan{tau, floor};
}

double ucb_score(const GroupState& state, const UcbConstants& consts) {
  if (state.count() < 2) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(state.count());
  return (state.weighted_std() + consts.cn / std::sqrt(n)) / n;
}

int argmax_score(std::span<const double> scores, std::span<const std::size_t> counts,
                 const std::vector<bool>& active) {
  int best = -1;
  for (std::size_t g = 0; g < scores.size(); ++g) {
    if (!active[g]) continue;
    if (best < 0) {
      best = static_cast<int>(g);
      continue;
    }
    const auto b = static_cast<std::size_t>(best);
    if (std::isinf(scores[g]) && std::isinf(scores[b])) {
      if (counts[g] < counts[b]) best = static_cast<int>(g);
    } else if (scores[g] > scores[b]) {
      best = static_cast<int>(g);
    }
  }
  return best;
}

int select_group(std::span<const GroupState> states, const std::vector<bool>& active, const WarmStartPlan& plan,
                 const UcbConstants& consts) {
  int warm = -1;
  for (std::size_t g = 0; g < states.size(); ++g) {
    if (!active[g] || states[g].count() >= plan.per_group_floor) continue;
    if (warm < 0 || states[g].count() < states[static_cast<std::size_t>(warm)].count()) warm = static_cast<int>(g);
  }
  if (warm >= 0) return warm;

  std::vector<double> scores(states.size());
  std::vector<std::size_t> counts(states.size());
  for (std::size_t g = 0; g < states.size(); ++g) {
    scores[g] = ucb_score(states[g], consts);
    counts[g] = states[g].count();
  }
  const int best = argmax_score(scores, counts, active);
  if (best < 0) throw Error(Errc::all_exhausted, "every stratum is exhausted");
  return best;
}

SamplerRun run_warmstart_ucb(LabelOracle& oracle, const StratificationScheme& scheme, std::size_t budget,
                             const WsUcbOptions& options, Rng& rng) {
  const std::size_t groups = scheme.size();
  if (budget < groups) {
    std::ostringstream os;
    os << "budget " << budget << " cannot cover " << groups << " strata with one label each";
    throw Error(Errc::infeasible_coverage, os.str());
  }
  const double sg = default_subgaussian_constant(oracle.pool().alphabet());
  const UcbConstants consts = UcbConstants::make(options.delta, options.c1 > 0.0 ? options.c1 : sg,
                                                 options.c2 > 0.0 ? options.c2 : sg, budget);
  const WarmStartPlan plan = WarmStartPlan::make(options.tau, budget, groups);

  StratumSampler sampler(oracle, scheme);
  std::vector<GroupState> states;
  std::vector<bool> active(groups, true);
  for (std::size_t g = 0; g < groups; ++g) {
    states.emplace_back(scheme[g].weight);
    if (sampler.exhausted(g)) {
      throw Error(Errc::infeasible_coverage,
                  "stratum " + std::to_string(g) + " has no unrevealed pool points to sample");
    }
  }

  SamplerRun run;
  run.trace.reserve(budget);
  for (std::size_t t = 0; t < budget; ++t) {
    TraceEntry entry;
    entry.round = t;
    // a lone active stratum involves no choice, so no scores are recorded
    if (std::count(active.begin(), active.end(), true) > 1) {
      entry.scores.reserve(groups);
      for (const auto& s : states) entry.scores.push_back(ucb_score(s, consts));
    }
    const int g = select_group(states, active, plan, consts);
    const auto gi = static_cast<std::size_t>(g);
    const Draw d = sampler.draw(oracle, gi, rng);
    states[gi].push(d.label);
    if (sampler.exhausted(gi)) active[gi] = false;
    entry.group = g;
    entry.point = d.point;
    entry.x = d.x;
    entry.label = d.label;
    run.trace.push_back(std::move(entry));
  }
  run.estimate = aggregate(states, budget);
  return run;
}

}  // namespace pb
