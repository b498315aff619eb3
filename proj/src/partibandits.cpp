#include "partibandits/partibandits.hpp"

#include <algorithm>
#include <sstream>

namespace pb {

void PartiBanditsConfig::validate() const {
  if (budget < 2) throw Error(Errc::config, "budget: PartiBandits needs N >= 2 to give both stages a label");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::config, "delta: must lie in (0, 1)");
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(Errc::config, "tau: must lie in [0, 1]");
  if (c1 < 0.0 || c2 < 0.0) throw Error(Errc::config, "c1/c2: sub-gaussian bounds must be positive");
  if (stage1() < 1 || stage1() >= budget) {
    throw Error(Errc::config, "stage1_budget: both stages need at least one label");
  }
}

namespace {

bool adjacent(const Stratum& a, const Stratum& b) {
  for (const auto& x : a.membership) {
    for (const auto& y : b.membership) {
      if (x.hi == y.lo || y.hi == x.lo) return true;
    }
  }
  return false;
}

std::vector<Interval> coalesce(std::vector<Interval> ivs) {
  std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  for (const auto& iv : ivs) {
    if (!out.empty() && out.back().hi == iv.lo) {
      out.back().hi = iv.hi;
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

}  // namespace

StratificationScheme merge_lightest(const StratificationScheme& scheme) {
  const std::size_t g = scheme.size();
  if (g < 2) return scheme;
  std::size_t light = 0;
  for (std::size_t i = 1; i < g; ++i) {
    if (scheme[i].weight < scheme[light].weight) light = i;
  }
  std::optional<std::size_t> partner;
  for (std::size_t i = 0; i < g; ++i) {
    if (i == light || !adjacent(scheme[light], scheme[i])) continue;
    if (!partner || scheme[i].weight < scheme[*partner].weight) partner = i;
  }
  if (!partner) partner = light == 0 ? 1 : 0;

  const std::size_t keep = std::min(light, *partner);
  const std::size_t drop = std::max(light, *partner);
  std::vector<StratificationScheme::Part> parts;
  for (std::size_t i = 0; i < g; ++i) {
    if (i == drop) continue;
    StratificationScheme::Part part{scheme[i].membership, scheme[i].weight};
    if (i == keep) {
      part.membership.insert(part.membership.end(), scheme[drop].membership.begin(), scheme[drop].membership.end());
      part.membership = coalesce(std::move(part.membership));
      part.weight += scheme[drop].weight;
    }
    parts.push_back(std::move(part));
  }
  return StratificationScheme(std::move(parts), scheme.provenance());
}

StratificationScheme coarsen_for_stage2(const StratificationScheme& scheme, const LabelOracle& oracle,
                                        std::size_t max_groups, std::vector<std::string>* log) {
  StratificationScheme current = scheme;
  auto starved = [&](const StratificationScheme& s) {
    StratumSampler probe(oracle, s);
    for (std::size_t g = 0; g < s.size(); ++g) {
      if (probe.exhausted(g)) return true;
    }
    return false;
  };
  while (current.size() > 1 && (current.size() > max_groups || starved(current))) {
    const std::size_t before = current.size();
    current = merge_lightest(current);
    if (log) {
      std::ostringstream os;
      os << "coarsened stage-2 scheme from " << before << " to " << current.size() << " strata";
      log->push_back(os.str());
    }
  }
  return current;
}

PartiBanditsRun run_partibandits(LabelOracle& oracle, const PartiBanditsConfig& config, Rng& rng) {
  return run_partibandits(oracle, config, plugin_subroutine(config.subroutine), rng);
}

PartiBanditsRun run_partibandits(LabelOracle& oracle, const PartiBanditsConfig& config, const Subroutine& learner,
                                 Rng& rng) {
  config.validate();
  if (oracle.remaining() < config.budget) {
    throw Error(Errc::budget_exhausted, "oracle budget is smaller than the PartiBandits budget");
  }
  PartiBanditsRun run;
  const std::size_t stage1_budget = config.stage1();
  const std::size_t before = oracle.spent();
  run.stage1 = learner(oracle, stage1_budget, config.delta, rng);
  const std::size_t stage1_spent = oracle.spent() - before;
  if (stage1_spent > stage1_budget) {
    throw Error(Errc::budget_exhausted, "stage-1 subroutine overspent its budget");
  }
  run.stage1.labels_spent = stage1_spent;

  const std::size_t stage2_budget = config.stage2();
  StratificationScheme learned = induced_partition(run.stage1.classifier, oracle.pool());
  run.scheme = coarsen_for_stage2(learned, oracle, stage2_budget, &run.log);

  WsUcbOptions ws{config.delta, config.tau, config.c1, config.c2};
  SamplerRun stage2 = run_warmstart_ucb(oracle, run.scheme, stage2_budget, ws, rng);

  run.trace = run.stage1.trace;
  run.trace.insert(run.trace.end(), stage2.trace.begin(), stage2.trace.end());
  run.estimate = std::move(stage2.estimate);
  run.estimate.labels_spent = stage1_spent + stage2_budget;
  return run;
}

}  // namespace pb
