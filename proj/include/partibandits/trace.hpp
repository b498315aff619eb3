#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "partibandits/core.hpp"

namespace pb {

enum class Stage { stage1, stage2 };

/// One label request: which group was pulled, which point came back, and the
/// selection scores that were in force for that round (empty when the policy
/// does not score groups).
struct TraceEntry {
  Stage stage = Stage::stage2;
  std::size_t round = 0;
  int group = 0;
  PointId point = 0;
  double x = 0.0;
  double label = 0.0;
  std::vector<double> scores;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

using SamplerTrace = std::vector<TraceEntry>;

struct SamplerRun {
  MeanEstimate estimate;
  SamplerTrace trace;
};

/// Rebuilds per-group running state by replaying the stage-2 rows of a trace.
std::vector<GroupState> replay_states(const SamplerTrace& trace, std::span<const double> weights);

void write_trace(std::ostream& os, const SamplerTrace& trace);

}  // namespace pb
