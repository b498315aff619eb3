#include "partibandits/trace.hpp"

#include <cmath>
#include <ostream>

namespace pb {

std::vector<GroupState> replay_states(const SamplerTrace& trace, std::span<const double> weights) {
  std::vector<GroupState> states;
  states.reserve(weights.size());
  for (double w : weights) states.emplace_back(w);
  for (const auto& e : trace) {
    if (e.stage != Stage::stage2) continue;
    states.at(static_cast<std::size_t>(e.group)).push(e.label);
  }
  return states;
}

void write_trace(std::ostream& os, const SamplerTrace& trace) {
  const auto old_precision = os.precision(12);
  os << "stage,round,group,point,x,label,scores\n";
  for (const auto& e : trace) {
    os << (e.stage == Stage::stage1 ? "1" : "2") << ',' << e.round << ',' << e.group << ',' << e.point << ','
       << e.x << ',' << e.label << ',';
    for (std::size_t i = 0; i < e.scores.size(); ++i) {
      if (i) os << ' ';
      if (std::isinf(e.scores[i])) {
        os << "inf";
      } else {
        os << e.scores[i];
      }
    }
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace pb
