#include "partibandits/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pb {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::undefined_estimate: return "undefined-estimate";
    case Errc::incomplete_coverage: return "incomplete-coverage";
    case Errc::domain: return "domain";
    case Errc::empty_pool: return "empty-pool";
    case Errc::parse: return "parse";
    case Errc::budget_exhausted: return "budget-exhausted";
    case Errc::stratum_exhausted: return "stratum-exhausted";
    case Errc::all_exhausted: return "all-exhausted";
    case Errc::infeasible_coverage: return "infeasible-coverage";
    case Errc::unsupported_label: return "unsupported-label";
    case Errc::registry: return "registry";
    case Errc::not_implemented: return "not-implemented";
    case Errc::invalid_scheme: return "invalid-scheme";
    case Errc::config: return "config";
    case Errc::io: return "io";
  }
  return "unknown";
}

LabelAlphabet::LabelAlphabet(std::vector<double> values) : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end());
  values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
  if (values_.size() < 2) {
    throw Error(Errc::domain, "label alphabet needs at least two distinct values");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(Errc::domain, "label alphabet values must be finite");
  }
}

LabelAlphabet LabelAlphabet::classes(int k) {
  if (k < 1) throw Error(Errc::domain, "class count k must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(k) + 1);
  std::iota(v.begin(), v.end(), 0.0);
  return LabelAlphabet(std::move(v));
}

bool LabelAlphabet::contains(double y) const {
  return std::binary_search(values_.begin(), values_.end(), y);
}

bool LabelAlphabet::is_binary() const {
  return values_.size() == 2 && values_[0] == 0.0 && values_[1] == 1.0;
}

bool Stratum::contains(double x) const {
  return std::any_of(membership.begin(), membership.end(),
                     [x](const Interval& iv) { return iv.contains(x); });
}

StratificationScheme::StratificationScheme(std::vector<Part> parts, Provenance provenance)
    : provenance_(provenance) {
  double total = 0.0;
  struct Tagged {
    Interval iv;
    std::size_t part;
  };
  std::vector<Tagged> all;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double w = parts[i].weight;
    if (!(w >= 0.0 && w <= 1.0 + 1e-12)) {
      std::ostringstream os;
      os << "stratum weight " << w << " outside [0, 1]";
      throw Error(Errc::invalid_scheme, os.str());
    }
    total += w;
    for (const auto& iv : parts[i].membership) {
      if (!iv.empty()) all.push_back({iv, i});
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream os;
    os.precision(15);
    os << "stratum weights sum to " << total << ", expected 1";
    throw Error(Errc::invalid_scheme, os.str());
  }
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.iv.lo < b.iv.lo; });
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].iv.lo < all[i - 1].iv.hi) {
      std::ostringstream os;
      os << "strata overlap at [" << all[i].iv.lo << ", " << all[i - 1].iv.hi << ")";
      throw Error(Errc::invalid_scheme, os.str());
    }
  }
  for (auto& part : parts) {
    if (part.weight <= 0.0) continue;
    Stratum s;
    s.id = static_cast<int>(strata_.size());
    s.weight = part.weight;
    for (const auto& iv : part.membership) {
      if (!iv.empty()) s.membership.push_back(iv);
    }
    std::sort(s.membership.begin(), s.membership.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    strata_.push_back(std::move(s));
  }
  if (strata_.empty()) throw Error(Errc::invalid_scheme, "scheme has no strata");
}

StratificationScheme StratificationScheme::whole_space() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return StratificationScheme({Part{{Interval{-inf, inf}}, 1.0}}, Provenance::a_priori);
}

StratificationScheme StratificationScheme::from_cuts(std::span<const double> cuts, std::span<const double> weights,
                                                     Provenance provenance) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (weights.size() != cuts.size() + 1) {
    throw Error(Errc::invalid_scheme, "need one weight per piece (cuts + 1)");
  }
  if (!std::is_sorted(cuts.begin(), cuts.end())) {
    throw Error(Errc::invalid_scheme, "cut points must be sorted");
  }
  std::vector<Part> parts;
  double lo = -inf;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    const double hi = i < cuts.size() ? cuts[i] : inf;
    parts.push_back(Part{{Interval{lo, hi}}, weights[i]});
    lo = hi;
  }
  return StratificationScheme(std::move(parts), provenance);
}

std::vector<double> StratificationScheme::weights() const {
  std::vector<double> w;
  w.reserve(strata_.size());
  for (const auto& s : strata_) w.push_back(s.weight);
  return w;
}

int StratificationScheme::locate(double x) const {
  for (const auto& s : strata_) {
    if (s.contains(x)) return s.id;
  }
  return -1;
}

void GroupState::push(double label) {
  const double v = weight_ * label;
  ++n_;
  sum_ += v;
  sum_sq_ += v * v;
}

double GroupState::weighted_mean() const {
  if (n_ == 0) throw Error(Errc::undefined_estimate, "weighted mean undefined for an empty group");
  return sum_ / static_cast<double>(n_);
}

double GroupState::weighted_std() const {
  if (n_ < 2) throw Error(Errc::undefined_estimate, "weighted std needs at least two samples");
  const double n = static_cast<double>(n_);
  const double mean = sum_ / n;
  // clamp tiny negative residue from cancellation
  const double ss = std::max(0.0, sum_sq_ - n * mean * mean);
  return std::sqrt(ss / (n - 1.0));
}

double weighted_group_mean(std::span<const double> labels, double weight) {
  if (labels.empty()) throw Error(Errc::undefined_estimate, "weighted mean of an empty sequence");
  if (!(weight > 0.0 && weight <= 1.0)) throw Error(Errc::domain, "stratum weight must lie in (0, 1]");
  GroupState s(weight);
  for (double y : labels) s.push(y);
  return s.weighted_mean();
}

double aggregate_mean(std::span<const double> group_means) {
  double total = 0.0;
  for (double m : group_means) total += m;
  return total;
}

MeanEstimate aggregate(std::span<const GroupState> states, std::size_t labels_spent) {
  MeanEstimate est;
  est.labels_spent = labels_spent;
  std::vector<double> means;
  for (std::size_t g = 0; g < states.size(); ++g) {
    if (states[g].count() == 0) {
      throw Error(Errc::incomplete_coverage,
                  "stratum " + std::to_string(g) + " received no labels; aggregate would be biased");
    }
    means.push_back(states[g].weighted_mean());
    est.per_group.push_back({static_cast<int>(g), states[g].count(), means.back()});
  }
  est.value = aggregate_mean(means);
  return est;
}

double sigma1(const StratificationScheme& scheme, std::span<const double> cond_vars) {
  if (cond_vars.size() != scheme.size()) {
    throw Error(Errc::domain, "conditional variances must align with the scheme's strata");
  }
  double total = 0.0;
  for (std::size_t g = 0; g < scheme.size(); ++g) {
    if (cond_vars[g] < 0.0) throw Error(Errc::domain, "negative conditional variance");
    total += cond_vars[g] * scheme[g].weight;
  }
  return total;
}

}  // namespace pb
