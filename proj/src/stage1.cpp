#include "partibandits/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace pb {

Classifier::Classifier(ClassifierKind kind, std::vector<double> cuts, std::vector<double> values,
                       std::optional<double> threshold)
    : kind_(kind), cuts_(std::move(cuts)), values_(std::move(values)), threshold_(threshold) {
  if (values_.size() != cuts_.size() + 1) throw Error(Errc::domain, "classifier needs one value per piece");
  if (!std::is_sorted(cuts_.begin(), cuts_.end())) throw Error(Errc::domain, "classifier cuts must be sorted");
}

Classifier Classifier::constant(double value) { return Classifier(ClassifierKind::constant, {}, {value}); }

Classifier Classifier::threshold(double t) { return Classifier(ClassifierKind::threshold, {t}, {0.0, 1.0}, t); }

double Classifier::operator()(double x) const {
  const auto it = std::upper_bound(cuts_.begin(), cuts_.end(), x);
  return values_[static_cast<std::size_t>(it - cuts_.begin())];
}

std::vector<double> Classifier::image() const {
  std::vector<double> out = values_;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Labeled {
  double x;
  double y;
};

struct CellScan {
  /// Surviving cell indices; cell i places the threshold between xs[i-1] and xs[i].
  std::vector<std::size_t> alive;
  std::vector<long> errors;
  std::size_t eliminated = 0;
};

// Threshold cell i predicts 0 on the first i sorted points and 1 on the rest.
// Cell i is dropped when some rival j makes fewer mistakes by more than
// sqrt(2 m L), m = |i - j| being the number of points where the two disagree.
CellScan scan_cells(const std::vector<Labeled>& sorted, double log_term) {
  const std::size_t n = sorted.size();
  std::vector<long> ones_before(n + 1, 0);
  std::vector<long> zeros_before(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ones_before[i + 1] = ones_before[i] + (sorted[i].y > 0.5 ? 1 : 0);
    zeros_before[i + 1] = zeros_before[i] + (sorted[i].y > 0.5 ? 0 : 1);
  }
  CellScan scan;
  scan.errors.resize(n + 1);
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i <= n; ++i) {
    scan.errors[i] = ones_before[i] + (zeros_before[n] - zeros_before[i]);
    // equal covariates cannot be separated by any threshold
    if (i == 0 || i == n || sorted[i - 1].x < sorted[i].x) cells.push_back(i);
  }
  for (std::size_t i : cells) {
    bool keep = true;
    for (std::size_t j : cells) {
      if (j == i) continue;
      const double m = static_cast<double>(i > j ? i - j : j - i);
      if (static_cast<double>(scan.errors[i] - scan.errors[j]) > std::sqrt(2.0 * m * log_term)) {
        keep = false;
        break;
      }
    }
    if (keep) {
      scan.alive.push_back(i);
    } else {
      ++scan.eliminated;
    }
  }
  return scan;
}

}  // namespace

SubroutineResult learn_threshold_a2(LabelOracle& oracle, std::size_t budget, double delta, Rng& rng,
                                    const A2Options& options) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::domain, "delta must lie in (0, 1)");
  SubroutineResult result;
  if (budget == 0) return result;

  const LabeledPool& pool = oracle.pool();
  if (!pool.alphabet().is_binary()) {
    throw Error(Errc::unsupported_label, "threshold learner needs binary {0, 1} labels");
  }
  const double resolution = 1.0 / static_cast<double>(pool.size());
  double lo = pool.min_x();
  double hi = std::nextafter(pool.max_x(), std::numeric_limits<double>::infinity());

  std::vector<Labeled> labeled;
  std::size_t batch = std::max(options.min_batch, budget / std::max<std::size_t>(1, options.initial_batch_divisor));
  std::size_t spent = 0;
  CellScan last;
  std::vector<Labeled> last_sorted;
  bool scanned = false;

  while (spent < budget && hi - lo >= resolution) {
    std::vector<PointId> candidates;
    for (PointId i = 0; i < pool.size(); ++i) {
      const double x = pool.x(i);
      if (x >= lo && x < hi && !oracle.revealed(i)) candidates.push_back(i);
    }
    if (candidates.empty()) break;

    const std::size_t epoch = ++result.diagnostics.epochs;
    const std::size_t take = std::min({batch, budget - spent, candidates.size()});
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t j = k + rng.index(candidates.size() - k);
      std::swap(candidates[k], candidates[j]);
      const PointId id = candidates[k];
      const double y = oracle.reveal(id);
      labeled.push_back({pool.x(id), y});
      TraceEntry entry;
      entry.stage = Stage::stage1;
      entry.round = spent;
      entry.group = -1;
      entry.point = id;
      entry.x = pool.x(id);
      entry.label = y;
      result.trace.push_back(std::move(entry));
      ++spent;
    }

    std::vector<Labeled> in_region;
    for (const auto& p : labeled) {
      if (p.x >= lo && p.x < hi) in_region.push_back(p);
    }
    std::sort(in_region.begin(), in_region.end(),
              [](const Labeled& a, const Labeled& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    // union bound over epochs: delta_e = 6 delta / (pi^2 e^2), two-sided
    const double e = static_cast<double>(epoch);
    const double log_term = std::log(std::numbers::pi * std::numbers::pi * e * e / (3.0 * delta));
    CellScan scan = scan_cells(in_region, log_term);
    result.diagnostics.eliminated += scan.eliminated;

    const std::size_t n = in_region.size();
    const std::size_t first = scan.alive.front();
    const std::size_t last_cell = scan.alive.back();
    const double new_lo = first == 0 ? lo : in_region[first - 1].x;
    const double new_hi = last_cell == n ? hi : in_region[last_cell].x;
    lo = std::max(lo, new_lo);
    hi = std::min(hi, new_hi);
    result.diagnostics.regions.push_back({lo, hi});

    last = std::move(scan);
    last_sorted = std::move(in_region);
    scanned = true;
    batch *= 2;
  }

  result.labels_spent = spent;
  result.disagreement_region = Interval{lo, hi};

  double t_hat = 0.5 * (lo + hi);
  if (scanned) {
    // empirical risk minimiser among surviving cells; middle one on ties
    long best = std::numeric_limits<long>::max();
    for (std::size_t i : last.alive) best = std::min(best, last.errors[i]);
    std::vector<std::size_t> minimisers;
    for (std::size_t i : last.alive) {
      if (last.errors[i] == best) minimisers.push_back(i);
    }
    const std::size_t cell = minimisers[(minimisers.size() - 1) / 2];
    const std::size_t n = last_sorted.size();
    if (cell == 0) {
      t_hat = lo;
    } else if (cell == n) {
      t_hat = hi;
    } else {
      t_hat = 0.5 * (last_sorted[cell - 1].x + last_sorted[cell].x);
    }
    t_hat = std::clamp(t_hat, lo, hi);
  }
  result.classifier = Classifier::threshold(t_hat);
  return result;
}

double heterogeneity_epsilon(std::size_t budget) {
  constexpr double floor = 1e-6;
  if (budget < 2) return floor;
  const double n = static_cast<double>(budget);
  return std::max(std::exp(-n / std::log(n)), floor);
}

Classifier heterogeneity_wrap(const SubroutineResult& result, std::size_t budget) {
  const Classifier& base = result.classifier;
  if (!result.disagreement_region || result.disagreement_region->empty()) return base;
  const Interval region = *result.disagreement_region;
  const double eps = heterogeneity_epsilon(budget);

  std::vector<double> cuts = base.cuts();
  cuts.push_back(region.lo);
  cuts.push_back(region.hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [](double c) { return !std::isfinite(c); }), cuts.end());

  std::vector<double> values;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    // any point of the piece represents it; the left end is inside by construction
    double rep = 0.0;
    if (cuts.empty()) {
      rep = region.lo;
    } else if (i == 0) {
      rep = cuts.front() - 1.0;
    } else {
      rep = cuts[i - 1];
    }
    values.push_back(base(rep) + (region.contains(rep) ? eps : 0.0));
  }
  // adjacent pieces with equal values collapse
  std::vector<double> merged_cuts;
  std::vector<double> merged_values{values.front()};
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    if (values[i + 1] != merged_values.back()) {
      merged_cuts.push_back(cuts[i]);
      merged_values.push_back(values[i + 1]);
    }
  }
  return Classifier(ClassifierKind::threshold_with_abstention, std::move(merged_cuts), std::move(merged_values),
                    base.threshold_value());
}

StratificationScheme induced_partition(const Classifier& classifier, const LabeledPool& pool) {
  const std::vector<double> image = classifier.image();
  std::vector<std::size_t> counts(image.size(), 0);
  for (double x : pool.covariates()) {
    const double v = classifier(x);
    const auto it = std::lower_bound(image.begin(), image.end(), v);
    ++counts[static_cast<std::size_t>(it - image.begin())];
  }
  const auto& cuts = classifier.cuts();
  const auto& values = classifier.values();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<StratificationScheme::Part> parts;
  for (std::size_t k = 0; k < image.size(); ++k) {
    if (counts[k] == 0) continue;
    StratificationScheme::Part part;
    part.weight = static_cast<double>(counts[k]) / static_cast<double>(pool.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] != image[k]) continue;
      const double lo = i == 0 ? -inf : cuts[i - 1];
      const double hi = i == cuts.size() ? inf : cuts[i];
      part.membership.push_back({lo, hi});
    }
    parts.push_back(std::move(part));
  }
  // weights are ratios of integer counts; renormalise away the rounding
  double total = 0.0;
  for (const auto& p : parts) total += p.weight;
  for (auto& p : parts) p.weight /= total;
  return StratificationScheme(std::move(parts), Provenance::learned);
}

// ---------------------------------------------------------------------------

void SubroutineRegistry::add(std::string name, Subroutine fn) { entries_[std::move(name)] = std::move(fn); }

const Subroutine& SubroutineRegistry::get(std::string_view name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) {
    std::string known;
    for (const auto& [k, v] : entries_) known += (known.empty() ? "" : ", ") + k;
    throw Error(Errc::registry, "unknown stage-1 subroutine '" + std::string(name) + "'; available: " + known);
  }
  if (!it->second) {
    throw Error(Errc::not_implemented,
                "stage-1 subroutine '" + std::string(name) +
                    "' is a reserved multiclass slot with no implementation; register a custom learner for k > 1");
  }
  return it->second;
}

std::vector<std::string> SubroutineRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

const SubroutineRegistry& SubroutineRegistry::builtin() {
  static const SubroutineRegistry registry = [] {
    SubroutineRegistry r;
    r.add("a2-threshold", [](LabelOracle& oracle, std::size_t budget, double delta, Rng& rng) {
      return learn_threshold_a2(oracle, budget, delta, rng);
    });
    r.add("a2-threshold-het", [](LabelOracle& oracle, std::size_t budget, double delta, Rng& rng) {
      SubroutineResult res = learn_threshold_a2(oracle, budget, delta, rng);
      res.classifier = heterogeneity_wrap(res, budget);
      return res;
    });
    r.add("constant", [](LabelOracle&, std::size_t, double, Rng&) { return SubroutineResult{}; });
    r.add("agarwal-multiclass", Subroutine{});
    return r;
  }();
  return registry;
}

Subroutine plugin_subroutine(std::string_view name) { return SubroutineRegistry::builtin().get(name); }

}  // namespace pb
