#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pb {

enum class Errc {
  undefined_estimate,
  incomplete_coverage,
  domain,
  empty_pool,
  parse,
  budget_exhausted,
  stratum_exhausted,
  all_exhausted,
  infeasible_coverage,
  unsupported_label,
  registry,
  not_implemented,
  invalid_scheme,
  config,
  io,
};

const char* to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

using PointId = std::size_t;

/// Half-open covariate interval [lo, hi). Infinite endpoints are allowed.
struct Interval {
  double lo;
  double hi;

  bool contains(double x) const { return x >= lo && x < hi; }
  bool empty() const { return !(lo < hi); }
  double width() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite set of admissible label values, kept sorted ascending.
class LabelAlphabet {
 public:
  LabelAlphabet() = default;
  explicit LabelAlphabet(std::vector<double> values);

  static LabelAlphabet binary() { return LabelAlphabet({0.0, 1.0}); }
  /// {0, 1, ..., k}
  static LabelAlphabet classes(int k);

  bool contains(double y) const;
  std::size_t size() const { return values_.size(); }
  int k() const { return static_cast<int>(values_.size()) - 1; }
  bool is_binary() const;
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

enum class Provenance { a_priori, learned };

struct Stratum {
  int id = 0;
  std::vector<Interval> membership;
  double weight = 0.0;

  bool contains(double x) const;
};

/// Disjoint cover of the real line by unions of half-open intervals, with
/// weights P_g that sum to one. Ids are 0..G-1 in order.
class StratificationScheme {
 public:
  struct Part {
    std::vector<Interval> membership;
    double weight;
  };

  /// Validates disjointness and the weight sum; drops zero-weight parts.
  StratificationScheme(std::vector<Part> parts, Provenance provenance);

  /// Single stratum (-inf, +inf) with weight 1.
  static StratificationScheme whole_space();
  /// Cuts the line at the given sorted points; weights supplied per piece.
  static StratificationScheme from_cuts(std::span<const double> cuts, std::span<const double> weights,
                                        Provenance provenance = Provenance::a_priori);

  std::size_t size() const { return strata_.size(); }
  const Stratum& operator[](std::size_t g) const { return strata_[g]; }
  const std::vector<Stratum>& strata() const { return strata_; }
  Provenance provenance() const { return provenance_; }
  std::vector<double> weights() const;

  /// Stratum id containing x, or -1 if none does.
  int locate(double x) const;

 private:
  std::vector<Stratum> strata_;
  Provenance provenance_;
};

/// Running statistics of P_g * Y for one stratum.
class GroupState {
 public:
  explicit GroupState(double weight = 1.0) : weight_(weight) {}

  void push(double label);

  std::size_t count() const { return n_; }
  double weight() const { return weight_; }
  double sum() const { return sum_; }
  double sum_squares() const { return sum_sq_; }

  /// (1/n) * sum P_g Y; requires n >= 1.
  double weighted_mean() const;
  /// Sample standard deviation of P_g Y with the (n-1) denominator; requires n >= 2.
  double weighted_std() const;

 private:
  double weight_;
  std::size_t n_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
};

struct GroupEstimate {
  int group = 0;
  std::size_t count = 0;
  double weighted_mean = 0.0;
};

struct MeanEstimate {
  double value = 0.0;
  std::vector<GroupEstimate> per_group;
  std::size_t labels_spent = 0;
};

struct TrueModel {
  double true_mean = 0.0;
  std::vector<double> weights;
  std::vector<double> cond_variances;
  double sigma1 = 0.0;
  double variance = 0.0;
  std::optional<double> bayes_risk;
};

double weighted_group_mean(std::span<const double> labels, double weight);

double aggregate_mean(std::span<const double> group_means);

/// Sums the per-group means; throws incomplete_coverage if any group is empty.
MeanEstimate aggregate(std::span<const GroupState> states, std::size_t labels_spent);

double sigma1(const StratificationScheme& scheme, std::span<const double> cond_vars);

}  // namespace pb
