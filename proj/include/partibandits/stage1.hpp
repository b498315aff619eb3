#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "partibandits/core.hpp"
#include "partibandits/envs.hpp"
#include "partibandits/rng.hpp"
#include "partibandits/trace.hpp"

namespace pb {

enum class ClassifierKind { constant, threshold, threshold_with_abstention, external };

/// Piecewise-constant classifier on the real line: `values[i]` holds on the
/// i-th piece delimited by the sorted `cuts` (pieces are half-open, left-closed).
class Classifier {
 public:
  Classifier(ClassifierKind kind, std::vector<double> cuts, std::vector<double> values,
             std::optional<double> threshold = std::nullopt);

  static Classifier constant(double value);
  /// 1{x >= t}
  static Classifier threshold(double t);

  double operator()(double x) const;
  /// Distinct output values, ascending.
  std::vector<double> image() const;
  ClassifierKind kind() const { return kind_; }
  const std::vector<double>& cuts() const { return cuts_; }
  const std::vector<double>& values() const { return values_; }
  /// The decision threshold for threshold-type classifiers.
  std::optional<double> threshold_value() const { return threshold_; }

 private:
  ClassifierKind kind_;
  std::vector<double> cuts_;
  std::vector<double> values_;
  std::optional<double> threshold_;
};

struct LearnerDiagnostics {
  std::size_t epochs = 0;
  /// Version-space interval after each epoch.
  std::vector<Interval> regions;
  /// Candidate cells eliminated across all epochs.
  std::size_t eliminated = 0;
};

struct SubroutineResult {
  Classifier classifier = Classifier::constant(0.0);
  /// Inputs where surviving hypotheses still disagree.
  std::optional<Interval> disagreement_region;
  std::size_t labels_spent = 0;
  LearnerDiagnostics diagnostics;
  SamplerTrace trace;
};

struct A2Options {
  std::size_t min_batch = 4;
  /// First batch is max(min_batch, budget / initial_batch_divisor); batches then double.
  std::size_t initial_batch_divisor = 8;
};

/// Disagreement-based threshold learner over {1{x >= t}}: epochs query the
/// current disagreement interval uniformly and eliminate thresholds that a
/// rival beats by more than a Hoeffding margin on the points where they differ.
SubroutineResult learn_threshold_a2(LabelOracle& oracle, std::size_t budget, double delta, Rng& rng,
                                    const A2Options& options = {});

/// max(exp(-N / log N), 1e-6)
double heterogeneity_epsilon(std::size_t budget);

/// Adds epsilon(N) to the classifier's output on the disagreement region.
Classifier heterogeneity_wrap(const SubroutineResult& result, std::size_t budget);

/// One stratum per image value that owns at least one pool point; weights are
/// empirical pool fractions.
StratificationScheme induced_partition(const Classifier& classifier, const LabeledPool& pool);

using Subroutine = std::function<SubroutineResult(LabelOracle&, std::size_t budget, double delta, Rng&)>;

class SubroutineRegistry {
 public:
  /// Registers `fn` under `name`; an empty function marks a reserved, unimplemented slot.
  void add(std::string name, Subroutine fn);
  const Subroutine& get(std::string_view name) const;
  std::vector<std::string> names() const;

  /// a2-threshold, a2-threshold-het, constant, and the reserved agarwal-multiclass slot.
  static const SubroutineRegistry& builtin();

 private:
  std::map<std::string, Subroutine, std::less<>> entries_;
};

Subroutine plugin_subroutine(std::string_view name);

}  // namespace pb
