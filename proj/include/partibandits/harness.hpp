#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "partibandits/baselines.hpp"
#include "partibandits/core.hpp"
#include "partibandits/envs.hpp"
#include "partibandits/trace.hpp"

namespace pb {

/// Rows of a CSV file form the pool. With `subsample` > 0 each replication
/// draws that many rows without replacement before the tail filter.
struct CsvSource {
  std::string path;
  std::string x_column = "x";
  std::string y_column = "y";
  std::optional<double> tail_quantile;
  std::size_t subsample = 0;
  std::size_t max_classes = 16;
};

/// Bernoulli arms with no covariates; only Thompson sampling runs on these.
struct ArmsSource {
  std::vector<double> success;
};

struct Scenario {
  std::string name = "default";
  std::variant<DgpSpec, CsvSource, ArmsSource> source = DgpSpec{ThresholdFlip{}};
  std::size_t pool_size = 10000;
};

enum class AlgorithmKind { srs, strs, ws_ucb, partibandits, thompson };

const char* to_string(AlgorithmKind kind);
std::optional<AlgorithmKind> parse_algorithm_kind(std::string_view name);

struct AlgorithmSpec {
  std::string name;
  AlgorithmKind kind = AlgorithmKind::srs;
  /// Cut points of an a-priori scheme (strs, ws-ucb). Empty on a synthetic
  /// scenario means a single cut at the decision boundary.
  std::vector<double> splits;
  double tau = 0.5;
  double delta = 0.1;
  double c1 = 0.0;
  double c2 = 0.0;
  std::string subroutine = "a2-threshold";
  ThompsonConfig thompson;
};

enum class ErrorMetric { squared, absolute };

const char* to_string(ErrorMetric metric);
std::optional<ErrorMetric> parse_metric(std::string_view name);

struct ExperimentConfig {
  std::vector<Scenario> scenarios{Scenario{}};
  std::vector<AlgorithmSpec> roster;
  std::vector<std::size_t> budgets;
  std::size_t replications = 500;
  double percentile = 0.9;
  ErrorMetric metric = ErrorMetric::squared;
  std::uint64_t seed = 1;
  unsigned parallelism = 1;

  /// Throws Errc::config naming the offending field; returns warnings.
  std::vector<std::string> validate() const;
};

struct ResultRow {
  std::string algorithm;
  std::size_t budget = 0;
  double percentile_error = 0.0;
  double mean_error = 0.0;
  double sem = 0.0;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  ErrorMetric metric = ErrorMetric::squared;
};

/// Raised when one replication fails; carries the coordinates for `replay`.
class ReplicationFailure : public Error {
 public:
  ReplicationFailure(const std::string& what, std::string scenario, std::string algorithm, std::size_t budget,
                     std::size_t replication, std::uint64_t seed)
      : Error(Errc::domain, what),
        scenario(std::move(scenario)),
        algorithm(std::move(algorithm)),
        budget(budget),
        replication(replication),
        seed(seed) {}

  std::string scenario;
  std::string algorithm;
  std::size_t budget;
  std::size_t replication;
  std::uint64_t seed;
};

/// Nearest-rank percentile: element ceil(q R) - 1 of the sorted values.
double percentile(std::span<const double> values, double q);

/// Pool and reference mean for one replication of a scenario.
struct ReplicationPool {
  std::optional<LabeledPool> pool;
  double truth = 0.0;
};

ReplicationPool make_replication_pool(const ExperimentConfig& config, std::size_t scenario, std::size_t replication);

/// A-priori scheme for strs / ws-ucb entries.
StratificationScheme apriori_scheme(const Scenario& scenario, const AlgorithmSpec& algo, const LabeledPool& pool);

struct RunOutcome {
  MeanEstimate estimate;
  SamplerTrace trace;
  double truth = 0.0;
  std::vector<std::size_t> pulls;
};

/// Runs one algorithm on an existing pool with the stream the harness would use.
RunOutcome run_algorithm(const ExperimentConfig& config, std::size_t scenario, const AlgorithmSpec& algo,
                         std::size_t budget, std::size_t replication, const ReplicationPool& rp);

/// Re-runs a single (scenario, algorithm, budget, replication) coordinate.
RunOutcome replay(const ExperimentConfig& config, std::size_t scenario, std::size_t algorithm, std::size_t budget,
                  std::size_t replication);

double error_of(ErrorMetric metric, double estimate, double truth);

ResultTable run_experiment(const ExperimentConfig& config);

void write_csv(std::ostream& os, const ResultTable& table);
void emit_csv(const ResultTable& table, const std::filesystem::path& path);

/// One SVG line chart per scenario prefix of the algorithm labels.
std::vector<std::filesystem::path> emit_plots(const ResultTable& table, const std::filesystem::path& dir);

}  // namespace pb
