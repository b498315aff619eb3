#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "partibandits/core.hpp"
#include "partibandits/rng.hpp"

namespace pb {

/// Known covariate distribution Unif[lo, hi).
struct UniformLaw {
  double lo = 0.0;
  double hi = 1.0;

  /// Probability mass of an interval under the law.
  double mass(const Interval& iv) const;
  double mass(const Stratum& s) const;
};

/// Finite collection of (x, y) pairs. Labels are only reachable through a
/// LabelOracle (or the census helpers used to define ground truth).
class LabeledPool {
 public:
  LabeledPool(std::vector<double> xs, std::vector<double> labels, LabelAlphabet alphabet,
              std::optional<UniformLaw> law = std::nullopt);

  std::size_t size() const { return xs_.size(); }
  double x(PointId id) const { return xs_[id]; }
  std::span<const double> covariates() const { return xs_; }
  const LabelAlphabet& alphabet() const { return alphabet_; }
  const std::optional<UniformLaw>& law() const { return law_; }
  double min_x() const { return min_x_; }
  double max_x() const { return max_x_; }

  /// Census mean of all hidden labels; ground truth for file-backed pools.
  double population_mean() const;
  std::size_t count_in(const Stratum& s) const;
  /// FNV-1a over the raw bytes of covariates and labels.
  std::uint64_t fingerprint() const;

 private:
  friend class LabelOracle;

  std::vector<double> xs_;
  std::vector<double> labels_;
  LabelAlphabet alphabet_;
  std::optional<UniformLaw> law_;
  double min_x_ = 0.0;
  double max_x_ = 0.0;
};

/// Budget-metered access to pool labels. Re-revealing a point is free.
class LabelOracle {
 public:
  LabelOracle(const LabeledPool& pool, std::size_t budget);

  double reveal(PointId id);
  bool revealed(PointId id) const { return revealed_[id] != 0; }
  std::size_t spent() const { return order_.size(); }
  std::size_t budget() const { return budget_; }
  std::size_t remaining() const { return budget_ - spent(); }
  const LabeledPool& pool() const { return *pool_; }
  /// Point ids in reveal order.
  const std::vector<PointId>& reveal_order() const { return order_; }

 private:
  const LabeledPool* pool_;
  std::size_t budget_;
  std::vector<char> revealed_;
  std::vector<PointId> order_;
};

// ---------------------------------------------------------------------------
// Synthetic data-generating processes

/// X ~ Unif[0,1], Y = 1{X >= t}, flipped with rate rho_le left of t and rho_gt right of it.
struct ThresholdFlip {
  double threshold = 0.5;
  double rho_le = 0.0;
  double rho_gt = 0.0;
};

/// X ~ Unif[0,1], Y ~ Bernoulli(logistic(-1/nu + 2x/nu)).
struct LogitDgp {
  double nu = 0.1;
};

/// X ~ Unif[-5,5], Y ~ Bernoulli(Phi((x - 0.25)/nu)).
struct ProbitDgp {
  double nu = 1.0;
};

using DgpSpec = std::variant<ThresholdFlip, LogitDgp, ProbitDgp>;

/// Throws Errc::domain naming the offending parameter; returns warnings.
std::vector<std::string> validate(const DgpSpec& spec);

UniformLaw covariate_law(const DgpSpec& spec);
double prob_one(const DgpSpec& spec, double x);
/// Location of the Bayes decision boundary (P(Y=1|x) = 1/2).
double decision_boundary(const DgpSpec& spec);
/// Integral of P(Y=1|x) against the covariate law over an interval.
double mass_of_ones(const DgpSpec& spec, const Interval& iv);

/// Scheme with analytic weights under the DGP's covariate law.
StratificationScheme analytic_scheme(const UniformLaw& law, std::span<const double> cuts);
/// Two strata split at the decision boundary.
StratificationScheme natural_scheme(const DgpSpec& spec);

/// Analytic truth for a scheme: mu, sigma'_g^2 under analytic masses, Sigma1, Var(Y), nu.
TrueModel true_model(const DgpSpec& spec, const StratificationScheme& scheme);

struct GeneratedPool {
  LabeledPool pool;
  TrueModel truth;
};

GeneratedPool generate_pool(const DgpSpec& spec, std::size_t size, Rng& rng);
GeneratedPool gen_threshold_pool(double t, double rho_le, double rho_gt, std::size_t size, std::uint64_t seed);
GeneratedPool gen_logit_pool(double nu, std::size_t size, std::uint64_t seed);
GeneratedPool gen_probit_pool(double nu, std::size_t size, std::uint64_t seed);

// ---------------------------------------------------------------------------
// File-backed pools

struct CsvPoolOptions {
  std::string x_column = "x";
  std::string y_column = "y";
  /// Keep rows whose x lies in the bottom or top q-quantile.
  std::optional<double> tail_quantile;
  /// Maximum alphabet size k + 1.
  std::size_t max_classes = 16;
};

struct CsvTable {
  std::vector<double> xs;
  std::vector<double> labels;
};

CsvTable read_csv_columns(const std::filesystem::path& path, const CsvPoolOptions& options);
/// Row-order-preserving tail filter on a parsed table.
CsvTable keep_tails(const CsvTable& table, double q);
LabelAlphabet infer_alphabet(std::span<const double> labels, std::size_t max_classes);
LabeledPool load_csv_pool(const std::filesystem::path& path, const CsvPoolOptions& options = {});

// ---------------------------------------------------------------------------
// Sampling

struct Draw {
  PointId point = 0;
  double x = 0.0;
  double label = 0.0;
};

/// One uniform draw among the stratum's unrevealed points (linear scan).
Draw sample_from_stratum(LabelOracle& oracle, const Stratum& stratum, Rng& rng);

/// Per-stratum index of unrevealed points supporting O(1) uniform draws
/// without replacement.
class StratumSampler {
 public:
  StratumSampler(const LabelOracle& oracle, const StratificationScheme& scheme);

  std::size_t groups() const { return candidates_.size(); }
  bool exhausted(std::size_t g) const { return candidates_[g].empty(); }
  std::size_t available(std::size_t g) const { return candidates_[g].size(); }
  Draw draw(LabelOracle& oracle, std::size_t g, Rng& rng);

 private:
  std::vector<std::vector<PointId>> candidates_;
};

}  // namespace pb
