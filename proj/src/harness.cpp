#include "partibandits/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "partibandits/partibandits.hpp"
#include "partibandits/stage1.hpp"
#include "partibandits/ws_ucb.hpp"

namespace pb {

namespace {

constexpr std::uint64_t kPoolStream = 0x706f6f6cULL;
constexpr std::uint64_t kAlgoStream = 0x616c676fULL;

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string field(std::size_t i, const char* name) { return "[" + std::to_string(i) + "]." + name; }

}  // namespace

const char* to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::srs: return "srs";
    case AlgorithmKind::strs: return "strs";
    case AlgorithmKind::ws_ucb: return "ws-ucb";
    case AlgorithmKind::partibandits: return "partibandits";
    case AlgorithmKind::thompson: return "thompson";
  }
  return "unknown";
}

std::optional<AlgorithmKind> parse_algorithm_kind(std::string_view name) {
  for (auto k : {AlgorithmKind::srs, AlgorithmKind::strs, AlgorithmKind::ws_ucb, AlgorithmKind::partibandits,
                 AlgorithmKind::thompson}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

const char* to_string(ErrorMetric metric) { return metric == ErrorMetric::squared ? "squared" : "absolute"; }

std::optional<ErrorMetric> parse_metric(std::string_view name) {
  if (name == "squared") return ErrorMetric::squared;
  if (name == "absolute") return ErrorMetric::absolute;
  return std::nullopt;
}

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> warnings;
  auto fail = [](const std::string& where, const std::string& what) { throw Error(Errc::config, where + ": " + what); };

  if (scenarios.empty()) fail("scenarios", "at least one scenario is required");
  std::set<std::string> names;
  bool has_arms = false;
  bool has_pool = false;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Scenario& s = scenarios[i];
    const std::string where = "scenarios" + field(i, "");
    if (!names.insert(s.name).second) fail(where + "name", "duplicate scenario name '" + s.name + "'");
    if (const auto* dgp = std::get_if<DgpSpec>(&s.source)) {
      has_pool = true;
      try {
        for (auto& w : pb::validate(*dgp)) warnings.push_back(where + "dgp: " + w);
      } catch (const Error& e) {
        fail(where + "dgp", e.what());
      }
      if (s.pool_size == 0) fail(where + "pool_size", "must be >= 1");
      for (std::size_t b : budgets) {
        if (b > s.pool_size) fail("budgets", "budget " + std::to_string(b) + " exceeds pool_size of " + s.name);
      }
    } else if (const auto* csv = std::get_if<CsvSource>(&s.source)) {
      has_pool = true;
      if (csv->path.empty()) fail(where + "path", "CSV scenarios need a path");
      if (csv->tail_quantile && !(*csv->tail_quantile > 0.0 && *csv->tail_quantile < 0.5)) {
        fail(where + "tail_quantile", "must lie in (0, 0.5)");
      }
    } else {
      has_arms = true;
      const auto& arms = std::get<ArmsSource>(s.source);
      if (arms.success.empty()) fail(where + "arms", "need at least one arm");
      for (double p : arms.success) {
        if (!(p >= 0.0 && p <= 1.0)) fail(where + "arms", "success probabilities must lie in [0, 1]");
      }
    }
  }

  std::set<std::string> algo_names;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    const AlgorithmSpec& a = roster[i];
    const std::string where = "algorithms" + field(i, "");
    if (a.name.empty()) fail(where + "name", "must not be empty");
    if (!algo_names.insert(a.name).second) fail(where + "name", "duplicate algorithm name '" + a.name + "'");
    if (!(a.tau >= 0.0 && a.tau <= 1.0)) fail(where + "tau", "must lie in [0, 1]");
    if (!(a.delta > 0.0 && a.delta < 1.0)) fail(where + "delta", "must lie in (0, 1)");
    if (a.c1 < 0.0 || a.c2 < 0.0) fail(where + "c1/c2", "must be positive (0 selects the default)");
    if (!std::is_sorted(a.splits.begin(), a.splits.end())) fail(where + "splits", "must be sorted ascending");
    if (has_arms && a.kind != AlgorithmKind::thompson) {
      fail(where + "kind", std::string(to_string(a.kind)) + " cannot run on an arms scenario");
    }
    if (a.kind == AlgorithmKind::thompson) {
      try {
        a.thompson.validate();
      } catch (const Error& e) {
        fail(where + "thompson", e.what());
      }
    }
    if (a.kind == AlgorithmKind::partibandits) {
      try {
        SubroutineRegistry::builtin().get(a.subroutine);
      } catch (const Error& e) {
        fail(where + "subroutine", e.what());
      }
      for (std::size_t b : budgets) {
        if (b < 2) fail("budgets", "PartiBandits needs budgets >= 2");
      }
    }
    if ((a.kind == AlgorithmKind::strs || a.kind == AlgorithmKind::ws_ucb) && a.splits.empty()) {
      for (const auto& s : scenarios) {
        if (std::holds_alternative<CsvSource>(s.source)) {
          fail(where + "splits", "CSV scenarios need explicit split points");
        }
      }
    }
  }
  (void)has_pool;

  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 1) fail("budgets", "every budget must be >= 1");
    if (i > 0 && budgets[i] <= budgets[i - 1]) fail("budgets", "must be strictly increasing");
  }
  if (replications < 1) fail("replications", "must be >= 1");
  if (!(percentile > 0.0 && percentile < 1.0)) fail("percentile", "must lie in (0, 1)");
  if (parallelism < 1) fail("parallelism", "must be >= 1");
  return warnings;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw Error(Errc::domain, "percentile of an empty sample");
  if (!(q > 0.0 && q < 1.0)) throw Error(Errc::domain, "percentile level must lie in (0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = std::ceil(q * static_cast<double>(sorted.size()) - 1e-9);
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(sorted.size()))) - 1;
  return sorted[idx];
}

double error_of(ErrorMetric metric, double estimate, double truth) {
  const double d = estimate - truth;
  return metric == ErrorMetric::squared ? d * d : std::abs(d);
}

namespace {

ReplicationPool csv_replication(const CsvSource& src, const CsvTable& table, std::uint64_t seed, std::size_t scenario,
                                std::size_t replication) {
  CsvTable rows;
  if (src.subsample > 0 && src.subsample < table.xs.size()) {
    Rng rng = Rng::derive(seed, {scenario, replication, kPoolStream});
    std::vector<std::size_t> idx(table.xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < src.subsample; ++k) {
      std::swap(idx[k], idx[k + rng.index(idx.size() - k)]);
    }
    idx.resize(src.subsample);
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) {
      rows.xs.push_back(table.xs[i]);
      rows.labels.push_back(table.labels[i]);
    }
  } else {
    rows = table;
  }
  if (src.tail_quantile) rows = keep_tails(rows, *src.tail_quantile);
  LabelAlphabet alphabet = infer_alphabet(rows.labels, src.max_classes);
  ReplicationPool rp;
  rp.pool.emplace(std::move(rows.xs), std::move(rows.labels), std::move(alphabet));
  rp.truth = rp.pool->population_mean();
  return rp;
}

CsvTable read_source(const CsvSource& src) {
  CsvPoolOptions opts;
  opts.x_column = src.x_column;
  opts.y_column = src.y_column;
  opts.max_classes = src.max_classes;
  return read_csv_columns(src.path, opts);
}

ReplicationPool build_pool(const ExperimentConfig& config, std::size_t scenario, std::size_t replication,
                           const CsvTable* csv_table) {
  const Scenario& s = config.scenarios[scenario];
  if (const auto* dgp = std::get_if<DgpSpec>(&s.source)) {
    Rng rng = Rng::derive(config.seed, {scenario, replication, kPoolStream});
    GeneratedPool gp = generate_pool(*dgp, s.pool_size, rng);
    ReplicationPool rp;
    rp.truth = gp.truth.true_mean;
    rp.pool.emplace(std::move(gp.pool));
    return rp;
  }
  if (const auto* csv = std::get_if<CsvSource>(&s.source)) {
    if (csv_table) return csv_replication(*csv, *csv_table, config.seed, scenario, replication);
    const CsvTable table = read_source(*csv);
    return csv_replication(*csv, table, config.seed, scenario, replication);
  }
  ReplicationPool rp;
  rp.truth = std::get<ArmsSource>(s.source).success.empty() ? 0.0 : ArmEnvironment{std::get<ArmsSource>(s.source).success}.mean();
  return rp;
}

}  // namespace

ReplicationPool make_replication_pool(const ExperimentConfig& config, std::size_t scenario, std::size_t replication) {
  return build_pool(config, scenario, replication, nullptr);
}

StratificationScheme apriori_scheme(const Scenario& scenario, const AlgorithmSpec& algo, const LabeledPool& pool) {
  std::vector<double> cuts = algo.splits;
  const auto* dgp = std::get_if<DgpSpec>(&scenario.source);
  if (cuts.empty()) {
    if (!dgp) throw Error(Errc::config, "a-priori scheme needs explicit split points");
    cuts.push_back(decision_boundary(*dgp));
  }
  if (dgp) return analytic_scheme(covariate_law(*dgp), cuts);
  std::vector<double> weights(cuts.size() + 1, 0.0);
  for (double x : pool.covariates()) {
    weights[static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin())] += 1.0;
  }
  for (double& w : weights) w /= static_cast<double>(pool.size());
  return StratificationScheme::from_cuts(cuts, weights);
}

RunOutcome run_algorithm(const ExperimentConfig& config, std::size_t scenario, const AlgorithmSpec& algo,
                         std::size_t budget, std::size_t replication, const ReplicationPool& rp) {
  Rng rng = Rng::derive(config.seed, {scenario, replication, budget, kAlgoStream});
  RunOutcome out;
  out.truth = rp.truth;
  const Scenario& s = config.scenarios[scenario];
  if (const auto* arms = std::get_if<ArmsSource>(&s.source)) {
    if (algo.kind != AlgorithmKind::thompson) throw Error(Errc::config, "only thompson runs on arm scenarios");
    ThompsonConfig tc = algo.thompson;
    tc.mode = ThompsonMode::fixed_arms;
    ThompsonRun run = run_thompson(ArmEnvironment{arms->success}, tc, budget, rng);
    out.estimate = std::move(run.estimate);
    out.trace = std::move(run.trace);
    out.pulls = std::move(run.pulls);
    return out;
  }
  const LabeledPool& pool = *rp.pool;
  LabelOracle oracle(pool, budget);
  switch (algo.kind) {
    case AlgorithmKind::srs: {
      SamplerRun run = run_srs(oracle, budget, rng);
      out.estimate = std::move(run.estimate);
      out.trace = std::move(run.trace);
      break;
    }
    case AlgorithmKind::strs: {
      SamplerRun run = run_strs(oracle, apriori_scheme(s, algo, pool), budget, rng);
      out.estimate = std::move(run.estimate);
      out.trace = std::move(run.trace);
      break;
    }
    case AlgorithmKind::ws_ucb: {
      WsUcbOptions opts{algo.delta, algo.tau, algo.c1, algo.c2};
      SamplerRun run = run_warmstart_ucb(oracle, apriori_scheme(s, algo, pool), budget, opts, rng);
      out.estimate = std::move(run.estimate);
      out.trace = std::move(run.trace);
      break;
    }
    case AlgorithmKind::partibandits: {
      PartiBanditsConfig pc;
      pc.subroutine = algo.subroutine;
      pc.budget = budget;
      pc.delta = algo.delta;
      pc.tau = algo.tau;
      pc.c1 = algo.c1;
      pc.c2 = algo.c2;
      PartiBanditsRun run = run_partibandits(oracle, pc, rng);
      out.estimate = std::move(run.estimate);
      out.trace = std::move(run.trace);
      break;
    }
    case AlgorithmKind::thompson: {
      ThompsonConfig tc = algo.thompson;
      tc.mode = ThompsonMode::binned_covariate;
      ThompsonRun run = run_thompson(oracle, tc, budget, rng);
      out.estimate = std::move(run.estimate);
      out.trace = std::move(run.trace);
      out.pulls = std::move(run.pulls);
      break;
    }
  }
  return out;
}

RunOutcome replay(const ExperimentConfig& config, std::size_t scenario, std::size_t algorithm, std::size_t budget,
                  std::size_t replication) {
  if (scenario >= config.scenarios.size()) throw Error(Errc::config, "scenario index out of range");
  if (algorithm >= config.roster.size()) throw Error(Errc::config, "algorithm index out of range");
  const ReplicationPool rp = make_replication_pool(config, scenario, replication);
  return run_algorithm(config, scenario, config.roster[algorithm], budget, replication, rp);
}

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n_s = config.scenarios.size();
  const std::size_t n_a = config.roster.size();
  const std::size_t n_b = config.budgets.size();
  const std::size_t reps = config.replications;

  std::vector<std::optional<CsvTable>> tables(n_s);
  for (std::size_t s = 0; s < n_s; ++s) {
    if (const auto* csv = std::get_if<CsvSource>(&config.scenarios[s].source)) tables[s] = read_source(*csv);
  }

  // errors[((s * n_a + a) * n_b + b) * reps + r]
  std::vector<double> errors(n_s * n_a * n_b * reps, 0.0);
  struct Failure {
    std::size_t scenario;
    std::size_t algorithm;
    std::size_t budget;
    std::string what;
  };
  std::vector<std::optional<Failure>> failures(n_s * reps);

  auto work = [&](std::size_t job) {
    const std::size_t s = job / reps;
    const std::size_t r = job % reps;
    std::size_t a = 0;
    std::size_t b = 0;
    try {
      const ReplicationPool rp = build_pool(config, s, r, tables[s] ? &*tables[s] : nullptr);
      for (a = 0; a < n_a; ++a) {
        for (b = 0; b < n_b; ++b) {
          const RunOutcome out = run_algorithm(config, s, config.roster[a], config.budgets[b], r, rp);
          errors[((s * n_a + a) * n_b + b) * reps + r] = error_of(config.metric, out.estimate.value, out.truth);
        }
      }
    } catch (const std::exception& e) {
      failures[job] = Failure{s, std::min(a, n_a ? n_a - 1 : 0), std::min(b, n_b ? n_b - 1 : 0), e.what()};
    }
  };

  const std::size_t jobs = n_s * reps;
  const std::size_t threads = std::min<std::size_t>(config.parallelism, jobs);
  if (threads <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) work(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs; j = next++) work(j);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t j = 0; j < jobs; ++j) {
    if (!failures[j]) continue;
    const Failure& f = *failures[j];
    const std::string algo = n_a ? config.roster[f.algorithm].name : "";
    const std::size_t budget = n_b ? config.budgets[f.budget] : 0;
    std::ostringstream os;
    os << "replication failed (scenario=" << config.scenarios[f.scenario].name << ", algorithm=" << algo
       << ", budget=" << budget << ", rep=" << j % reps << ", seed=" << config.seed << "): " << f.what;
    throw ReplicationFailure(os.str(), config.scenarios[f.scenario].name, algo, budget, j % reps, config.seed);
  }

  ResultTable table;
  table.metric = config.metric;
  for (std::size_t s = 0; s < n_s; ++s) {
    for (std::size_t a = 0; a < n_a; ++a) {
      for (std::size_t b = 0; b < n_b; ++b) {
        const std::span<const double> errs(&errors[((s * n_a + a) * n_b + b) * reps], reps);
        ResultRow row;
        row.algorithm = n_s > 1 ? config.scenarios[s].name + "/" + config.roster[a].name : config.roster[a].name;
        row.budget = config.budgets[b];
        row.percentile_error = percentile(errs, config.percentile);
        double sum = 0.0;
        for (double e : errs) sum += e;
        row.mean_error = sum / static_cast<double>(reps);
        if (reps > 1) {
          double ss = 0.0;
          for (double e : errs) ss += (e - row.mean_error) * (e - row.mean_error);
          row.sem = std::sqrt(ss / static_cast<double>(reps - 1)) / std::sqrt(static_cast<double>(reps));
        }
        row.replications = reps;
        row.seed = config.seed;
        table.rows.push_back(std::move(row));
      }
    }
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const ResultRow& x, const ResultRow& y) {
    return x.algorithm < y.algorithm || (x.algorithm == y.algorithm && x.budget < y.budget);
  });
  return table;
}

void write_csv(std::ostream& os, const ResultTable& table) {
  os << "algorithm,budget,percentile_error,mean_error,sem,replications,seed\n";
  for (const auto& r : table.rows) {
    os << r.algorithm << ',' << r.budget << ',' << fmt12(r.percentile_error) << ',' << fmt12(r.mean_error) << ','
       << fmt12(r.sem) << ',' << r.replications << ',' << r.seed << '\n';
  }
}

void emit_csv(const ResultTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  write_csv(out, table);
  out.flush();
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_svg(std::ostream& os, const std::string& title, const std::map<std::string, std::vector<const ResultRow*>>& series,
               ErrorMetric metric) {
  constexpr double W = 720, H = 440, L = 80, R = 200, T = 40, B = 60;
  double xmin = 1e300, xmax = -1e300, ymax = 0.0;
  for (const auto& [name, rows] : series) {
    for (const auto* r : rows) {
      xmin = std::min(xmin, static_cast<double>(r->budget));
      xmax = std::max(xmax, static_cast<double>(r->budget));
      ymax = std::max(ymax, r->percentile_error);
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= 0.0) ymax = 1.0;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - y / ymax * (H - T - B); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << L << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">" << svg_escape(title)
     << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = ymax * i / 4.0;
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    os << "<text x=\"" << L - 8 << "\" y=\"" << py(yv) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt12(yv).substr(0, 8)
       << "</text>\n";
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << std::lround(xv) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 16
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">label budget</text>\n";
  os << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 18 " << (T + H - B) / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">percentile " << to_string(metric)
     << " error</text>\n";
  std::size_t k = 0;
  for (const auto& [name, rows] : series) {
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto* r : rows) os << px(static_cast<double>(r->budget)) << ',' << py(r->percentile_error) << ' ';
    os << "\"/>\n";
    const double ly = T + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
       << svg_escape(name) << "</text>\n";
    ++k;
  }
  os << "</svg>\n";
}

}  // namespace

std::vector<std::filesystem::path> emit_plots(const ResultTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::map<std::string, std::vector<const ResultRow*>>> groups;
  for (const auto& r : table.rows) {
    const auto slash = r.algorithm.find('/');
    const std::string prefix = slash == std::string::npos ? "results" : r.algorithm.substr(0, slash);
    const std::string series = slash == std::string::npos ? r.algorithm : r.algorithm.substr(slash + 1);
    groups[prefix][series].push_back(&r);
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [prefix, series] : groups) {
    std::string file = prefix;
    for (char& c : file) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
    }
    const auto path = dir / (file + ".svg");
    std::ofstream out(path);
    if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
    write_svg(out, prefix, series, table.metric);
    written.push_back(path);
  }
  return written;
}

}  // namespace pb
