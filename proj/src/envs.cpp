#include "partibandits/envs.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace pb {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double integrate(const auto& f, double a, double b) {
  if (!(a < b)) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-13, &err);
}

/// Integral of f over [a, b), split at `kink` where f changes fastest.
double integrate_split(const auto& f, double a, double b, double kink) {
  if (!(a < b)) return 0.0;
  if (kink <= a || kink >= b) return integrate(f, a, b);
  return integrate(f, a, kink) + integrate(f, kink, b);
}

Interval clip(const Interval& iv, const UniformLaw& law) {
  return {std::max(iv.lo, law.lo), std::min(iv.hi, law.hi)};
}

}  // namespace

double UniformLaw::mass(const Interval& iv) const {
  const Interval c = clip(iv, *this);
  if (c.empty()) return 0.0;
  return c.width() / (hi - lo);
}

double UniformLaw::mass(const Stratum& s) const {
  double m = 0.0;
  for (const auto& iv : s.membership) m += mass(iv);
  return m;
}

LabeledPool::LabeledPool(std::vector<double> xs, std::vector<double> labels, LabelAlphabet alphabet,
                         std::optional<UniformLaw> law)
    : xs_(std::move(xs)), labels_(std::move(labels)), alphabet_(std::move(alphabet)), law_(law) {
  if (xs_.empty()) throw Error(Errc::empty_pool, "pool must contain at least one point");
  if (xs_.size() != labels_.size()) throw Error(Errc::domain, "covariate and label counts differ");
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    if (!std::isfinite(xs_[i])) {
      throw Error(Errc::domain, "non-finite covariate at point " + std::to_string(i));
    }
    if (!alphabet_.contains(labels_[i])) {
      throw Error(Errc::unsupported_label, "label at point " + std::to_string(i) + " is outside the alphabet");
    }
  }
  const auto [mn, mx] = std::minmax_element(xs_.begin(), xs_.end());
  min_x_ = *mn;
  max_x_ = *mx;
}

double LabeledPool::population_mean() const {
  double s = 0.0;
  for (double y : labels_) s += y;
  return s / static_cast<double>(labels_.size());
}

std::size_t LabeledPool::count_in(const Stratum& s) const {
  return static_cast<std::size_t>(std::count_if(xs_.begin(), xs_.end(), [&](double x) { return s.contains(x); }));
}

std::uint64_t LabeledPool::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](const std::vector<double>& v) {
    for (double d : v) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &d, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
  };
  feed(xs_);
  feed(labels_);
  return h;
}

LabelOracle::LabelOracle(const LabeledPool& pool, std::size_t budget)
    : pool_(&pool), budget_(budget), revealed_(pool.size(), 0) {}

double LabelOracle::reveal(PointId id) {
  if (id >= pool_->size()) throw Error(Errc::domain, "point id out of range");
  if (revealed_[id]) return pool_->labels_[id];
  if (spent() >= budget_) throw Error(Errc::budget_exhausted, "label budget exhausted");
  revealed_[id] = 1;
  order_.push_back(id);
  return pool_->labels_[id];
}

// ---------------------------------------------------------------------------

std::vector<std::string> validate(const DgpSpec& spec) {
  std::vector<std::string> warnings;
  std::visit(overloaded{
                 [&](const ThresholdFlip& d) {
                   if (!(d.threshold >= 0.0 && d.threshold <= 1.0)) {
                     throw Error(Errc::domain, "threshold t must lie in [0, 1]");
                   }
                   auto check_rho = [&](double rho, const char* name) {
                     if (!(rho >= 0.0 && rho <= 1.0)) {
                       std::ostringstream os;
                       os << name << " must lie in [0, 1] (got " << rho << ")";
                       throw Error(Errc::domain, os.str());
                     }
                     if (rho > 0.25) {
                       warnings.push_back(std::string(name) + " exceeds 1/4; outside the low-noise regime");
                     }
                   };
                   check_rho(d.rho_le, "rho_le (flip rate left of t)");
                   check_rho(d.rho_gt, "rho_gt (flip rate right of t)");
                 },
                 [&](const LogitDgp& d) {
                   if (!(d.nu > 0.0 && std::isfinite(d.nu))) throw Error(Errc::domain, "logit nu must be > 0");
                 },
                 [&](const ProbitDgp& d) {
                   if (!(d.nu > 0.0 && std::isfinite(d.nu))) throw Error(Errc::domain, "probit nu must be > 0");
                 },
             },
             spec);
  return warnings;
}

UniformLaw covariate_law(const DgpSpec& spec) {
  if (std::holds_alternative<ProbitDgp>(spec)) return {-5.0, 5.0};
  return {0.0, 1.0};
}

double prob_one(const DgpSpec& spec, double x) {
  return std::visit(overloaded{
                        [x](const ThresholdFlip& d) { return x < d.threshold ? d.rho_le : 1.0 - d.rho_gt; },
                        [x](const LogitDgp& d) { return logistic((2.0 * x - 1.0) / d.nu); },
                        [x](const ProbitDgp& d) { return normal_cdf((x - 0.25) / d.nu); },
                    },
                    spec);
}

double decision_boundary(const DgpSpec& spec) {
  return std::visit(overloaded{
                        [](const ThresholdFlip& d) { return d.threshold; },
                        [](const LogitDgp&) { return 0.5; },
                        [](const ProbitDgp&) { return 0.25; },
                    },
                    spec);
}

double mass_of_ones(const DgpSpec& spec, const Interval& iv) {
  const UniformLaw law = covariate_law(spec);
  const Interval c = clip(iv, law);
  if (c.empty()) return 0.0;
  const double density = 1.0 / (law.hi - law.lo);
  if (const auto* d = std::get_if<ThresholdFlip>(&spec)) {
    const double left = std::max(0.0, std::min(c.hi, d->threshold) - c.lo);
    const double right = std::max(0.0, c.hi - std::max(c.lo, d->threshold));
    return density * (left * d->rho_le + right * (1.0 - d->rho_gt));
  }
  auto f = [&spec](double x) { return prob_one(spec, x); };
  return density * integrate_split(f, c.lo, c.hi, decision_boundary(spec));
}

StratificationScheme analytic_scheme(const UniformLaw& law, std::span<const double> cuts) {
  std::vector<double> weights;
  double lo = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    const double hi = i < cuts.size() ? cuts[i] : std::numeric_limits<double>::infinity();
    weights.push_back(law.mass(Interval{lo, hi}));
    lo = hi;
  }
  return StratificationScheme::from_cuts(cuts, weights, Provenance::a_priori);
}

StratificationScheme natural_scheme(const DgpSpec& spec) {
  const double cut = decision_boundary(spec);
  return analytic_scheme(covariate_law(spec), std::span<const double>(&cut, 1));
}

TrueModel true_model(const DgpSpec& spec, const StratificationScheme& scheme) {
  const UniformLaw law = covariate_law(spec);
  TrueModel tm;
  const Interval all{law.lo, law.hi};
  tm.true_mean = mass_of_ones(spec, all);
  tm.variance = tm.true_mean * (1.0 - tm.true_mean);
  for (const auto& s : scheme.strata()) {
    double mass = 0.0;
    double ones = 0.0;
    for (const auto& iv : s.membership) {
      mass += law.mass(iv);
      ones += mass_of_ones(spec, iv);
    }
    const double m = mass > 0.0 ? ones / mass : 0.0;
    tm.weights.push_back(mass);
    tm.cond_variances.push_back(m * (1.0 - m));
    tm.sigma1 += m * (1.0 - m) * mass;
  }
  if (const auto* d = std::get_if<ThresholdFlip>(&spec)) {
    // thresholds form the classifier family, so the best one sits at t
    tm.bayes_risk = d->threshold * std::min(d->rho_le, 1.0 - d->rho_le) +
                    (1.0 - d->threshold) * std::min(d->rho_gt, 1.0 - d->rho_gt);
  } else {
    auto f = [&spec](double x) {
      const double p = prob_one(spec, x);
      return std::min(p, 1.0 - p);
    };
    tm.bayes_risk = integrate_split(f, law.lo, law.hi, decision_boundary(spec)) / (law.hi - law.lo);
  }
  return tm;
}

GeneratedPool generate_pool(const DgpSpec& spec, std::size_t size, Rng& rng) {
  validate(spec);
  if (size == 0) throw Error(Errc::empty_pool, "pool size M must be >= 1");
  const UniformLaw law = covariate_law(spec);
  std::vector<double> xs(size);
  std::vector<double> ys(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double x = rng.uniform(law.lo, law.hi);
    xs[i] = x;
    ys[i] = rng.uniform() < prob_one(spec, x) ? 1.0 : 0.0;
  }
  LabeledPool pool(std::move(xs), std::move(ys), LabelAlphabet::binary(), law);
  return GeneratedPool{std::move(pool), true_model(spec, natural_scheme(spec))};
}

GeneratedPool gen_threshold_pool(double t, double rho_le, double rho_gt, std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  return generate_pool(ThresholdFlip{t, rho_le, rho_gt}, size, rng);
}

GeneratedPool gen_logit_pool(double nu, std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  return generate_pool(LogitDgp{nu}, size, rng);
}

GeneratedPool gen_probit_pool(double nu, std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  return generate_pool(ProbitDgp{nu}, size, rng);
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

std::optional<double> parse_real(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

}  // namespace

CsvTable read_csv_columns(const std::filesystem::path& path, const CsvPoolOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw Error(Errc::parse, path.string() + ": missing header row");
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(Errc::parse, path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t xc = column(options.x_column);
  const std::size_t yc = column(options.y_column);

  CsvTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() <= std::max(xc, yc)) throw Error(Errc::parse, where + ": too few fields");
    const auto x = parse_real(fields[xc]);
    if (!x || !std::isfinite(*x)) {
      throw Error(Errc::parse, where + ": non-numeric covariate '" + fields[xc] + "' in column " + options.x_column);
    }
    const auto y = parse_real(fields[yc]);
    if (!y || !std::isfinite(*y)) {
      throw Error(Errc::parse, where + ": non-numeric label '" + fields[yc] + "' in column " + options.y_column);
    }
    table.xs.push_back(*x);
    table.labels.push_back(*y);
  }
  if (table.xs.empty()) throw Error(Errc::empty_pool, path.string() + ": no data rows");
  return table;
}

CsvTable keep_tails(const CsvTable& table, double q) {
  if (!(q > 0.0 && q < 0.5)) throw Error(Errc::domain, "tail quantile must lie in (0, 0.5)");
  std::vector<double> sorted = table.xs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * static_cast<double>(m))));
  const double low_cut = sorted[rank - 1];
  const double high_cut = sorted[m - rank];
  CsvTable out;
  for (std::size_t i = 0; i < table.xs.size(); ++i) {
    if (table.xs[i] <= low_cut || table.xs[i] >= high_cut) {
      out.xs.push_back(table.xs[i]);
      out.labels.push_back(table.labels[i]);
    }
  }
  return out;
}

LabelAlphabet infer_alphabet(std::span<const double> labels, std::size_t max_classes) {
  std::vector<double> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() > max_classes) {
    throw Error(Errc::parse, "label alphabet overflow: " + std::to_string(distinct.size()) +
                                 " distinct values exceed the limit of " + std::to_string(max_classes));
  }
  const bool small_ints = std::all_of(distinct.begin(), distinct.end(), [&](double v) {
    return v >= 0.0 && v == std::floor(v) && v < static_cast<double>(max_classes);
  });
  if (small_ints) {
    return LabelAlphabet::classes(std::max(1, static_cast<int>(distinct.back())));
  }
  if (distinct.size() < 2) throw Error(Errc::parse, "a non-integer label alphabet needs two distinct values");
  return LabelAlphabet(std::move(distinct));
}

LabeledPool load_csv_pool(const std::filesystem::path& path, const CsvPoolOptions& options) {
  CsvTable table = read_csv_columns(path, options);
  if (options.tail_quantile) table = keep_tails(table, *options.tail_quantile);
  LabelAlphabet alphabet = infer_alphabet(table.labels, options.max_classes);
  return LabeledPool(std::move(table.xs), std::move(table.labels), std::move(alphabet));
}

// ---------------------------------------------------------------------------

Draw sample_from_stratum(LabelOracle& oracle, const Stratum& stratum, Rng& rng) {
  if (oracle.remaining() == 0) throw Error(Errc::budget_exhausted, "label budget exhausted");
  const LabeledPool& pool = oracle.pool();
  std::vector<PointId> candidates;
  for (PointId i = 0; i < pool.size(); ++i) {
    if (!oracle.revealed(i) && stratum.contains(pool.x(i))) candidates.push_back(i);
  }
  if (candidates.empty()) {
    throw Error(Errc::stratum_exhausted, "stratum " + std::to_string(stratum.id) + " has no unrevealed points");
  }
  const PointId id = candidates[rng.index(candidates.size())];
  return Draw{id, pool.x(id), oracle.reveal(id)};
}

StratumSampler::StratumSampler(const LabelOracle& oracle, const StratificationScheme& scheme)
    : candidates_(scheme.size()) {
  const LabeledPool& pool = oracle.pool();
  for (PointId i = 0; i < pool.size(); ++i) {
    if (oracle.revealed(i)) continue;
    const int g = scheme.locate(pool.x(i));
    if (g >= 0) candidates_[static_cast<std::size_t>(g)].push_back(i);
  }
}

Draw StratumSampler::draw(LabelOracle& oracle, std::size_t g, Rng& rng) {
  if (oracle.remaining() == 0) throw Error(Errc::budget_exhausted, "label budget exhausted");
  auto& bucket = candidates_[g];
  while (!bucket.empty()) {
    const std::size_t j = rng.index(bucket.size());
    const PointId id = bucket[j];
    bucket[j] = bucket.back();
    bucket.pop_back();
    if (oracle.revealed(id)) continue;
    return Draw{id, oracle.pool().x(id), oracle.reveal(id)};
  }
  throw Error(Errc::stratum_exhausted, "stratum " + std::to_string(g) + " has no unrevealed points");
}

}  // namespace pb
