#include "partibandits/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "toml.hpp"

namespace pb {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) { throw Error(Errc::config, key + ": " + what); }

/// Typed access to one TOML table that remembers which keys were read, so
/// leftovers can be reported as unknown.
class Section {
 public:
  Section(const toml::table& table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

  std::string key(std::string_view k) const { return prefix_.empty() ? std::string(k) : prefix_ + "." + std::string(k); }

  bool has(std::string_view k) {
    seen_.insert(std::string(k));
    return table_.contains(k);
  }

  std::optional<double> real(std::string_view k) {
    if (!has(k)) return std::nullopt;
    const auto* node = table_.get(k);
    if (auto v = node->value<double>()) return *v;
    fail(key(k), "expected a number");
  }

  std::optional<std::int64_t> integer(std::string_view k) {
    if (!has(k)) return std::nullopt;
    const auto* node = table_.get(k);
    if (!node->is_integer()) fail(key(k), "expected an integer");
    return node->as_integer()->get();
  }

  std::optional<std::size_t> count(std::string_view k, std::int64_t min = 0) {
    auto v = integer(k);
    if (v && *v < min) fail(key(k), "must be >= " + std::to_string(min));
    return v ? std::optional<std::size_t>(static_cast<std::size_t>(*v)) : std::nullopt;
  }

  std::optional<std::string> string(std::string_view k) {
    if (!has(k)) return std::nullopt;
    const auto* node = table_.get(k);
    if (!node->is_string()) fail(key(k), "expected a string");
    return node->as_string()->get();
  }

  std::optional<std::vector<double>> reals(std::string_view k) {
    if (!has(k)) return std::nullopt;
    const auto* arr = table_.get(k)->as_array();
    if (!arr) fail(key(k), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& el : *arr) {
      auto v = el.value<double>();
      if (!v) fail(key(k), "expected an array of numbers");
      out.push_back(*v);
    }
    return out;
  }

  const toml::node* node(std::string_view k) {
    if (!has(k)) return nullptr;
    return table_.get(k);
  }

  void reject_unknown() const {
    for (const auto& [k, v] : table_) {
      if (!seen_.count(std::string(k.str()))) fail(key(k.str()), "unknown key");
    }
  }

 private:
  const toml::table& table_;
  std::string prefix_;
  std::set<std::string> seen_;
};

std::vector<std::size_t> budget_range(std::int64_t from, std::int64_t to, std::int64_t step, const std::string& key) {
  if (from < 1) fail(key, "range start must be >= 1");
  if (step < 1) fail(key, "range step must be >= 1");
  if (to < from) fail(key, "range end must not precede its start");
  std::vector<std::size_t> out;
  for (std::int64_t b = from; b <= to; b += step) out.push_back(static_cast<std::size_t>(b));
  return out;
}

std::vector<std::size_t> parse_budgets(const toml::node& node, const std::string& key) {
  if (const auto* arr = node.as_array()) {
    std::vector<std::size_t> out;
    for (const auto& el : *arr) {
      if (!el.is_integer() || el.as_integer()->get() < 1) fail(key, "budgets must be integers >= 1");
      out.push_back(static_cast<std::size_t>(el.as_integer()->get()));
    }
    return out;
  }
  if (const auto* tbl = node.as_table()) {
    Section s(*tbl, key);
    const auto from = s.integer("from");
    const auto to = s.integer("to");
    const auto step = s.integer("step").value_or(1);
    if (!from || !to) fail(key, "a budget range needs 'from' and 'to'");
    s.reject_unknown();
    return budget_range(*from, *to, step, key);
  }
  fail(key, "expected an array or a {from, to, step} table");
}

Scenario parse_scenario(const toml::table& tbl, std::size_t index) {
  Section s(tbl, "scenario[" + std::to_string(index) + "]");
  Scenario sc;
  sc.name = s.string("name").value_or("scenario" + std::to_string(index));
  const std::string dgp = s.string("dgp").value_or("threshold");
  sc.pool_size = s.count("pool_size", 1).value_or(sc.pool_size);
  if (dgp == "threshold") {
    ThresholdFlip d;
    d.threshold = s.real("threshold").value_or(d.threshold);
    if (auto rho = s.real("rho")) d.rho_le = d.rho_gt = *rho;
    d.rho_le = s.real("rho_le").value_or(d.rho_le);
    d.rho_gt = s.real("rho_gt").value_or(d.rho_gt);
    sc.source = DgpSpec{d};
  } else if (dgp == "logit") {
    sc.source = DgpSpec{LogitDgp{s.real("nu").value_or(LogitDgp{}.nu)}};
  } else if (dgp == "probit") {
    sc.source = DgpSpec{ProbitDgp{s.real("nu").value_or(ProbitDgp{}.nu)}};
  } else if (dgp == "csv") {
    CsvSource c;
    c.path = s.string("path").value_or("");
    c.x_column = s.string("x_column").value_or(c.x_column);
    c.y_column = s.string("y_column").value_or(c.y_column);
    c.tail_quantile = s.real("tail_quantile");
    c.subsample = s.count("subsample").value_or(0);
    c.max_classes = s.count("max_classes", 2).value_or(c.max_classes);
    sc.source = c;
  } else if (dgp == "arms") {
    sc.source = ArmsSource{s.reals("arms").value_or(std::vector<double>{})};
  } else {
    fail(s.key("dgp"), "unknown kind '" + dgp + "' (threshold, logit, probit, csv, arms)");
  }
  if (const auto* d = std::get_if<DgpSpec>(&sc.source)) {
    try {
      pb::validate(*d);
    } catch (const Error& e) {
      std::string msg = e.what();
      std::string field = "dgp";
      for (const char* name : {"rho_le", "rho_gt", "threshold", "nu"}) {
        if (msg.find(name) != std::string::npos) {
          field = name;
          break;
        }
      }
      fail(s.key(field), msg);
    }
  }
  s.reject_unknown();
  return sc;
}

AlgorithmSpec parse_algorithm(const toml::table& tbl, std::size_t index) {
  Section s(tbl, "algorithm[" + std::to_string(index) + "]");
  AlgorithmSpec a;
  const auto kind = s.string("kind");
  if (!kind) fail(s.key("kind"), "required (srs, strs, ws-ucb, partibandits, thompson)");
  const auto parsed = parse_algorithm_kind(*kind);
  if (!parsed) fail(s.key("kind"), "unknown algorithm '" + *kind + "' (srs, strs, ws-ucb, partibandits, thompson)");
  a.kind = *parsed;
  a.name = s.string("name").value_or(*kind);
  a.splits = s.reals("splits").value_or(a.splits);
  a.tau = s.real("tau").value_or(a.tau);
  a.delta = s.real("delta").value_or(a.delta);
  a.c1 = s.real("c1").value_or(a.c1);
  a.c2 = s.real("c2").value_or(a.c2);
  a.subroutine = s.string("subroutine").value_or(a.subroutine);
  a.thompson.bins = s.count("bins", 1).value_or(a.thompson.bins);
  a.thompson.bin_lo = s.real("bin_lo").value_or(a.thompson.bin_lo);
  a.thompson.bin_hi = s.real("bin_hi").value_or(a.thompson.bin_hi);
  a.thompson.prior_alpha = s.real("prior_alpha").value_or(a.thompson.prior_alpha);
  a.thompson.prior_beta = s.real("prior_beta").value_or(a.thompson.prior_beta);
  s.reject_unknown();
  return a;
}

template <class F>
void for_each_table(Section& root, std::string_view key, F&& f) {
  const toml::node* node = root.node(key);
  if (!node) return;
  const auto* arr = node->as_array();
  if (!arr) fail(std::string(key), "expected an array of tables ([[" + std::string(key) + "]])");
  std::size_t i = 0;
  for (const auto& el : *arr) {
    const auto* tbl = el.as_table();
    if (!tbl) fail(std::string(key) + "[" + std::to_string(i) + "]", "expected a table");
    f(*tbl, i++);
  }
}

}  // namespace

ConfigDocument parse_config(std::string_view text, std::string_view origin) {
  toml::table root_table;
  try {
    root_table = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw Error(Errc::config, os.str());
  }
  Section root(root_table, "");
  ConfigDocument doc;
  ExperimentConfig& c = doc.config;
  if (auto seed = root.integer("seed")) {
    if (*seed < 0) fail("seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(*seed);
    doc.has_seed = true;
  }
  c.replications = root.count("replications", 1).value_or(c.replications);
  c.percentile = root.real("percentile").value_or(c.percentile);
  if (auto m = root.string("metric")) {
    const auto metric = parse_metric(*m);
    if (!metric) fail("metric", "expected 'squared' or 'absolute', got '" + *m + "'");
    c.metric = *metric;
  }
  if (auto p = root.count("parallelism", 1)) c.parallelism = static_cast<unsigned>(*p);
  if (const auto* b = root.node("budgets")) c.budgets = parse_budgets(*b, "budgets");

  if (root.has("scenario")) {
    c.scenarios.clear();
    for_each_table(root, "scenario", [&](const toml::table& t, std::size_t i) { c.scenarios.push_back(parse_scenario(t, i)); });
  }
  for_each_table(root, "algorithm", [&](const toml::table& t, std::size_t i) { c.roster.push_back(parse_algorithm(t, i)); });
  root.reject_unknown();
  return doc;
}

ConfigDocument load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::config, "cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

// ---------------------------------------------------------------------------

namespace {

const char* kQuickstart = R"(# Small threshold scenario exercising every algorithm.
replications = 200
percentile = 0.9
metric = "squared"
budgets = { from = 20, to = 200, step = 20 }

[[scenario]]
name = "threshold"
dgp = "threshold"
threshold = 0.5
rho = 0.05

[[algorithm]]
kind = "srs"

[[algorithm]]
name = "strs@0.5"
kind = "strs"
splits = [0.5]

[[algorithm]]
name = "ws-ucb@0.5"
kind = "ws-ucb"
splits = [0.5]

[[algorithm]]
kind = "partibandits"

[[algorithm]]
kind = "thompson"
bins = 5
)";

const char* kFig1Left = R"(# Threshold DGP at t = 0.5 with a flip fraction nu on both sides.
replications = 500
percentile = 0.9
metric = "absolute"
budgets = { from = 10, to = 100, step = 10 }

[[scenario]]
name = "nu-0.00"
dgp = "threshold"
threshold = 0.5
rho = 0.0

[[scenario]]
name = "nu-0.02"
dgp = "threshold"
threshold = 0.5
rho = 0.02

[[scenario]]
name = "nu-0.04"
dgp = "threshold"
threshold = 0.5
rho = 0.04

[[scenario]]
name = "nu-0.06"
dgp = "threshold"
threshold = 0.5
rho = 0.06

[[scenario]]
name = "nu-0.08"
dgp = "threshold"
threshold = 0.5
rho = 0.08

[[scenario]]
name = "nu-0.10"
dgp = "threshold"
threshold = 0.5
rho = 0.10

[[algorithm]]
kind = "srs"

[[algorithm]]
kind = "partibandits"
subroutine = "a2-threshold"
delta = 0.1
tau = 0.5
)";

const char* kFig1Right = R"(# Fixed split thresholds against SRS; the true split is 0.5.
replications = 500
percentile = 0.9
metric = "absolute"
budgets = { from = 50, to = 200, step = 10 }

[[scenario]]
name = "threshold"
dgp = "threshold"
threshold = 0.5
rho = 0.05

[[algorithm]]
kind = "srs"

[[algorithm]]
name = "ws-ucb@0.3"
kind = "ws-ucb"
splits = [0.3]

[[algorithm]]
name = "ws-ucb@0.4"
kind = "ws-ucb"
splits = [0.4]

[[algorithm]]
name = "ws-ucb@0.5"
kind = "ws-ucb"
splits = [0.5]
)";

const char* kFig1Appendix = R"(# The flip-fraction grid over budgets 80 to 140.
replications = 500
percentile = 0.9
metric = "absolute"
budgets = { from = 80, to = 140, step = 10 }

[[scenario]]
name = "nu-0.00"
dgp = "threshold"
rho = 0.0

[[scenario]]
name = "nu-0.05"
dgp = "threshold"
rho = 0.05

[[scenario]]
name = "nu-0.10"
dgp = "threshold"
rho = 0.10

[[algorithm]]
kind = "srs"

[[algorithm]]
kind = "partibandits"
)";

const char* kLogit = R"(# X ~ Unif[0,1], P(Y=1|x) = logistic((2x - 1) / nu).
replications = 500
percentile = 0.9
metric = "absolute"
budgets = { from = 80, to = 140, step = 10 }

[[scenario]]
name = "logit-0.05"
dgp = "logit"
nu = 0.05

[[scenario]]
name = "logit-0.10"
dgp = "logit"
nu = 0.1

[[scenario]]
name = "logit-0.25"
dgp = "logit"
nu = 0.25

[[algorithm]]
kind = "srs"

[[algorithm]]
kind = "partibandits"
)";

const char* kProbit = R"(# X ~ Unif[-5,5], P(Y=1|x) = Phi((x - 0.25) / nu).
replications = 500
percentile = 0.9
metric = "absolute"
budgets = { from = 80, to = 140, step = 10 }

[[scenario]]
name = "probit-0.10"
dgp = "probit"
nu = 0.1

[[scenario]]
name = "probit-0.50"
dgp = "probit"
nu = 0.5

[[scenario]]
name = "probit-1.00"
dgp = "probit"
nu = 1.0

[[algorithm]]
kind = "srs"

[[algorithm]]
kind = "partibandits"
)";

const char* kThompsonProto = R"(# Three Bernoulli arms, 3000 rounds, Beta(1,1) prior.
replications = 500
percentile = 0.9
metric = "absolute"
budgets = [3000]

[[scenario]]
name = "arms"
dgp = "arms"
arms = [0.1, 0.5, 0.8]

[[algorithm]]
kind = "thompson"
prior_alpha = 1.0
prior_beta = 1.0
)";

const char* kThompsonBinned = R"(# Five covariate bins over [0,1] on the threshold DGP at t = 0.5.
replications = 500
percentile = 0.9
metric = "absolute"
budgets = { from = 10, to = 100, step = 10 }

[[scenario]]
name = "nu-0.00"
dgp = "threshold"
rho = 0.0

[[scenario]]
name = "nu-0.05"
dgp = "threshold"
rho = 0.05

[[scenario]]
name = "nu-0.10"
dgp = "threshold"
rho = 0.10

[[algorithm]]
kind = "srs"

[[algorithm]]
kind = "thompson"
bins = 5

[[algorithm]]
kind = "partibandits"
)";

const char* kCsvTails = R"(# File-backed pool restricted to the 5% tails of x. Edit `path` first.
replications = 500
percentile = 0.9
metric = "absolute"
budgets = { from = 10, to = 100, step = 10 }

[[scenario]]
name = "csv"
dgp = "csv"
path = "data/pool.csv"
x_column = "x"
y_column = "y"
tail_quantile = 0.05

[[algorithm]]
kind = "srs"

[[algorithm]]
kind = "partibandits"
)";

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = {
      {"quickstart", "small threshold scenario with every algorithm; default for replay", kQuickstart},
      {"fig1-left", "PartiBandits vs SRS, flip fraction 0 to 0.10, budgets 10-100",
       kFig1Left},
      {"fig1-right", "WS-UCB vs SRS, split thresholds 0.3-0.5, budgets 50-200",
       kFig1Right},
      {"fig1-appendix", "flip-fraction grid, budgets 80-140", kFig1Appendix},
      {"logit", "logit DGP, budgets 80-140", kLogit},
      {"probit", "asymmetric probit DGP, budgets 80-140", kProbit},
      {"thompson-proto", "Thompson prototype: K=3, p=(0.1,0.5,0.8), T=3000", kThompsonProto},
      {"thompson-binned", "binned Thompson vs SRS: 5 bins, threshold 0.5, budgets 10-100", kThompsonBinned},
      {"csv-tails", "file-backed pool restricted to covariate tails", kCsvTails},
  };
  return all;
}

const Preset& find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  std::string names;
  for (const auto& p : presets()) names += (names.empty() ? "" : ", ") + p.name;
  throw Error(Errc::config, "preset: unknown name '" + std::string(name) + "' (available: " + names + ")");
}

ExperimentConfig compose(const ConfigDocument& doc, const Overrides& overrides, std::optional<std::uint64_t> env_seed) {
  ExperimentConfig c = doc.config;
  if (overrides.seed) {
    c.seed = *overrides.seed;
  } else if (!doc.has_seed && env_seed) {
    c.seed = *env_seed;
  }
  if (overrides.budgets) c.budgets = *overrides.budgets;
  if (overrides.replications) c.replications = *overrides.replications;
  if (overrides.metric) c.metric = *overrides.metric;
  if (overrides.parallelism) c.parallelism = *overrides.parallelism;
  return c;
}

std::vector<std::size_t> parse_budget_list(std::string_view text) {
  auto number = [&](std::string_view s) {
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) fail("budgets", "not an integer: '" + std::string(s) + "'");
    return v;
  };
  if (text.find(':') != std::string_view::npos) {
    std::vector<std::int64_t> parts;
    std::size_t start = 0;
    while (true) {
      const auto colon = text.find(':', start);
      parts.push_back(number(text.substr(start, colon - start)));
      if (colon == std::string_view::npos) break;
      start = colon + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) fail("budgets", "range form is from:to[:step]");
    return budget_range(parts[0], parts[1], parts.size() == 3 ? parts[2] : 1, "budgets");
  }
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto v = number(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (v < 1) fail("budgets", "budgets must be >= 1");
    out.push_back(static_cast<std::size_t>(v));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace pb
