#include "medsurv/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <vector>

#include "medsurv/errors.hpp"

namespace medsurv {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

[[noreturn]] void bad(const Entry& e, const std::string& what) {
  throw UsageError("config line " + std::to_string(e.line) + " (" + e.key + "): " + what);
}

double as_double(const Entry& e) {
  double v = 0.0;
  const char* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || ptr != end) bad(e, "expected a number, got '" + e.value + "'");
  return v;
}

long long as_integer(const Entry& e) {
  long long v = 0;
  const char* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || ptr != end) bad(e, "expected an integer, got '" + e.value + "'");
  return v;
}

int as_int(const Entry& e) {
  const long long v = as_integer(e);
  if (v < -1000000000LL || v > 1000000000LL) bad(e, "integer out of range");
  return static_cast<int>(v);
}

std::uint64_t as_seed(const Entry& e) {
  std::uint64_t v = 0;
  const char* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || ptr != end) bad(e, "expected a nonnegative integer seed, got '" + e.value + "'");
  return v;
}

bool as_bool(const Entry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  bad(e, "expected true or false");
}

bool apply_boosting(BoostConfig& b, const std::string& field, const Entry& e) {
  if (field == "rounds") b.rounds = as_int(e);
  else if (field == "depth") b.max_depth = as_int(e);
  else if (field == "learning_rate") b.learning_rate = as_double(e);
  else if (field == "min_child_weight") b.min_child_weight = as_double(e);
  else if (field == "lambda") b.lambda = as_double(e);
  else return false;
  return true;
}

std::string num(double v) { return format_double(v); }

}  // namespace

RunConfig parse_config(std::istream& in) {
  std::vector<Entry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    entries.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no});
  }

  RunConfig cfg;
  PipelineConfig& p = cfg.pipeline;
  std::optional<double> py, pm;
  std::vector<const Entry*> mediator_entries;
  for (const Entry& e : entries) {
    const std::string& k = e.key;
    if (k == "mode") {
      p.effects.mode = parse_mode(e.value);
    } else if (k == "k_range") {
      const auto dots = e.value.find("..");
      if (dots == std::string::npos) bad(e, "expected lo..hi");
      p.k_min = as_int({k, trim(e.value.substr(0, dots)), e.line});
      p.k_max = as_int({k, trim(e.value.substr(dots + 2)), e.line});
    } else if (k == "restarts") {
      p.restarts = as_int(e);
    } else if (k == "crossfit_folds") {
      p.effects.crossfit_folds = as_int(e);
    } else if (k == "rng_seed") {
      cfg.rng_seed = as_seed(e);
    } else if (k == "dissimilarity.blend") {
      p.blend = as_double(e);
    } else if (k == "tsne.perplexity") {
      p.tsne.perplexity = as_double(e);
    } else if (k == "tsne.iterations") {
      p.tsne.iterations = as_int(e);
    } else if (k == "tsne.learning_rate") {
      p.tsne.learning_rate = as_double(e);
    } else if (k == "tsne.seed") {
      p.tsne_seed = as_seed(e);
    } else if (k.rfind("boosting.", 0) == 0) {
      const std::string field = k.substr(9);
      if (!apply_boosting(p.effects.outcome, field, e)) bad(e, "unknown key");
      apply_boosting(p.effects.mediator, field, e);
    } else if (k.rfind("mediator_boosting.", 0) == 0) {
      BoostConfig probe;
      if (!apply_boosting(probe, k.substr(18), e)) bad(e, "unknown key");
      mediator_entries.push_back(&e);
    } else if (k == "tree.max_depth") {
      p.tree_max_depth = as_int(e);
    } else if (k == "tree.min_leaf_fraction") {
      p.min_leaf_fraction = as_double(e);
    } else if (k == "tree.min_leaf") {
      p.min_leaf_floor = as_int(e);
      if (p.min_leaf_floor < 1) bad(e, "must be >= 1");
    } else if (k == "thresholds") {
      if (e.value != "calibrate") bad(e, "the only accepted value is 'calibrate'");
      cfg.calibrate = true;
    } else if (k == "thresholds.pY_star") {
      py = as_double(e);
    } else if (k == "thresholds.pM_star") {
      pm = as_double(e);
    } else if (k == "lrt.df_policy") {
      p.lrt.df_policy = parse_df_policy(e.value);
    } else if (k == "lrt.mediator_intercept") {
      p.lrt.mediator_intercept = as_bool(e);
    } else if (k == "lrt.literal_models") {
      const bool on = as_bool(e);
      p.lrt.df_policy = on ? DfPolicy::kLeavesMinusOne : DfPolicy::kParameterDifference;
      p.lrt.mediator_intercept = !on;
    } else {
      bad(e, "unknown key");
    }
  }
  for (const Entry* e : mediator_entries) apply_boosting(p.effects.mediator, e->key.substr(18), *e);

  if (py.has_value() != pm.has_value()) throw UsageError("config: thresholds.pY_star and thresholds.pM_star go together");
  if (py) {
    if (cfg.calibrate) throw UsageError("config: fixed thresholds conflict with thresholds = calibrate");
    if (!(*py >= 0.0 && *py <= 1.0 && *pm >= 0.0 && *pm <= 1.0)) throw UsageError("config: thresholds must be probabilities");
    cfg.thresholds = Thresholds{*py, *pm};
  }
  if (p.k_min < 2) throw UsageError("config: k_range minimum must be >= 2");
  if (p.k_max < p.k_min) throw UsageError("config: k_range maximum below minimum");
  if (!(p.min_leaf_fraction > 0.0 && p.min_leaf_fraction < 0.5)) throw UsageError("config: tree.min_leaf_fraction must lie in (0, 0.5)");
  if (!(p.tsne.perplexity > 0.0)) throw UsageError("config: tsne.perplexity must be positive");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  return parse_config(in);
}

std::map<std::string, std::string> config_entries(const RunConfig& c) {
  const PipelineConfig& p = c.pipeline;
  std::map<std::string, std::string> m;
  m["mode"] = to_string(p.effects.mode);
  m["k_range"] = std::to_string(p.k_min) + ".." + std::to_string(p.k_max);
  m["restarts"] = std::to_string(p.restarts);
  m["crossfit_folds"] = std::to_string(p.effects.crossfit_folds);
  m["rng_seed"] = std::to_string(c.rng_seed);
  m["dissimilarity.blend"] = num(p.blend);
  m["tsne.perplexity"] = num(p.tsne.perplexity);
  m["tsne.iterations"] = std::to_string(p.tsne.iterations);
  m["tsne.learning_rate"] = num(p.tsne.learning_rate);
  m["tsne.seed"] = p.tsne_seed ? std::to_string(*p.tsne_seed) : "run seed";
  auto boost = [&](const std::string& prefix, const BoostConfig& b) {
    m[prefix + "rounds"] = std::to_string(b.rounds);
    m[prefix + "depth"] = std::to_string(b.max_depth);
    m[prefix + "learning_rate"] = num(b.learning_rate);
    m[prefix + "min_child_weight"] = num(b.min_child_weight);
    m[prefix + "lambda"] = num(b.lambda);
  };
  boost("boosting.", p.effects.outcome);
  boost("mediator_boosting.", p.effects.mediator);
  m["tree.max_depth"] = std::to_string(p.tree_max_depth);
  m["tree.min_leaf_fraction"] = num(p.min_leaf_fraction);
  m["tree.min_leaf"] = std::to_string(p.min_leaf_floor);
  if (c.thresholds) {
    m["thresholds.pY_star"] = num(c.thresholds->pY_star);
    m["thresholds.pM_star"] = num(c.thresholds->pM_star);
  } else {
    m["thresholds"] = c.calibrate ? "calibrate" : "unset";
  }
  m["lrt.df_policy"] = to_string(p.lrt.df_policy);
  m["lrt.mediator_intercept"] = p.lrt.mediator_intercept ? "true" : "false";
  return m;
}

}  // namespace medsurv
