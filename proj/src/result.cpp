#include "medsurv/result.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "medsurv/errors.hpp"
#include "medsurv/numstats.hpp"

namespace medsurv {
namespace {

using Json = nlohmann::ordered_json;

std::vector<double> to_vector(const Eigen::Ref<const VectorXd>& v) { return {v.data(), v.data() + v.size()}; }

Json lrt_json(const LrtResult& r) {
  Json j;
  j["valid"] = r.valid;
  if (!r.valid) {
    j["reason"] = r.reason;
    return j;
  }
  j["statistic"] = r.statistic;  // +inf is written as null
  j["df"] = r.df;
  j["p"] = r.p_value;
  j["df_alternative"] = r.df_alternative;
  j["p_alternative"] = r.p_alternative;
  j["degenerate"] = r.degenerate;
  return j;
}

Json tree_json(const ProfileTree& tree) {
  Json nodes = Json::array();
  for (const auto& n : tree.nodes) {
    Json j;
    if (n.is_leaf()) {
      j["leaf_id"] = n.leaf_id;
      j["majority_label"] = n.majority_label;
    } else {
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
      j["gain"] = n.gain;
    }
    j["size"] = n.size;
    j["class_counts"] = n.class_counts;
    nodes.push_back(std::move(j));
  }
  return nodes;
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_p(const Json& v) {
  if (v.is_null()) return "-";
  return fmt(v.get<double>(), "%.3g");
}

}  // namespace

std::vector<double> counterfactual_grid(const Eigen::Ref<const VectorXd>& time, int points) {
  if (points < 2) throw UsageError("counterfactual grid needs at least two points");
  const double upper = quantile(to_vector(time), 0.95);
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) grid[static_cast<std::size_t>(k)] = upper * k / (points - 1);
  return grid;
}

Json build_result(const PipelineResult& result, const ResultContext& ctx) {
  if (ctx.data == nullptr) throw UsageError("build_result: missing dataset");
  const SurvivalDataset& ds = *ctx.data;
  const PipelineConfig& pc = ctx.config.pipeline;
  Json doc;
  doc["schema_version"] = kResultSchemaVersion;
  doc["tool"] = {{"name", "medsurv"}, {"version", kToolVersion}};

  Json meta;
  meta["seed"] = ctx.seed;
  meta["df_policy"] = to_string(pc.lrt.df_policy);
  meta["df_alternative_policy"] = to_string(pc.lrt.df_policy == DfPolicy::kParameterDifference
                                                ? DfPolicy::kLeavesMinusOne
                                                : DfPolicy::kParameterDifference);
  meta["mediator_intercept"] = pc.lrt.mediator_intercept;
  meta["tie_policy"] = "breslow";
  meta["baseline_hazard"] = "breslow";
  meta["permutation_scheme"] = "covariate rows permuted jointly; time, event, treatment and mediator fixed";
  meta["embedding"] = "exact t-SNE on the NIECC dissimilarity (custom-distance input)";
  meta["uncalibrated"] = ctx.uncalibrated;
  doc["metadata"] = meta;

  Json data;
  data["n"] = ds.size();
  data["p"] = ds.num_covariates();
  data["events"] = ds.num_events();
  data["treated"] = ds.num_treated();
  data["covariate_names"] = ds.covariate_names;
  data["rows_read"] = ctx.load_report.rows_read;
  data["rows_dropped_missing"] = ctx.load_report.rows_dropped_missing;
  data["rows_rejected_mediator_timing"] = ctx.load_report.rows_rejected_mediator_timing;
  data["skipped_columns"] = ctx.load_report.skipped_columns;
  doc["data"] = data;

  Json config = Json::object();
  for (const auto& [k, v] : config_entries(ctx.config)) config[k] = v;
  doc["config"] = config;

  doc["thresholds"] = {{"pY_star", ctx.thresholds.pY_star},
                       {"pM_star", ctx.thresholds.pM_star},
                       {"source", ctx.thresholds_source},
                       {"calibrated", !ctx.uncalibrated}};

  // Models for the counterfactual curves: the pipeline's own fit, or a
  // full-data refit when effects were cross-fitted.
  OutcomeModel outcome;
  MediatorModel mediator;
  if (result.outcome && result.mediator) {
    outcome = *result.outcome;
    mediator = *result.mediator;
  } else {
    outcome = fit_outcome_model(ds, pc.effects.mode, pc.effects.outcome);
    mediator = fit_mediator_model(ds, pc.effects.mode, pc.effects.mediator);
  }
  const OutcomeDiagnostics& diag = outcome.diagnostics();
  doc["outcome_model"] = {{"mode", to_string(outcome.mode())},
                          {"event_rate", diag.event_rate},
                          {"rare_event_warning", diag.rare_event_warning},
                          {"converged", diag.converged},
                          {"ridge", diag.ridge}};

  doc["effects"] = {{"crossfit_folds", result.effects.crossfit_folds},
                    {"niecc", to_vector(result.effects.niecc)},
                    {"dte", to_vector(result.effects.dte)},
                    {"tte", to_vector(result.effects.tte)}};

  doc["embedding"] = {{"seed", result.embedding.seed},
                      {"kl_divergence", result.embedding.kl_divergence},
                      {"x", to_vector(result.embedding.coords.col(0))},
                      {"y", to_vector(result.embedding.coords.col(1))}};

  Json candidates = Json::array();
  for (const auto& c : result.candidates) {
    Json j;
    j["k"] = c.k;
    j["restart"] = c.restart;
    j["leaf_count"] = c.score.leaf_count;
    j["valid"] = c.score.valid;
    if (c.score.valid) {
      j["pY"] = c.score.pY;
      j["pM"] = c.score.pM;
    } else {
      j["pY"] = nullptr;
      j["pM"] = nullptr;
      j["reason"] = c.score.reason;
    }
    j["metric"] = c.score.metric;
    j["inertia"] = c.clustering.inertia;
    j["outcome_lrt"] = lrt_json(c.score.outcome);
    j["mediator_lrt"] = lrt_json(c.score.mediator);
    candidates.push_back(std::move(j));
  }
  doc["candidates"] = candidates;

  std::vector<int> leaves(static_cast<std::size_t>(ds.size()), 0);
  std::vector<LeafRule> rules;
  Json verdict;
  if (result.selected) {
    const Candidate& sel = result.candidates[*result.selected];
    verdict["outcome"] = "heterogeneous";
    verdict["selected"] = {{"candidate", *result.selected}, {"k", sel.k}, {"restart", sel.restart}};
    leaves = sel.leaves;
    rules = tree_rules(sel.tree, ds.covariate_names);
    Json profile;
    profile["k"] = sel.k;
    profile["restart"] = sel.restart;
    profile["labels"] = sel.clustering.labels;
    profile["leaves"] = sel.leaves;
    profile["tree"] = tree_json(sel.tree);
    doc["verdict"] = verdict;
    doc["profile"] = profile;
  } else {
    verdict["outcome"] = "homogeneous";
    verdict["selected"] = nullptr;
    LeafRule all;
    all.leaf_id = 0;
    all.size = ds.size();
    all.text = "all subjects";
    rules.push_back(all);
    doc["verdict"] = verdict;
    doc["profile"] = nullptr;
  }

  const std::vector<double> grid = counterfactual_grid(ds.time);
  Json subgroups = Json::array();
  Json curves = Json::array();
  for (const LeafRule& rule : rules) {
    std::vector<Index> rows;
    for (Index i = 0; i < ds.size(); ++i) {
      if (leaves[static_cast<std::size_t>(i)] == rule.leaf_id) rows.push_back(i);
    }
    std::vector<double> values;
    MatrixXd xs(static_cast<Index>(rows.size()), ds.num_covariates());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      values.push_back(result.effects.niecc[rows[r]]);
      xs.row(static_cast<Index>(r)) = ds.covariates.row(rows[r]);
    }
    Json g;
    g["leaf_id"] = rule.leaf_id;
    g["rule"] = rule.text;
    g["size"] = rows.size();
    g["majority_label"] = rule.majority_label;
    g["mean_niecc"] = mean(values);
    g["niecc_p10"] = quantile(values, 0.10);
    g["niecc_p90"] = quantile(values, 0.90);
    Json conds = Json::array();
    for (const auto& c : rule.conditions) {
      conds.push_back({{"feature", c.feature}, {"name", c.name}, {"op", c.less ? "<" : ">="}, {"threshold", c.threshold}});
    }
    g["conditions"] = conds;
    subgroups.push_back(std::move(g));
    for (CounterfactualSetting s : {CounterfactualSetting::kTreatedNaturalMediator,
                                    CounterfactualSetting::kTreatedControlMediator,
                                    CounterfactualSetting::kControlNaturalMediator}) {
      curves.push_back({{"leaf_id", rule.leaf_id},
                        {"setting", to_string(s)},
                        {"survival", to_vector(counterfactual_survival(outcome, mediator, xs, s, grid))}});
    }
  }
  doc["subgroups"] = subgroups;
  doc["counterfactual"] = {{"time_grid", grid}, {"curves", curves}};
  return doc;
}

void check_result_schema(const Json& doc) {
  if (!doc.is_object() || !doc.contains("schema_version")) {
    throw DataError("not a medsurv result document (missing schema_version)");
  }
  if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kResultSchemaVersion) {
    throw DataError("result schema version " + doc["schema_version"].dump() + " is not supported (this build reads version " +
                    std::to_string(kResultSchemaVersion) + ")");
  }
  for (const char* key : {"metadata", "data", "config", "thresholds", "effects", "embedding", "candidates", "verdict",
                          "subgroups", "counterfactual"}) {
    if (!doc.contains(key)) throw DataError(std::string("result document lacks '") + key + "'");
  }
}

namespace {

std::string render_report_checked(const Json& doc) {
  std::ostringstream out;
  const Json& data = doc.at("data");
  const Json& th = doc.at("thresholds");
  const bool het = doc.at("verdict").at("outcome") == "heterogeneous";
  out << "medsurv analysis report (schema " << doc.at("schema_version").get<int>() << ")\n";
  out << "subjects " << data.at("n").get<long long>() << ", covariates " << data.at("p").get<long long>() << ", events "
      << data.at("events").get<long long>() << ", treated " << data.at("treated").get<long long>() << "\n";
  out << "seed " << doc.at("metadata").at("seed").get<std::uint64_t>() << ", mode " << doc.at("config").at("mode").get<std::string>()
      << ", df policy " << doc.at("metadata").at("df_policy").get<std::string>() << "\n";
  out << "thresholds pY* = " << fmt(th.at("pY_star").get<double>(), "%.4g") << ", pM* = " << fmt(th.at("pM_star").get<double>(), "%.4g")
      << " (" << th.at("source").get<std::string>() << ")\n";
  if (!th.at("calibrated").get<bool>()) out << "WARNING: thresholds are uncalibrated; the verdict has no error-rate guarantee\n";
  if (doc.at("outcome_model").at("rare_event_warning").get<bool>()) {
    out << "WARNING: event rate " << fmt(doc.at("outcome_model").at("event_rate").get<double>(), "%.3f")
        << " exceeds 0.30; the log-hazard decomposition is approximate\n";
  }
  out << "\n";
  if (het) {
    const Json& sel = doc.at("verdict").at("selected");
    out << "verdict: heterogeneous mediation detected (k = " << sel.at("k").get<int>() << ", restart "
        << sel.at("restart").get<int>() << ")\n\n";
  } else {
    out << "verdict: no heterogeneous mediation detected\n\n";
  }

  // Subgroup summaries recomputed from the stored per-subject effects.
  const std::vector<double> niecc = doc.at("effects").at("niecc").get<std::vector<double>>();
  std::vector<int> leaves(niecc.size(), 0);
  if (het) leaves = doc.at("profile").at("leaves").get<std::vector<int>>();
  if (leaves.size() != niecc.size()) throw DataError("result document: leaf and effect lengths differ");
  out << "subgroups\n";
  out << "  leaf  size  mean NIECC  rule\n";
  for (const Json& g : doc.at("subgroups")) {
    const int leaf = g.at("leaf_id").get<int>();
    double sum = 0.0;
    long long count = 0;
    for (std::size_t i = 0; i < niecc.size(); ++i) {
      if (leaves[i] == leaf) {
        sum += niecc[i];
        ++count;
      }
    }
    if (count != g.at("size").get<long long>()) throw DataError("result document: subgroup size does not match leaves");
    char line[96];
    std::snprintf(line, sizeof line, "  %4d  %4lld  %10.4f  ", leaf, count, count > 0 ? sum / static_cast<double>(count) : 0.0);
    out << line << g.at("rule").get<std::string>() << "\n";
  }
  out << "\ncandidates\n";
  out << "     k  restart  leaves        pY        pM    metric  note\n";
  for (const Json& c : doc.at("candidates")) {
    char line[128];
    std::snprintf(line, sizeof line, "  %4d  %7d  %6d  %8s  %8s  %8s  ", c.at("k").get<int>(), c.at("restart").get<int>(),
                  c.at("leaf_count").get<int>(), fmt_p(c.at("pY")).c_str(), fmt_p(c.at("pM")).c_str(),
                  fmt(c.at("metric").get<double>(), "%.3g").c_str());
    out << line << (c.at("valid").get<bool>() ? "" : c.at("reason").get<std::string>()) << "\n";
  }
  return out.str();
}

void write_figure_data_checked(const Json& doc, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw DataError("cannot write " + (dir / name).string());
    return f;
  };
  const std::vector<double> niecc = doc.at("effects").at("niecc").get<std::vector<double>>();
  const std::vector<double> dte = doc.at("effects").at("dte").get<std::vector<double>>();
  const std::vector<double> tte = doc.at("effects").at("tte").get<std::vector<double>>();
  const bool het = doc.at("verdict").at("outcome") == "heterogeneous";
  std::vector<int> leaves(niecc.size(), 0), labels(niecc.size(), 0);
  if (het) {
    leaves = doc.at("profile").at("leaves").get<std::vector<int>>();
    labels = doc.at("profile").at("labels").get<std::vector<int>>();
  }
  const std::size_t n = niecc.size();
  if (dte.size() != n || tte.size() != n || leaves.size() != n || labels.size() != n ||
      doc.at("embedding").at("x").size() != n || doc.at("embedding").at("y").size() != n) {
    throw DataError("result document: per-subject arrays differ in length");
  }
  {
    auto f = open("niecc.csv");
    f << "row,niecc,dte,tte,leaf\n";
    for (std::size_t i = 0; i < niecc.size(); ++i) {
      f << i << "," << format_double(niecc[i]) << "," << format_double(dte[i]) << "," << format_double(tte[i]) << ","
        << leaves[i] << "\n";
    }
  }
  {
    const std::vector<double> x = doc.at("embedding").at("x").get<std::vector<double>>();
    const std::vector<double> y = doc.at("embedding").at("y").get<std::vector<double>>();
    auto f = open("embedding.csv");
    f << "row,x,y,cluster,leaf\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
      f << i << "," << format_double(x[i]) << "," << format_double(y[i]) << "," << labels[i] << "," << leaves[i] << "\n";
    }
  }
  {
    auto f = open("subgroup_niecc.csv");
    f << "leaf,row,niecc\n";
    for (const Json& g : doc.at("subgroups")) {
      const int leaf = g.at("leaf_id").get<int>();
      const double lo = g["niecc_p10"].get<double>(), hi = g["niecc_p90"].get<double>();
      for (std::size_t i = 0; i < niecc.size(); ++i) {
        if (leaves[i] == leaf && niecc[i] >= lo && niecc[i] <= hi) f << leaf << "," << i << "," << format_double(niecc[i]) << "\n";
      }
    }
  }
  {
    const std::vector<double> grid = doc.at("counterfactual").at("time_grid").get<std::vector<double>>();
    auto f = open("counterfactual.csv");
    f << "leaf,setting,time,survival\n";
    for (const Json& c : doc.at("counterfactual").at("curves")) {
      const std::vector<double> s = c.at("survival").get<std::vector<double>>();
      const std::string setting = c.at("setting").get<std::string>();
      if (s.size() != grid.size()) throw DataError("result document: survival curve and time grid differ in length");
      for (std::size_t k = 0; k < grid.size(); ++k) {
        f << c.at("leaf_id").get<int>() << "," << setting << "," << format_double(grid[k]) << "," << format_double(s[k]) << "\n";
      }
    }
  }
  {
    auto f = open("rules.txt");
    for (const Json& g : doc.at("subgroups")) {
      f << "leaf " << g.at("leaf_id").get<int>() << " (n = " << g.at("size").get<long long>() << ", mean NIECC "
        << fmt(g.at("mean_niecc").get<double>(), "%.4f") << "): " << g.at("rule").get<std::string>() << "\n";
    }
  }
}

}  // namespace

std::string render_report(const Json& doc) {
  check_result_schema(doc);
  try {
    return render_report_checked(doc);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed result document: ") + e.what());
  }
}

void write_figure_data(const Json& doc, const std::filesystem::path& dir) {
  check_result_schema(doc);
  try {
    write_figure_data_checked(doc, dir);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed result document: ") + e.what());
  }
}

}  // namespace medsurv
