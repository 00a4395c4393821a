// medsurv: simulate, calibrate, analyze and report.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "medsurv/calibrate.hpp"
#include "medsurv/config.hpp"
#include "medsurv/errors.hpp"
#include "medsurv/result.hpp"
#include "medsurv/simgen.hpp"

namespace fs = std::filesystem;
using namespace medsurv;

namespace {

struct ColumnFlags {
  std::string time = "time";
  std::string event = "event";
  std::string treatment = "trt";
  std::string mediator = "mediator";
  std::string mediator_time;
  std::vector<std::string> covariates;

  void add(CLI::App* app) {
    app->add_option("--time-col", time, "Follow-up time column")->capture_default_str();
    app->add_option("--event-col", event, "Event indicator column (1 = event)")->capture_default_str();
    app->add_option("--trt-col", treatment, "Treatment column (0/1)")->capture_default_str();
    app->add_option("--mediator-col", mediator, "Mediator column")->capture_default_str();
    app->add_option("--mediator-time-col", mediator_time, "Mediator measurement time column (optional)");
    app->add_option("--covariates", covariates, "Covariate columns (default: all other numeric columns)")->delimiter(',');
  }

  ColumnSchema schema() const { return {time, event, treatment, mediator, covariates, mediator_time}; }
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "Run configuration file (key = value)");
    app->add_option("--seed", seed, "Random seed (overrides MEDSURV_SEED and the config)");
    app->add_option("--threads", threads, "Worker cap (0 = all cores)")->capture_default_str();
  }

  RunConfig config() const { return config_path.empty() ? RunConfig{} : load_config(config_path); }

  std::uint64_t resolve_seed(const RunConfig& cfg) const {
    if (seed) return *seed;
    if (const char* env = std::getenv("MEDSURV_SEED"); env != nullptr && *env != '\0') {
      std::uint64_t v = 0;
      std::istringstream ss(env);
      if (!(ss >> v) || !ss.eof()) throw UsageError(std::string("MEDSURV_SEED is not a nonnegative integer: ") + env);
      return v;
    }
    return cfg.rng_seed;
  }
};

std::string short_num(double v) {
  std::ostringstream ss;
  ss << std::setprecision(6) << v;
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

struct SimulateCmd {
  std::string family = "complex";
  std::string scenario;
  Index n = 1000;
  std::uint64_t seed = 1;
  int covariates = 10;
  double censoring = 0.25;
  double nu = 2.0;
  double lambda_scale = 1.0 / 300.0;
  double a_m = 0.5, a_w = 0.5, a_het = 1.0;
  std::string out;
  std::string truth;

  ScenarioSpec spec() const {
    ScenarioSpec s;
    s.family = parse_family(family);
    s.scenario = parse_scenario(s.family, scenario);
    s.n = n;
    s.num_covariates = covariates;
    s.censoring_target = censoring;
    s.nu = nu;
    s.lambda_scale = lambda_scale;
    s.a_m = a_m;
    s.a_w = a_w;
    s.a_het = a_het;
    s.validate();
    return s;
  }

  int run() const {
    const SimulatedDataset sim = gen_scenario(spec(), seed);
    std::ostringstream data;
    write_dataset(sim.data, data);
    write_text(out, data.str());
    std::ostringstream t;
    t << "row,true_niecc,true_dte,active_region\n";
    for (Index i = 0; i < sim.data.size(); ++i) {
      t << i << "," << format_double(sim.true_niecc[i]) << "," << format_double(sim.true_dte[i]) << ","
        << sim.active_region[static_cast<std::size_t>(i)] << "\n";
    }
    write_text(truth.empty() ? fs::path(out).replace_extension(".truth.csv") : fs::path(truth), t.str());
    std::cout << "n=" << sim.data.size() << " events=" << sim.data.num_events()
              << " censoring_rate=" << short_num(censoring_rate(sim.data)) << "\n";
    return kExitOk;
  }
};

int run_calibrate(bool null_sim, const std::string& permute_path, const SimulateCmd& sim, int reps, double alpha,
                  const ColumnFlags& cols, const Common& common, const std::string& out) {
  if (null_sim == !permute_path.empty()) throw UsageError("calibrate needs exactly one of --null-sim or --permute <data>");
  const RunConfig cfg = common.config();
  const std::uint64_t seed = common.resolve_seed(cfg);
  Calibration cal;
  if (null_sim) {
    const ScenarioSpec spec = sim.spec();
    if (spec.scenario != Scenario::kNull && spec.scenario != Scenario::kGlobal) {
      std::cerr << "warning: calibrating on scenario " << to_string(spec.scenario)
                << ", which has heterogeneous mediation; thresholds will be too permissive\n";
    }
    cal = calibrate_null_sim(spec, cfg.pipeline, reps, alpha, seed, common.threads);
  } else {
    const LoadedDataset loaded = load_dataset(permute_path, cols.schema());
    cal = calibrate_permutation(loaded.data, cfg.pipeline, reps, alpha, seed, common.threads);
  }
  std::ostringstream text;
  text << "# medsurv " << kToolVersion << " thresholds\n";
  if (null_sim) {
    text << "# null simulation: family " << sim.family << ", scenario " << sim.scenario << ", n " << sim.n << "\n";
  } else {
    text << "# permutation of covariate rows: " << permute_path << "\n";
  }
  for (const auto& [k, v] : config_entries(cfg)) {
    if (k != "rng_seed") text << "# config " << k << " = " << v << "\n";
  }
  write_thresholds(cal, text);
  write_text(out, text.str());
  std::cout << "pY_star=" << short_num(cal.thresholds.pY_star) << " pM_star=" << short_num(cal.thresholds.pM_star)
            << " joint_rate=" << short_num(cal.joint_rate) << " reps=" << cal.n_reps << "\n";
  return kExitOk;
}

int run_analyze(const std::string& data_path, const ColumnFlags& cols, const Common& common,
                const std::string& thresholds_path, const std::string& out, std::string figures) {
  const RunConfig cfg = common.config();
  const std::uint64_t seed = common.resolve_seed(cfg);
  const LoadedDataset loaded = load_dataset(data_path, cols.schema());

  ResultContext ctx;
  ctx.data = &loaded.data;
  ctx.load_report = loaded.report;
  ctx.config = cfg;
  ctx.seed = seed;
  if (!thresholds_path.empty()) {
    ctx.thresholds = load_thresholds(thresholds_path);
    ctx.thresholds_source = "file:" + fs::path(thresholds_path).filename().string();
    ctx.uncalibrated = false;
  } else if (cfg.calibrate) {
    throw UsageError("config requests calibrated thresholds; pass --thresholds <file> from the calibrate command");
  } else if (cfg.thresholds) {
    ctx.thresholds = *cfg.thresholds;
    ctx.thresholds_source = "config";
    ctx.uncalibrated = true;
  } else {
    ctx.thresholds = Thresholds{};
    ctx.thresholds_source = "default";
    ctx.uncalibrated = true;
  }
  if (ctx.uncalibrated) {
    std::cerr << "WARNING: analysis uses UNCALIBRATED thresholds (pY* = " << short_num(ctx.thresholds.pY_star)
              << ", pM* = " << short_num(ctx.thresholds.pM_star)
              << "); run `medsurv calibrate` and pass --thresholds for error-rate control\n";
  }
  if (loaded.report.rows_dropped_missing > 0) {
    std::cerr << "note: dropped " << loaded.report.rows_dropped_missing << " rows with missing values\n";
  }
  if (loaded.report.rows_rejected_mediator_timing > 0) {
    std::cerr << "note: rejected " << loaded.report.rows_rejected_mediator_timing
              << " rows whose follow-up ends before the mediator measurement\n";
  }

  const PipelineResult result = run_pipeline(loaded.data, cfg.pipeline, ctx.thresholds, seed, common.threads);
  const nlohmann::ordered_json doc = build_result(result, ctx);
  write_text(out, doc.dump(2) + "\n");
  if (figures.empty()) figures = (fs::path(out).parent_path() / (fs::path(out).stem().string() + "_figures")).string();
  write_figure_data(doc, figures);
  if (doc["outcome_model"]["rare_event_warning"].get<bool>()) {
    std::cerr << "warning: event rate above 0.30; the indirect-effect decomposition relies on rare events\n";
  }
  std::cout << "verdict: " << doc["verdict"]["outcome"].get<std::string>() << "\n";
  return kExitOk;
}

int run_report(const std::string& path, const std::string& out) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open result file: " + path);
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("result file is not valid JSON (truncated?): " + std::string(e.what()));
  }
  std::string text;
  try {
    text = render_report(doc);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("result file does not match the schema: ") + e.what());
  }
  if (out.empty()) std::cout << text;
  else write_text(out, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous mediation analysis for survival outcomes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SimulateCmd sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a simulation scenario with ground truth");
  simulate->add_option("--family", sim.family, "linear or complex")->capture_default_str();
  simulate->add_option("--scenario", sim.scenario, "Scenario name")->required();
  simulate->add_option("--n", sim.n, "Sample size")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--covariates", sim.covariates, "Number of covariates")->capture_default_str();
  simulate->add_option("--censoring", sim.censoring, "Target censoring fraction")->capture_default_str();
  simulate->add_option("--nu", sim.nu, "Weibull shape")->capture_default_str();
  simulate->add_option("--lambda-scale", sim.lambda_scale, "Weibull scale")->capture_default_str();
  simulate->add_option("--a-m", sim.a_m, "Mediator effect amplitude")->capture_default_str();
  simulate->add_option("--a-w", sim.a_w, "Direct effect amplitude")->capture_default_str();
  simulate->add_option("--a-het", sim.a_het, "Treatment effect on the mediator")->capture_default_str();
  simulate->add_option("--out", sim.out, "Dataset output path")->required();
  simulate->add_option("--truth", sim.truth, "Truth sidecar path (default <out>.truth.csv)");

  SimulateCmd cal_sim;
  cal_sim.scenario = "Null";
  cal_sim.n = 1000;
  bool null_sim = false;
  std::string permute_path, cal_out = "thresholds.txt";
  int reps = 200, perms = 0;
  double alpha = 0.05;
  ColumnFlags cal_cols;
  Common cal_common;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate the selection thresholds");
  calibrate->add_flag("--null-sim", null_sim, "Calibrate on simulated null replicates");
  calibrate->add_option("--permute", permute_path, "Calibrate by permuting covariate rows of this dataset");
  calibrate->add_option("--family", cal_sim.family, "Null-simulation family")->capture_default_str();
  calibrate->add_option("--scenario", cal_sim.scenario, "Null-simulation scenario")->capture_default_str();
  calibrate->add_option("--n", cal_sim.n, "Null-simulation sample size")->capture_default_str()->check(CLI::PositiveNumber);
  calibrate->add_option("--reps", reps, "Null-simulation replicates")->capture_default_str()->check(CLI::PositiveNumber);
  calibrate->add_option("--perms", perms, "Permutation replicates (default 200)")->check(CLI::PositiveNumber);
  calibrate->add_option("--alpha", alpha, "Target type I error")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  calibrate->add_option("--out", cal_out, "Thresholds output path")->capture_default_str();
  cal_cols.add(calibrate);
  cal_common.add(calibrate);

  std::string data_path, thresholds_path, result_out = "result.json", figures;
  ColumnFlags an_cols;
  Common an_common;
  auto* analyze = app.add_subcommand("analyze", "Estimate NIECC and search for heterogeneous subgroups");
  analyze->add_option("data", data_path, "Dataset (delimited text with header)")->required();
  analyze->add_option("--thresholds", thresholds_path, "Thresholds file from the calibrate command");
  analyze->add_option("--out", result_out, "Result JSON path")->capture_default_str();
  analyze->add_option("--figures", figures, "Figure-data directory (default <out stem>_figures)");
  an_cols.add(analyze);
  an_common.add(analyze);

  std::string report_in, report_out;
  auto* report = app.add_subcommand("report", "Render a result file as text");
  report->add_option("result", report_in, "Result JSON")->required();
  report->add_option("--out", report_out, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return sim.run();
    if (*calibrate) {
      const int n_reps = permute_path.empty() ? reps : (perms > 0 ? perms : 200);
      return run_calibrate(null_sim, permute_path, cal_sim, n_reps, alpha, cal_cols, cal_common, cal_out);
    }
    if (*analyze) return run_analyze(data_path, an_cols, an_common, thresholds_path, result_out, figures);
    if (*report) return run_report(report_in, report_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "error: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
