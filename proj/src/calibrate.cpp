#include "medsurv/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>

#include "medsurv/errors.hpp"
#include "medsurv/parallel.hpp"

namespace medsurv {
namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
}

double order_statistic(std::vector<double> values, std::size_t rank) {
  // rank is 1-based; past the end means every replicate may pass.
  std::sort(values.begin(), values.end());
  if (rank > values.size()) return 1.0;
  return values[rank - 1];
}

double joint_rate(const std::vector<ReplicateSummary>& reps, const Thresholds& t) {
  if (reps.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : reps) hits += r.detected(t) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(reps.size());
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

bool ReplicateSummary::detected(const Thresholds& thresholds) const {
  for (std::size_t i = 0; i < pY.size(); ++i) {
    if (selection_metric(pY[i], pM[i], thresholds) > 0.0) return true;
  }
  return false;
}

ReplicateSummary summarize(const PipelineResult& result) {
  ReplicateSummary s;
  for (const auto& c : result.candidates) {
    if (!c.score.valid) continue;
    s.pY.push_back(c.score.pY);
    s.pM.push_back(c.score.pM);
    s.min_pY = std::min(s.min_pY, c.score.pY);
    s.min_pM = std::min(s.min_pM, c.score.pM);
  }
  return s;
}

Calibration thresholds_from_replicates(std::vector<ReplicateSummary> replicates, double alpha) {
  check_alpha(alpha);
  if (replicates.empty()) throw UsageError("calibration needs at least one replicate");
  Calibration cal;
  cal.alpha = alpha;
  cal.n_reps = static_cast<int>(replicates.size());
  const auto allowed = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(replicates.size()) + 1e-9));
  std::vector<double> min_y, min_m;
  for (const auto& r : replicates) {
    min_y.push_back(r.min_pY);
    min_m.push_back(r.min_pM);
  }
  cal.marginal.pY_star = order_statistic(min_y, allowed + 1);
  cal.marginal.pM_star = order_statistic(min_m, allowed + 1);

  // Replicate r is detected under shrink c exactly when c exceeds
  // c_r = min over its candidates of max(pY / pY*, pM / pM*).
  std::vector<double> crit;
  for (const auto& r : replicates) {
    double c_r = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.pY.size(); ++i) {
      if (!(r.pM[i] > 0.0)) continue;
      const double cy = cal.marginal.pY_star > 0.0 ? r.pY[i] / cal.marginal.pY_star : std::numeric_limits<double>::infinity();
      const double cm = cal.marginal.pM_star > 0.0 ? r.pM[i] / cal.marginal.pM_star : std::numeric_limits<double>::infinity();
      c_r = std::min(c_r, std::max(cy, cm));
    }
    crit.push_back(c_r);
  }
  double shrink = std::min(1.0, order_statistic(crit, allowed + 1));
  if (!std::isfinite(shrink)) shrink = 1.0;
  Thresholds t{cal.marginal.pY_star * shrink, cal.marginal.pM_star * shrink};
  // Guard against rounding in the ratio form.
  while (joint_rate(replicates, t) > alpha && shrink > 0.0) {
    shrink = std::nextafter(shrink, 0.0);
    t = {cal.marginal.pY_star * shrink, cal.marginal.pM_star * shrink};
  }
  cal.shrink = shrink;
  cal.thresholds = t;
  cal.joint_rate = joint_rate(replicates, t);
  cal.replicates = std::move(replicates);
  return cal;
}

Calibration calibrate_null_sim(const ScenarioSpec& null_spec, const PipelineConfig& config, int n_reps, double alpha,
                               std::uint64_t seed, unsigned threads) {
  check_alpha(alpha);
  if (n_reps < 1) throw UsageError("calibration needs at least one replicate");
  null_spec.validate();
  config.validate(null_spec.n);
  const RandomStream root(seed, "calibrate/null-sim");
  std::vector<ReplicateSummary> reps(static_cast<std::size_t>(n_reps));
  parallel_for(reps.size(), threads, [&](std::size_t r) {
    RandomStream stream = root.substream(std::to_string(r));
    const std::uint64_t data_seed = stream.substream("data").next_u64();
    const std::uint64_t pipeline_seed = stream.substream("pipeline").next_u64();
    const SimulatedDataset sim = gen_scenario(null_spec, data_seed);
    reps[r] = summarize(run_pipeline(sim.data, config, Thresholds{}, pipeline_seed));
  });
  Calibration cal = thresholds_from_replicates(std::move(reps), alpha);
  cal.method = "null-sim";
  cal.seed = seed;
  return cal;
}

SurvivalDataset permute_covariates(const SurvivalDataset& ds, const std::vector<Index>& permutation) {
  if (static_cast<Index>(permutation.size()) != ds.size()) throw UsageError("permutation length mismatch");
  SurvivalDataset out = ds;
  for (Index i = 0; i < ds.size(); ++i) out.covariates.row(i) = ds.covariates.row(permutation[static_cast<std::size_t>(i)]);
  return out;
}

Calibration calibrate_permutation(const SurvivalDataset& ds, const PipelineConfig& config, int n_perms, double alpha,
                                  std::uint64_t seed, unsigned threads) {
  check_alpha(alpha);
  if (n_perms < 1) throw UsageError("calibration needs at least one permutation");
  ds.require_fittable();
  config.validate(ds.size());
  const RandomStream root(seed, "calibrate/permute");
  std::vector<ReplicateSummary> reps(static_cast<std::size_t>(n_perms));
  parallel_for(reps.size(), threads, [&](std::size_t r) {
    RandomStream stream = root.substream(std::to_string(r));
    const SurvivalDataset permuted = permute_covariates(ds, stream.permutation(ds.size()));
    reps[r] = summarize(run_pipeline(permuted, config, Thresholds{}, seed));
  });
  Calibration cal = thresholds_from_replicates(std::move(reps), alpha);
  cal.method = "permutation";
  cal.seed = seed;
  return cal;
}

void write_thresholds(const Calibration& cal, std::ostream& out) {
  out << "pY_star = " << format_double(cal.thresholds.pY_star) << "\n";
  out << "pM_star = " << format_double(cal.thresholds.pM_star) << "\n";
  out << "alpha = " << format_double(cal.alpha) << "\n";
  out << "n_reps = " << cal.n_reps << "\n";
  out << "method = " << cal.method << "\n";
  out << "seed = " << cal.seed << "\n";
  out << "marginal_pY_star = " << format_double(cal.marginal.pY_star) << "\n";
  out << "marginal_pM_star = " << format_double(cal.marginal.pM_star) << "\n";
  out << "shrink = " << format_double(cal.shrink) << "\n";
  out << "joint_rate = " << format_double(cal.joint_rate) << "\n";
}

Thresholds read_thresholds(std::istream& in) {
  Thresholds t;
  bool have_y = false, have_m = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("thresholds line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key != "pY_star" && key != "pM_star") continue;
    double v = 0.0;
    std::istringstream ss(value);
    if (!(ss >> v) || !(v >= 0.0 && v <= 1.0)) {
      throw DataError("thresholds line " + std::to_string(line_no) + ": " + key + " must be a probability");
    }
    (key == "pY_star" ? t.pY_star : t.pM_star) = v;
    (key == "pY_star" ? have_y : have_m) = true;
  }
  if (!have_y || !have_m) throw DataError("thresholds file must define pY_star and pM_star");
  return t;
}

Thresholds load_thresholds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open thresholds file: " + path);
  return read_thresholds(in);
}

}  // namespace medsurv
