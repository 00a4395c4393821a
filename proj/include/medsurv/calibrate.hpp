#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "medsurv/pipeline.hpp"
#include "medsurv/simgen.hpp"

namespace medsurv {

/// The (pY, pM) pairs of the valid candidates of one replicate.
struct ReplicateSummary {
  std::vector<double> pY;
  std::vector<double> pM;
  double min_pY = 1.0;
  double min_pM = 1.0;

  // Any candidate passing both gates with a positive metric.
  bool detected(const Thresholds& thresholds) const;
};

ReplicateSummary summarize(const PipelineResult& result);

struct Calibration {
  Thresholds thresholds;
  double alpha = 0.05;
  int n_reps = 0;
  std::string method;  // "null-sim" or "permutation"
  std::uint64_t seed = 0;
  // Marginal order-statistic thresholds before any joint shrink.
  Thresholds marginal;
  double shrink = 1.0;
  double joint_rate = 0.0;
  std::vector<ReplicateSummary> replicates;
};

/// Thresholds from per-replicate summaries: each marginal threshold is the
/// (floor(alpha R) + 1)-th smallest min-p, so fewer than alpha R replicates
/// fall strictly below it; both are then shrunk by a common factor until the
/// joint detection rate is at most alpha.
Calibration thresholds_from_replicates(std::vector<ReplicateSummary> replicates, double alpha);

/// Null-simulation calibration. Replicate r draws its data and pipeline
/// seeds from substream r of `seed`, so a longer run extends a shorter one.
Calibration calibrate_null_sim(const ScenarioSpec& null_spec, const PipelineConfig& config, int n_reps, double alpha,
                               std::uint64_t seed, unsigned threads = 1);

/// Permutation calibration: one row permutation of X per replicate, with
/// (U, delta, W, M) fixed. Every replicate runs the pipeline with `seed`, so
/// the identity permutation reproduces the analysis of `ds`.
Calibration calibrate_permutation(const SurvivalDataset& ds, const PipelineConfig& config, int n_perms, double alpha,
                                  std::uint64_t seed, unsigned threads = 1);

SurvivalDataset permute_covariates(const SurvivalDataset& ds, const std::vector<Index>& permutation);

void write_thresholds(const Calibration& calibration, std::ostream& out);
Thresholds read_thresholds(std::istream& in);
Thresholds load_thresholds(const std::string& path);

}  // namespace medsurv
