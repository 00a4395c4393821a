#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "medsurv/pipeline.hpp"

namespace medsurv {

struct RunConfig {
  PipelineConfig pipeline;
  // Fixed thresholds; empty when none were configured.
  std::optional<Thresholds> thresholds;
  // "thresholds = calibrate": analysis expects a calibration file.
  bool calibrate = false;
  std::uint64_t rng_seed = 1;
};

/// Parses "key = value" lines. Blank lines and text after '#' are ignored.
/// Keys:
///   mode, k_range (e.g. 2..5), restarts, crossfit_folds, rng_seed,
///   dissimilarity.blend,
///   tsne.{perplexity, iterations, learning_rate, seed},
///   boosting.{rounds, depth, learning_rate, min_child_weight, lambda}
///     (outcome and mediator models),
///   mediator_boosting.{...} (mediator model only, applied after boosting.*),
///   tree.{max_depth, min_leaf_fraction, min_leaf},
///   thresholds (= calibrate), thresholds.{pY_star, pM_star},
///   lrt.{df_policy, mediator_intercept, literal_models}.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Canonical key/value listing of every setting, used for the result echo.
std::map<std::string, std::string> config_entries(const RunConfig& config);

}  // namespace medsurv
