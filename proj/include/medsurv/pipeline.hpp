#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "medsurv/dataset.hpp"
#include "medsurv/embed_cluster.hpp"
#include "medsurv/niecc.hpp"
#include "medsurv/profile.hpp"
#include "medsurv/select.hpp"

namespace medsurv {

struct PipelineConfig {
  EffectConfig effects;
  TsneParams tsne;
  // Overrides the run seed for the embedding when set.
  std::optional<std::uint64_t> tsne_seed;
  double blend = 0.0;
  int k_min = 2;
  int k_max = 5;
  int restarts = 10;
  int tree_max_depth = 3;
  double min_leaf_fraction = 0.05;
  Index min_leaf_floor = 20;
  LrtOptions lrt;

  // Throws UsageError when the configuration cannot run on n rows.
  void validate(Index n) const;
  Index min_leaf(Index n) const;
};

PipelineConfig default_pipeline_config();

struct Candidate {
  int k = 0;
  int restart = 0;
  Clustering clustering;
  ProfileTree tree;
  std::vector<int> leaves;
  ProfileScore score;
};

struct PipelineResult {
  EffectEstimates effects;
  // Present when effects come from a single fit (no cross-fitting).
  std::optional<OutcomeModel> outcome;
  std::optional<MediatorModel> mediator;
  Embedding embedding;
  std::vector<Candidate> candidates;
  Thresholds thresholds;
  std::optional<std::size_t> selected;

  bool heterogeneous() const { return selected.has_value(); }
};

/// NIECC estimation, embedding, clustering for every (k, restart) pair,
/// profile trees, both likelihood-ratio tests and selection.
PipelineResult run_pipeline(const SurvivalDataset& ds, const PipelineConfig& config, const Thresholds& thresholds,
                            std::uint64_t seed, unsigned threads = 1);

/// Re-applies thresholds to the stored scores and reselects.
void apply_thresholds(PipelineResult& result, const Thresholds& thresholds);

}  // namespace medsurv
