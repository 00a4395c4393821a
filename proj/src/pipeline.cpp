#include "medsurv/pipeline.hpp"

#include <cmath>

#include "medsurv/errors.hpp"
#include "medsurv/parallel.hpp"

namespace medsurv {

void PipelineConfig::validate(Index n) const {
  if (k_min < 2) throw UsageError("k_range minimum must be >= 2");
  if (k_max < k_min) throw UsageError("k_range maximum must be >= its minimum");
  if (k_max > n) throw UsageError("k_range maximum exceeds the number of rows");
  if (restarts < 1) throw UsageError("restarts must be >= 1");
  if (!(tsne.perplexity > 0.0) || !(3.0 * tsne.perplexity < static_cast<double>(n))) {
    throw UsageError("tsne.perplexity must be positive and below n/3 (n = " + std::to_string(n) + ")");
  }
  if (tsne.iterations < 1) throw UsageError("tsne.iterations must be >= 1");
  if (!(tsne.learning_rate > 0.0)) throw UsageError("tsne.learning_rate must be positive");
  if (!(min_leaf_fraction > 0.0 && min_leaf_fraction < 0.5)) throw UsageError("tree.min_leaf_fraction must lie in (0, 0.5)");
  if (tree_max_depth < 1) throw UsageError("tree.max_depth must be >= 1");
  if (!(blend >= 0.0 && blend <= 1.0)) throw UsageError("blend must lie in [0, 1]");
  const int folds = effects.crossfit_folds;
  if (folds != 0 && (folds < 2 || folds > n)) throw UsageError("crossfit_folds must be 0 or between 2 and n");
  if (effects.outcome.rounds < 0 || effects.mediator.rounds < 0) throw UsageError("boosting rounds must be >= 0");
}

Index PipelineConfig::min_leaf(Index n) const {
  return std::max(min_leaf_floor, static_cast<Index>(std::ceil(min_leaf_fraction * static_cast<double>(n))));
}

PipelineConfig default_pipeline_config() { return PipelineConfig{}; }

PipelineResult run_pipeline(const SurvivalDataset& ds, const PipelineConfig& config, const Thresholds& thresholds,
                            std::uint64_t seed, unsigned threads) {
  ds.require_fittable();
  config.validate(ds.size());
  PipelineResult out;
  if (config.effects.crossfit_folds == 0) {
    out.outcome = fit_outcome_model(ds, config.effects.mode, config.effects.outcome);
    out.mediator = fit_mediator_model(ds, config.effects.mode, config.effects.mediator);
    out.effects = compute_niecc(*out.outcome, *out.mediator, ds.covariates);
  } else {
    out.effects = estimate_effects(ds, config.effects, RandomStream(seed, "pipeline"));
  }
  if (!out.effects.niecc.allFinite()) throw NumericalError("non-finite NIECC estimate");

  MatrixXd x_std;
  if (config.blend > 0.0) x_std = fit_standardization(ds.covariates).apply(ds.covariates);
  else x_std = MatrixXd::Zero(ds.size(), 0);
  const MatrixXd dissimilarity = niecc_dissimilarity(out.effects.niecc, x_std, config.blend);
  out.embedding = tsne_embed(dissimilarity, config.tsne, config.tsne_seed.value_or(seed));

  const Index min_leaf = config.min_leaf(ds.size());
  for (int k = config.k_min; k <= config.k_max; ++k) {
    for (int r = 0; r < config.restarts; ++r) {
      Candidate c;
      c.k = k;
      c.restart = r;
      out.candidates.push_back(std::move(c));
    }
  }
  parallel_for(out.candidates.size(), threads, [&](std::size_t i) {
    Candidate& c = out.candidates[i];
    c.clustering = kmeans_restart(out.embedding.coords, c.k, seed, c.restart);
    c.tree = fit_cart(ds.covariates, c.clustering.labels, config.tree_max_depth, min_leaf);
    c.leaves = leaf_assign(c.tree, ds.covariates);
    LrtResult outcome_test, mediator_test;
    if (c.tree.leaf_count >= 2) {
      outcome_test = lrt_outcome(ds.time, ds.event, ds.treatment, c.leaves, config.lrt);
      mediator_test = lrt_mediator(ds.mediator, ds.treatment, c.leaves, config.lrt);
    }
    c.score = score_profile(c.k, c.restart, c.tree.leaf_count, std::move(outcome_test), std::move(mediator_test),
                            thresholds);
  });
  apply_thresholds(out, thresholds);
  return out;
}

void apply_thresholds(PipelineResult& result, const Thresholds& thresholds) {
  result.thresholds = thresholds;
  std::vector<ProfileScore> scores;
  scores.reserve(result.candidates.size());
  for (auto& c : result.candidates) {
    rescore(c.score, thresholds);
    scores.push_back(c.score);
  }
  result.selected = select_profile(scores);
}

}  // namespace medsurv
