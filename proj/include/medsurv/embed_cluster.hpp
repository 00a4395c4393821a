#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace medsurv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// d_ij = (1 - blend) |niecc_i - niecc_j| / s + blend ||x_i - x_j|| / sqrt(p),
/// where s is the interquartile range of niecc (1 when that range is 0).
MatrixXd niecc_dissimilarity(const Eigen::Ref<const VectorXd>& niecc, const Eigen::Ref<const MatrixXd>& x_std,
                             double blend = 0.0);

struct TsneParams {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  int exaggeration_iterations = 250;
  double exaggeration = 12.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  double init_sd = 1e-4;
};

/// Conditional affinities P(j|i) with per-row Gaussian bandwidths found by
/// bisection on the entropy. row_perplexity receives the achieved values.
MatrixXd conditional_affinities(const Eigen::Ref<const MatrixXd>& distances, double perplexity,
                                std::vector<double>* row_perplexity = nullptr);

struct Embedding {
  MatrixXd coords;  // n x 2
  double kl_divergence = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> row_perplexity;
  // (iteration, KL) pairs sampled every 50 iterations.
  std::vector<std::pair<int, double>> kl_trace;
};

/// Exact t-SNE on a precomputed dissimilarity matrix.
Embedding tsne_embed(const Eigen::Ref<const MatrixXd>& distances, const TsneParams& params, std::uint64_t seed);

struct Clustering {
  int k = 0;
  std::vector<int> labels;
  MatrixXd centers;
  double inertia = 0.0;
  // Inertia after every Lloyd assignment step of the returned restart.
  std::vector<double> inertia_trace;
};

/// One k-means++ seeded Lloyd run. Restart r of kmeans(coords, k, _, seed)
/// is exactly kmeans_restart(coords, k, seed, r).
Clustering kmeans_restart(const Eigen::Ref<const MatrixXd>& coords, int k, std::uint64_t seed, int restart);

/// The lowest-inertia run among restarts 0..restarts-1.
Clustering kmeans(const Eigen::Ref<const MatrixXd>& coords, int k, int restarts, std::uint64_t seed);

double clustering_inertia(const Eigen::Ref<const MatrixXd>& coords, const std::vector<int>& labels,
                          const Eigen::Ref<const MatrixXd>& centers);

}  // namespace medsurv
