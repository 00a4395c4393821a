#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace medsurv {

using Eigen::Index;
using Eigen::VectorXd;

enum class DfPolicy {
  kParameterDifference,  // 2 (L - 1): leaf main effects plus leaf x W terms
  kLeavesMinusOne,       // L - 1
};

std::string to_string(DfPolicy policy);
DfPolicy parse_df_policy(std::string_view name);

struct LrtOptions {
  DfPolicy df_policy = DfPolicy::kParameterDifference;
  // Include an intercept in both mediator models. Off reproduces the
  // literal no-intercept form M = b W (+ leaf terms).
  bool mediator_intercept = true;
  // Minimum events in every leaf x arm cell for the outcome test.
  Index min_cell_events = 2;
};

struct LrtResult {
  bool valid = false;
  std::string reason;
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  // p-value under the other df convention.
  int df_alternative = 0;
  double p_alternative = 1.0;
  // A perfect fit forced p = 0.
  bool degenerate = false;
};

/// Cox LRT of [W] against [W, leaf dummies, leaf x W].
LrtResult lrt_outcome(const Eigen::Ref<const VectorXd>& time, const Eigen::Ref<const VectorXd>& event,
                      const Eigen::Ref<const VectorXd>& treatment, std::span<const int> leaf_ids,
                      const LrtOptions& options = {});

/// Gaussian LRT of [1, W] against [1, W, leaf dummies, leaf x W];
/// statistic n log(rss_reduced / rss_full).
LrtResult lrt_mediator(const Eigen::Ref<const VectorXd>& mediator, const Eigen::Ref<const VectorXd>& treatment,
                       std::span<const int> leaf_ids, const LrtOptions& options = {});

struct Thresholds {
  double pY_star = 0.05;
  double pM_star = 0.05;
};

struct ProfileScore {
  int k = 0;
  int restart = 0;
  int leaf_count = 0;
  LrtResult outcome;
  LrtResult mediator;
  double pY = 1.0;
  double pM = 1.0;
  double metric = 0.0;
  bool valid = false;
  std::string reason;
};

/// metric = 1(pY < pY*) 1(pM < pM*) pM for valid scores, 0 otherwise.
double selection_metric(double pY, double pM, const Thresholds& thresholds);

ProfileScore score_profile(int k, int restart, int leaf_count, LrtResult outcome, LrtResult mediator,
                           const Thresholds& thresholds);

/// Re-evaluates the metric of an existing score under new thresholds.
void rescore(ProfileScore& score, const Thresholds& thresholds);

/// Index of the selected candidate: smallest pM among positive metrics, then
/// smallest pY, k, restart. Empty when no metric is positive.
std::optional<std::size_t> select_profile(std::span<const ProfileScore> candidates);

}  // namespace medsurv
