#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace medsurv {

using Eigen::Index;
using Eigen::MatrixXd;

struct ProfileNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf_id = -1;
  int majority_label = 0;
  std::vector<Index> class_counts;
  Index size = 0;
  // Weighted Gini decrease achieved by the split (0 for leaves).
  double gain = 0.0;

  bool is_leaf() const { return feature < 0; }
};

/// Classification tree mapping covariates to cluster labels. Leaves are
/// numbered 0..leaf_count-1 in depth-first, left-first order.
struct ProfileTree {
  std::vector<ProfileNode> nodes;
  int leaf_count = 1;
  Index num_features = 0;

  int depth() const;
  // Total Gini decrease per feature.
  std::vector<double> feature_importance() const;
};

ProfileTree fit_cart(const Eigen::Ref<const MatrixXd>& x, std::span<const int> labels, int max_depth, Index min_leaf);

std::vector<int> leaf_assign(const ProfileTree& tree, const Eigen::Ref<const MatrixXd>& x);

struct RuleCondition {
  int feature = -1;
  std::string name;
  bool less = true;  // "<" when true, "≥" otherwise
  double threshold = 0.0;
};

struct LeafRule {
  int leaf_id = 0;
  std::vector<RuleCondition> conditions;
  Index size = 0;
  int majority_label = 0;
  std::string text;
};

/// One conjunctive rule per leaf, ordered by leaf id. A root-only tree
/// yields the single rule "all subjects".
std::vector<LeafRule> tree_rules(const ProfileTree& tree, const std::vector<std::string>& covariate_names);

std::string format_threshold(double v);

}  // namespace medsurv
