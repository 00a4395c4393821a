#pragma once

#include <vector>

#include <Eigen/Dense>

namespace medsurv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Binary regression tree node. Rows with x[feature] < threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double gain = 0.0;

  bool is_leaf() const { return feature < 0; }
};

class RegressionTree {
 public:
  RegressionTree() : nodes_(1) {}
  explicit RegressionTree(std::vector<TreeNode> nodes);

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  VectorXd predict(const Eigen::Ref<const MatrixXd>& x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;
  Index leaf_count() const;
  void scale_leaves(double factor);

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeParams {
  int max_depth = 3;
  double min_child_weight = 10.0;
  double lambda = 1.0;
};

/// Second-order greedy tree: exact split scan maximizing
/// GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda), leaf value
/// -G/(H+lambda). Splits whose child hessian sum falls below
/// min_child_weight are not considered.
RegressionTree fit_tree_newton(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& grad,
                               const Eigen::Ref<const VectorXd>& hess, const TreeParams& params);

enum class Loss { kSquared, kCox };

struct BoostConfig {
  int rounds = 200;
  int max_depth = 3;
  double learning_rate = 0.1;
  double min_child_weight = 10.0;
  double lambda = 1.0;
};

struct BoostedModel {
  Loss loss = Loss::kSquared;
  double base_score = 0.0;
  double learning_rate = 0.1;
  Index num_features = 0;
  std::vector<RegressionTree> trees;
  // Training loss after each round (half rss or negative partial loglik);
  // entry 0 is the loss of the base score.
  std::vector<double> training_loss;

  VectorXd predict(const Eigen::Ref<const MatrixXd>& x) const;
};

BoostedModel boost_fit_squared(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                               const BoostConfig& config);
BoostedModel boost_fit_cox(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& time,
                           const Eigen::Ref<const VectorXd>& event, const BoostConfig& config);

inline VectorXd predict(const BoostedModel& model, const Eigen::Ref<const MatrixXd>& x) { return model.predict(x); }

}  // namespace medsurv
