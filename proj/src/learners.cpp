#include "medsurv/learners.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "medsurv/cox.hpp"
#include "medsurv/errors.hpp"

namespace medsurv {
namespace {

using SortedColumns = std::vector<std::vector<Index>>;

SortedColumns sort_columns(const Eigen::Ref<const MatrixXd>& x) {
  SortedColumns sorted(static_cast<std::size_t>(x.cols()));
  for (Index f = 0; f < x.cols(); ++f) {
    auto& idx = sorted[static_cast<std::size_t>(f)];
    idx.resize(static_cast<std::size_t>(x.rows()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return x(a, f) < x(b, f); });
  }
  return sorted;
}

double split_point(double lo, double hi) {
  const double mid = lo + 0.5 * (hi - lo);
  return mid > lo ? mid : hi;
}

// Level-wise exact greedy growth over presorted columns. Each level costs
// one pass over every column.
RegressionTree grow_tree(const Eigen::Ref<const MatrixXd>& x, const SortedColumns& sorted,
                         const Eigen::Ref<const VectorXd>& grad, const Eigen::Ref<const VectorXd>& hess,
                         const TreeParams& params) {
  const Index n = x.rows();
  const double lambda = params.lambda;
  std::vector<TreeNode> nodes(1);
  std::vector<double> node_g(1, grad.sum()), node_h(1, hess.sum());
  std::vector<int> node_of_row(static_cast<std::size_t>(n), 0);
  std::vector<int> frontier = {0};

  struct Best {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };
  struct Scan {
    double gl = 0.0, hl = 0.0, last = 0.0;
    bool seen = false;
  };

  for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
    std::vector<int> slot(nodes.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) slot[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    std::vector<Best> best(frontier.size());

    for (Index f = 0; f < x.cols(); ++f) {
      std::vector<Scan> scan(frontier.size());
      for (Index r : sorted[static_cast<std::size_t>(f)]) {
        const int nd = node_of_row[static_cast<std::size_t>(r)];
        if (nd < 0) continue;
        const int s = slot[static_cast<std::size_t>(nd)];
        if (s < 0) continue;
        Scan& sc = scan[static_cast<std::size_t>(s)];
        const double v = x(r, f);
        if (sc.seen && v > sc.last) {
          const double g = node_g[static_cast<std::size_t>(nd)], h = node_h[static_cast<std::size_t>(nd)];
          const double gr = g - sc.gl, hr = h - sc.hl;
          if (sc.hl >= params.min_child_weight && hr >= params.min_child_weight) {
            const double gain =
                sc.gl * sc.gl / (sc.hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda);
            Best& b = best[static_cast<std::size_t>(s)];
            if (gain > b.gain) b = {gain, static_cast<int>(f), split_point(sc.last, v)};
          }
        }
        sc.gl += grad[r];
        sc.hl += hess[r];
        sc.last = v;
        sc.seen = true;
      }
    }

    std::vector<int> next;
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const int nd = frontier[s];
      const Best& b = best[s];
      const double scale = std::abs(node_g[static_cast<std::size_t>(nd)]) + 1.0;
      if (b.feature < 0 || !(b.gain > 1e-12 * scale * scale)) continue;
      const int left = static_cast<int>(nodes.size());
      nodes.emplace_back();
      nodes.emplace_back();
      node_g.push_back(0.0);
      node_g.push_back(0.0);
      node_h.push_back(0.0);
      node_h.push_back(0.0);
      TreeNode& node = nodes[static_cast<std::size_t>(nd)];
      node.feature = b.feature;
      node.threshold = b.threshold;
      node.left = left;
      node.right = left + 1;
      node.gain = b.gain;
      next.push_back(left);
      next.push_back(left + 1);
    }
    for (Index r = 0; r < n; ++r) {
      const int nd = node_of_row[static_cast<std::size_t>(r)];
      if (nd < 0) continue;
      const TreeNode& node = nodes[static_cast<std::size_t>(nd)];
      if (node.is_leaf()) {
        node_of_row[static_cast<std::size_t>(r)] = -1;
        continue;
      }
      const int child = x(r, node.feature) < node.threshold ? node.left : node.right;
      node_of_row[static_cast<std::size_t>(r)] = child;
      node_g[static_cast<std::size_t>(child)] += grad[r];
      node_h[static_cast<std::size_t>(child)] += hess[r];
    }
    frontier = std::move(next);
  }

  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].is_leaf()) nodes[k].value = -node_g[k] / (node_h[k] + lambda);
  }
  return RegressionTree(std::move(nodes));
}

double half_rss(const VectorXd& pred, const Eigen::Ref<const VectorXd>& y) { return 0.5 * (pred - y).squaredNorm(); }

void check_config(const BoostConfig& config) {
  if (config.rounds < 1) throw UsageError("boosting needs at least one round");
  if (config.max_depth < 0) throw UsageError("boosting depth must be >= 0");
  if (!(config.learning_rate > 0.0)) throw UsageError("boosting learning rate must be positive");
  if (config.lambda < 0.0 || config.min_child_weight < 0.0) throw UsageError("boosting regularization must be >= 0");
}

// Shared stagewise Newton loop. A round that would increase the training
// loss has its leaf values halved (up to 30 times) and is dropped if it
// still does not help, so the loss trace is nonincreasing.
BoostedModel boost(const Eigen::Ref<const MatrixXd>& x, BoostedModel model,
                   const std::function<double(const VectorXd&)>& loss,
                   const std::function<void(const VectorXd&, VectorXd&, VectorXd&)>& derivatives,
                   const BoostConfig& config) {
  const SortedColumns sorted = sort_columns(x);
  const TreeParams params{config.max_depth, config.min_child_weight, config.lambda};
  VectorXd pred = VectorXd::Constant(x.rows(), model.base_score);
  double current = loss(pred);
  model.training_loss.push_back(current);
  VectorXd grad(x.rows()), hess(x.rows());
  for (int round = 0; round < config.rounds; ++round) {
    derivatives(pred, grad, hess);
    RegressionTree tree = grow_tree(x, sorted, grad, hess, params);
    VectorXd step = tree.predict(x) * config.learning_rate;
    bool accepted = false;
    for (int h = 0; h <= 30; ++h) {
      const VectorXd trial = pred + step;
      const double l = loss(trial);
      if (l <= current + 1e-12 * std::abs(current)) {
        if (l <= current) {
          pred = trial;
          current = l;
          accepted = true;
        }
        break;
      }
      tree.scale_leaves(0.5);
      step *= 0.5;
    }
    if (accepted) model.trees.push_back(std::move(tree));
    model.training_loss.push_back(current);
  }
  return model;
}

}  // namespace

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) nodes_.emplace_back();
}

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int k = 0;
  while (!nodes_[static_cast<std::size_t>(k)].is_leaf()) {
    const TreeNode& node = nodes_[static_cast<std::size_t>(k)];
    k = row[node.feature] < node.threshold ? node.left : node.right;
  }
  return nodes_[static_cast<std::size_t>(k)].value;
}

VectorXd RegressionTree::predict(const Eigen::Ref<const MatrixXd>& x) const {
  VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    int k = 0;
    while (!nodes_[static_cast<std::size_t>(k)].is_leaf()) {
      const TreeNode& node = nodes_[static_cast<std::size_t>(k)];
      k = x(i, node.feature) < node.threshold ? node.left : node.right;
    }
    out[i] = nodes_[static_cast<std::size_t>(k)].value;
  }
  return out;
}

int RegressionTree::depth() const {
  std::function<int(int)> rec = [&](int k) -> int {
    const TreeNode& node = nodes_[static_cast<std::size_t>(k)];
    if (node.is_leaf()) return 0;
    return 1 + std::max(rec(node.left), rec(node.right));
  };
  return rec(0);
}

Index RegressionTree::leaf_count() const {
  return std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); });
}

void RegressionTree::scale_leaves(double factor) {
  for (auto& node : nodes_) {
    if (node.is_leaf()) node.value *= factor;
  }
}

RegressionTree fit_tree_newton(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& grad,
                               const Eigen::Ref<const VectorXd>& hess, const TreeParams& params) {
  if (grad.size() != x.rows() || hess.size() != x.rows()) throw UsageError("fit_tree_newton: length mismatch");
  if ((hess.array() < 0.0).any()) throw UsageError("fit_tree_newton: negative hessian");
  return grow_tree(x, sort_columns(x), grad, hess, params);
}

VectorXd BoostedModel::predict(const Eigen::Ref<const MatrixXd>& x) const {
  if (x.cols() != num_features) {
    throw UsageError("predict: expected " + std::to_string(num_features) + " features, got " +
                     std::to_string(x.cols()));
  }
  VectorXd sum = VectorXd::Zero(x.rows());
  for (const auto& tree : trees) sum += tree.predict(x);
  return (base_score + learning_rate * sum.array()).matrix();
}

BoostedModel boost_fit_squared(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                               const BoostConfig& config) {
  check_config(config);
  if (y.size() != x.rows() || y.size() == 0) throw UsageError("boost_fit_squared: bad target length");
  BoostedModel model;
  model.loss = Loss::kSquared;
  model.base_score = y.mean();
  model.learning_rate = config.learning_rate;
  model.num_features = x.cols();
  const VectorXd target = y;
  return boost(
      x, std::move(model), [&](const VectorXd& pred) { return half_rss(pred, target); },
      [&](const VectorXd& pred, VectorXd& g, VectorXd& h) {
        g = pred - target;
        h.setOnes();
      },
      config);
}

BoostedModel boost_fit_cox(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& time,
                           const Eigen::Ref<const VectorXd>& event, const BoostConfig& config) {
  check_config(config);
  if (time.size() != x.rows() || event.size() != x.rows()) throw UsageError("boost_fit_cox: length mismatch");
  BoostedModel model;
  model.loss = Loss::kCox;
  model.base_score = 0.0;
  model.learning_rate = config.learning_rate;
  model.num_features = x.cols();
  const VectorXd t = time, d = event;
  return boost(
      x, std::move(model), [&](const VectorXd& pred) { return -cox_partial_loglik(pred, t, d); },
      [&](const VectorXd& pred, VectorXd& g, VectorXd& h) {
        CoxDerivatives der = cox_grad_hess(pred, t, d);
        g = std::move(der.gradient);
        h = std::move(der.hessian);
      },
      config);
}

}  // namespace medsurv
