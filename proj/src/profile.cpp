#include "medsurv/profile.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <numeric>

#include "medsurv/errors.hpp"

namespace medsurv {
namespace {

double gini_sum(const std::vector<Index>& counts, Index total) {
  // total * Gini impurity = total - sum c^2 / total
  if (total == 0) return 0.0;
  double s = 0.0;
  for (Index c : counts) s += static_cast<double>(c) * static_cast<double>(c);
  return static_cast<double>(total) - s / static_cast<double>(total);
}

struct Builder {
  const Eigen::Ref<const MatrixXd>& x;
  std::span<const int> labels;
  int classes;
  int max_depth;
  Index min_leaf;
  std::vector<ProfileNode> nodes;
  int next_leaf = 0;

  int build(std::vector<Index> rows, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    std::vector<Index> counts(static_cast<std::size_t>(classes), 0);
    for (Index r : rows) ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])];
    const auto total = static_cast<Index>(rows.size());
    {
      ProfileNode& node = nodes[static_cast<std::size_t>(id)];
      node.class_counts = counts;
      node.size = total;
      node.majority_label = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
    const double parent = gini_sum(counts, total);

    int best_feature = -1;
    double best_gain = 1e-12;
    double best_threshold = 0.0;
    if (depth < max_depth && parent > 1e-12 && total >= 2 * min_leaf) {
      std::vector<Index> sorted = rows;
      for (Index f = 0; f < x.cols(); ++f) {
        std::stable_sort(sorted.begin(), sorted.end(), [&](Index a, Index b) { return x(a, f) < x(b, f); });
        std::vector<Index> left(static_cast<std::size_t>(classes), 0);
        for (Index k = 0; k + 1 < total; ++k) {
          const Index r = sorted[static_cast<std::size_t>(k)];
          ++left[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])];
          const double v = x(r, f), next = x(sorted[static_cast<std::size_t>(k + 1)], f);
          if (!(next > v)) continue;
          const Index nl = k + 1, nr = total - nl;
          if (nl < min_leaf || nr < min_leaf) continue;
          std::vector<Index> right(static_cast<std::size_t>(classes));
          for (int c = 0; c < classes; ++c) right[static_cast<std::size_t>(c)] = counts[static_cast<std::size_t>(c)] - left[static_cast<std::size_t>(c)];
          const double gain = parent - gini_sum(left, nl) - gini_sum(right, nr);
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            const double mid = v + 0.5 * (next - v);
            best_threshold = mid > v ? mid : next;
          }
        }
      }
    }

    if (best_feature < 0) {
      nodes[static_cast<std::size_t>(id)].leaf_id = next_leaf++;
      return id;
    }
    std::vector<Index> lrows, rrows;
    for (Index r : rows) (x(r, best_feature) < best_threshold ? lrows : rrows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(std::move(lrows), depth + 1);
    const int rr = build(std::move(rrows), depth + 1);
    ProfileNode& node = nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = rr;
    node.gain = best_gain;
    return id;
  }
};

}  // namespace

std::string format_threshold(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int ProfileTree::depth() const {
  std::function<int(int)> rec = [&](int k) -> int {
    const auto& node = nodes[static_cast<std::size_t>(k)];
    return node.is_leaf() ? 0 : 1 + std::max(rec(node.left), rec(node.right));
  };
  return nodes.empty() ? 0 : rec(0);
}

std::vector<double> ProfileTree::feature_importance() const {
  std::vector<double> imp(static_cast<std::size_t>(num_features), 0.0);
  for (const auto& node : nodes) {
    if (!node.is_leaf()) imp[static_cast<std::size_t>(node.feature)] += node.gain;
  }
  return imp;
}

ProfileTree fit_cart(const Eigen::Ref<const MatrixXd>& x, std::span<const int> labels, int max_depth, Index min_leaf) {
  if (static_cast<Index>(labels.size()) != x.rows()) throw UsageError("fit_cart: label count does not match rows");
  if (min_leaf < 1) throw UsageError("fit_cart: min_leaf must be >= 1");
  if (max_depth < 0) throw UsageError("fit_cart: max_depth must be >= 0");
  if (x.rows() == 0) throw UsageError("fit_cart: no rows");
  int classes = 0;
  for (int l : labels) {
    if (l < 0) throw UsageError("fit_cart: labels must be nonnegative");
    classes = std::max(classes, l + 1);
  }
  Builder b{x, labels, classes, max_depth, min_leaf, {}, 0};
  std::vector<Index> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  b.build(std::move(rows), 0);
  ProfileTree tree;
  tree.nodes = std::move(b.nodes);
  tree.leaf_count = b.next_leaf;
  tree.num_features = x.cols();
  return tree;
}

std::vector<int> leaf_assign(const ProfileTree& tree, const Eigen::Ref<const MatrixXd>& x) {
  if (x.cols() != tree.num_features) throw UsageError("leaf_assign: feature count mismatch");
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    int k = 0;
    while (!tree.nodes[static_cast<std::size_t>(k)].is_leaf()) {
      const auto& node = tree.nodes[static_cast<std::size_t>(k)];
      k = x(i, node.feature) < node.threshold ? node.left : node.right;
    }
    out[static_cast<std::size_t>(i)] = tree.nodes[static_cast<std::size_t>(k)].leaf_id;
  }
  return out;
}

std::vector<LeafRule> tree_rules(const ProfileTree& tree, const std::vector<std::string>& covariate_names) {
  std::vector<LeafRule> rules(static_cast<std::size_t>(tree.leaf_count));
  std::vector<RuleCondition> path;
  std::function<void(int)> walk = [&](int k) {
    const auto& node = tree.nodes[static_cast<std::size_t>(k)];
    if (node.is_leaf()) {
      LeafRule& rule = rules[static_cast<std::size_t>(node.leaf_id)];
      rule.leaf_id = node.leaf_id;
      rule.conditions = path;
      rule.size = node.size;
      rule.majority_label = node.majority_label;
      if (path.empty()) {
        rule.text = "all subjects";
      } else {
        for (std::size_t c = 0; c < path.size(); ++c) {
          if (c > 0) rule.text += " & ";
          rule.text += path[c].name + (path[c].less ? " < " : " ≥ ") + format_threshold(path[c].threshold);
        }
      }
      return;
    }
    const std::string name = node.feature < static_cast<int>(covariate_names.size())
                                 ? covariate_names[static_cast<std::size_t>(node.feature)]
                                 : "x" + std::to_string(node.feature + 1);
    path.push_back({node.feature, name, true, node.threshold});
    walk(node.left);
    path.back().less = false;
    walk(node.right);
    path.pop_back();
  };
  walk(0);
  return rules;
}

}  // namespace medsurv
