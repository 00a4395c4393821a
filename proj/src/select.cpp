#include "medsurv/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "medsurv/cox.hpp"
#include "medsurv/errors.hpp"
#include "medsurv/numstats.hpp"

namespace medsurv {
namespace {

int count_leaves(std::span<const int> leaf_ids) {
  int leaves = 0;
  for (int l : leaf_ids) {
    if (l < 0) throw UsageError("leaf ids must be nonnegative");
    leaves = std::max(leaves, l + 1);
  }
  return leaves;
}

// Columns [1?, W, D_1..D_{L-1}, D_1 W..D_{L-1} W]; leaf 0 is the reference.
MatrixXd leaf_design(const Eigen::Ref<const VectorXd>& w, std::span<const int> leaf_ids, int leaves, bool intercept,
                     bool full) {
  const Index n = w.size();
  const Index offset = intercept ? 1 : 0;
  const Index extra = full ? 2 * (leaves - 1) : 0;
  MatrixXd d = MatrixXd::Zero(n, offset + 1 + extra);
  if (intercept) d.col(0).setOnes();
  d.col(offset) = w;
  if (full) {
    for (Index i = 0; i < n; ++i) {
      const int l = leaf_ids[static_cast<std::size_t>(i)];
      if (l == 0) continue;
      d(i, offset + l) = 1.0;
      d(i, offset + (leaves - 1) + l) = w[i];
    }
  }
  return d;
}

void finish(LrtResult& r, int leaves, const LrtOptions& options) {
  const int df_params = 2 * (leaves - 1);
  const int df_leaves = leaves - 1;
  const bool leaves_only = options.df_policy == DfPolicy::kLeavesMinusOne;
  r.df = leaves_only ? df_leaves : df_params;
  r.df_alternative = leaves_only ? df_params : df_leaves;
  const double stat = std::max(r.statistic, 0.0);
  if (r.degenerate) {
    r.p_value = r.p_alternative = 0.0;
  } else {
    r.p_value = chisq_sf(stat, r.df);
    r.p_alternative = chisq_sf(stat, r.df_alternative);
  }
  r.valid = true;
}

}  // namespace

std::string to_string(DfPolicy policy) {
  return policy == DfPolicy::kParameterDifference ? "parameter-difference" : "leaves-minus-one";
}

DfPolicy parse_df_policy(std::string_view name) {
  if (name == "parameter-difference") return DfPolicy::kParameterDifference;
  if (name == "leaves-minus-one") return DfPolicy::kLeavesMinusOne;
  throw UsageError("unknown df policy '" + std::string(name) + "' (expected parameter-difference or leaves-minus-one)");
}

LrtResult lrt_outcome(const Eigen::Ref<const VectorXd>& time, const Eigen::Ref<const VectorXd>& event,
                      const Eigen::Ref<const VectorXd>& treatment, std::span<const int> leaf_ids,
                      const LrtOptions& options) {
  const Index n = time.size();
  if (event.size() != n || treatment.size() != n || static_cast<Index>(leaf_ids.size()) != n) {
    throw UsageError("lrt_outcome: length mismatch");
  }
  const int leaves = count_leaves(leaf_ids);
  if (leaves < 2) throw UsageError("lrt_outcome: at least two leaves are required");

  LrtResult r;
  std::vector<Index> cell_events(static_cast<std::size_t>(2 * leaves), 0);
  for (Index i = 0; i < n; ++i) {
    if (event[i] > 0.5) ++cell_events[static_cast<std::size_t>(2 * leaf_ids[static_cast<std::size_t>(i)] + (treatment[i] > 0.5))];
  }
  for (Index c : cell_events) {
    if (c < options.min_cell_events) {
      r.reason = "outcome: leaf x arm cell with fewer than " + std::to_string(options.min_cell_events) + " events";
      return r;
    }
  }
  try {
    const CoxLinearFit reduced = cox_fit_linear(leaf_design(treatment, leaf_ids, leaves, false, false), time, event);
    const CoxLinearFit full = cox_fit_linear(leaf_design(treatment, leaf_ids, leaves, false, true), time, event);
    if (reduced.diverged || full.diverged) {
      r.reason = "outcome: monotone likelihood";
      return r;
    }
    if (!reduced.converged || !full.converged) {
      r.reason = "outcome: Cox fit did not converge";
      return r;
    }
    r.statistic = -2.0 * (reduced.partial_loglik - full.partial_loglik);
  } catch (const std::runtime_error& e) {
    r.reason = std::string("outcome: ") + e.what();
    return r;
  }
  finish(r, leaves, options);
  return r;
}

LrtResult lrt_mediator(const Eigen::Ref<const VectorXd>& mediator, const Eigen::Ref<const VectorXd>& treatment,
                       std::span<const int> leaf_ids, const LrtOptions& options) {
  const Index n = mediator.size();
  if (treatment.size() != n || static_cast<Index>(leaf_ids.size()) != n) throw UsageError("lrt_mediator: length mismatch");
  const int leaves = count_leaves(leaf_ids);
  if (leaves < 2) throw UsageError("lrt_mediator: at least two leaves are required");

  LrtResult r;
  std::vector<Index> cells(static_cast<std::size_t>(2 * leaves), 0);
  for (Index i = 0; i < n; ++i) ++cells[static_cast<std::size_t>(2 * leaf_ids[static_cast<std::size_t>(i)] + (treatment[i] > 0.5))];
  if (std::find(cells.begin(), cells.end(), Index{0}) != cells.end()) {
    r.reason = "mediator: empty leaf x arm cell";
    return r;
  }
  try {
    const OlsFit reduced = ols_fit(leaf_design(treatment, leaf_ids, leaves, options.mediator_intercept, false), mediator);
    const OlsFit full = ols_fit(leaf_design(treatment, leaf_ids, leaves, options.mediator_intercept, true), mediator);
    if (full.perfect_fit && reduced.perfect_fit) {
      r.statistic = 0.0;
    } else if (full.perfect_fit) {
      r.degenerate = true;
      r.statistic = std::numeric_limits<double>::infinity();
    } else {
      r.statistic = static_cast<double>(n) * std::log(reduced.rss / full.rss);
    }
  } catch (const std::runtime_error& e) {
    r.reason = std::string("mediator: ") + e.what();
    return r;
  }
  finish(r, leaves, options);
  return r;
}

double selection_metric(double pY, double pM, const Thresholds& thresholds) {
  return (pY < thresholds.pY_star && pM < thresholds.pM_star) ? pM : 0.0;
}

ProfileScore score_profile(int k, int restart, int leaf_count, LrtResult outcome, LrtResult mediator,
                           const Thresholds& thresholds) {
  ProfileScore s;
  s.k = k;
  s.restart = restart;
  s.leaf_count = leaf_count;
  s.outcome = std::move(outcome);
  s.mediator = std::move(mediator);
  if (leaf_count < 2) {
    s.reason = "single leaf";
  } else if (!s.outcome.valid) {
    s.reason = s.outcome.reason;
  } else if (!s.mediator.valid) {
    s.reason = s.mediator.reason;
  } else {
    s.valid = true;
    s.pY = s.outcome.p_value;
    s.pM = s.mediator.p_value;
  }
  rescore(s, thresholds);
  return s;
}

void rescore(ProfileScore& score, const Thresholds& thresholds) {
  score.metric = score.valid ? selection_metric(score.pY, score.pM, thresholds) : 0.0;
}

std::optional<std::size_t> select_profile(std::span<const ProfileScore> candidates) {
  std::optional<std::size_t> best;
  auto key = [&](std::size_t i) {
    const ProfileScore& s = candidates[i];
    return std::make_tuple(s.pM, s.pY, s.k, s.restart);
  };
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!(candidates[i].metric > 0.0)) continue;
    if (!best || key(i) < key(*best)) best = i;
  }
  return best;
}

}  // namespace medsurv
