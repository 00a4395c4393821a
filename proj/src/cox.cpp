#include "medsurv/cox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "medsurv/errors.hpp"
#include "medsurv/numstats.hpp"

namespace medsurv {
namespace {

void check_inputs(Index eta_size, const Eigen::Ref<const VectorXd>& time, const Eigen::Ref<const VectorXd>& event) {
  if (eta_size != time.size() || time.size() != event.size()) {
    throw UsageError("cox: eta, time and event lengths differ");
  }
  if ((event.array() > 0.5).count() < 1) throw DataError("cox: at least one event is required");
}

// Subjects ordered by decreasing time, split into groups of tied times.
// Walking the groups in order grows the risk set monotonically.
struct RiskOrder {
  std::vector<Index> order;
  std::vector<Index> group_start;  // group g is order[group_start[g] .. group_start[g+1])

  explicit RiskOrder(const Eigen::Ref<const VectorXd>& time) {
    order.resize(static_cast<std::size_t>(time.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return time[a] > time[b]; });
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k == 0 || time[order[k]] != time[order[k - 1]]) group_start.push_back(static_cast<Index>(k));
    }
    group_start.push_back(static_cast<Index>(order.size()));
  }

  std::size_t groups() const { return group_start.size() - 1; }
};

struct CoxState {
  double loglik = 0.0;
  VectorXd score;
  MatrixXd information;
};

CoxState evaluate_linear(const Eigen::Ref<const MatrixXd>& x, const VectorXd& beta, const RiskOrder& ro,
                         const Eigen::Ref<const VectorXd>& event, bool derivatives) {
  const Index q = x.cols();
  const VectorXd eta = x * beta;
  double shift = -std::numeric_limits<double>::infinity();
  CoxState st;
  st.score = VectorXd::Zero(q);
  st.information = MatrixXd::Zero(q, q);
  double s0 = 0.0;
  VectorXd s1 = VectorXd::Zero(q);
  MatrixXd s2 = MatrixXd::Zero(q, q);
  for (std::size_t g = 0; g < ro.groups(); ++g) {
    const Index b = ro.group_start[g], e = ro.group_start[g + 1];
    for (Index k = b; k < e; ++k) {
      const Index i = ro.order[static_cast<std::size_t>(k)];
      if (eta[i] > shift) {
        const double r = std::exp(shift - eta[i]);
        s0 *= r;
        if (derivatives) {
          s1 *= r;
          s2 *= r;
        }
        shift = eta[i];
      }
      const double w = std::exp(eta[i] - shift);
      s0 += w;
      if (derivatives) {
        s1.noalias() += w * x.row(i).transpose();
        s2.selfadjointView<Eigen::Lower>().rankUpdate(x.row(i).transpose(), w);
      }
    }
    Index d = 0;
    for (Index k = b; k < e; ++k) {
      const Index i = ro.order[static_cast<std::size_t>(k)];
      if (event[i] > 0.5) {
        ++d;
        st.loglik += eta[i] - shift - std::log(s0);
        if (derivatives) st.score.noalias() += x.row(i).transpose();
      }
    }
    if (derivatives && d > 0) {
      const VectorXd xbar = s1 / s0;
      st.score.noalias() -= static_cast<double>(d) * xbar;
      st.information.noalias() += static_cast<double>(d) * (s2 / s0);
      st.information.noalias() -= static_cast<double>(d) * (xbar * xbar.transpose());
    }
  }
  if (derivatives) {
    // rankUpdate fills the lower triangle only; mirror before use.
    MatrixXd full = st.information;
    full.triangularView<Eigen::StrictlyUpper>() = full.transpose().triangularView<Eigen::StrictlyUpper>();
    st.information = full;
  }
  return st;
}

}  // namespace

double cox_partial_loglik(const Eigen::Ref<const VectorXd>& eta, const Eigen::Ref<const VectorXd>& time,
                          const Eigen::Ref<const VectorXd>& event) {
  check_inputs(eta.size(), time, event);
  const RiskOrder ro(time);
  // Risk-set sums are kept relative to the running maximum of eta so that
  // no sum underflows when eta spans a wide range.
  double shift = -std::numeric_limits<double>::infinity();
  double s0 = 0.0;
  double ll = 0.0;
  for (std::size_t g = 0; g < ro.groups(); ++g) {
    const Index b = ro.group_start[g], e = ro.group_start[g + 1];
    for (Index k = b; k < e; ++k) {
      const double v = eta[ro.order[static_cast<std::size_t>(k)]];
      if (v > shift) {
        s0 *= std::exp(shift - v);
        shift = v;
      }
      s0 += std::exp(v - shift);
    }
    const double log_s0 = std::log(s0);
    for (Index k = b; k < e; ++k) {
      const Index i = ro.order[static_cast<std::size_t>(k)];
      if (event[i] > 0.5) ll += eta[i] - shift - log_s0;
    }
  }
  return ll;
}

CoxDerivatives cox_grad_hess(const Eigen::Ref<const VectorXd>& eta, const Eigen::Ref<const VectorXd>& time,
                             const Eigen::Ref<const VectorXd>& event) {
  check_inputs(eta.size(), time, event);
  const Index n = eta.size();
  const RiskOrder ro(time);
  const double shift = eta.maxCoeff();
  const VectorXd w = (eta.array() - shift).exp().matrix();

  // Risk-set sums at each tie group (descending time), then the cumulative
  // sums over event groups with time <= t_k taken in ascending order.
  std::vector<double> inv_s0(ro.groups()), inv_s0_sq(ro.groups());
  std::vector<double> events_in_group(ro.groups());
  double s0 = 0.0;
  for (std::size_t g = 0; g < ro.groups(); ++g) {
    double d = 0.0;
    for (Index k = ro.group_start[g]; k < ro.group_start[g + 1]; ++k) {
      const Index i = ro.order[static_cast<std::size_t>(k)];
      s0 += w[i];
      d += event[i] > 0.5 ? 1.0 : 0.0;
    }
    events_in_group[g] = d;
    inv_s0[g] = d / s0;
    inv_s0_sq[g] = d / (s0 * s0);
  }

  CoxDerivatives out;
  out.gradient.resize(n);
  out.hessian.resize(n);
  double c1 = 0.0, c2 = 0.0;
  for (std::size_t gg = ro.groups(); gg-- > 0;) {
    c1 += inv_s0[gg];
    c2 += inv_s0_sq[gg];
    for (Index k = ro.group_start[gg]; k < ro.group_start[gg + 1]; ++k) {
      const Index i = ro.order[static_cast<std::size_t>(k)];
      out.gradient[i] = w[i] * c1 - (event[i] > 0.5 ? 1.0 : 0.0);
      out.hessian[i] = std::max(0.0, w[i] * c1 - w[i] * w[i] * c2);
    }
  }
  return out;
}

CoxLinearFit cox_fit_linear(const Eigen::Ref<const MatrixXd>& design, const Eigen::Ref<const VectorXd>& time,
                            const Eigen::Ref<const VectorXd>& event, const CoxFitOptions& options) {
  check_inputs(design.rows(), time, event);
  const Index q = design.cols();
  const Index events = (event.array() > 0.5).count();
  if (events < q) throw DataError("cox_fit_linear: fewer events than coefficients");
  for (Index j = 0; j < q; ++j) {
    if ((design.col(j).array() == design(0, j)).all()) {
      throw DataError("cox_fit_linear: design column " + std::to_string(j) + " is constant");
    }
  }

  const RiskOrder ro(time);
  CoxLinearFit fit;
  fit.coefficients = VectorXd::Zero(q);
  CoxState st = evaluate_linear(design, fit.coefficients, ro, event, true);
  if (q == 0) {
    fit.partial_loglik = st.loglik;
    fit.converged = true;
    return fit;
  }

  auto newton_step = [&](const CoxState& state) {
    try {
      return solve_spd(state.information, state.score);
    } catch (const NumericalError&) {
      fit.ridge = true;
      return solve_spd(state.information + options.ridge * MatrixXd::Identity(q, q), state.score);
    }
  };
  for (int it = 0; it < options.max_iterations; ++it) {
    VectorXd step = newton_step(st);
    if (st.score.lpNorm<Eigen::Infinity>() <= options.tolerance) {
      // A flat score with a Newton step of order one means the likelihood
      // keeps rising along a direction: its supremum is at infinity.
      if (step.lpNorm<Eigen::Infinity>() > 0.5) {
        fit.diverged = true;
      } else {
        fit.converged = true;
      }
      break;
    }
    ++fit.iterations;
    bool improved = false;
    // Near the optimum the change in loglik is below rounding error.
    const double slack = 1e-11 * (1.0 + std::abs(st.loglik));
    for (int h = 0; h <= options.max_halvings; ++h) {
      const VectorXd candidate = fit.coefficients + step;
      const CoxState trial = evaluate_linear(design, candidate, ro, event, false);
      if (std::isfinite(trial.loglik) && trial.loglik >= st.loglik - slack) {
        fit.coefficients = candidate;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    st = evaluate_linear(design, fit.coefficients, ro, event, true);
    if (fit.coefficients.lpNorm<Eigen::Infinity>() > options.divergence_bound) {
      fit.diverged = true;
      break;
    }
  }
  if (!fit.converged && !fit.diverged && st.score.lpNorm<Eigen::Infinity>() <= options.tolerance) {
    if (newton_step(st).lpNorm<Eigen::Infinity>() > 0.5) {
      fit.diverged = true;
    } else {
      fit.converged = true;
    }
  }
  if (fit.diverged) fit.converged = false;
  fit.partial_loglik = st.loglik;
  return fit;
}

BaselineHazard::BaselineHazard(std::vector<double> event_times, std::vector<double> cumulative)
    : event_times_(std::move(event_times)), cumulative_(std::move(cumulative)) {}

double BaselineHazard::operator()(double t) const {
  const auto it = std::upper_bound(event_times_.begin(), event_times_.end(), t);
  if (it == event_times_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - event_times_.begin() - 1)];
}

BaselineHazard breslow_baseline(const Eigen::Ref<const VectorXd>& eta, const Eigen::Ref<const VectorXd>& time,
                                const Eigen::Ref<const VectorXd>& event) {
  check_inputs(eta.size(), time, event);
  const RiskOrder ro(time);
  double shift = -std::numeric_limits<double>::infinity();
  std::vector<double> times, jumps;
  double s0 = 0.0;
  for (std::size_t g = 0; g < ro.groups(); ++g) {
    double d = 0.0;
    for (Index k = ro.group_start[g]; k < ro.group_start[g + 1]; ++k) {
      const Index i = ro.order[static_cast<std::size_t>(k)];
      if (eta[i] > shift) {
        s0 *= std::exp(shift - eta[i]);
        shift = eta[i];
      }
      s0 += std::exp(eta[i] - shift);
      d += event[i] > 0.5 ? 1.0 : 0.0;
    }
    if (d > 0.0) {
      times.push_back(time[ro.order[static_cast<std::size_t>(ro.group_start[g])]]);
      // Undo the max shift: sum exp(eta) = s0 * exp(shift).
      jumps.push_back(d / s0 * std::exp(-shift));
    }
  }
  std::reverse(times.begin(), times.end());
  std::reverse(jumps.begin(), jumps.end());
  std::vector<double> cumulative(jumps.size());
  std::partial_sum(jumps.begin(), jumps.end(), cumulative.begin());
  return BaselineHazard(std::move(times), std::move(cumulative));
}

}  // namespace medsurv
