#include "medsurv/niecc.hpp"

#include <cmath>

#include "medsurv/errors.hpp"
#include "medsurv/numstats.hpp"

namespace medsurv {
namespace {

MatrixXd outcome_features(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& w,
                          const Eigen::Ref<const VectorXd>& m) {
  MatrixXd f(x.rows(), x.cols() + 2);
  f.leftCols(x.cols()) = x;
  f.col(x.cols()) = w;
  f.col(x.cols() + 1) = m;
  return f;
}

MatrixXd with_intercept(const Eigen::Ref<const MatrixXd>& x) {
  MatrixXd d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

}  // namespace

std::string to_string(Mode mode) { return mode == Mode::kLinear ? "linear" : "complex"; }

Mode parse_mode(std::string_view name) {
  if (name == "linear") return Mode::kLinear;
  if (name == "complex") return Mode::kComplex;
  throw UsageError("unknown mode '" + std::string(name) + "' (valid: linear, complex)");
}

std::string to_string(CounterfactualSetting s) {
  switch (s) {
    case CounterfactualSetting::kTreatedNaturalMediator: return "w1_m1";
    case CounterfactualSetting::kTreatedControlMediator: return "w1_m0";
    case CounterfactualSetting::kControlNaturalMediator: return "w0_m0";
  }
  return "?";
}

OutcomeModel::OutcomeModel(Mode mode, VectorXd linear_coefficients, BoostedModel boosted, BaselineHazard baseline,
                           OutcomeDiagnostics diagnostics)
    : mode_(mode),
      linear_(std::move(linear_coefficients)),
      boosted_(std::move(boosted)),
      baseline_(std::move(baseline)),
      diagnostics_(diagnostics) {}

VectorXd OutcomeModel::log_relative_hazard(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& w,
                                           const Eigen::Ref<const VectorXd>& m) const {
  if (w.size() != x.rows() || m.size() != x.rows()) throw UsageError("log_relative_hazard: length mismatch");
  if (mode_ == Mode::kLinear) {
    const Index p = x.cols();
    if (linear_.size() != p + 2) throw UsageError("log_relative_hazard: covariate count mismatch");
    return x * linear_.head(p) + linear_[p] * w + linear_[p + 1] * m;
  }
  return boosted_.predict(outcome_features(x, w, m));
}

VectorXd OutcomeModel::log_relative_hazard(const Eigen::Ref<const MatrixXd>& x, double w,
                                           const Eigen::Ref<const VectorXd>& m) const {
  return log_relative_hazard(x, VectorXd::Constant(x.rows(), w), m);
}

double OutcomeModel::mediator_coefficient() const {
  if (mode_ != Mode::kLinear) throw UsageError("mediator_coefficient is defined in linear mode only");
  return linear_[linear_.size() - 1];
}

OutcomeModel fit_outcome_model(const SurvivalDataset& ds, Mode mode, const BoostConfig& boosting) {
  ds.require_fittable();
  const MatrixXd features = outcome_features(ds.covariates, ds.treatment, ds.mediator);
  OutcomeDiagnostics diag;
  diag.event_rate = ds.event.mean();
  diag.rare_event_warning = diag.event_rate > 0.30;

  VectorXd linear;
  BoostedModel boosted;
  VectorXd eta;
  if (mode == Mode::kLinear) {
    if ((ds.mediator.array() == ds.mediator[0]).all()) {
      throw DataError("degenerate mediator: constant mediator column leaves its coefficient unidentifiable");
    }
    const CoxLinearFit fit = cox_fit_linear(features, ds.time, ds.event);
    if (fit.diverged) throw NumericalError("outcome Cox fit diverged (monotone likelihood)");
    diag.converged = fit.converged;
    diag.ridge = fit.ridge;
    linear = fit.coefficients;
    eta = features * linear;
  } else {
    if (boosting.rounds == 0) {
      boosted.loss = Loss::kCox;
      boosted.learning_rate = boosting.learning_rate;
      boosted.num_features = features.cols();
    } else {
      boosted = boost_fit_cox(features, ds.time, ds.event, boosting);
    }
    eta = boosted.predict(features);
  }
  diag.partial_loglik = cox_partial_loglik(eta, ds.time, ds.event);
  BaselineHazard baseline = breslow_baseline(eta, ds.time, ds.event);
  return OutcomeModel(mode, std::move(linear), std::move(boosted), std::move(baseline), diag);
}

MediatorModel::MediatorModel(Mode mode, std::array<VectorXd, 2> linear, std::array<BoostedModel, 2> boosted,
                             std::array<double, 2> residual_sd)
    : mode_(mode), linear_(std::move(linear)), boosted_(std::move(boosted)), residual_sd_(residual_sd) {}

VectorXd MediatorModel::predict(int arm, const Eigen::Ref<const MatrixXd>& x) const {
  if (arm != 0 && arm != 1) throw UsageError("mediator arm must be 0 or 1");
  const auto a = static_cast<std::size_t>(arm);
  if (mode_ == Mode::kLinear) {
    if (linear_[a].size() != x.cols() + 1) throw UsageError("mediator predict: covariate count mismatch");
    return (x * linear_[a].tail(x.cols())).array() + linear_[a][0];
  }
  return boosted_[a].predict(x);
}

MediatorModel fit_mediator_model(const SurvivalDataset& ds, Mode mode, const BoostConfig& boosting) {
  std::array<std::vector<Index>, 2> rows;
  for (Index i = 0; i < ds.size(); ++i) rows[ds.treatment[i] > 0.5 ? 1 : 0].push_back(i);
  if (rows[0].empty() || rows[1].empty()) throw DataError("mediator model needs both treatment arms");

  std::array<VectorXd, 2> linear;
  std::array<BoostedModel, 2> boosted;
  std::array<double, 2> sd{};
  for (std::size_t a = 0; a < 2; ++a) {
    const SurvivalDataset arm = ds.subset(rows[a]);
    VectorXd fitted;
    if (mode == Mode::kLinear) {
      if (arm.size() < ds.num_covariates() + 1 + 1) {
        throw DataError("arm " + std::to_string(a) + " has too few rows for a linear mediator model");
      }
      const MatrixXd design = with_intercept(arm.covariates);
      linear[a] = ols_fit(design, arm.mediator).coefficients;
      fitted = design * linear[a];
    } else {
      boosted[a] = boost_fit_squared(arm.covariates, arm.mediator, boosting);
      fitted = boosted[a].predict(arm.covariates);
    }
    sd[a] = std::sqrt((arm.mediator - fitted).squaredNorm() / static_cast<double>(arm.size()));
  }
  return MediatorModel(mode, std::move(linear), std::move(boosted), sd);
}

EffectEstimates compute_niecc(const OutcomeModel& outcome, const MediatorModel& mediator,
                              const Eigen::Ref<const MatrixXd>& x) {
  const VectorXd m0 = mediator.predict(0, x);
  const VectorXd m1 = mediator.predict(1, x);
  const VectorXd g1m1 = outcome.log_relative_hazard(x, 1.0, m1);
  const VectorXd g1m0 = outcome.log_relative_hazard(x, 1.0, m0);
  const VectorXd g0m0 = outcome.log_relative_hazard(x, 0.0, m0);
  EffectEstimates e;
  e.niecc = g1m1 - g1m0;
  e.dte = g1m0 - g0m0;
  e.tte = e.niecc + e.dte;
  return e;
}

EffectEstimates estimate_effects(const SurvivalDataset& ds, const EffectConfig& config, RandomStream rng) {
  const int folds = config.crossfit_folds;
  if (folds == 0) {
    const OutcomeModel outcome = fit_outcome_model(ds, config.mode, config.outcome);
    const MediatorModel mediator = fit_mediator_model(ds, config.mode, config.mediator);
    return compute_niecc(outcome, mediator, ds.covariates);
  }
  if (folds < 2 || folds > ds.size()) throw UsageError("crossfit folds must be 0 or between 2 and n");
  const std::vector<Index> perm = rng.substream("crossfit").permutation(ds.size());
  std::vector<int> fold_of(static_cast<std::size_t>(ds.size()));
  for (std::size_t k = 0; k < perm.size(); ++k) fold_of[static_cast<std::size_t>(perm[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));

  EffectEstimates out;
  out.niecc.resize(ds.size());
  out.dte.resize(ds.size());
  out.tte.resize(ds.size());
  out.crossfit_folds = folds;
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> train, held;
    for (Index i = 0; i < ds.size(); ++i) (fold_of[static_cast<std::size_t>(i)] == f ? held : train).push_back(i);
    const SurvivalDataset train_ds = ds.subset(train);
    const OutcomeModel outcome = fit_outcome_model(train_ds, config.mode, config.outcome);
    const MediatorModel mediator = fit_mediator_model(train_ds, config.mode, config.mediator);
    MatrixXd xh(static_cast<Index>(held.size()), ds.num_covariates());
    for (std::size_t r = 0; r < held.size(); ++r) xh.row(static_cast<Index>(r)) = ds.covariates.row(held[r]);
    const EffectEstimates part = compute_niecc(outcome, mediator, xh);
    for (std::size_t r = 0; r < held.size(); ++r) {
      out.niecc[held[r]] = part.niecc[static_cast<Index>(r)];
      out.dte[held[r]] = part.dte[static_cast<Index>(r)];
      out.tte[held[r]] = part.tte[static_cast<Index>(r)];
    }
  }
  return out;
}

VectorXd counterfactual_survival(const OutcomeModel& outcome, const MediatorModel& mediator,
                                 const Eigen::Ref<const MatrixXd>& x_subgroup, CounterfactualSetting setting,
                                 const std::vector<double>& time_grid) {
  if (x_subgroup.rows() == 0) throw UsageError("counterfactual_survival: empty subgroup");
  const double w = setting == CounterfactualSetting::kControlNaturalMediator ? 0.0 : 1.0;
  const int mediator_arm = setting == CounterfactualSetting::kTreatedNaturalMediator ? 1 : 0;
  const VectorXd m = mediator.predict(mediator_arm, x_subgroup);
  const VectorXd risk = outcome.log_relative_hazard(x_subgroup, w, m).array().exp();
  VectorXd s(static_cast<Index>(time_grid.size()));
  for (std::size_t k = 0; k < time_grid.size(); ++k) {
    const double cum = outcome.baseline()(time_grid[k]);
    s[static_cast<Index>(k)] = (-cum * risk.array()).exp().mean();
  }
  return s;
}

}  // namespace medsurv
