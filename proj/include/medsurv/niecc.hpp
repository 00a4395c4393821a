#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "medsurv/cox.hpp"
#include "medsurv/dataset.hpp"
#include "medsurv/learners.hpp"
#include "medsurv/rng.hpp"

namespace medsurv {

enum class Mode { kLinear, kComplex };

std::string to_string(Mode mode);
Mode parse_mode(std::string_view name);

struct OutcomeDiagnostics {
  double event_rate = 0.0;
  // Event rate above 30% strains the rare-event approximation behind the
  // log-hazard decomposition.
  bool rare_event_warning = false;
  bool converged = true;
  bool ridge = false;
  double partial_loglik = 0.0;
};

/// Fitted log-relative hazard g(x, w, m) with its Breslow baseline.
///
/// Linear mode: g = x'beta_x + beta_w * w + beta_m * m from a Cox fit on
/// [X, W, M]. Complex mode: a Cox-loss boosted model on the features
/// (X, W, M).
class OutcomeModel {
 public:
  OutcomeModel() = default;
  OutcomeModel(Mode mode, VectorXd linear_coefficients, BoostedModel boosted, BaselineHazard baseline,
               OutcomeDiagnostics diagnostics);

  Mode mode() const { return mode_; }
  VectorXd log_relative_hazard(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& w,
                               const Eigen::Ref<const VectorXd>& m) const;
  VectorXd log_relative_hazard(const Eigen::Ref<const MatrixXd>& x, double w,
                               const Eigen::Ref<const VectorXd>& m) const;

  const VectorXd& linear_coefficients() const { return linear_; }
  double mediator_coefficient() const;
  const BoostedModel& boosted() const { return boosted_; }
  const BaselineHazard& baseline() const { return baseline_; }
  const OutcomeDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  Mode mode_ = Mode::kLinear;
  VectorXd linear_;
  BoostedModel boosted_;
  BaselineHazard baseline_;
  OutcomeDiagnostics diagnostics_;
};

OutcomeModel fit_outcome_model(const SurvivalDataset& ds, Mode mode, const BoostConfig& boosting);

/// Per-arm conditional means of the mediator given covariates.
class MediatorModel {
 public:
  MediatorModel() = default;
  MediatorModel(Mode mode, std::array<VectorXd, 2> linear, std::array<BoostedModel, 2> boosted,
                std::array<double, 2> residual_sd);

  // Conditional mean under arm (0 or 1).
  VectorXd predict(int arm, const Eigen::Ref<const MatrixXd>& x) const;
  const std::array<double, 2>& residual_sd() const { return residual_sd_; }
  const VectorXd& linear_coefficients(int arm) const { return linear_[static_cast<std::size_t>(arm)]; }

 private:
  Mode mode_ = Mode::kLinear;
  std::array<VectorXd, 2> linear_;
  std::array<BoostedModel, 2> boosted_;
  std::array<double, 2> residual_sd_{};
};

MediatorModel fit_mediator_model(const SurvivalDataset& ds, Mode mode, const BoostConfig& boosting);

/// Individual effects on the log-hazard scale. tte = niecc + dte.
struct EffectEstimates {
  VectorXd niecc;
  VectorXd dte;
  VectorXd tte;
  int crossfit_folds = 0;
};

EffectEstimates compute_niecc(const OutcomeModel& outcome, const MediatorModel& mediator,
                              const Eigen::Ref<const MatrixXd>& x);

struct EffectConfig {
  Mode mode = Mode::kComplex;
  BoostConfig outcome;
  BoostConfig mediator;
  // 0 disables cross-fitting.
  int crossfit_folds = 0;
};

/// Fits both models and evaluates the effects. With crossfit_folds >= 2 the
/// models for each fold are trained on the remaining folds.
EffectEstimates estimate_effects(const SurvivalDataset& ds, const EffectConfig& config, RandomStream rng);

enum class CounterfactualSetting {
  kTreatedNaturalMediator,  // S(1, M(1))
  kTreatedControlMediator,  // S(1, M(0))
  kControlNaturalMediator,  // S(0, M(0))
};

std::string to_string(CounterfactualSetting s);

/// Standardized survival curve: the subgroup average of
/// exp(-Lambda0(t) * exp(g(x, w, mhat_w'(x)))).
VectorXd counterfactual_survival(const OutcomeModel& outcome, const MediatorModel& mediator,
                                 const Eigen::Ref<const MatrixXd>& x_subgroup, CounterfactualSetting setting,
                                 const std::vector<double>& time_grid);

}  // namespace medsurv
