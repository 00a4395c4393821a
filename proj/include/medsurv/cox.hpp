#pragma once

#include <vector>

#include <Eigen/Dense>

namespace medsurv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Breslow log partial likelihood of a Cox model with linear predictor eta.
/// The risk set at time t is {j : time_j >= t}.
double cox_partial_loglik(const Eigen::Ref<const VectorXd>& eta, const Eigen::Ref<const VectorXd>& time,
                          const Eigen::Ref<const VectorXd>& event);

/// Per-subject gradient and Hessian diagonal of the negative log partial
/// likelihood with respect to eta.
struct CoxDerivatives {
  VectorXd gradient;
  VectorXd hessian;
};

CoxDerivatives cox_grad_hess(const Eigen::Ref<const VectorXd>& eta, const Eigen::Ref<const VectorXd>& time,
                             const Eigen::Ref<const VectorXd>& event);

struct CoxFitOptions {
  double tolerance = 1e-6;
  int max_iterations = 50;
  int max_halvings = 20;
  double divergence_bound = 50.0;
  double ridge = 1e-8;
};

struct CoxLinearFit {
  VectorXd coefficients;
  double partial_loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  // Information matrix was singular and a ridge term was added.
  bool ridge = false;
  // Coefficients left the box |beta| <= divergence_bound (monotone likelihood).
  bool diverged = false;
};

/// Newton-Raphson fit from beta = 0 with step halving. The design has no
/// intercept column; the baseline hazard absorbs it.
CoxLinearFit cox_fit_linear(const Eigen::Ref<const MatrixXd>& design, const Eigen::Ref<const VectorXd>& time,
                            const Eigen::Ref<const VectorXd>& event, const CoxFitOptions& options = {});

/// Breslow estimate of the cumulative baseline hazard, a right-continuous
/// step function with jumps at the distinct event times.
class BaselineHazard {
 public:
  BaselineHazard() = default;
  BaselineHazard(std::vector<double> event_times, std::vector<double> cumulative);

  double operator()(double t) const;
  const std::vector<double>& event_times() const { return event_times_; }
  const std::vector<double>& cumulative() const { return cumulative_; }

 private:
  std::vector<double> event_times_;
  std::vector<double> cumulative_;
};

BaselineHazard breslow_baseline(const Eigen::Ref<const VectorXd>& eta, const Eigen::Ref<const VectorXd>& time,
                                const Eigen::Ref<const VectorXd>& event);

}  // namespace medsurv
