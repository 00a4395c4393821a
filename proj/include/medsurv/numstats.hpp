#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "medsurv/errors.hpp"

namespace medsurv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double log_gamma(double x);

namespace detail {

// Series representation of P(s, x); converges quickly for x < s + 1.
template <typename Scalar>
Scalar gamma_p_series(Scalar s, Scalar x) {
  Scalar term = Scalar(1) / s;
  Scalar sum = term;
  Scalar ap = s;
  for (int n = 0; n < 10000; ++n) {
    ap += Scalar(1);
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * std::numeric_limits<Scalar>::epsilon()) break;
  }
  return sum * std::exp(-x + s * std::log(x) - Scalar(log_gamma(double(s))));
}

// Modified Lentz continued fraction for Q(s, x); used for x >= s + 1.
template <typename Scalar>
Scalar gamma_q_continued_fraction(Scalar s, Scalar x) {
  constexpr Scalar tiny = std::numeric_limits<Scalar>::min() / std::numeric_limits<Scalar>::epsilon();
  Scalar b = x + Scalar(1) - s;
  Scalar c = Scalar(1) / tiny;
  Scalar d = Scalar(1) / b;
  Scalar h = d;
  for (int i = 1; i < 10000; ++i) {
    const Scalar an = -Scalar(i) * (Scalar(i) - s);
    b += Scalar(2);
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = Scalar(1) / d;
    const Scalar delta = d * c;
    h *= delta;
    if (std::abs(delta - Scalar(1)) < std::numeric_limits<Scalar>::epsilon()) break;
  }
  return std::exp(-x + s * std::log(x) - Scalar(log_gamma(double(s)))) * h;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(s, x).
template <typename Scalar>
Scalar regularized_gamma_p(Scalar s, Scalar x) {
  if (!(s > Scalar(0)) || x < Scalar(0)) throw UsageError("regularized_gamma_p: need s > 0, x >= 0");
  if (x == Scalar(0)) return Scalar(0);
  if (x < s + Scalar(1)) return detail::gamma_p_series(s, x);
  return Scalar(1) - detail::gamma_q_continued_fraction(s, x);
}

/// Regularized upper incomplete gamma Q(s, x) = 1 - P(s, x).
template <typename Scalar>
Scalar regularized_gamma_q(Scalar s, Scalar x) {
  if (!(s > Scalar(0)) || x < Scalar(0)) throw UsageError("regularized_gamma_q: need s > 0, x >= 0");
  if (x == Scalar(0)) return Scalar(1);
  if (x < s + Scalar(1)) return Scalar(1) - detail::gamma_p_series(s, x);
  return detail::gamma_q_continued_fraction(s, x);
}

/// Upper tail P(chi2_df > x).
double chisq_sf(double x, int df);
/// Lower tail P(chi2_df <= x).
double chisq_cdf(double x, int df);

/// Cholesky solve of A x = b. Throws NumericalError on a non-positive pivot.
VectorXd solve_spd(const Eigen::Ref<const MatrixXd>& a, const Eigen::Ref<const VectorXd>& b);

/// Least-squares fit with the Gaussian log-likelihood profiled at
/// sigma^2 = rss / n.
struct OlsFit {
  VectorXd coefficients;
  double rss = 0.0;
  Index n = 0;
  // +infinity when perfect_fit is set.
  double loglik = 0.0;
  bool perfect_fit = false;
};

OlsFit ols_fit(const Eigen::Ref<const MatrixXd>& design, const Eigen::Ref<const VectorXd>& y);

double gaussian_profile_loglik(double rss, Index n);

// Sample quantile with linear interpolation between order statistics
// (the "type 7" definition).
double quantile(std::vector<double> values, double prob);

double mean(const std::vector<double>& values);

}  // namespace medsurv
