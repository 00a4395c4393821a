#include "medsurv/numstats.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <string>

namespace medsurv {

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw UsageError("log_gamma: argument must be positive and finite");
  return std::lgamma(x);
}

double chisq_sf(double x, int df) {
  if (df < 1) throw UsageError("chisq_sf: df must be >= 1, got " + std::to_string(df));
  if (std::isnan(x)) throw UsageError("chisq_sf: x is NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return regularized_gamma_q(0.5 * df, 0.5 * x);
}

double chisq_cdf(double x, int df) {
  if (df < 1) throw UsageError("chisq_cdf: df must be >= 1, got " + std::to_string(df));
  if (std::isnan(x)) throw UsageError("chisq_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return regularized_gamma_p(0.5 * df, 0.5 * x);
}

VectorXd solve_spd(const Eigen::Ref<const MatrixXd>& a, const Eigen::Ref<const VectorXd>& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) throw UsageError("solve_spd: dimension mismatch");
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("solve_spd: matrix is not positive definite");
  return llt.solve(b);
}

double gaussian_profile_loglik(double rss, Index n) {
  if (rss <= 0.0) return std::numeric_limits<double>::infinity();
  const double nd = static_cast<double>(n);
  return -0.5 * nd * (std::log(2.0 * std::numbers::pi) + std::log(rss / nd) + 1.0);
}

OlsFit ols_fit(const Eigen::Ref<const MatrixXd>& design, const Eigen::Ref<const VectorXd>& y) {
  const Index n = design.rows();
  const Index q = design.cols();
  if (y.size() != n) throw UsageError("ols_fit: design and response lengths differ");
  if (n <= q) throw NumericalError("ols_fit: need more rows than columns");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  if (qr.rank() < q) throw NumericalError("ols_fit: rank-deficient design");

  OlsFit fit;
  fit.n = n;
  fit.coefficients = qr.solve(y);
  fit.rss = (y - design * fit.coefficients).squaredNorm();
  fit.perfect_fit = fit.rss <= 1e-18 * y.squaredNorm();
  fit.loglik = fit.perfect_fit ? std::numeric_limits<double>::infinity()
                               : gaussian_profile_loglik(fit.rss, n);
  return fit;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw UsageError("quantile: empty input");
  if (prob < 0.0 || prob > 1.0) throw UsageError("quantile: prob outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace medsurv
