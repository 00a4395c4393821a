#pragma once
// Independent reference computations used only by the tests.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Gaussian elimination with partial pivoting on a copy.
inline Eigen::VectorXd gauss_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index r = c + 1; r < n; ++r) {
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    }
    if (a(piv, c) == 0.0) throw std::runtime_error("singular");
    a.row(c).swap(a.row(piv));
    std::swap(b[c], b[piv]);
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      a.row(r) -= f * a.row(c);
      b[r] -= f * b[c];
    }
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (Eigen::Index c = r + 1; c < n; ++c) s -= a(r, c) * x[c];
    x[r] = s / a(r, r);
  }
  return x;
}

// Gamma(k / 2) by the half-integer recursion.
inline double gamma_half(int k) {
  double g = (k % 2 == 0) ? 1.0 : std::sqrt(std::numbers::pi);
  for (double s = (k % 2 == 0) ? 1.0 : 0.5; s <= 0.5 * k - 1.0 + 1e-12; s += 1.0) g *= s;
  return g;
}

// P(chi2_k > x) by composite Simpson on the substitution x = u^2, which
// removes the singularity at the origin for k = 1.
inline double chisq_sf_quadrature(double x, int k) {
  const double norm = std::pow(2.0, 0.5 * k) * gamma_half(k);
  auto f = [&](double u) { return 2.0 * std::pow(u, k - 1) * std::exp(-0.5 * u * u) / norm; };
  const double a = std::sqrt(x), b = a + 40.0 + std::sqrt(static_cast<double>(k)) * 4.0;
  const int panels = 200000;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Breslow log partial likelihood by explicit risk-set enumeration.
inline double cox_loglik_enumerate(const Eigen::VectorXd& eta, const Eigen::VectorXd& time,
                                   const Eigen::VectorXd& event) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < time.size(); ++i) {
    if (event[i] < 0.5) continue;
    double risk = 0.0;
    for (Eigen::Index j = 0; j < time.size(); ++j) {
      if (time[j] >= time[i]) risk += std::exp(eta[j]);
    }
    ll += eta[i] - std::log(risk);
  }
  return ll;
}

// Adjusted Rand index between two labelings.
inline double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
  const int ka = *std::max_element(a.begin(), a.end()) + 1;
  const int kb = *std::max_element(b.begin(), b.end()) + 1;
  std::vector<std::vector<double>> t(static_cast<std::size_t>(ka), std::vector<double>(static_cast<std::size_t>(kb), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) t[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])] += 1.0;
  auto c2 = [](double v) { return v * (v - 1.0) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  std::vector<double> col(static_cast<std::size_t>(kb), 0.0);
  for (const auto& row : t) {
    double r = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      sum_ij += c2(row[j]);
      r += row[j];
      col[j] += row[j];
    }
    sum_a += c2(r);
  }
  for (double c : col) sum_b += c2(c);
  const double expected = sum_a * sum_b / c2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_ij - expected) / (max_index - expected);
}

// Kolmogorov-Smirnov distance of a sample to Uniform(0, 1).
inline double ks_uniform(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double d = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    d = std::max({d, (i + 1) / n - v[i], v[i] - i / n});
  }
  return d;
}

}  // namespace oracle
