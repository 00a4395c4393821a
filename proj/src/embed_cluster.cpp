#include "medsurv/embed_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "medsurv/errors.hpp"
#include "medsurv/numstats.hpp"
#include "medsurv/rng.hpp"

namespace medsurv {

MatrixXd niecc_dissimilarity(const Eigen::Ref<const VectorXd>& niecc, const Eigen::Ref<const MatrixXd>& x_std,
                             double blend) {
  if (!(blend >= 0.0 && blend <= 1.0)) throw UsageError("dissimilarity blend must lie in [0, 1]");
  const Index n = niecc.size();
  if (blend > 0.0 && x_std.rows() != n) throw UsageError("dissimilarity: covariate rows do not match effects");
  std::vector<double> values(niecc.data(), niecc.data() + n);
  double iqr = quantile(values, 0.75) - quantile(values, 0.25);
  if (!(iqr > 0.0)) iqr = 1.0;
  const double cov_scale = blend > 0.0 ? 1.0 / std::sqrt(static_cast<double>(std::max<Index>(1, x_std.cols()))) : 0.0;
  MatrixXd d = MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      double v = (1.0 - blend) * std::abs(niecc[i] - niecc[j]) / iqr;
      if (blend > 0.0) v += blend * (x_std.row(i) - x_std.row(j)).norm() * cov_scale;
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

MatrixXd conditional_affinities(const Eigen::Ref<const MatrixXd>& distances, double perplexity,
                                std::vector<double>* row_perplexity) {
  const Index n = distances.rows();
  if (distances.cols() != n) throw UsageError("t-SNE: distance matrix must be square");
  if (!(perplexity > 0.0) || 3.0 * perplexity >= static_cast<double>(n)) {
    throw UsageError("t-SNE: perplexity must satisfy 0 < 3 * perplexity < n");
  }
  const double target = std::log(perplexity);
  MatrixXd p = MatrixXd::Zero(n, n);
  if (row_perplexity) row_perplexity->assign(static_cast<std::size_t>(n), 0.0);
  VectorXd d2(n), row(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) d2[j] = distances(i, j) * distances(i, j);
    double dmin = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (j != i) dmin = std::min(dmin, d2[j]);
    }
    // Entropy at precision beta, computed with the nearest distance
    // subtracted for stability.
    auto entropy = [&](double beta) {
      double sum = 0.0, wsum = 0.0;
      for (Index j = 0; j < n; ++j) {
        if (j == i) {
          row[j] = 0.0;
          continue;
        }
        const double arg = -beta * (d2[j] - dmin);
        const double e = arg > -700.0 ? std::exp(arg) : 0.0;
        row[j] = e;
        sum += e;
        wsum += e * (d2[j] - dmin);
      }
      return std::log(sum) + beta * wsum / sum;
    };
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double h = entropy(beta);
    for (int it = 0; it < 200; ++it) {
      if (std::abs(std::exp(h - target) - 1.0) <= 1e-5) break;
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
      h = entropy(beta);
    }
    const double sum = row.sum();
    p.row(i) = row / sum;
    if (row_perplexity) (*row_perplexity)[static_cast<std::size_t>(i)] = std::exp(h);
  }
  return p;
}

Embedding tsne_embed(const Eigen::Ref<const MatrixXd>& distances, const TsneParams& params, std::uint64_t seed) {
  const Index n = distances.rows();
  Embedding emb;
  emb.seed = seed;
  const MatrixXd cond = conditional_affinities(distances, params.perplexity, &emb.row_perplexity);
  MatrixXd p = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(std::numeric_limits<double>::epsilon());
  p.diagonal().setZero();

  RandomStream rng(seed, "tsne/init");
  MatrixXd y(n, 2);
  for (Index i = 0; i < n; ++i) {
    y(i, 0) = params.init_sd * rng.normal();
    y(i, 1) = params.init_sd * rng.normal();
  }
  MatrixXd velocity = MatrixXd::Zero(n, 2);
  MatrixXd gains = MatrixXd::Ones(n, 2);
  MatrixXd attract(n, 2), repel(n, 2), grad(n, 2);
  Eigen::ArrayXd y0(n), y1(n), ax(n), ay(n), rx(n), ry(n);

  auto kl_divergence = [&]() {
    double z = 0.0;
    for (Index j = 0; j < n; ++j) {
      for (Index i = j + 1; i < n; ++i) z += 2.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
    }
    double kl = 0.0;
    for (Index j = 0; j < n; ++j) {
      for (Index i = j + 1; i < n; ++i) {
        const double q = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm()) / z;
        const double pij = p(i, j);
        if (pij > 0.0) kl += 2.0 * pij * std::log(pij / q);
      }
    }
    return kl;
  };

  for (int it = 0; it < params.iterations; ++it) {
    const double exaggeration = it < params.exaggeration_iterations ? params.exaggeration : 1.0;
    const double momentum = it < params.exaggeration_iterations ? params.initial_momentum : params.final_momentum;
    // grad_i = 4 * (exag * sum_j p_ij q_ij (y_i - y_j) - sum_j q_ij^2 (y_i - y_j) / Z)
    // with q_ij = 1 / (1 + |y_i - y_j|^2) unnormalized.
    ax.setZero();
    ay.setZero();
    rx.setZero();
    ry.setZero();
    y0 = y.col(0).array();
    y1 = y.col(1).array();
    double z = 0.0;
    {
      const double* __restrict py0 = y0.data();
      const double* __restrict py1 = y1.data();
      double* __restrict pax = ax.data();
      double* __restrict pay = ay.data();
      double* __restrict prx = rx.data();
      double* __restrict pry = ry.data();
      for (Index j = 0; j < n; ++j) {
        const double yj0 = py0[j], yj1 = py1[j];
        const double* __restrict pcol = p.col(j).data();
        double aj0 = 0.0, aj1 = 0.0, rj0 = 0.0, rj1 = 0.0, zj = 0.0;
        for (Index i = j + 1; i < n; ++i) {
          const double d0 = py0[i] - yj0, d1 = py1[i] - yj1;
          const double q = 1.0 / (1.0 + d0 * d0 + d1 * d1);
          const double a = pcol[i] * q;
          const double r = q * q;
          zj += q;
          pax[i] += a * d0;
          pay[i] += a * d1;
          prx[i] += r * d0;
          pry[i] += r * d1;
          aj0 += a * d0;
          aj1 += a * d1;
          rj0 += r * d0;
          rj1 += r * d1;
        }
        pax[j] -= aj0;
        pay[j] -= aj1;
        prx[j] -= rj0;
        pry[j] -= rj1;
        z += 2.0 * zj;
      }
    }
    attract.col(0) = ax.matrix();
    attract.col(1) = ay.matrix();
    repel.col(0) = rx.matrix();
    repel.col(1) = ry.matrix();
    grad = 4.0 * (exaggeration * attract - repel / z);
    if (!grad.allFinite()) throw NumericalError("t-SNE: non-finite gradient at iteration " + std::to_string(it));
    for (Index i = 0; i < n; ++i) {
      for (Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (velocity(i, c) > 0.0);
        gains(i, c) = same_sign ? std::max(gains(i, c) * 0.8, 0.01) : gains(i, c) + 0.2;
      }
    }
    velocity = momentum * velocity - params.learning_rate * gains.cwiseProduct(grad);
    y += velocity;
    y.rowwise() -= y.colwise().mean();
    if ((it + 1) % 50 == 0) emb.kl_trace.emplace_back(it + 1, kl_divergence());
  }
  y.rowwise() -= y.colwise().mean();
  emb.coords = std::move(y);
  emb.kl_divergence = emb.kl_trace.empty() || emb.kl_trace.back().first != params.iterations ? kl_divergence()
                                                                                              : emb.kl_trace.back().second;
  return emb;
}

double clustering_inertia(const Eigen::Ref<const MatrixXd>& coords, const std::vector<int>& labels,
                          const Eigen::Ref<const MatrixXd>& centers) {
  double s = 0.0;
  for (Index i = 0; i < coords.rows(); ++i) s += (coords.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  return s;
}

namespace {

Clustering lloyd_run(const Eigen::Ref<const MatrixXd>& x, int k, RandomStream& rng) {
  const Index n = x.rows();
  Clustering c;
  c.k = k;
  c.centers.resize(k, x.cols());
  // k-means++ seeding.
  VectorXd nearest(n);
  Index first = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  c.centers.row(0) = x.row(first);
  for (Index i = 0; i < n; ++i) nearest[i] = (x.row(i) - c.centers.row(0)).squaredNorm();
  for (int m = 1; m < k; ++m) {
    const double total = nearest.sum();
    Index pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        u -= nearest[i];
        if (u <= 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    c.centers.row(m) = x.row(pick);
    for (Index i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], (x.row(i) - c.centers.row(m)).squaredNorm());
  }

  c.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < 300; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int m = 0; m < k; ++m) {
        const double d = (x.row(i) - c.centers.row(m)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = m;
        }
      }
      if (c.labels[static_cast<std::size_t>(i)] != best) {
        c.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    // Empty clusters take the point farthest from its current center.
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (int l : c.labels) ++counts[static_cast<std::size_t>(l)];
    for (int m = 0; m < k; ++m) {
      if (counts[static_cast<std::size_t>(m)] > 0) continue;
      Index far = 0;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        const int l = c.labels[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(l)] < 2) continue;
        const double d = (x.row(i) - c.centers.row(l)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --counts[static_cast<std::size_t>(c.labels[static_cast<std::size_t>(far)])];
      c.labels[static_cast<std::size_t>(far)] = m;
      counts[static_cast<std::size_t>(m)] = 1;
      c.centers.row(m) = x.row(far);
      changed = true;
    }
    c.inertia_trace.push_back(clustering_inertia(x, c.labels, c.centers));
    c.centers.setZero();
    for (Index i = 0; i < n; ++i) c.centers.row(c.labels[static_cast<std::size_t>(i)]) += x.row(i);
    for (int m = 0; m < k; ++m) c.centers.row(m) /= static_cast<double>(counts[static_cast<std::size_t>(m)]);
    if (!changed && it > 0) break;
  }
  c.inertia = clustering_inertia(x, c.labels, c.centers);
  return c;
}

}  // namespace

Clustering kmeans_restart(const Eigen::Ref<const MatrixXd>& coords, int k, std::uint64_t seed, int restart) {
  if (k < 1) throw UsageError("kmeans: k must be >= 1");
  if (k > coords.rows()) throw UsageError("kmeans: k exceeds the number of points");
  RandomStream rng = RandomStream(seed, "kmeans").substream(std::to_string(restart));
  return lloyd_run(coords, k, rng);
}

Clustering kmeans(const Eigen::Ref<const MatrixXd>& coords, int k, int restarts, std::uint64_t seed) {
  if (restarts < 1) throw UsageError("kmeans: restarts must be >= 1");
  Clustering best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Clustering c = kmeans_restart(coords, k, seed, r);
    if (c.inertia < best.inertia) best = std::move(c);
  }
  return best;
}

}  // namespace medsurv
