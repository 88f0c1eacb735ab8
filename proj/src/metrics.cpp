#include "gapsched/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace gapsched {

double optimality_gap(double v_hat, double v_star) {
  if (!std::isfinite(v_hat) || !std::isfinite(v_star)) {
    throw std::invalid_argument("optimality_gap: inputs must be finite");
  }
  return std::abs(v_hat - v_star);
}

double generator_gap(double gen_loss_hat, GanVariant variant) {
  if (!std::isfinite(gen_loss_hat)) {
    throw std::invalid_argument("generator_gap: input must be finite");
  }
  return std::abs(gen_loss_hat - ideal_gen_loss(variant));
}

GaussianSummary fit_gaussian(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  if (n < 2) {
    throw std::invalid_argument("fit_gaussian: need at least 2 samples");
  }
  GaussianSummary summary;
  summary.mean = samples.colwise().mean();
  Eigen::MatrixXd centered = samples.rowwise() - summary.mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  summary.covariance = 0.5 * (cov + cov.transpose());
  return summary;
}

namespace {

// tr((A B)^(1/2)) for symmetric PSD A, B.
double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() == 2) {
    // For a 2x2 matrix M with nonnegative eigenvalues,
    // tr(sqrt(M)) = sqrt(tr M + 2 sqrt(det M)).
    const Eigen::MatrixXd m = a * b;
    const double tr = m.trace();
    const double det = std::max(m.determinant(), 0.0);
    return std::sqrt(std::max(tr + 2.0 * std::sqrt(det), 0.0));
  }
  // General case: tr((A B)^(1/2)) = tr((sqrt(A) B sqrt(A))^(1/2)), and the
  // inner matrix is symmetric PSD.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_a(a);
  if (es_a.info() != Eigen::Success) {
    throw std::runtime_error("frechet_gaussian_distance: eigendecomposition failed");
  }
  Eigen::VectorXd eig_a = es_a.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd sqrt_a = es_a.eigenvectors() * eig_a.cwiseSqrt().asDiagonal() *
                           es_a.eigenvectors().transpose();
  Eigen::MatrixXd inner = sqrt_a * b * sqrt_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_inner(inner);
  if (es_inner.info() != Eigen::Success) {
    throw std::runtime_error("frechet_gaussian_distance: eigendecomposition failed");
  }
  return es_inner.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

void check_summary(const GaussianSummary& s, const char* what) {
  if (s.covariance.rows() != s.covariance.cols() || s.covariance.rows() != s.mean.size()) {
    throw std::invalid_argument(std::string(what) + ": inconsistent dimensions");
  }
  if (!s.covariance.isApprox(s.covariance.transpose(), 1e-9)) {
    throw std::invalid_argument(std::string(what) + ": covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.covariance);
  if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, es.eigenvalues().maxCoeff())) {
    throw std::invalid_argument(std::string(what) + ": covariance not PSD");
  }
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&v](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double frechet_gaussian_distance(const GaussianSummary& a, const GaussianSummary& b) {
  check_summary(a, "frechet_gaussian_distance a");
  check_summary(b, "frechet_gaussian_distance b");
  if (a.mean.size() != b.mean.size()) {
    throw std::invalid_argument("frechet_gaussian_distance: dimension mismatch");
  }
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double trace_term =
      a.covariance.trace() + b.covariance.trace() -
      2.0 * trace_sqrt_product(a.covariance, b.covariance);
  return std::max(mean_term + trace_term, 0.0);
}

SpearmanResult spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("spearman: length mismatch");
  }
  const std::size_t n = xs.size();
  if (n < 3) {
    throw std::invalid_argument("spearman: need at least 3 observations");
  }
  const std::vector<double> rx = average_ranks(xs);
  const std::vector<double> ry = average_ranks(ys);
  const double mean_rank = 0.5 * static_cast<double>(n + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean_rank;
    const double dy = ry[i] - mean_rank;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  SpearmanResult result;
  if (sxx == 0.0 || syy == 0.0) {
    return result;  // constant input, correlation undefined
  }
  result.defined = true;
  result.rho = sxy / std::sqrt(sxx * syy);
  result.rho = std::clamp(result.rho, -1.0, 1.0);
  if (std::abs(result.rho) >= 1.0) {
    result.p_value = 0.0;
    return result;
  }
  const double df = static_cast<double>(n - 2);
  const double t = result.rho * std::sqrt(df / (1.0 - result.rho * result.rho));
  boost::math::students_t dist(df);
  result.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return result;
}

BootstrapCurve bootstrap_best_curve(const std::vector<double>& trial_metrics,
                                    const std::vector<int>& budgets, int n_boot,
                                    double confidence, Direction direction,
                                    std::uint64_t seed) {
  if (trial_metrics.empty()) {
    throw std::invalid_argument("bootstrap_best_curve: empty metrics");
  }
  if (n_boot < 1) {
    throw std::invalid_argument("bootstrap_best_curve: n_boot must be >= 1");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("bootstrap_best_curve: confidence must be in (0, 1)");
  }
  BootstrapCurve curve;
  curve.n_boot = n_boot;
  curve.confidence = confidence;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, trial_metrics.size() - 1);
  for (int k : budgets) {
    if (k < 1) {
      throw std::invalid_argument("bootstrap_best_curve: budgets must be >= 1");
    }
    std::vector<double> bests(static_cast<std::size_t>(n_boot));
    for (int b = 0; b < n_boot; ++b) {
      double best = trial_metrics[pick(rng)];
      for (int i = 1; i < k; ++i) {
        const double v = trial_metrics[pick(rng)];
        best = direction == Direction::Min ? std::min(best, v) : std::max(best, v);
      }
      bests[static_cast<std::size_t>(b)] = best;
    }
    std::sort(bests.begin(), bests.end());
    BootstrapPoint point;
    point.k = k;
    point.mean = std::accumulate(bests.begin(), bests.end(), 0.0) /
                 static_cast<double>(bests.size());
    const double tail = 0.5 * (1.0 - confidence);
    point.ci_low = quantile_sorted(bests, tail);
    point.ci_high = quantile_sorted(bests, 1.0 - tail);
    curve.points.push_back(point);
  }
  return curve;
}

void write_curve_csv(const BootstrapCurve& curve, std::ostream& out) {
  out << "k,mean,ci_low,ci_high\n";
  char buf[160];
  for (const BootstrapPoint& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", p.k, p.mean, p.ci_low, p.ci_high);
    out << buf;
  }
}

TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  TTestResult result;
  if (a.size() < 2 || b.size() < 2) {
    return result;
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
  double va = 0.0, vb = 0.0;
  for (double x : a) va += (x - ma) * (x - ma);
  for (double x : b) vb += (x - mb) * (x - mb);
  va /= na - 1.0;
  vb /= nb - 1.0;
  const double se2 = va / na + vb / nb;
  if (se2 <= 0.0) {
    return result;  // both samples constant
  }
  result.t = (ma - mb) / std::sqrt(se2);
  result.df = se2 * se2 /
              (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
  boost::math::students_t dist(result.df);
  result.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t)));
  result.defined = true;
  return result;
}

SignTestResult paired_sign_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("paired_sign_test: length mismatch");
  }
  SignTestResult result;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) ++result.n_less;
    else if (a[i] > b[i]) ++result.n_greater;
    else ++result.n_tied;
  }
  const int n = result.n_less + result.n_greater;
  if (n == 0) {
    return result;
  }
  // P(X >= n_less) for X ~ Binomial(n, 1/2).
  boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
  if (result.n_less == 0) {
    result.p_value = 1.0;
  } else {
    result.p_value = boost::math::cdf(boost::math::complement(dist, result.n_less - 1.0));
  }
  result.defined = true;
  return result;
}

}  // namespace gapsched
