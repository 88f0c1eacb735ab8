#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "gapsched/losses.hpp"

namespace gapsched {

// |v_hat - v_star|.
double optimality_gap(double v_hat, double v_star);

// |gen_loss_hat - ideal_gen_loss(variant)|.
double generator_gap(double gen_loss_hat, GanVariant variant);

struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // symmetric PSD
};

// Sample mean and unbiased sample covariance (symmetrized). Requires n >= 2.
GaussianSummary fit_gaussian(const Eigen::MatrixXd& samples);

// |mu_a - mu_b|^2 + tr(Sigma_a + Sigma_b - 2 (Sigma_a Sigma_b)^(1/2)).
// Closed form for 2x2 covariances, eigendecomposition otherwise; clamped at
// zero against negative round-off.
double frechet_gaussian_distance(const GaussianSummary& a, const GaussianSummary& b);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  bool defined = false;  // false when either vector is constant
};

// Spearman's rank correlation with average ranks for ties; two-sided p-value
// from the t approximation. Requires equal lengths >= 3.
SpearmanResult spearman(const std::vector<double>& xs, const std::vector<double>& ys);

enum class Direction { Min, Max };

struct BootstrapPoint {
  int k = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct BootstrapCurve {
  std::vector<BootstrapPoint> points;
  int n_boot = 0;
  double confidence = 0.0;
};

// Best-metric-vs-budget statistics: for each budget k, draw n_boot resamples
// of size k with replacement, take the best of each, and report the mean and
// the central percentile confidence interval.
BootstrapCurve bootstrap_best_curve(const std::vector<double>& trial_metrics,
                                    const std::vector<int>& budgets, int n_boot,
                                    double confidence, Direction direction,
                                    std::uint64_t seed);

// Columns: k, mean, ci_low, ci_high.
void write_curve_csv(const BootstrapCurve& curve, std::ostream& out);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // two-sided
  bool defined = false;
};

// Welch's two-sample t-test.
TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct SignTestResult {
  int n_less = 0;    // pairs with a < b
  int n_greater = 0; // pairs with a > b
  int n_tied = 0;    // dropped
  double p_value = 1.0;  // one-sided, H1: a < b elementwise-paired
  bool defined = false;
};

// Paired one-sided sign test against the hypothesis that entries of a tend
// to be smaller than the paired entries of b. Ties are dropped.
SignTestResult paired_sign_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace gapsched
