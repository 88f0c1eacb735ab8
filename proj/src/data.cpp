#include "gapsched/data.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gapsched {

Eigen::MatrixXd sample_ring_gaussians(int k_modes, double radius, double sigma, int n,
                                      std::mt19937_64& rng) {
  if (k_modes < 1) {
    throw std::invalid_argument("sample_ring_gaussians: k_modes must be >= 1");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("sample_ring_gaussians: sigma must be positive");
  }
  std::uniform_int_distribution<int> mode_dist(0, k_modes - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::MatrixXd points(n, 2);
  for (int i = 0; i < n; ++i) {
    const int mode = mode_dist(rng);
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(mode) /
                         static_cast<double>(k_modes);
    points(i, 0) = radius * std::cos(angle) + sigma * noise(rng);
    points(i, 1) = radius * std::sin(angle) + sigma * noise(rng);
  }
  return points;
}

Eigen::MatrixXd sample_ring_gaussians(int k_modes, double radius, double sigma, int n,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_ring_gaussians(k_modes, radius, sigma, n, rng);
}

DannBatch sample_dann_domains(const DannDomainSpec& spec, int n, std::mt19937_64& rng) {
  if (n < 1) {
    throw std::invalid_argument("sample_dann_domains: n must be >= 1");
  }
  const double theta = spec.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  std::bernoulli_distribution label_dist(0.5);
  std::normal_distribution<double> noise(0.0, 1.0);

  auto draw_blob = [&](Eigen::MatrixXd& x, Eigen::VectorXd& y) {
    x.resize(n, 2);
    y.resize(n);
    for (int i = 0; i < n; ++i) {
      const bool one = label_dist(rng);
      const Eigen::Vector2d& center = one ? spec.center1 : spec.center0;
      x(i, 0) = center.x() + spec.sigma * noise(rng);
      x(i, 1) = center.y() + spec.sigma * noise(rng);
      y(i) = one ? 1.0 : 0.0;
    }
  };

  DannBatch batch;
  draw_blob(batch.source_x, batch.source_y);
  draw_blob(batch.target_x, batch.target_y);
  for (int i = 0; i < n; ++i) {
    const double px = batch.target_x(i, 0);
    const double py = batch.target_x(i, 1);
    batch.target_x(i, 0) = c * px - s * py + spec.shift.x();
    batch.target_x(i, 1) = s * px + c * py + spec.shift.y();
  }
  return batch;
}

DannBatch sample_dann_domains(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_dann_domains(DannDomainSpec{}, n, rng);
}

}  // namespace gapsched
