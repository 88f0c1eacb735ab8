#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace gapsched {

// n points from a mixture of k_modes isotropic Gaussians whose centers sit
// uniformly on a circle of the given radius. Mode choice is uniform.
Eigen::MatrixXd sample_ring_gaussians(int k_modes, double radius, double sigma, int n,
                                      std::mt19937_64& rng);
Eigen::MatrixXd sample_ring_gaussians(int k_modes, double radius, double sigma, int n,
                                      std::uint64_t seed);

// Two-domain toy task: the source is two labelled Gaussian blobs, the target
// is the same blobs rotated about the origin and shifted.
struct DannDomainSpec {
  Eigen::Vector2d center0{-1.0, 0.0};
  Eigen::Vector2d center1{1.0, 0.0};
  double sigma = 0.25;
  double rotation_deg = 35.0;
  Eigen::Vector2d shift{0.6, -0.4};
};

struct DannBatch {
  Eigen::MatrixXd source_x;  // n x 2
  Eigen::VectorXd source_y;  // n, entries 0 or 1
  Eigen::MatrixXd target_x;  // n x 2
  Eigen::VectorXd target_y;  // n, held-out labels for evaluation only
};

DannBatch sample_dann_domains(const DannDomainSpec& spec, int n, std::mt19937_64& rng);
DannBatch sample_dann_domains(int n, std::uint64_t seed);

}  // namespace gapsched
