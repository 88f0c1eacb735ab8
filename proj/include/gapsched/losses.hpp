#pragma once

#include <string_view>
#include <vector>

namespace gapsched {

// The four GAN loss families. Standard and NonSaturating discriminators
// output probabilities in (0, 1); Wasserstein and LeastSquares output
// unbounded reals.
enum class GanVariant { Standard, NonSaturating, Wasserstein, LeastSquares };

const char* variant_name(GanVariant variant);
GanVariant variant_from_name(std::string_view name);
bool probability_outputs(GanVariant variant);

// Probabilities are clamped to [kProbEps, 1 - kProbEps] before any log, in
// both the loss and its gradient.
inline constexpr double kProbEps = 1e-7;

struct DiscBatchOutputs {
  std::vector<double> d_real;
  std::vector<double> d_fake;
};

struct DannOutputs {
  std::vector<double> d_source;  // domain probability on source representations
  std::vector<double> d_target;  // domain probability on target representations
  double lambda = 1.0;
};

// Discriminator loss, batch means in place of expectations.
//   Standard/NonSaturating:  -mean log d_real - mean log(1 - d_fake)
//   Wasserstein:             -mean d_real + mean d_fake
//   LeastSquares:             mean (d_real - 1)^2 + mean d_fake^2
double disc_loss(GanVariant variant, const DiscBatchOutputs& outputs);

// Generator loss.
//   Standard:        mean log(1 - d_fake)
//   NonSaturating:  -mean log d_fake
//   Wasserstein:    -mean d_fake
//   LeastSquares:    mean (d_fake - 1)^2
double gen_loss(GanVariant variant, const std::vector<double>& d_fake);

// Loss of the discriminator in an ideal net (generated and real
// distributions coincide): log 4, log 4, 0, 0.5.
double ideal_disc_loss(GanVariant variant);

// Generator loss at the ideal point. Wasserstein has no pinned critic value
// there; 0 is adopted as the zero-centered convention.
double ideal_gen_loss(GanVariant variant);

// Domain discriminator risk: -mean log d_source - mean log(1 - d_target).
double dann_disc_loss(const DannOutputs& outputs);

// The quantity minimized by the feature extractor and label predictor:
// label_loss - lambda * disc_loss.
double dann_feature_objective(double label_loss, double disc_loss, double lambda);

// Gradients of the batch-mean losses with respect to each discriminator
// output entry (the 1/n factors are included).
struct DiscLossGrad {
  std::vector<double> d_real;
  std::vector<double> d_fake;
};
DiscLossGrad disc_loss_grad(GanVariant variant, const DiscBatchOutputs& outputs);
std::vector<double> gen_loss_grad(GanVariant variant, const std::vector<double>& d_fake);

struct DannDiscGrad {
  std::vector<double> d_source;
  std::vector<double> d_target;
};
DannDiscGrad dann_disc_loss_grad(const DannOutputs& outputs);

}  // namespace gapsched
