#include "gapsched/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gapsched {

namespace {

double clamp_prob(double p) {
  return std::clamp(p, kProbEps, 1.0 - kProbEps);
}

void check_batch(GanVariant variant, const std::vector<double>& v, const char* what) {
  if (v.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty batch");
  }
  if (probability_outputs(variant)) {
    for (double p : v) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(std::string(what) + ": output " + std::to_string(p) +
                                    " outside [0, 1] for a probability variant");
      }
    }
  }
}

void check_prob_batch(const std::vector<double>& v, const char* what) {
  if (v.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty batch");
  }
  for (double p : v) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument(std::string(what) + ": probability " + std::to_string(p) +
                                  " outside [0, 1]");
    }
  }
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

const char* variant_name(GanVariant variant) {
  switch (variant) {
    case GanVariant::Standard: return "standard";
    case GanVariant::NonSaturating: return "nsgan";
    case GanVariant::Wasserstein: return "wgan";
    case GanVariant::LeastSquares: return "lsgan";
  }
  throw std::invalid_argument("unknown GAN variant");
}

GanVariant variant_from_name(std::string_view name) {
  if (name == "standard") return GanVariant::Standard;
  if (name == "nsgan") return GanVariant::NonSaturating;
  if (name == "wgan") return GanVariant::Wasserstein;
  if (name == "lsgan") return GanVariant::LeastSquares;
  throw std::invalid_argument("unknown GAN variant: " + std::string(name));
}

bool probability_outputs(GanVariant variant) {
  return variant == GanVariant::Standard || variant == GanVariant::NonSaturating;
}

double disc_loss(GanVariant variant, const DiscBatchOutputs& outputs) {
  check_batch(variant, outputs.d_real, "disc_loss d_real");
  check_batch(variant, outputs.d_fake, "disc_loss d_fake");
  switch (variant) {
    case GanVariant::Standard:
    case GanVariant::NonSaturating: {
      double loss_real = 0.0;
      for (double p : outputs.d_real) loss_real -= std::log(clamp_prob(p));
      double loss_fake = 0.0;
      for (double p : outputs.d_fake) loss_fake -= std::log(1.0 - clamp_prob(p));
      return loss_real / static_cast<double>(outputs.d_real.size()) +
             loss_fake / static_cast<double>(outputs.d_fake.size());
    }
    case GanVariant::Wasserstein:
      return -mean(outputs.d_real) + mean(outputs.d_fake);
    case GanVariant::LeastSquares: {
      double loss_real = 0.0;
      for (double d : outputs.d_real) loss_real += (d - 1.0) * (d - 1.0);
      double loss_fake = 0.0;
      for (double d : outputs.d_fake) loss_fake += d * d;
      return loss_real / static_cast<double>(outputs.d_real.size()) +
             loss_fake / static_cast<double>(outputs.d_fake.size());
    }
  }
  throw std::invalid_argument("unknown GAN variant");
}

double gen_loss(GanVariant variant, const std::vector<double>& d_fake) {
  check_batch(variant, d_fake, "gen_loss d_fake");
  const double n = static_cast<double>(d_fake.size());
  switch (variant) {
    case GanVariant::Standard: {
      double loss = 0.0;
      for (double p : d_fake) loss += std::log(1.0 - clamp_prob(p));
      return loss / n;
    }
    case GanVariant::NonSaturating: {
      double loss = 0.0;
      for (double p : d_fake) loss -= std::log(clamp_prob(p));
      return loss / n;
    }
    case GanVariant::Wasserstein:
      return -mean(d_fake);
    case GanVariant::LeastSquares: {
      double loss = 0.0;
      for (double d : d_fake) loss += (d - 1.0) * (d - 1.0);
      return loss / n;
    }
  }
  throw std::invalid_argument("unknown GAN variant");
}

double ideal_disc_loss(GanVariant variant) {
  switch (variant) {
    case GanVariant::Standard:
    case GanVariant::NonSaturating:
      return std::log(4.0);
    case GanVariant::Wasserstein:
      return 0.0;
    case GanVariant::LeastSquares:
      return 0.5;
  }
  throw std::invalid_argument("unknown GAN variant");
}

double ideal_gen_loss(GanVariant variant) {
  switch (variant) {
    case GanVariant::Standard:
      return -std::log(2.0);
    case GanVariant::NonSaturating:
      return std::log(2.0);
    case GanVariant::Wasserstein:
      return 0.0;  // convention: zero-centered critic
    case GanVariant::LeastSquares:
      return 0.25;
  }
  throw std::invalid_argument("unknown GAN variant");
}

double dann_disc_loss(const DannOutputs& outputs) {
  check_prob_batch(outputs.d_source, "dann_disc_loss d_source");
  check_prob_batch(outputs.d_target, "dann_disc_loss d_target");
  double loss_source = 0.0;
  for (double p : outputs.d_source) loss_source -= std::log(clamp_prob(p));
  double loss_target = 0.0;
  for (double p : outputs.d_target) loss_target -= std::log(1.0 - clamp_prob(p));
  return loss_source / static_cast<double>(outputs.d_source.size()) +
         loss_target / static_cast<double>(outputs.d_target.size());
}

double dann_feature_objective(double label_loss, double disc_loss, double lambda) {
  if (lambda < 0.0) {
    throw std::invalid_argument("dann_feature_objective: lambda must be nonnegative");
  }
  return label_loss - lambda * disc_loss;
}

DiscLossGrad disc_loss_grad(GanVariant variant, const DiscBatchOutputs& outputs) {
  check_batch(variant, outputs.d_real, "disc_loss_grad d_real");
  check_batch(variant, outputs.d_fake, "disc_loss_grad d_fake");
  const double n_real = static_cast<double>(outputs.d_real.size());
  const double n_fake = static_cast<double>(outputs.d_fake.size());
  DiscLossGrad grad;
  grad.d_real.resize(outputs.d_real.size());
  grad.d_fake.resize(outputs.d_fake.size());
  switch (variant) {
    case GanVariant::Standard:
    case GanVariant::NonSaturating:
      for (std::size_t i = 0; i < outputs.d_real.size(); ++i) {
        grad.d_real[i] = -1.0 / (n_real * clamp_prob(outputs.d_real[i]));
      }
      for (std::size_t i = 0; i < outputs.d_fake.size(); ++i) {
        grad.d_fake[i] = 1.0 / (n_fake * (1.0 - clamp_prob(outputs.d_fake[i])));
      }
      break;
    case GanVariant::Wasserstein:
      std::fill(grad.d_real.begin(), grad.d_real.end(), -1.0 / n_real);
      std::fill(grad.d_fake.begin(), grad.d_fake.end(), 1.0 / n_fake);
      break;
    case GanVariant::LeastSquares:
      for (std::size_t i = 0; i < outputs.d_real.size(); ++i) {
        grad.d_real[i] = 2.0 * (outputs.d_real[i] - 1.0) / n_real;
      }
      for (std::size_t i = 0; i < outputs.d_fake.size(); ++i) {
        grad.d_fake[i] = 2.0 * outputs.d_fake[i] / n_fake;
      }
      break;
  }
  return grad;
}

std::vector<double> gen_loss_grad(GanVariant variant, const std::vector<double>& d_fake) {
  check_batch(variant, d_fake, "gen_loss_grad d_fake");
  const double n = static_cast<double>(d_fake.size());
  std::vector<double> grad(d_fake.size());
  switch (variant) {
    case GanVariant::Standard:
      for (std::size_t i = 0; i < d_fake.size(); ++i) {
        grad[i] = -1.0 / (n * (1.0 - clamp_prob(d_fake[i])));
      }
      break;
    case GanVariant::NonSaturating:
      for (std::size_t i = 0; i < d_fake.size(); ++i) {
        grad[i] = -1.0 / (n * clamp_prob(d_fake[i]));
      }
      break;
    case GanVariant::Wasserstein:
      std::fill(grad.begin(), grad.end(), -1.0 / n);
      break;
    case GanVariant::LeastSquares:
      for (std::size_t i = 0; i < d_fake.size(); ++i) {
        grad[i] = 2.0 * (d_fake[i] - 1.0) / n;
      }
      break;
  }
  return grad;
}

DannDiscGrad dann_disc_loss_grad(const DannOutputs& outputs) {
  check_prob_batch(outputs.d_source, "dann_disc_loss_grad d_source");
  check_prob_batch(outputs.d_target, "dann_disc_loss_grad d_target");
  const double n_s = static_cast<double>(outputs.d_source.size());
  const double n_t = static_cast<double>(outputs.d_target.size());
  DannDiscGrad grad;
  grad.d_source.resize(outputs.d_source.size());
  grad.d_target.resize(outputs.d_target.size());
  for (std::size_t i = 0; i < outputs.d_source.size(); ++i) {
    grad.d_source[i] = -1.0 / (n_s * clamp_prob(outputs.d_source[i]));
  }
  for (std::size_t i = 0; i < outputs.d_target.size(); ++i) {
    grad.d_target[i] = 1.0 / (n_t * (1.0 - clamp_prob(outputs.d_target[i])));
  }
  return grad;
}

}  // namespace gapsched
