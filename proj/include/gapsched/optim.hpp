#pragma once

#include <cstdint>
#include <vector>

#include "gapsched/net.hpp"

namespace gapsched {

struct SgdState {
  double base_lr = 0.0;
};

// Standard bias-corrected Adam. The per-step multiplier rescales the
// effective learning rate only; moments consume raw gradients.
struct AdamState {
  double base_lr = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t timestep = 0;
};

AdamState make_adam(double base_lr, double beta1, std::size_t n_params);

struct ClipBound {
  double c = 0.0;  // > 0
};

// params <- params - (base_lr * multiplier) * grads.
// Throws DivergenceError on non-finite gradients.
void sgd_step(ParamBundle& params, const GradBundle& grads, const SgdState& state,
              double multiplier);

void adam_step(ParamBundle& params, const GradBundle& grads, AdamState& state,
               double multiplier);

// Every parameter clamped to [-c, c].
void clip_weights(ParamBundle& params, const ClipBound& bound);

}  // namespace gapsched
