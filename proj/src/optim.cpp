#include "gapsched/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gapsched/errors.hpp"

namespace gapsched {

namespace {

void check_step_inputs(const ParamBundle& params, const GradBundle& grads, double base_lr,
                       double multiplier) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("optimizer step: parameter/gradient size mismatch");
  }
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) {
    throw std::invalid_argument("optimizer step: base_lr must be finite and positive");
  }
  if (!(multiplier > 0.0) || !std::isfinite(multiplier)) {
    throw std::invalid_argument("optimizer step: multiplier must be finite and positive");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) {
      throw DivergenceError("optimizer step: non-finite gradient, training diverged");
    }
  }
}

}  // namespace

AdamState make_adam(double base_lr, double beta1, std::size_t n_params) {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) {
    throw std::invalid_argument("make_adam: beta1 must be in [0, 1)");
  }
  AdamState state;
  state.base_lr = base_lr;
  state.beta1 = beta1;
  state.first_moment.assign(n_params, 0.0);
  state.second_moment.assign(n_params, 0.0);
  return state;
}

void sgd_step(ParamBundle& params, const GradBundle& grads, const SgdState& state,
              double multiplier) {
  check_step_inputs(params, grads, state.base_lr, multiplier);
  const double rate = state.base_lr * multiplier;
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= rate * grads[i];
  }
}

void adam_step(ParamBundle& params, const GradBundle& grads, AdamState& state,
               double multiplier) {
  check_step_inputs(params, grads, state.base_lr, multiplier);
  if (state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: moment vectors not aligned with parameters");
  }
  state.timestep += 1;
  const double rate = state.base_lr * multiplier;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.timestep));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.timestep));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
    state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.first_moment[i] / bias1;
    const double v_hat = state.second_moment[i] / bias2;
    params[i] -= rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

void clip_weights(ParamBundle& params, const ClipBound& bound) {
  if (!(bound.c > 0.0)) {
    throw std::invalid_argument("clip_weights: bound must be positive");
  }
  for (double& p : params) {
    p = std::clamp(p, -bound.c, bound.c);
  }
}

}  // namespace gapsched
