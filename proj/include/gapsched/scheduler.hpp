#pragma once

#include <cstdint>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "gapsched/losses.hpp"

namespace gapsched {

enum class Interpolation { Exponential, Linear };

const char* interpolation_name(Interpolation interp);
Interpolation interpolation_from_name(std::string_view name);

// Parameters of the gap-aware scheduler. The increase side interpolates
// (0, 1) -> (x_max, f_max) and saturates at f_max; the decrease side
// interpolates (0, 1) -> (x_min, h_min) and is clipped from below at h_min.
struct SchedulerParams {
  double f_max = 2.0;       // multiplier ceiling, >= 1
  double x_max = 0.1;       // gap scale for increase, > 0 (loss units)
  double h_min = 0.1;       // multiplier floor, in (0, 1]
  double x_min = 0.1;       // gap scale for decrease, > 0 (loss units)
  Interpolation interpolation = Interpolation::Exponential;
  double ideal_loss = 0.0;  // V* of the adversary
  double ema_decay = 0.95;  // alpha, in [0, 1)

  void validate() const;  // throws std::invalid_argument
};

nlohmann::json to_json(const SchedulerParams& params);
SchedulerParams scheduler_params_from_json(const nlohmann::json& j);

// Default parameters from the GAN experiments: h_min = 0.1, f_max = 2,
// x_min = x_max = 0.1 V* (0.1 for Wasserstein, whose V* is 0).
SchedulerParams default_params(GanVariant variant);

// Multiplier on the increase branch, gap x = V_d - V* >= 0. Result in [1, f_max].
double increase_multiplier(double gap, const SchedulerParams& params);

// Multiplier on the decrease branch, gap x = V* - V_d >= 0. Result in [h_min, 1].
double decrease_multiplier(double gap, const SchedulerParams& params);

// Exponential moving average of the adversary's batch loss.
class LossEstimator {
 public:
  LossEstimator(double initial, double decay);

  // estimate <- decay * estimate + (1 - decay) * batch_loss.
  // Throws DivergenceError on a non-finite batch loss.
  void update(double batch_loss);

  void reset(double value);  // throws std::invalid_argument on non-finite value

  double estimate() const { return estimate_; }
  double decay() const { return decay_; }

 private:
  double estimate_;
  double decay_;
};

// The scheduling rule: feed it the adversary's batch loss at every step and
// apply the returned multiplier to the base learning rate for that step. The
// multiplier is recomputed from the current gap; it is not compounded.
class GapScheduler {
 public:
  explicit GapScheduler(SchedulerParams params);

  // Updates the moving average, then returns f(est - V*) when est >= V* and
  // h(V* - est) otherwise.
  double observe_and_multiply(double batch_loss);

  // Reinitializes the moving average, e.g. with a periodically computed
  // full-dataset loss.
  void reset_estimator(double value);

  double estimate() const { return estimator_.estimate(); }
  double last_multiplier() const { return last_multiplier_; }
  const SchedulerParams& params() const { return params_; }

 private:
  SchedulerParams params_;
  LossEstimator estimator_;
  double last_multiplier_ = 1.0;
};

// Classical exponential-decay baseline: multiplier rho^(s/T) at step s.
struct DecaySchedule {
  double rho = 0.01;       // in (0, 1]
  std::int64_t total_steps = 1;

  void validate() const;
};

double decay_multiplier(const DecaySchedule& schedule, std::int64_t step);

}  // namespace gapsched
