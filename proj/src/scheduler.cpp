#include "gapsched/scheduler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "gapsched/errors.hpp"

namespace gapsched {

const char* interpolation_name(Interpolation interp) {
  return interp == Interpolation::Exponential ? "exponential" : "linear";
}

Interpolation interpolation_from_name(std::string_view name) {
  if (name == "exponential") return Interpolation::Exponential;
  if (name == "linear") return Interpolation::Linear;
  throw std::invalid_argument("unknown interpolation: " + std::string(name));
}

void SchedulerParams::validate() const {
  if (!(f_max >= 1.0) || !std::isfinite(f_max)) {
    throw std::invalid_argument("SchedulerParams: f_max must be finite and >= 1");
  }
  if (!(h_min > 0.0 && h_min <= 1.0)) {
    throw std::invalid_argument("SchedulerParams: h_min must be in (0, 1]");
  }
  if (!(x_max > 0.0) || !std::isfinite(x_max)) {
    throw std::invalid_argument("SchedulerParams: x_max must be finite and > 0");
  }
  if (!(x_min > 0.0) || !std::isfinite(x_min)) {
    throw std::invalid_argument("SchedulerParams: x_min must be finite and > 0");
  }
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) {
    throw std::invalid_argument("SchedulerParams: ema_decay must be in [0, 1)");
  }
  if (!std::isfinite(ideal_loss)) {
    throw std::invalid_argument("SchedulerParams: ideal_loss must be finite");
  }
}

nlohmann::json to_json(const SchedulerParams& params) {
  return nlohmann::json{{"f_max", params.f_max},
                        {"x_max", params.x_max},
                        {"h_min", params.h_min},
                        {"x_min", params.x_min},
                        {"interpolation", interpolation_name(params.interpolation)},
                        {"ideal_loss", params.ideal_loss},
                        {"ema_decay", params.ema_decay}};
}

SchedulerParams scheduler_params_from_json(const nlohmann::json& j) {
  SchedulerParams params;
  params.f_max = j.at("f_max").get<double>();
  params.x_max = j.at("x_max").get<double>();
  params.h_min = j.at("h_min").get<double>();
  params.x_min = j.at("x_min").get<double>();
  params.interpolation = interpolation_from_name(j.at("interpolation").get<std::string>());
  params.ideal_loss = j.at("ideal_loss").get<double>();
  params.ema_decay = j.at("ema_decay").get<double>();
  params.validate();
  return params;
}

SchedulerParams default_params(GanVariant variant) {
  SchedulerParams params;
  params.f_max = 2.0;
  params.h_min = 0.1;
  params.ideal_loss = ideal_disc_loss(variant);
  const double scale =
      variant == GanVariant::Wasserstein ? 0.1 : 0.1 * params.ideal_loss;
  params.x_max = scale;
  params.x_min = scale;
  params.interpolation = Interpolation::Exponential;
  params.ema_decay = 0.95;
  params.validate();
  return params;
}

double increase_multiplier(double gap, const SchedulerParams& params) {
  if (!(gap >= 0.0)) {
    throw std::invalid_argument("increase_multiplier: gap must be nonnegative");
  }
  if (params.interpolation == Interpolation::Exponential) {
    // f_max^(x/x_max), written as exp((x/x_max) ln f_max).
    return std::min(std::exp((gap / params.x_max) * std::log(params.f_max)), params.f_max);
  }
  return std::min(1.0 + (params.f_max - 1.0) * gap / params.x_max, params.f_max);
}

double decrease_multiplier(double gap, const SchedulerParams& params) {
  if (!(gap >= 0.0)) {
    throw std::invalid_argument("decrease_multiplier: gap must be nonnegative");
  }
  if (params.interpolation == Interpolation::Exponential) {
    return std::max(std::exp((gap / params.x_min) * std::log(params.h_min)), params.h_min);
  }
  return std::max(1.0 - (1.0 - params.h_min) * gap / params.x_min, params.h_min);
}

LossEstimator::LossEstimator(double initial, double decay)
    : estimate_(initial), decay_(decay) {
  if (!std::isfinite(initial)) {
    throw std::invalid_argument("LossEstimator: initial estimate must be finite");
  }
  if (!(decay >= 0.0 && decay < 1.0)) {
    throw std::invalid_argument("LossEstimator: decay must be in [0, 1)");
  }
}

void LossEstimator::update(double batch_loss) {
  if (!std::isfinite(batch_loss)) {
    throw DivergenceError("LossEstimator: non-finite batch loss " +
                          std::to_string(batch_loss) + ", training diverged");
  }
  estimate_ = decay_ * estimate_ + (1.0 - decay_) * batch_loss;
}

void LossEstimator::reset(double value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("LossEstimator: reset value must be finite");
  }
  estimate_ = value;
}

GapScheduler::GapScheduler(SchedulerParams params)
    : params_(params), estimator_(params.ideal_loss, params.ema_decay) {
  params_.validate();
}

double GapScheduler::observe_and_multiply(double batch_loss) {
  estimator_.update(batch_loss);
  const double estimate = estimator_.estimate();
  // A tie routes to the increase branch; both branches return 1 there.
  if (estimate >= params_.ideal_loss) {
    last_multiplier_ = increase_multiplier(estimate - params_.ideal_loss, params_);
  } else {
    last_multiplier_ = decrease_multiplier(params_.ideal_loss - estimate, params_);
  }
  return last_multiplier_;
}

void GapScheduler::reset_estimator(double value) { estimator_.reset(value); }

void DecaySchedule::validate() const {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("DecaySchedule: rho must be in (0, 1]");
  }
  if (total_steps < 1) {
    throw std::invalid_argument("DecaySchedule: total_steps must be >= 1");
  }
}

double decay_multiplier(const DecaySchedule& schedule, std::int64_t step) {
  schedule.validate();
  if (step < 0 || step > schedule.total_steps) {
    throw std::invalid_argument("decay_multiplier: step outside [0, total_steps]");
  }
  if (step == 0) return 1.0;
  if (step == schedule.total_steps) return schedule.rho;
  const double frac = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  return std::exp(frac * std::log(schedule.rho));
}

}  // namespace gapsched
