#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gapsched/metrics.hpp"

namespace gapsched {

struct StepTrace {
  std::int64_t step = 0;
  double batch_disc_loss = 0.0;  // V_batch
  double ema_estimate = 0.0;     // \hat{V}_d after the update
  double gap = 0.0;              // |ema_estimate - V*|
  double multiplier = 1.0;
  double gen_batch_loss = 0.0;   // label-predictor loss for DANN runs
};

struct EvalTrace {
  std::int64_t step = 0;
  double metric = 0.0;          // validation metric at this eval
  double full_disc_loss = 0.0;  // adversary loss over the evaluation sample
  double opt_gap = 0.0;         // |full_disc_loss - V*|
  double gen_gap = 0.0;         // 0 for DANN runs
};

// Full per-step and per-eval trace of one training run, plus the finals at
// the early-stopped (best-by-validation) snapshot.
struct RunRecord {
  std::vector<StepTrace> steps;
  std::vector<EvalTrace> evals;
  Direction metric_direction = Direction::Min;

  double best_metric = std::numeric_limits<double>::infinity();
  std::int64_t best_eval_step = -1;
  double final_gap = std::numeric_limits<double>::infinity();
  double final_gen_gap = std::numeric_limits<double>::infinity();

  bool diverged = false;
  std::int64_t diverged_at_step = -1;

  // Not serialized: timing is the one nondeterministic field.
  double wall_time_sec = 0.0;
};

// One JSON object per step/eval event.
void write_run_jsonl(const RunRecord& record, std::ostream& out);

// Deterministic summary of the finals; byte-identical across reruns with the
// same config and seed.
nlohmann::json run_summary_json(const RunRecord& record);

}  // namespace gapsched
