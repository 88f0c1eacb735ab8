#include "gapsched/record.hpp"

#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

namespace gapsched {

namespace {

// JSON has no infinity; keep diverged metrics readable instead of null.
nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

void write_run_jsonl(const RunRecord& record, std::ostream& out) {
  for (const StepTrace& s : record.steps) {
    nlohmann::json j{{"type", "step"},
                     {"step", s.step},
                     {"batch_disc_loss", json_number(s.batch_disc_loss)},
                     {"ema_estimate", json_number(s.ema_estimate)},
                     {"gap", json_number(s.gap)},
                     {"multiplier", json_number(s.multiplier)},
                     {"gen_batch_loss", json_number(s.gen_batch_loss)}};
    out << j.dump() << '\n';
  }
  for (const EvalTrace& e : record.evals) {
    nlohmann::json j{{"type", "eval"},
                     {"step", e.step},
                     {"metric", json_number(e.metric)},
                     {"full_disc_loss", json_number(e.full_disc_loss)},
                     {"opt_gap", json_number(e.opt_gap)},
                     {"gen_gap", json_number(e.gen_gap)}};
    out << j.dump() << '\n';
  }
}

nlohmann::json run_summary_json(const RunRecord& record) {
  return nlohmann::json{
      {"metric_direction", record.metric_direction == Direction::Min ? "min" : "max"},
      {"best_metric", json_number(record.best_metric)},
      {"best_eval_step", record.best_eval_step},
      {"final_gap", json_number(record.final_gap)},
      {"final_gen_gap", json_number(record.final_gen_gap)},
      {"diverged", record.diverged},
      {"diverged_at_step", record.diverged_at_step},
      {"n_steps", record.steps.size()},
      {"n_evals", record.evals.size()}};
}

}  // namespace gapsched
