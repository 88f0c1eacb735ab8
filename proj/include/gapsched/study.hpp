#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gapsched/metrics.hpp"
#include "gapsched/trainer.hpp"

namespace gapsched {

enum class TaskKind { Gan, Dann };

// Random-search distributions. Learning rates and the clipping weight are
// log-uniform, beta1 and V* uniform, lambda a finite choice set, and the
// decay-baseline rho log-uniform.
struct HyperDistributions {
  double lr_log10_lo = -5.0;
  double lr_log10_hi = -3.0;
  double beta1_lo = 0.0;
  double beta1_hi = 1.0;
  double clip_log10_lo = -3.0;
  double clip_log10_hi = 0.0;
  std::vector<double> lambda_choices{0.01, 0.1, 1.0};
  double v_star_lo = 0.5 * 1.3862943611198906;
  double v_star_hi = 1.3862943611198906;
  double rho_log10_lo = -4.0;
  double rho_log10_hi = -1.0;

  void validate() const;
};

struct HyperDraw {
  double lr_g = 0.0;
  double lr_d = 0.0;
  double beta1 = 0.0;
  double clip = 0.0;
  double lambda = 0.0;
  double v_star = 0.0;
  double rho = 0.0;
};

HyperDraw draw_hyperparams(const HyperDistributions& dists, TaskKind task, bool decoupled_lr,
                           std::mt19937_64& rng);

// What the no-scheduler comparison arm runs: a plain constant rate or the
// classical exponential-decay baseline with tuned rho.
enum class BaselineKind { None, Decay };

struct StudyConfig {
  int n_trials = 30;
  int seeds_per_trial = 3;
  int n_seeds = 20;  // sweep / stability / correlate repetitions
  int parallelism = 1;
  std::uint64_t base_seed = 1234;
  bool paired = true;
  bool decoupled_lr = false;
  std::vector<int> budgets{1, 5, 10, 30};
  int n_boot = 5000;
  double confidence = 0.99;
  HyperDistributions dists;
  BaselineKind baseline = BaselineKind::None;
  std::optional<double> metric_outlier_threshold;  // correlate filtering
  bool log_gap = false;                            // correlate scatter transform
};

struct ExperimentConfig {
  TaskKind task = TaskKind::Gan;
  GanVariant variant = GanVariant::NonSaturating;
  RingTaskOptions ring;
  DannTaskOptions dann_options;
  double dann_lambda = 0.1;
  double dann_v_star = 1.2;
  TrainConfig train_template;
  bool scheduler_on = true;
  std::optional<double> decay_rho;  // cmd_train baseline decay
  StudyConfig study;
  std::string output_dir = "out";
  bool dump_traces = false;

  // Raw partial overrides of the default scheduler parameters, applied on
  // top of default_params(variant) (or the DANN construction from V*).
  std::string scheduler_overrides_json;  // empty means none
};

// Parses the single-document JSON config; throws std::invalid_argument with
// a message on malformed input.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// Scheduler parameters for a run of this experiment: defaults for the task,
// then any config overrides.
SchedulerParams build_scheduler_params(const ExperimentConfig& config, double v_star);

// Outcome of one training run inside a study.
struct RunOutcome {
  double final_metric = 0.0;
  double final_gap = 0.0;
  double gen_gap = 0.0;
  bool diverged = false;
};

// Builds the task and train config for (hyperparameters, seed, arm) and
// runs it. with_scheduler=false runs the study's baseline arm. When
// summary_path is nonempty the RunRecord summary JSON is written there (and
// the JSONL trace next to it when dump_traces is on).
RunOutcome execute_run(const ExperimentConfig& config, const HyperDraw& hp, bool with_scheduler,
                       std::uint64_t run_seed, const std::string& summary_path = {});

// Exit codes shared by all commands: 0 success, 1 config error, 2 all
// trials diverged.
int cmd_train(const ExperimentConfig& config);
int cmd_tune(const ExperimentConfig& config);
int cmd_sweep(const ExperimentConfig& config, const std::string& parameter,
              const std::vector<double>& grid);
int cmd_correlate(const ExperimentConfig& config);
int cmd_stability(const ExperimentConfig& config, const HyperDraw& best_hparams);

// Correlation report used by cmd_correlate, exposed for direct testing.
struct CorrelationReport {
  SpearmanResult spearman;
  int n_used = 0;
  int n_filtered = 0;
  bool log_gap = false;
};
CorrelationReport correlate_pairs(std::vector<double> gaps, std::vector<double> metrics,
                                  std::optional<double> metric_threshold, bool log_gap);

}  // namespace gapsched
