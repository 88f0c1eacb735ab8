#include "gapsched/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace gapsched {

namespace {

constexpr std::uint64_t kTuneSeedStream = 0x100000;
constexpr std::uint64_t kTuneBaseSeedStream = 0x200000;
constexpr std::uint64_t kCorrelateSeedStream = 0x300000;
constexpr std::uint64_t kStabilitySeedStream = 0x400000;
constexpr std::uint64_t kSweepSeedStream = 0x500000;
constexpr std::uint64_t kTuneDrawStream = 0x600000;
constexpr std::uint64_t kTuneBaseDrawStream = 0x700000;
constexpr std::uint64_t kCurveStream = 0x800000;
constexpr std::uint64_t kCorrelateDrawStream = 0x900000;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double log_uniform(double log10_lo, double log10_hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(log10_lo, log10_hi);
  return std::pow(10.0, dist(rng));
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

double quantile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

// Index-driven worker pool; results land by job index so output order never
// depends on scheduling.
template <typename Job, typename Fn>
std::vector<RunOutcome> run_parallel(const std::vector<Job>& jobs, int parallelism, Fn fn) {
  std::vector<RunOutcome> results(jobs.size());
  if (parallelism <= 1 || jobs.size() <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) results[i] = fn(jobs[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        results[i] = fn(jobs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const int n_workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(parallelism), jobs.size()));
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) workers.emplace_back(work);
  for (std::thread& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

Direction task_direction(TaskKind task) {
  return task == TaskKind::Gan ? Direction::Min : Direction::Max;
}

double effective_v_star(const ExperimentConfig& config, const HyperDraw& hp) {
  return config.task == TaskKind::Gan ? ideal_disc_loss(config.variant) : hp.v_star;
}

const char* task_variant_name(const ExperimentConfig& config) {
  return config.task == TaskKind::Gan ? variant_name(config.variant) : "dann";
}

struct TrialRow {
  int trial_id = 0;
  std::uint64_t seed = 0;
  bool scheduler = false;
  HyperDraw hp;
  RunOutcome outcome;
};

void write_trials_csv(const ExperimentConfig& config, const std::vector<TrialRow>& rows,
                      std::ostream& out) {
  out << "trial_id,seed,variant,scheduler,lr_g,lr_d,beta1,clip,lambda,v_star,"
         "final_metric,final_gap,gen_gap,diverged\n";
  for (const TrialRow& row : rows) {
    out << row.trial_id << ',' << row.seed << ',' << task_variant_name(config) << ','
        << (row.scheduler ? 1 : 0) << ',' << fmt_double(row.hp.lr_g) << ','
        << fmt_double(row.hp.lr_d) << ',' << fmt_double(row.hp.beta1) << ','
        << fmt_double(row.hp.clip) << ',' << fmt_double(row.hp.lambda) << ','
        << fmt_double(effective_v_star(config, row.hp)) << ','
        << fmt_double(row.outcome.final_metric) << ',' << fmt_double(row.outcome.final_gap)
        << ',' << fmt_double(row.outcome.gen_gap) << ',' << (row.outcome.diverged ? 1 : 0)
        << '\n';
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open output file " + path.string());
  }
  return out;
}

std::string run_summary_name(int trial_id, std::uint64_t seed, bool scheduler) {
  std::ostringstream name;
  name << "trial_" << trial_id << "_seed_" << seed << (scheduler ? "_sched" : "_base")
       << ".summary.json";
  return name.str();
}

}  // namespace

void HyperDistributions::validate() const {
  if (lr_log10_lo > lr_log10_hi || beta1_lo > beta1_hi || clip_log10_lo > clip_log10_hi ||
      v_star_lo > v_star_hi || rho_log10_lo > rho_log10_hi) {
    throw std::invalid_argument("HyperDistributions: bounds must be well ordered");
  }
  if (!(beta1_lo >= 0.0 && beta1_hi <= 1.0)) {
    throw std::invalid_argument("HyperDistributions: beta1 range must lie in [0, 1]");
  }
  if (lambda_choices.empty()) {
    throw std::invalid_argument("HyperDistributions: lambda_choices must be nonempty");
  }
  if (!(v_star_lo > 0.0)) {
    throw std::invalid_argument("HyperDistributions: v_star range must be positive");
  }
}

HyperDraw draw_hyperparams(const HyperDistributions& dists, TaskKind task, bool decoupled_lr,
                           std::mt19937_64& rng) {
  HyperDraw hp;
  hp.lr_g = log_uniform(dists.lr_log10_lo, dists.lr_log10_hi, rng);
  hp.lr_d = decoupled_lr ? log_uniform(dists.lr_log10_lo, dists.lr_log10_hi, rng) : hp.lr_g;
  std::uniform_real_distribution<double> beta1_dist(dists.beta1_lo, dists.beta1_hi);
  hp.beta1 = std::min(beta1_dist(rng), std::nextafter(1.0, 0.0));
  hp.clip = log_uniform(dists.clip_log10_lo, dists.clip_log10_hi, rng);
  if (task == TaskKind::Dann) {
    std::uniform_int_distribution<std::size_t> lambda_pick(0, dists.lambda_choices.size() - 1);
    hp.lambda = dists.lambda_choices[lambda_pick(rng)];
    std::uniform_real_distribution<double> v_star_dist(dists.v_star_lo, dists.v_star_hi);
    hp.v_star = v_star_dist(rng);
  }
  hp.rho = log_uniform(dists.rho_log10_lo, dists.rho_log10_hi, rng);
  return hp;
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig config;
  try {
    const std::string task = j.value("task", "gan");
    if (task == "gan") {
      config.task = TaskKind::Gan;
    } else if (task == "dann") {
      config.task = TaskKind::Dann;
    } else {
      throw std::invalid_argument("task must be \"gan\" or \"dann\"");
    }
    config.variant = variant_from_name(j.value("variant", "nsgan"));
    config.output_dir = j.value("output_dir", "out");
    config.dump_traces = j.value("dump_traces", false);

    if (j.contains("data")) {
      const nlohmann::json& d = j.at("data");
      config.ring.k_modes = d.value("modes", config.ring.k_modes);
      config.ring.radius = d.value("radius", config.ring.radius);
      config.ring.sigma = d.value("sigma", config.ring.sigma);
      config.ring.noise_dim = d.value("noise_dim", config.ring.noise_dim);
      config.ring.hidden = d.value("hidden", config.ring.hidden);
    }
    if (j.contains("dann")) {
      const nlohmann::json& d = j.at("dann");
      config.dann_options.hidden = d.value("hidden", config.dann_options.hidden);
      config.dann_options.rep_dim = d.value("rep_dim", config.dann_options.rep_dim);
      config.dann_options.domains.sigma = d.value("sigma", config.dann_options.domains.sigma);
      config.dann_options.domains.rotation_deg =
          d.value("rotation_deg", config.dann_options.domains.rotation_deg);
      if (d.contains("shift")) {
        const nlohmann::json& s = d.at("shift");
        config.dann_options.domains.shift =
            Eigen::Vector2d(s.at(0).get<double>(), s.at(1).get<double>());
      }
      config.dann_lambda = d.value("lambda", config.dann_lambda);
      config.dann_v_star = d.value("v_star", config.dann_v_star);
    }

    if (j.contains("train")) {
      const nlohmann::json& t = j.at("train");
      TrainConfig& tc = config.train_template;
      tc.batch_size = t.value("batch_size", tc.batch_size);
      tc.total_steps = t.value("total_steps", tc.total_steps);
      tc.lr_g = t.value("lr_g", tc.lr_g);
      tc.lr_d = t.value("lr_d", tc.lr_d);
      const std::string opt = t.value("optimizer", "adam");
      if (opt == "adam") {
        tc.optimizer = OptimizerKind::Adam;
      } else if (opt == "sgd") {
        tc.optimizer = OptimizerKind::Sgd;
      } else {
        throw std::invalid_argument("train.optimizer must be \"adam\" or \"sgd\"");
      }
      tc.adam_beta1 = t.value("beta1", tc.adam_beta1);
      if (t.contains("clip") && !t.at("clip").is_null()) {
        tc.clip = ClipBound{t.at("clip").get<double>()};
      }
      tc.seed = t.value("seed", tc.seed);
      tc.eval_period = t.value("eval_period", tc.eval_period);
      tc.eval_samples = t.value("eval_samples", tc.eval_samples);
      const std::string style = t.value("update_style", "simultaneous");
      if (style == "simultaneous") {
        tc.update_style = UpdateStyle::Simultaneous;
      } else if (style == "alternating") {
        tc.update_style = UpdateStyle::Alternating;
      } else {
        throw std::invalid_argument("train.update_style must be \"simultaneous\" or \"alternating\"");
      }
      config.scheduler_on = t.value("scheduler", true);
      if (t.contains("scheduler_params")) {
        config.scheduler_overrides_json = t.at("scheduler_params").dump();
      }
      if (t.contains("decay_baseline_rho") && !t.at("decay_baseline_rho").is_null()) {
        config.decay_rho = t.at("decay_baseline_rho").get<double>();
        if (config.scheduler_on) {
          throw std::invalid_argument(
              "train.decay_baseline_rho requires train.scheduler = false");
        }
      }
    }

    if (j.contains("study")) {
      const nlohmann::json& s = j.at("study");
      StudyConfig& sc = config.study;
      sc.n_trials = s.value("n_trials", sc.n_trials);
      sc.seeds_per_trial = s.value("seeds_per_trial", sc.seeds_per_trial);
      sc.n_seeds = s.value("n_seeds", sc.n_seeds);
      sc.parallelism = s.value("parallelism", sc.parallelism);
      sc.base_seed = s.value("base_seed", sc.base_seed);
      sc.paired = s.value("paired", sc.paired);
      sc.decoupled_lr = s.value("decoupled_lr", sc.decoupled_lr);
      if (s.contains("budgets")) {
        sc.budgets = s.at("budgets").get<std::vector<int>>();
      }
      sc.n_boot = s.value("n_boot", sc.n_boot);
      sc.confidence = s.value("confidence", sc.confidence);
      if (s.contains("lr_log10")) {
        sc.dists.lr_log10_lo = s.at("lr_log10").at(0).get<double>();
        sc.dists.lr_log10_hi = s.at("lr_log10").at(1).get<double>();
      }
      if (s.contains("beta1_range")) {
        sc.dists.beta1_lo = s.at("beta1_range").at(0).get<double>();
        sc.dists.beta1_hi = s.at("beta1_range").at(1).get<double>();
      }
      if (s.contains("clip_log10")) {
        sc.dists.clip_log10_lo = s.at("clip_log10").at(0).get<double>();
        sc.dists.clip_log10_hi = s.at("clip_log10").at(1).get<double>();
      }
      if (s.contains("lambda_choices")) {
        sc.dists.lambda_choices = s.at("lambda_choices").get<std::vector<double>>();
      }
      if (s.contains("v_star_range")) {
        sc.dists.v_star_lo = s.at("v_star_range").at(0).get<double>();
        sc.dists.v_star_hi = s.at("v_star_range").at(1).get<double>();
      }
      if (s.contains("rho_log10")) {
        sc.dists.rho_log10_lo = s.at("rho_log10").at(0).get<double>();
        sc.dists.rho_log10_hi = s.at("rho_log10").at(1).get<double>();
      }
      const std::string baseline = s.value("baseline", "none");
      if (baseline == "none") {
        sc.baseline = BaselineKind::None;
      } else if (baseline == "decay") {
        sc.baseline = BaselineKind::Decay;
      } else {
        throw std::invalid_argument("study.baseline must be \"none\" or \"decay\"");
      }
      if (s.contains("metric_outlier_threshold") && !s.at("metric_outlier_threshold").is_null()) {
        sc.metric_outlier_threshold = s.at("metric_outlier_threshold").get<double>();
      }
      sc.log_gap = s.value("log_gap", sc.log_gap);
      sc.dists.validate();
      if (sc.n_trials < 1 || sc.seeds_per_trial < 1 || sc.n_seeds < 1 || sc.parallelism < 1) {
        throw std::invalid_argument("study counts must be >= 1");
      }
    }
    config.train_template.validate();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config error: ") + e.what());
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  return parse_experiment_config(j);
}

SchedulerParams build_scheduler_params(const ExperimentConfig& config, double v_star) {
  SchedulerParams params;
  if (config.task == TaskKind::Gan) {
    params = default_params(config.variant);
  } else {
    params.f_max = 2.0;
    params.h_min = 0.1;
    params.x_max = 0.1 * v_star;
    params.x_min = 0.1 * v_star;
    params.interpolation = Interpolation::Exponential;
    params.ideal_loss = v_star;
    params.ema_decay = 0.95;
  }
  if (!config.scheduler_overrides_json.empty()) {
    const nlohmann::json o = nlohmann::json::parse(config.scheduler_overrides_json);
    params.f_max = o.value("f_max", params.f_max);
    params.x_max = o.value("x_max", params.x_max);
    params.h_min = o.value("h_min", params.h_min);
    params.x_min = o.value("x_min", params.x_min);
    if (o.contains("interpolation")) {
      params.interpolation = interpolation_from_name(o.at("interpolation").get<std::string>());
    }
    params.ideal_loss = o.value("ideal_loss", params.ideal_loss);
    params.ema_decay = o.value("ema_decay", params.ema_decay);
  }
  params.validate();
  return params;
}

namespace {

RunOutcome outcome_from_record(const RunRecord& record) {
  RunOutcome outcome;
  outcome.final_metric = record.best_metric;
  outcome.final_gap = record.final_gap;
  outcome.gen_gap = record.final_gen_gap;
  outcome.diverged = record.diverged;
  return outcome;
}

void write_run_files(const ExperimentConfig& config, const RunRecord& record,
                     const std::string& summary_path) {
  std::ofstream summary = open_output(summary_path);
  summary << run_summary_json(record).dump(2) << '\n';
  if (config.dump_traces) {
    std::string trace_path = summary_path;
    const std::string suffix = ".summary.json";
    if (trace_path.size() >= suffix.size() &&
        trace_path.compare(trace_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
      trace_path.resize(trace_path.size() - suffix.size());
    }
    std::ofstream trace = open_output(trace_path + ".trace.jsonl");
    write_run_jsonl(record, trace);
  }
}

RunOutcome execute_run_impl(const ExperimentConfig& config, const HyperDraw& hp,
                            bool with_scheduler, std::uint64_t run_seed,
                            const std::string& summary_path,
                            const SchedulerParams* explicit_sched) {
  TrainConfig tc = config.train_template;
  tc.seed = run_seed;
  tc.lr_g = hp.lr_g;
  tc.lr_d = hp.lr_d;
  tc.adam_beta1 = hp.beta1;
  tc.scheduler.reset();
  tc.baseline_decay.reset();
  tc.clip.reset();
  const double v_star = effective_v_star(config, hp);
  if (with_scheduler) {
    tc.scheduler = explicit_sched != nullptr ? *explicit_sched
                                             : build_scheduler_params(config, v_star);
  } else if (config.study.baseline == BaselineKind::Decay) {
    tc.baseline_decay = DecaySchedule{hp.rho, tc.total_steps};
  }
  RunRecord record;
  if (config.task == TaskKind::Gan) {
    if (config.variant == GanVariant::Wasserstein) {
      tc.clip = ClipBound{hp.clip};
    }
    GanTask task = make_ring_gan_task(config.variant, config.ring, derive_seed(run_seed, 11));
    record = train_gan(task, tc);
  } else {
    DannTask task =
        make_blob_dann_task(hp.lambda, config.dann_options, derive_seed(run_seed, 11));
    record = train_dann(task, tc, hp.v_star);
  }
  if (!summary_path.empty()) {
    write_run_files(config, record, summary_path);
  }
  return outcome_from_record(record);
}

HyperDraw template_hyperparams(const ExperimentConfig& config) {
  HyperDraw hp;
  hp.lr_g = config.train_template.lr_g;
  hp.lr_d = config.train_template.lr_d;
  hp.beta1 = config.train_template.adam_beta1;
  hp.clip = config.train_template.clip.has_value() ? config.train_template.clip->c : 0.1;
  hp.lambda = config.dann_lambda;
  hp.v_star = config.dann_v_star;
  hp.rho = config.decay_rho.value_or(0.01);
  return hp;
}

}  // namespace

RunOutcome execute_run(const ExperimentConfig& config, const HyperDraw& hp, bool with_scheduler,
                       std::uint64_t run_seed, const std::string& summary_path) {
  return execute_run_impl(config, hp, with_scheduler, run_seed, summary_path, nullptr);
}

int cmd_train(const ExperimentConfig& config) {
  TrainConfig tc = config.train_template;
  const double v_star =
      config.task == TaskKind::Gan ? ideal_disc_loss(config.variant) : config.dann_v_star;
  if (config.scheduler_on) {
    tc.scheduler = build_scheduler_params(config, v_star);
  } else if (config.decay_rho.has_value()) {
    tc.baseline_decay = DecaySchedule{*config.decay_rho, tc.total_steps};
  }
  RunRecord record;
  if (config.task == TaskKind::Gan) {
    GanTask task = make_ring_gan_task(config.variant, config.ring, derive_seed(tc.seed, 11));
    record = train_gan(task, tc);
  } else {
    DannTask task =
        make_blob_dann_task(config.dann_lambda, config.dann_options, derive_seed(tc.seed, 11));
    record = train_dann(task, tc, config.dann_v_star);
  }

  const std::filesystem::path out_dir(config.output_dir);
  std::ofstream summary = open_output(out_dir / "run_summary.json");
  summary << run_summary_json(record).dump(2) << '\n';
  std::ofstream trace = open_output(out_dir / "run_trace.jsonl");
  write_run_jsonl(record, trace);

  std::cout << "run: best_metric=" << record.best_metric << " final_gap=" << record.final_gap
            << " diverged=" << (record.diverged ? "yes" : "no")
            << " wall_time_sec=" << record.wall_time_sec << '\n';
  std::cout << "wrote " << (out_dir / "run_summary.json").string() << " and "
            << (out_dir / "run_trace.jsonl").string() << '\n';
  return record.diverged ? 2 : 0;
}

int cmd_tune(const ExperimentConfig& config) {
  const StudyConfig& sc = config.study;
  const std::filesystem::path out_dir(config.output_dir);
  const Direction direction = task_direction(config.task);

  struct Job {
    int trial_id;
    int seed_index;
    bool scheduler;
    HyperDraw hp;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int t = 0; t < sc.n_trials; ++t) {
    std::mt19937_64 draw_rng(derive_seed(sc.base_seed, kTuneDrawStream + static_cast<std::uint64_t>(t)));
    const HyperDraw hp_sched = draw_hyperparams(sc.dists, config.task, sc.decoupled_lr, draw_rng);
    HyperDraw hp_base = hp_sched;
    if (!sc.paired) {
      std::mt19937_64 base_rng(
          derive_seed(sc.base_seed, kTuneBaseDrawStream + static_cast<std::uint64_t>(t)));
      hp_base = draw_hyperparams(sc.dists, config.task, sc.decoupled_lr, base_rng);
    }
    for (int j = 0; j < sc.seeds_per_trial; ++j) {
      const std::uint64_t stream = static_cast<std::uint64_t>(t) * 1024 + static_cast<std::uint64_t>(j);
      const std::uint64_t seed_sched = derive_seed(sc.base_seed, kTuneSeedStream + stream);
      const std::uint64_t seed_base =
          sc.paired ? seed_sched : derive_seed(sc.base_seed, kTuneBaseSeedStream + stream);
      jobs.push_back({t, j, true, hp_sched, seed_sched});
      jobs.push_back({t, j, false, hp_base, seed_base});
    }
  }

  const std::filesystem::path runs_dir = out_dir / "runs";
  const std::vector<RunOutcome> outcomes =
      run_parallel(jobs, sc.parallelism, [&](const Job& job) {
        const std::string summary =
            (runs_dir / run_summary_name(job.trial_id, job.seed, job.scheduler)).string();
        return execute_run(config, job.hp, job.scheduler, job.seed, summary);
      });

  std::vector<TrialRow> rows;
  rows.reserve(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    rows.push_back({jobs[i].trial_id, jobs[i].seed, jobs[i].scheduler, jobs[i].hp, outcomes[i]});
  }
  std::ofstream trials = open_output(out_dir / "trials.csv");
  write_trials_csv(config, rows, trials);

  // Per-trial tuning metric: mean of the validation metric over seeds.
  std::vector<double> mean_sched(static_cast<std::size_t>(sc.n_trials), 0.0);
  std::vector<double> mean_base(static_cast<std::size_t>(sc.n_trials), 0.0);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& acc = jobs[i].scheduler ? mean_sched : mean_base;
    acc[static_cast<std::size_t>(jobs[i].trial_id)] +=
        outcomes[i].final_metric / static_cast<double>(sc.seeds_per_trial);
  }

  const BootstrapCurve curve_sched =
      bootstrap_best_curve(mean_sched, sc.budgets, sc.n_boot, sc.confidence, direction,
                           derive_seed(sc.base_seed, kCurveStream + 1));
  const BootstrapCurve curve_base =
      bootstrap_best_curve(mean_base, sc.budgets, sc.n_boot, sc.confidence, direction,
                           derive_seed(sc.base_seed, kCurveStream + 2));
  {
    std::ofstream out = open_output(out_dir / "curve_scheduler.csv");
    write_curve_csv(curve_sched, out);
  }
  {
    std::ofstream out = open_output(out_dir / "curve_no_scheduler.csv");
    write_curve_csv(curve_base, out);
  }

  auto best_trial = [&](const std::vector<double>& means) {
    int best = 0;
    for (int t = 1; t < sc.n_trials; ++t) {
      const bool is_better = direction == Direction::Min
                                 ? means[static_cast<std::size_t>(t)] < means[static_cast<std::size_t>(best)]
                                 : means[static_cast<std::size_t>(t)] > means[static_cast<std::size_t>(best)];
      if (is_better) best = t;
    }
    return best;
  };
  int n_diverged = 0;
  for (const RunOutcome& o : outcomes) n_diverged += o.diverged ? 1 : 0;

  const int best_sched = best_trial(mean_sched);
  const int best_base = best_trial(mean_base);
  nlohmann::json summary{
      {"n_trials", sc.n_trials},
      {"seeds_per_trial", sc.seeds_per_trial},
      {"paired", sc.paired},
      {"n_runs", jobs.size()},
      {"n_diverged", n_diverged},
      {"best_trial_scheduler", best_sched},
      {"best_trial_no_scheduler", best_base},
      {"best_mean_metric_scheduler", mean_sched[static_cast<std::size_t>(best_sched)]},
      {"best_mean_metric_no_scheduler", mean_base[static_cast<std::size_t>(best_base)]}};
  std::ofstream summary_out = open_output(out_dir / "tune_summary.json");
  summary_out << summary.dump(2) << '\n';

  std::cout << "tune: " << jobs.size() << " runs, " << n_diverged << " diverged\n";
  std::cout << "best mean metric with scheduler: "
            << mean_sched[static_cast<std::size_t>(best_sched)] << " (trial " << best_sched
            << "), without: " << mean_base[static_cast<std::size_t>(best_base)] << " (trial "
            << best_base << ")\n";
  std::cout << "wrote " << (out_dir / "trials.csv").string() << ", curve CSVs, and "
            << (out_dir / "tune_summary.json").string() << '\n';
  return n_diverged == static_cast<int>(jobs.size()) ? 2 : 0;
}

int cmd_sweep(const ExperimentConfig& config, const std::string& parameter,
              const std::vector<double>& grid) {
  if (parameter != "h_min" && parameter != "f_max" && parameter != "x_min" &&
      parameter != "x_max") {
    std::cerr << "sweep: parameter must be one of h_min, f_max, x_min, x_max\n";
    return 1;
  }
  if (grid.empty()) {
    std::cerr << "sweep: empty grid\n";
    return 1;
  }
  const StudyConfig& sc = config.study;
  const double v_star =
      config.task == TaskKind::Gan ? ideal_disc_loss(config.variant) : config.dann_v_star;
  const SchedulerParams base = build_scheduler_params(config, v_star);

  std::vector<SchedulerParams> grid_params;
  for (double value : grid) {
    SchedulerParams p = base;
    if (parameter == "h_min") p.h_min = value;
    else if (parameter == "f_max") p.f_max = value;
    else if (parameter == "x_min") p.x_min = value;
    else p.x_max = value;
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      std::cerr << "sweep: invalid grid value " << value << " for " << parameter << ": "
                << e.what() << '\n';
      return 1;
    }
    grid_params.push_back(p);
  }

  struct Job {
    std::size_t grid_index;
    int seed_index;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    for (int i = 0; i < sc.n_seeds; ++i) {
      jobs.push_back({gi, i,
                      derive_seed(sc.base_seed, kSweepSeedStream + gi * 4096 +
                                                    static_cast<std::uint64_t>(i))});
    }
  }
  const HyperDraw hp = template_hyperparams(config);
  const std::vector<RunOutcome> outcomes =
      run_parallel(jobs, sc.parallelism, [&](const Job& job) {
        return execute_run_impl(config, hp, true, job.seed, {}, &grid_params[job.grid_index]);
      });

  const std::filesystem::path out_dir(config.output_dir);
  std::ofstream out = open_output(out_dir / "sweep.csv");
  out << "param,value,mean_metric,stderr\n";
  int n_diverged = 0;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    std::vector<double> metrics;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].grid_index == gi) {
        metrics.push_back(outcomes[i].final_metric);
        n_diverged += outcomes[i].diverged ? 1 : 0;
      }
    }
    out << parameter << ',' << fmt_double(grid[gi]) << ',' << fmt_double(mean_of(metrics)) << ','
        << fmt_double(stderr_of(metrics)) << '\n';
  }
  std::cout << "sweep: " << jobs.size() << " runs over " << grid.size() << " values of "
            << parameter << ", " << n_diverged << " diverged\n";
  std::cout << "wrote " << (out_dir / "sweep.csv").string() << '\n';
  return n_diverged == static_cast<int>(jobs.size()) ? 2 : 0;
}

CorrelationReport correlate_pairs(std::vector<double> gaps, std::vector<double> metrics,
                                  std::optional<double> metric_threshold, bool log_gap) {
  CorrelationReport report;
  report.log_gap = log_gap;
  std::vector<double> used_gaps, used_metrics;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (metric_threshold.has_value() && metrics[i] > *metric_threshold) {
      ++report.n_filtered;
      continue;
    }
    double g = gaps[i];
    if (log_gap) g = std::log10(std::max(g, 1e-300));
    used_gaps.push_back(g);
    used_metrics.push_back(metrics[i]);
  }
  report.n_used = static_cast<int>(used_gaps.size());
  if (report.n_used >= 3) {
    report.spearman = spearman(used_gaps, used_metrics);
  }
  return report;
}

int cmd_correlate(const ExperimentConfig& config) {
  const StudyConfig& sc = config.study;
  struct Job {
    int trial_id;
    HyperDraw hp;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int t = 0; t < sc.n_trials; ++t) {
    std::mt19937_64 draw_rng(
        derive_seed(sc.base_seed, kCorrelateDrawStream + static_cast<std::uint64_t>(t)));
    jobs.push_back({t, draw_hyperparams(sc.dists, config.task, sc.decoupled_lr, draw_rng),
                    derive_seed(sc.base_seed, kCorrelateSeedStream + static_cast<std::uint64_t>(t))});
  }
  const std::filesystem::path out_dir(config.output_dir);
  const std::filesystem::path runs_dir = out_dir / "runs";
  const std::vector<RunOutcome> outcomes =
      run_parallel(jobs, sc.parallelism, [&](const Job& job) {
        const std::string summary =
            (runs_dir / run_summary_name(job.trial_id, job.seed, false)).string();
        return execute_run(config, job.hp, false, job.seed, summary);
      });

  std::vector<double> gaps, metrics;
  std::vector<int> completed_ids;
  int n_diverged = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].diverged) {
      ++n_diverged;
      continue;
    }
    completed_ids.push_back(jobs[i].trial_id);
    gaps.push_back(outcomes[i].final_gap);
    metrics.push_back(outcomes[i].final_metric);
  }
  const CorrelationReport report =
      correlate_pairs(gaps, metrics, sc.metric_outlier_threshold, sc.log_gap);

  std::ofstream scatter = open_output(out_dir / "scatter.csv");
  scatter << "trial_id,gap,metric\n";
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    double g = gaps[i];
    if (sc.log_gap) g = std::log10(std::max(g, 1e-300));
    scatter << completed_ids[i] << ',' << fmt_double(g) << ',' << fmt_double(metrics[i]) << '\n';
  }
  nlohmann::json corr{{"rho", report.spearman.rho},
                      {"p_value", report.spearman.p_value},
                      {"defined", report.spearman.defined},
                      {"n_used", report.n_used},
                      {"n_filtered", report.n_filtered},
                      {"n_diverged", n_diverged},
                      {"log_gap", report.log_gap}};
  std::ofstream corr_out = open_output(out_dir / "correlation.json");
  corr_out << corr.dump(2) << '\n';

  if (report.spearman.defined) {
    std::cout << "correlate: spearman rho=" << report.spearman.rho
              << " p=" << report.spearman.p_value << " over " << report.n_used << " runs\n";
  } else {
    std::cout << "correlate: correlation unavailable (" << report.n_used
              << " usable runs)\n";
  }
  std::cout << "wrote " << (out_dir / "scatter.csv").string() << " and "
            << (out_dir / "correlation.json").string() << '\n';
  return n_diverged == static_cast<int>(jobs.size()) ? 2 : 0;
}

int cmd_stability(const ExperimentConfig& config, const HyperDraw& best_hparams) {
  const StudyConfig& sc = config.study;
  struct Job {
    int seed_index;
    bool scheduler;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int i = 0; i < sc.n_seeds; ++i) {
    const std::uint64_t seed =
        derive_seed(sc.base_seed, kStabilitySeedStream + static_cast<std::uint64_t>(i));
    jobs.push_back({i, true, seed});
    jobs.push_back({i, false, seed});
  }
  const std::filesystem::path out_dir(config.output_dir);
  const std::filesystem::path runs_dir = out_dir / "runs";
  const std::vector<RunOutcome> outcomes =
      run_parallel(jobs, sc.parallelism, [&](const Job& job) {
        const std::string summary =
            (runs_dir / run_summary_name(job.seed_index, job.seed, job.scheduler)).string();
        return execute_run(config, best_hparams, job.scheduler, job.seed, summary);
      });

  std::ofstream out = open_output(out_dir / "stability.csv");
  out << "seed,scheduler,final_metric,final_gap,gen_gap,diverged\n";
  std::vector<double> metric_sched, metric_base, gap_sched, gap_base;
  int n_diverged = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const RunOutcome& o = outcomes[i];
    out << jobs[i].seed << ',' << (jobs[i].scheduler ? 1 : 0) << ','
        << fmt_double(o.final_metric) << ',' << fmt_double(o.final_gap) << ','
        << fmt_double(o.gen_gap) << ',' << (o.diverged ? 1 : 0) << '\n';
    (jobs[i].scheduler ? metric_sched : metric_base).push_back(o.final_metric);
    (jobs[i].scheduler ? gap_sched : gap_base).push_back(o.final_gap);
    n_diverged += o.diverged ? 1 : 0;
  }

  auto arm_stats = [](const std::vector<double>& v) {
    return nlohmann::json{{"mean", mean_of(v)},
                          {"stderr", stderr_of(v)},
                          {"q1", quantile_of(v, 0.25)},
                          {"median", quantile_of(v, 0.5)},
                          {"q3", quantile_of(v, 0.75)}};
  };
  const TTestResult metric_test = welch_t_test(metric_sched, metric_base);
  const TTestResult gap_test = welch_t_test(gap_sched, gap_base);
  const SignTestResult metric_sign = paired_sign_test(metric_sched, metric_base);
  const SignTestResult gap_sign = paired_sign_test(gap_sched, gap_base);
  nlohmann::json summary{
      {"n_seeds", sc.n_seeds},
      {"n_diverged", n_diverged},
      {"metric_scheduler", arm_stats(metric_sched)},
      {"metric_no_scheduler", arm_stats(metric_base)},
      {"gap_scheduler", arm_stats(gap_sched)},
      {"gap_no_scheduler", arm_stats(gap_base)},
      {"metric_t_test",
       {{"t", metric_test.t}, {"df", metric_test.df}, {"p_value", metric_test.p_value},
        {"defined", metric_test.defined}}},
      {"gap_t_test",
       {{"t", gap_test.t}, {"df", gap_test.df}, {"p_value", gap_test.p_value},
        {"defined", gap_test.defined}}},
      {"metric_sign_test",
       {{"n_less", metric_sign.n_less}, {"n_greater", metric_sign.n_greater},
        {"n_tied", metric_sign.n_tied}, {"p_value", metric_sign.p_value},
        {"defined", metric_sign.defined}}},
      {"gap_sign_test",
       {{"n_less", gap_sign.n_less}, {"n_greater", gap_sign.n_greater},
        {"n_tied", gap_sign.n_tied}, {"p_value", gap_sign.p_value},
        {"defined", gap_sign.defined}}}};
  std::ofstream summary_out = open_output(out_dir / "stability_summary.json");
  summary_out << summary.dump(2) << '\n';

  std::cout << "stability: " << jobs.size() << " runs, " << n_diverged << " diverged\n";
  std::cout << "metric mean with scheduler " << mean_of(metric_sched) << " vs "
            << mean_of(metric_base) << " without (t-test p=" << metric_test.p_value << ")\n";
  std::cout << "wrote " << (out_dir / "stability.csv").string() << " and "
            << (out_dir / "stability_summary.json").string() << '\n';
  return n_diverged == static_cast<int>(jobs.size()) ? 2 : 0;
}

}  // namespace gapsched
