#include "gapsched/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "gapsched/errors.hpp"

namespace gapsched {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the seed/stream pair.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Eigen::MatrixXd standard_normal(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = dist(rng);
    }
  }
  return m;
}

GanTask make_ring_gan_task(GanVariant variant, const RingTaskOptions& options,
                           std::uint64_t init_seed) {
  GanTask task;
  task.variant = variant;
  task.noise_dim = options.noise_dim;
  const Activation disc_head =
      probability_outputs(variant) ? Activation::Sigmoid : Activation::Identity;
  task.generator = init_net(
      {{options.noise_dim, options.hidden, Activation::LeakyReLU},
       {options.hidden, options.hidden, Activation::LeakyReLU},
       {options.hidden, 2, Activation::Tanh}},
      derive_seed(init_seed, 101));
  task.discriminator = init_net(
      {{2, options.hidden, Activation::LeakyReLU},
       {options.hidden, options.hidden, Activation::LeakyReLU},
       {options.hidden, 1, disc_head}},
      derive_seed(init_seed, 102));
  const int k = options.k_modes;
  const double radius = options.radius;
  const double sigma = options.sigma;
  task.data_sampler = [k, radius, sigma](int n, std::mt19937_64& rng) {
    return sample_ring_gaussians(k, radius, sigma, n, rng);
  };
  return task;
}

GanTask make_ring_gan_task(GanVariant variant, std::uint64_t init_seed) {
  return make_ring_gan_task(variant, RingTaskOptions{}, init_seed);
}

DannTask make_blob_dann_task(double lambda, const DannTaskOptions& options,
                             std::uint64_t init_seed) {
  if (lambda < 0.0) {
    throw std::invalid_argument("make_blob_dann_task: lambda must be nonnegative");
  }
  DannTask task;
  task.lambda = lambda;
  task.domains = options.domains;
  task.feature_extractor = init_net(
      {{2, options.hidden, Activation::LeakyReLU},
       {options.hidden, options.rep_dim, Activation::Identity}},
      derive_seed(init_seed, 201));
  task.label_predictor = init_net(
      {{options.rep_dim, options.hidden, Activation::LeakyReLU},
       {options.hidden, 1, Activation::Sigmoid}},
      derive_seed(init_seed, 202));
  task.discriminator = init_net(
      {{options.rep_dim, options.hidden, Activation::LeakyReLU},
       {options.hidden, 1, Activation::Sigmoid}},
      derive_seed(init_seed, 203));
  return task;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (total_steps < 1) throw std::invalid_argument("TrainConfig: total_steps must be >= 1");
  if (eval_period < 1) throw std::invalid_argument("TrainConfig: eval_period must be >= 1");
  if (eval_samples < 2) throw std::invalid_argument("TrainConfig: eval_samples must be >= 2");
  if (!(lr_g >= 0.0) || !(lr_d >= 0.0)) {
    throw std::invalid_argument("TrainConfig: learning rates must be nonnegative");
  }
  if (scheduler.has_value() && baseline_decay.has_value()) {
    throw std::invalid_argument("TrainConfig: scheduler and baseline_decay are exclusive");
  }
  if (scheduler.has_value()) scheduler->validate();
  if (baseline_decay.has_value()) baseline_decay->validate();
  if (clip.has_value() && !(clip->c > 0.0)) {
    throw std::invalid_argument("TrainConfig: clip bound must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) {
    throw std::invalid_argument("TrainConfig: adam_beta1 must be in [0, 1)");
  }
}

namespace {

// SGD or Adam behind one interface; a zero base rate makes the step a no-op
// so frozen-network runs are expressible.
class NetOptimizer {
 public:
  NetOptimizer(OptimizerKind kind, double base_lr, double beta1, std::size_t n_params)
      : kind_(kind), sgd_{base_lr} {
    if (kind_ == OptimizerKind::Adam) {
      adam_ = make_adam(base_lr, beta1, n_params);
    }
  }

  void step(ParamBundle& params, const GradBundle& grads, double multiplier) {
    if (kind_ == OptimizerKind::Adam) {
      if (adam_.base_lr == 0.0) return;
      adam_step(params, grads, adam_, multiplier);
    } else {
      if (sgd_.base_lr == 0.0) return;
      sgd_step(params, grads, sgd_, multiplier);
    }
  }

 private:
  OptimizerKind kind_;
  SgdState sgd_;
  AdamState adam_;
};

std::vector<double> column_vector(const Eigen::MatrixXd& m) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, 0);
  return v;
}

Eigen::MatrixXd column_matrix(const std::vector<double>& v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

void add_into(GradBundle& acc, const GradBundle& other) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += other[i];
}

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

double binary_cross_entropy(const std::vector<double>& p, const Eigen::VectorXd& y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = clamp_prob(p[i]);
    loss -= y(static_cast<Eigen::Index>(i)) * std::log(q) +
            (1.0 - y(static_cast<Eigen::Index>(i))) * std::log(1.0 - q);
  }
  return loss / static_cast<double>(p.size());
}

std::vector<double> binary_cross_entropy_grad(const std::vector<double>& p,
                                              const Eigen::VectorXd& y) {
  std::vector<double> grad(p.size());
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = clamp_prob(p[i]);
    grad[i] = (q - y(static_cast<Eigen::Index>(i))) / (n * q * (1.0 - q));
  }
  return grad;
}

// Shared multiplier logic: gap-aware scheduler, decay baseline, or constant 1.
struct MultiplierSource {
  std::optional<GapScheduler> scheduler;
  std::optional<DecaySchedule> decay;
  LossEstimator tracker;  // passive EMA for tracing when no scheduler is active
  std::int64_t total_steps = 1;

  MultiplierSource(const TrainConfig& config, double ideal_loss)
      : tracker(ideal_loss,
                config.scheduler.has_value() ? config.scheduler->ema_decay : 0.95),
        total_steps(config.total_steps) {
    if (config.scheduler.has_value()) {
      scheduler.emplace(*config.scheduler);
    } else if (config.baseline_decay.has_value()) {
      decay = *config.baseline_decay;
      decay->total_steps = config.total_steps;
    }
  }

  // Returns the multiplier for the step and the post-update loss estimate.
  std::pair<double, double> observe(double batch_loss, std::int64_t step) {
    if (scheduler.has_value()) {
      const double mult = scheduler->observe_and_multiply(batch_loss);
      return {mult, scheduler->estimate()};
    }
    tracker.update(batch_loss);
    if (decay.has_value()) {
      return {decay_multiplier(*decay, step), tracker.estimate()};
    }
    return {1.0, tracker.estimate()};
  }
};

bool better(Direction dir, double candidate, double incumbent) {
  return dir == Direction::Min ? candidate < incumbent : candidate > incumbent;
}

double worst_metric(Direction dir) {
  return dir == Direction::Min ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
}

}  // namespace

RunRecord train_gan(GanTask& task, const TrainConfig& config) {
  config.validate();
  if (task.generator.output_width() != task.discriminator.input_width()) {
    throw std::invalid_argument("train_gan: generator output does not match discriminator input");
  }
  const auto t_start = std::chrono::steady_clock::now();
  const double v_star = ideal_disc_loss(task.variant);

  std::mt19937_64 train_rng(derive_seed(config.seed, 0));
  std::mt19937_64 eval_data_rng(derive_seed(config.seed, 1));
  std::mt19937_64 eval_noise_rng(derive_seed(config.seed, 2));
  const Eigen::MatrixXd eval_real = task.data_sampler(config.eval_samples, eval_data_rng);
  const Eigen::MatrixXd eval_noise =
      standard_normal(config.eval_samples, task.noise_dim, eval_noise_rng);
  const GaussianSummary eval_real_summary = fit_gaussian(eval_real);

  ParamBundle params_g = task.generator.parameters();
  ParamBundle params_d = task.discriminator.parameters();
  NetOptimizer opt_g(config.optimizer, config.lr_g, config.adam_beta1, params_g.size());
  NetOptimizer opt_d(config.optimizer, config.lr_d, config.adam_beta1, params_d.size());
  MultiplierSource mult_source(config, v_star);

  RunRecord record;
  record.metric_direction = Direction::Min;
  record.best_metric = worst_metric(Direction::Min);
  ParamBundle best_g = params_g;
  ParamBundle best_d = params_d;

  for (std::int64_t step = 1; step <= config.total_steps && !record.diverged; ++step) {
    try {
      const Eigen::MatrixXd real = task.data_sampler(config.batch_size, train_rng);
      const Eigen::MatrixXd noise = standard_normal(config.batch_size, task.noise_dim, train_rng);

      ForwardCache cache_g, cache_dr, cache_df;
      const Eigen::MatrixXd fake = forward(task.generator, noise, &cache_g);
      DiscBatchOutputs outputs;
      outputs.d_real = column_vector(forward(task.discriminator, real, &cache_dr));
      outputs.d_fake = column_vector(forward(task.discriminator, fake, &cache_df));
      const double v_batch = disc_loss(task.variant, outputs);
      const double g_batch = gen_loss(task.variant, outputs.d_fake);
      if (!std::isfinite(v_batch) || !std::isfinite(g_batch)) {
        throw DivergenceError("train_gan: non-finite batch loss");
      }

      const auto [multiplier, estimate] = mult_source.observe(v_batch, step);

      const DiscLossGrad dgrad = disc_loss_grad(task.variant, outputs);
      BackwardResult bw_real = backward(task.discriminator, cache_dr, column_matrix(dgrad.d_real));
      BackwardResult bw_fake = backward(task.discriminator, cache_df, column_matrix(dgrad.d_fake));
      add_into(bw_real.grads, bw_fake.grads);
      GradBundle& grads_d = bw_real.grads;

      if (config.update_style == UpdateStyle::Simultaneous) {
        // Both gradients are computed from the same forward pass before
        // either network moves.
        const std::vector<double> ggrad = gen_loss_grad(task.variant, outputs.d_fake);
        const BackwardResult bw_through_d =
            backward(task.discriminator, cache_df, column_matrix(ggrad));
        const BackwardResult bw_g = backward(task.generator, cache_g, bw_through_d.input_grad);
        opt_d.step(params_d, grads_d, multiplier);
        task.discriminator.set_parameters(params_d);
        opt_g.step(params_g, bw_g.grads, 1.0);
        task.generator.set_parameters(params_g);
      } else {
        opt_d.step(params_d, grads_d, multiplier);
        task.discriminator.set_parameters(params_d);
        ForwardCache cache_df2;
        const std::vector<double> d_fake2 =
            column_vector(forward(task.discriminator, fake, &cache_df2));
        const std::vector<double> ggrad = gen_loss_grad(task.variant, d_fake2);
        const BackwardResult bw_through_d =
            backward(task.discriminator, cache_df2, column_matrix(ggrad));
        const BackwardResult bw_g = backward(task.generator, cache_g, bw_through_d.input_grad);
        opt_g.step(params_g, bw_g.grads, 1.0);
        task.generator.set_parameters(params_g);
      }

      if (config.clip.has_value()) {
        clip_weights(params_d, *config.clip);
        task.discriminator.set_parameters(params_d);
      }

      record.steps.push_back({step, v_batch, estimate, std::abs(estimate - v_star), multiplier,
                              g_batch});

      if (step % config.eval_period == 0 || step == config.total_steps) {
        const Eigen::MatrixXd gen_eval = forward(task.generator, eval_noise);
        if (!gen_eval.allFinite()) {
          throw DivergenceError("train_gan: non-finite generator samples at eval");
        }
        const double metric =
            frechet_gaussian_distance(fit_gaussian(gen_eval), eval_real_summary);
        DiscBatchOutputs eval_outputs;
        eval_outputs.d_real = column_vector(forward(task.discriminator, eval_real));
        eval_outputs.d_fake = column_vector(forward(task.discriminator, gen_eval));
        const double full_loss = disc_loss(task.variant, eval_outputs);
        const double gen_full = gen_loss(task.variant, eval_outputs.d_fake);
        if (!std::isfinite(metric) || !std::isfinite(full_loss) || !std::isfinite(gen_full)) {
          throw DivergenceError("train_gan: non-finite evaluation");
        }
        const EvalTrace eval{step, metric, full_loss, optimality_gap(full_loss, v_star),
                             generator_gap(gen_full, task.variant)};
        record.evals.push_back(eval);
        if (better(Direction::Min, metric, record.best_metric)) {
          record.best_metric = metric;
          record.best_eval_step = step;
          record.final_gap = eval.opt_gap;
          record.final_gen_gap = eval.gen_gap;
          best_g = params_g;
          best_d = params_d;
        }
      }
    } catch (const DivergenceError&) {
      record.diverged = true;
      record.diverged_at_step = step;
    }
  }

  if (record.diverged) {
    record.best_metric = worst_metric(Direction::Min);
    record.final_gap = std::numeric_limits<double>::infinity();
    record.final_gen_gap = std::numeric_limits<double>::infinity();
  } else {
    task.generator.set_parameters(best_g);
    task.discriminator.set_parameters(best_d);
  }
  record.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return record;
}

RunRecord train_dann(DannTask& task, const TrainConfig& config, double v_star) {
  config.validate();
  if (!(v_star > 0.0 && v_star <= std::log(4.0))) {
    throw std::invalid_argument("train_dann: v_star must be in (0, log 4]");
  }
  const auto t_start = std::chrono::steady_clock::now();
  const double lambda = task.lambda;

  std::mt19937_64 train_rng(derive_seed(config.seed, 0));
  std::mt19937_64 eval_rng(derive_seed(config.seed, 1));
  const DannBatch eval_set = sample_dann_domains(task.domains, config.eval_samples, eval_rng);

  ParamBundle params_f = task.feature_extractor.parameters();
  ParamBundle params_y = task.label_predictor.parameters();
  ParamBundle params_d = task.discriminator.parameters();
  NetOptimizer opt_f(config.optimizer, config.lr_g, config.adam_beta1, params_f.size());
  NetOptimizer opt_y(config.optimizer, config.lr_g, config.adam_beta1, params_y.size());
  NetOptimizer opt_d(config.optimizer, config.lr_d, config.adam_beta1, params_d.size());
  MultiplierSource mult_source(config, v_star);

  RunRecord record;
  record.metric_direction = Direction::Max;
  record.best_metric = worst_metric(Direction::Max);
  ParamBundle best_f = params_f;
  ParamBundle best_y = params_y;
  ParamBundle best_d = params_d;

  for (std::int64_t step = 1; step <= config.total_steps && !record.diverged; ++step) {
    try {
      const DannBatch batch = sample_dann_domains(task.domains, config.batch_size, train_rng);

      ForwardCache cache_fs, cache_ft, cache_y, cache_ds, cache_dt;
      const Eigen::MatrixXd rep_s = forward(task.feature_extractor, batch.source_x, &cache_fs);
      const Eigen::MatrixXd rep_t = forward(task.feature_extractor, batch.target_x, &cache_ft);
      const std::vector<double> p_label =
          column_vector(forward(task.label_predictor, rep_s, &cache_y));
      DannOutputs outputs;
      outputs.d_source = column_vector(forward(task.discriminator, rep_s, &cache_ds));
      outputs.d_target = column_vector(forward(task.discriminator, rep_t, &cache_dt));
      outputs.lambda = lambda;
      const double l_y = binary_cross_entropy(p_label, batch.source_y);
      const double l_d = dann_disc_loss(outputs);
      if (!std::isfinite(l_y) || !std::isfinite(l_d)) {
        throw DivergenceError("train_dann: non-finite batch loss");
      }

      const auto [multiplier, estimate] = mult_source.observe(l_d, step);

      const DannDiscGrad ddl = dann_disc_loss_grad(outputs);
      BackwardResult bw_ds = backward(task.discriminator, cache_ds, column_matrix(ddl.d_source));
      BackwardResult bw_dt = backward(task.discriminator, cache_dt, column_matrix(ddl.d_target));
      add_into(bw_ds.grads, bw_dt.grads);
      GradBundle& grads_d = bw_ds.grads;

      const std::vector<double> bce_grad = binary_cross_entropy_grad(p_label, batch.source_y);
      const BackwardResult bw_y = backward(task.label_predictor, cache_y, column_matrix(bce_grad));

      auto feature_update = [&](const Eigen::MatrixXd& src_disc_grad,
                                const Eigen::MatrixXd& tgt_disc_grad) {
        // F descends l_y - lambda * l_d. With lambda = 0 the discriminator
        // path is skipped entirely so the run reduces to source-only
        // supervised training.
        Eigen::MatrixXd src_grad = bw_y.input_grad;
        if (lambda != 0.0) src_grad -= lambda * src_disc_grad;
        BackwardResult bw_fs = backward(task.feature_extractor, cache_fs, src_grad);
        if (lambda != 0.0) {
          const BackwardResult bw_ft =
              backward(task.feature_extractor, cache_ft, (-lambda * tgt_disc_grad).eval());
          add_into(bw_fs.grads, bw_ft.grads);
        }
        opt_f.step(params_f, bw_fs.grads, 1.0);
        task.feature_extractor.set_parameters(params_f);
        opt_y.step(params_y, bw_y.grads, 1.0);
        task.label_predictor.set_parameters(params_y);
      };

      if (config.update_style == UpdateStyle::Simultaneous) {
        const Eigen::MatrixXd src_disc_grad = bw_ds.input_grad;
        const Eigen::MatrixXd tgt_disc_grad = bw_dt.input_grad;
        opt_d.step(params_d, grads_d, multiplier);
        task.discriminator.set_parameters(params_d);
        feature_update(src_disc_grad, tgt_disc_grad);
      } else {
        opt_d.step(params_d, grads_d, multiplier);
        task.discriminator.set_parameters(params_d);
        if (lambda != 0.0) {
          ForwardCache cache_ds2, cache_dt2;
          DannOutputs outputs2;
          outputs2.d_source = column_vector(forward(task.discriminator, rep_s, &cache_ds2));
          outputs2.d_target = column_vector(forward(task.discriminator, rep_t, &cache_dt2));
          outputs2.lambda = lambda;
          const DannDiscGrad ddl2 = dann_disc_loss_grad(outputs2);
          const BackwardResult bw_ds2 =
              backward(task.discriminator, cache_ds2, column_matrix(ddl2.d_source));
          const BackwardResult bw_dt2 =
              backward(task.discriminator, cache_dt2, column_matrix(ddl2.d_target));
          feature_update(bw_ds2.input_grad, bw_dt2.input_grad);
        } else {
          feature_update(Eigen::MatrixXd(), Eigen::MatrixXd());
        }
      }

      record.steps.push_back({step, l_d, estimate, std::abs(estimate - v_star), multiplier, l_y});

      if (step % config.eval_period == 0 || step == config.total_steps) {
        const double accuracy = dann_target_accuracy(task, eval_set.target_x, eval_set.target_y);
        const Eigen::MatrixXd eval_rep_s = forward(task.feature_extractor, eval_set.source_x);
        const Eigen::MatrixXd eval_rep_t = forward(task.feature_extractor, eval_set.target_x);
        DannOutputs eval_outputs;
        eval_outputs.d_source = column_vector(forward(task.discriminator, eval_rep_s));
        eval_outputs.d_target = column_vector(forward(task.discriminator, eval_rep_t));
        eval_outputs.lambda = lambda;
        const double full_l_d = dann_disc_loss(eval_outputs);
        if (!std::isfinite(accuracy) || !std::isfinite(full_l_d)) {
          throw DivergenceError("train_dann: non-finite evaluation");
        }
        const EvalTrace eval{step, accuracy, full_l_d, optimality_gap(full_l_d, v_star), 0.0};
        record.evals.push_back(eval);
        if (better(Direction::Max, accuracy, record.best_metric)) {
          record.best_metric = accuracy;
          record.best_eval_step = step;
          record.final_gap = eval.opt_gap;
          record.final_gen_gap = 0.0;
          best_f = params_f;
          best_y = params_y;
          best_d = params_d;
        }
      }
    } catch (const DivergenceError&) {
      record.diverged = true;
      record.diverged_at_step = step;
    }
  }

  if (record.diverged) {
    record.best_metric = worst_metric(Direction::Max);
    record.final_gap = std::numeric_limits<double>::infinity();
    record.final_gen_gap = std::numeric_limits<double>::infinity();
  } else {
    task.feature_extractor.set_parameters(best_f);
    task.label_predictor.set_parameters(best_y);
    task.discriminator.set_parameters(best_d);
  }
  record.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return record;
}

Eigen::MatrixXd generate_samples(const GanTask& task, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return forward(task.generator, standard_normal(n, task.noise_dim, rng));
}

double dann_target_accuracy(const DannTask& task, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& y) {
  const Eigen::MatrixXd rep = forward(task.feature_extractor, x);
  const Eigen::MatrixXd p = forward(task.label_predictor, rep);
  int correct = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double predicted = p(i, 0) >= 0.5 ? 1.0 : 0.0;
    if (predicted == y(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(p.rows());
}

}  // namespace gapsched
