#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>

#include <Eigen/Core>

#include "gapsched/data.hpp"
#include "gapsched/net.hpp"
#include "gapsched/optim.hpp"
#include "gapsched/record.hpp"
#include "gapsched/scheduler.hpp"

namespace gapsched {

// Mixes a run seed with a stream tag so that independent draw streams
// (training batches, evaluation data, evaluation noise) never overlap.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Eigen::MatrixXd standard_normal(int rows, int cols, std::mt19937_64& rng);

using DataSampler = std::function<Eigen::MatrixXd(int n, std::mt19937_64& rng)>;

struct GanTask {
  GanVariant variant = GanVariant::NonSaturating;
  DenseNet generator;
  DenseNet discriminator;
  int noise_dim = 4;
  DataSampler data_sampler;  // houses the real distribution
};

struct RingTaskOptions {
  int k_modes = 8;
  double radius = 0.7;   // inside the generator's tanh range
  double sigma = 0.05;
  int noise_dim = 4;
  int hidden = 64;
};

// Generator noise_dim -> hidden -> hidden -> 2 with a tanh head;
// discriminator 2 -> hidden -> hidden -> 1 with a sigmoid head for
// probability variants and an identity head otherwise.
GanTask make_ring_gan_task(GanVariant variant, const RingTaskOptions& options,
                           std::uint64_t init_seed);

struct DannTask {
  DenseNet feature_extractor;
  DenseNet label_predictor;
  DenseNet discriminator;
  double lambda = 0.1;
  DannDomainSpec domains;
};

struct DannTaskOptions {
  int hidden = 32;
  int rep_dim = 8;
  DannDomainSpec domains;
};

GanTask make_ring_gan_task(GanVariant variant, std::uint64_t init_seed);
DannTask make_blob_dann_task(double lambda, const DannTaskOptions& options,
                             std::uint64_t init_seed);

enum class UpdateStyle { Simultaneous, Alternating };
enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  int batch_size = 128;
  std::int64_t total_steps = 20000;
  double lr_g = 1e-3;
  double lr_d = 1e-3;
  std::optional<SchedulerParams> scheduler;     // gap-aware scheduling of D
  std::optional<DecaySchedule> baseline_decay;  // classical baseline, exclusive with scheduler
  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_beta1 = 0.5;
  std::optional<ClipBound> clip;  // WGAN weight clipping, applied to D after each update
  std::uint64_t seed = 0;
  std::int64_t eval_period = 500;
  int eval_samples = 2048;
  UpdateStyle update_style = UpdateStyle::Simultaneous;

  void validate() const;
};

// Simultaneous (or alternating) minibatch training with batch-level
// gap-aware scheduling of the discriminator's learning rate. Returns the
// full trace; the task's networks are left at the best-by-validation
// snapshot (early stopping). Divergence flags the record instead of
// throwing.
RunRecord train_gan(GanTask& task, const TrainConfig& config);

// DANN training: D descends its own risk; F and Y descend
// label_loss - lambda * disc_loss. The scheduler observes D's batch risk
// with ideal loss v_star and scales D's rate only. The validation metric is
// target-domain accuracy.
RunRecord train_dann(DannTask& task, const TrainConfig& config, double v_star);

Eigen::MatrixXd generate_samples(const GanTask& task, int n, std::uint64_t seed);

// Target-domain accuracy of label_predictor(feature_extractor(x)) at
// threshold 0.5.
double dann_target_accuracy(const DannTask& task, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& y);

}  // namespace gapsched
