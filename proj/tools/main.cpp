#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gapsched/study.hpp"

namespace {

// Applies "a.b.c=value" overrides onto the config document. Values parse as
// JSON when possible, otherwise as strings ("--set variant=nsgan" works
// without quoting).
void apply_set_overrides(nlohmann::json& config, const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key.path=value, got: " + kv);
    }
    std::string pointer = "/" + kv.substr(0, eq);
    for (char& c : pointer) {
      if (c == '.') c = '/';
    }
    const std::string raw = kv.substr(eq + 1);
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
      value = raw;
    }
    config[nlohmann::json::json_pointer(pointer)] = value;
  }
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    grid.push_back(std::stod(item));
  }
  return grid;
}

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scheduler;  // "on" / "off"
  std::optional<double> lr_g;
  std::optional<double> lr_d;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("-c,--config", flags.config_path, "JSON config file")->required();
  cmd->add_option("--set", flags.sets,
                  "Override any config field, e.g. --set train.total_steps=5000");
  cmd->add_option("--out", flags.output_dir, "Output directory (overrides output_dir)");
  cmd->add_option("--seed", flags.seed, "Training seed (overrides train.seed)");
  cmd->add_option("--scheduler", flags.scheduler, "on|off (overrides train.scheduler)")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--lr-g", flags.lr_g, "Generator learning rate (overrides train.lr_g)");
  cmd->add_option("--lr-d", flags.lr_d, "Discriminator learning rate (overrides train.lr_d)");
}

gapsched::ExperimentConfig load_config(const CommonFlags& flags) {
  std::ifstream in(flags.config_path);
  if (!in) {
    throw std::invalid_argument("cannot open config file " + flags.config_path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  apply_set_overrides(j, flags.sets);
  if (flags.output_dir.has_value()) j["output_dir"] = *flags.output_dir;
  if (flags.seed.has_value()) j["train"]["seed"] = *flags.seed;
  if (flags.scheduler.has_value()) j["train"]["scheduler"] = (*flags.scheduler == "on");
  if (flags.lr_g.has_value()) j["train"]["lr_g"] = *flags.lr_g;
  if (flags.lr_d.has_value()) j["train"]["lr_d"] = *flags.lr_d;
  return gapsched::parse_experiment_config(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gap-aware learning-rate scheduling experiments on synthetic adversarial tasks"};
  app.require_subcommand(1);

  CommonFlags train_flags, tune_flags, sweep_flags, correlate_flags, stability_flags;

  CLI::App* train = app.add_subcommand("train", "Run a single training and dump its trace");
  add_common(train, train_flags);

  CLI::App* tune = app.add_subcommand(
      "tune", "Random-search tuning study, paired with/without-scheduler arms");
  add_common(tune, tune_flags);

  CLI::App* sweep = app.add_subcommand("sweep", "Sensitivity sweep over one scheduler parameter");
  add_common(sweep, sweep_flags);
  std::string sweep_param;
  std::string sweep_grid;
  sweep->add_option("--param", sweep_param, "One of h_min, f_max, x_min, x_max")->required();
  sweep->add_option("--grid", sweep_grid, "Comma-separated grid values")->required();

  CLI::App* correlate = app.add_subcommand(
      "correlate", "Gap-vs-metric correlation study over random hyperparameters");
  add_common(correlate, correlate_flags);

  CLI::App* stability = app.add_subcommand(
      "stability", "Repeated seeded runs at fixed hyperparameters, scheduler vs none");
  add_common(stability, stability_flags);
  std::optional<double> st_lr, st_lr_d, st_beta1, st_clip, st_lambda, st_v_star;
  stability->add_option("--lr", st_lr, "Tuned learning rate (both networks)");
  stability->add_option("--lr-d-only", st_lr_d, "Tuned discriminator rate when decoupled");
  stability->add_option("--beta1", st_beta1, "Tuned Adam beta1");
  stability->add_option("--clip", st_clip, "Tuned WGAN clipping weight");
  stability->add_option("--lambda", st_lambda, "Tuned DANN lambda");
  stability->add_option("--v-star", st_v_star, "Tuned DANN V*");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return gapsched::cmd_train(load_config(train_flags));
    }
    if (tune->parsed()) {
      return gapsched::cmd_tune(load_config(tune_flags));
    }
    if (sweep->parsed()) {
      return gapsched::cmd_sweep(load_config(sweep_flags), sweep_param, parse_grid(sweep_grid));
    }
    if (correlate->parsed()) {
      return gapsched::cmd_correlate(load_config(correlate_flags));
    }
    if (stability->parsed()) {
      const gapsched::ExperimentConfig config = load_config(stability_flags);
      gapsched::HyperDraw hp;
      hp.lr_g = st_lr.value_or(config.train_template.lr_g);
      hp.lr_d = st_lr_d.value_or(st_lr.value_or(config.train_template.lr_d));
      hp.beta1 = st_beta1.value_or(config.train_template.adam_beta1);
      hp.clip = st_clip.value_or(
          config.train_template.clip.has_value() ? config.train_template.clip->c : 0.1);
      hp.lambda = st_lambda.value_or(config.dann_lambda);
      hp.v_star = st_v_star.value_or(config.dann_v_star);
      hp.rho = config.decay_rho.value_or(0.01);
      return gapsched::cmd_stability(config, hp);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
