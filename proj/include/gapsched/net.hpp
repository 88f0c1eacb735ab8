#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

namespace gapsched {

enum class Activation { ReLU, LeakyReLU, Tanh, Sigmoid, Identity };

const char* activation_name(Activation act);
Activation activation_from_name(std::string_view name);

inline constexpr double kDefaultLeakySlope = 0.2;

struct LayerSpec {
  int in = 0;
  int out = 0;
  Activation activation = Activation::Identity;
  double leaky_slope = kDefaultLeakySlope;  // used by LeakyReLU only
};

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::Identity;
  double leaky_slope = kDefaultLeakySlope;
};

// Flat, ordered view of all weights and biases: per layer, weights in
// row-major order followed by the bias. Gradients use the same layout.
using ParamBundle = std::vector<double>;
using GradBundle = std::vector<double>;

// A dense feed-forward network over row-per-sample batches.
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<Layer> layers);  // validates dimension chaining

  int input_width() const;
  int output_width() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  ParamBundle parameters() const;
  void set_parameters(const ParamBundle& flat);

  nlohmann::json to_json() const;
  static DenseNet from_json(const nlohmann::json& j);

 private:
  std::vector<Layer> layers_;
};

// Activations cached by forward, consumed by backward.
struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;   // pre-activation per layer, n x out
  std::vector<Eigen::MatrixXd> post;  // post-activation per layer
};

// Batch is n x input_width; returns n x output_width. Pass a cache to enable
// a subsequent backward call.
Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& batch,
                        ForwardCache* cache = nullptr);

struct BackwardResult {
  GradBundle grads;            // aligned with DenseNet::parameters()
  Eigen::MatrixXd input_grad;  // gradient of the loss w.r.t. the input batch
};

// Exact reverse-mode gradients of the scalar loss whose gradient w.r.t. the
// network outputs is supplied.
BackwardResult backward(const DenseNet& net, const ForwardCache& cache,
                        const Eigen::MatrixXd& output_grad);

// Xavier-style uniform init, bound sqrt(6 / (fan_in + fan_out)); biases zero.
// Fully determined by the seed.
DenseNet init_net(const std::vector<LayerSpec>& spec, std::uint64_t seed);

// Central-difference gradient of loss_of_outputs(forward(net, batch)) per
// parameter. Testing oracle for backward.
GradBundle finite_diff_gradient(const DenseNet& net,
                                const std::function<double(const Eigen::MatrixXd&)>& loss_of_outputs,
                                const Eigen::MatrixXd& batch, double h);

}  // namespace gapsched
