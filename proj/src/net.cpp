#include "gapsched/net.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace gapsched {

namespace {

double apply_activation(Activation act, double slope, double z) {
  switch (act) {
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::LeakyReLU: return z > 0.0 ? z : slope * z;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Identity: return z;
  }
  throw std::invalid_argument("unknown activation");
}

// Derivative at the pre-activation z, given the post-activation a.
double activation_derivative(Activation act, double slope, double z, double a) {
  switch (act) {
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::LeakyReLU: return z > 0.0 ? 1.0 : slope;
    case Activation::Tanh: return 1.0 - a * a;
    case Activation::Sigmoid: return a * (1.0 - a);
    case Activation::Identity: return 1.0;
  }
  throw std::invalid_argument("unknown activation");
}

}  // namespace

const char* activation_name(Activation act) {
  switch (act) {
    case Activation::ReLU: return "relu";
    case Activation::LeakyReLU: return "leaky_relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  throw std::invalid_argument("unknown activation");
}

Activation activation_from_name(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "leaky_relu") return Activation::LeakyReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

DenseNet::DenseNet(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    if (layer.weights.rows() != layer.bias.size()) {
      throw std::invalid_argument("DenseNet: layer " + std::to_string(i) +
                                  " weight rows do not match bias size");
    }
    if (i > 0 && layers_[i - 1].weights.rows() != layer.weights.cols()) {
      throw std::invalid_argument("DenseNet: layer " + std::to_string(i) +
                                  " input width does not chain");
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      throw std::invalid_argument("DenseNet: layer " + std::to_string(i) +
                                  " has non-finite parameters");
    }
  }
}

int DenseNet::input_width() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weights.cols());
}

int DenseNet::output_width() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weights.rows());
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_) {
    n += static_cast<std::size_t>(layer.weights.size()) +
         static_cast<std::size_t>(layer.bias.size());
  }
  return n;
}

ParamBundle DenseNet::parameters() const {
  ParamBundle flat;
  flat.reserve(parameter_count());
  for (const Layer& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        flat.push_back(layer.weights(r, c));
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      flat.push_back(layer.bias(r));
    }
  }
  return flat;
}

void DenseNet::set_parameters(const ParamBundle& flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("DenseNet::set_parameters: bundle size mismatch");
  }
  std::size_t k = 0;
  for (Layer& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = flat[k++];
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      layer.bias(r) = flat[k++];
    }
  }
}

nlohmann::json DenseNet::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : layers_) {
    nlohmann::json weights = nlohmann::json::array();
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        row.push_back(layer.weights(r, c));
      }
      weights.push_back(std::move(row));
    }
    nlohmann::json bias = nlohmann::json::array();
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      bias.push_back(layer.bias(r));
    }
    layers.push_back(nlohmann::json{{"weights", std::move(weights)},
                                    {"bias", std::move(bias)},
                                    {"activation", activation_name(layer.activation)},
                                    {"leaky_slope", layer.leaky_slope}});
  }
  return nlohmann::json{{"layers", std::move(layers)}};
}

DenseNet DenseNet::from_json(const nlohmann::json& j) {
  std::vector<Layer> layers;
  for (const nlohmann::json& lj : j.at("layers")) {
    Layer layer;
    const nlohmann::json& weights = lj.at("weights");
    const Eigen::Index rows = static_cast<Eigen::Index>(weights.size());
    const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(weights[0].size()) : 0;
    layer.weights.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        layer.weights(r, c) = weights[r][c].get<double>();
      }
    }
    const nlohmann::json& bias = lj.at("bias");
    layer.bias.resize(static_cast<Eigen::Index>(bias.size()));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      layer.bias(r) = bias[r].get<double>();
    }
    layer.activation = activation_from_name(lj.at("activation").get<std::string>());
    layer.leaky_slope = lj.value("leaky_slope", kDefaultLeakySlope);
    layers.push_back(std::move(layer));
  }
  return DenseNet(std::move(layers));
}

Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& batch, ForwardCache* cache) {
  if (batch.cols() != net.input_width()) {
    throw std::invalid_argument("forward: batch width " + std::to_string(batch.cols()) +
                                " does not match net input width " +
                                std::to_string(net.input_width()));
  }
  if (cache != nullptr) {
    cache->input = batch;
    cache->pre.clear();
    cache->post.clear();
  }
  Eigen::MatrixXd current = batch;
  for (const Layer& layer : net.layers()) {
    Eigen::MatrixXd pre = current * layer.weights.transpose();
    pre.rowwise() += layer.bias.transpose();
    Eigen::MatrixXd post = pre.unaryExpr([&layer](double z) {
      return apply_activation(layer.activation, layer.leaky_slope, z);
    });
    if (cache != nullptr) {
      cache->pre.push_back(pre);
      cache->post.push_back(post);
    }
    current = std::move(post);
  }
  return current;
}

BackwardResult backward(const DenseNet& net, const ForwardCache& cache,
                        const Eigen::MatrixXd& output_grad) {
  const std::vector<Layer>& layers = net.layers();
  if (cache.pre.size() != layers.size()) {
    throw std::invalid_argument("backward: cache does not match net depth");
  }
  if (output_grad.rows() != cache.input.rows() ||
      output_grad.cols() != net.output_width()) {
    throw std::invalid_argument("backward: output_grad shape mismatch");
  }

  // Per-layer weight/bias gradients, filled back to front.
  std::vector<Eigen::MatrixXd> weight_grads(layers.size());
  std::vector<Eigen::VectorXd> bias_grads(layers.size());

  Eigen::MatrixXd delta = output_grad;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Layer& layer = layers[li];
    const Eigen::MatrixXd& pre = cache.pre[li];
    const Eigen::MatrixXd& post = cache.post[li];
    // delta currently holds dL/d(post); fold in the activation derivative.
    Eigen::MatrixXd dpre(delta.rows(), delta.cols());
    for (Eigen::Index r = 0; r < delta.rows(); ++r) {
      for (Eigen::Index c = 0; c < delta.cols(); ++c) {
        dpre(r, c) = delta(r, c) * activation_derivative(layer.activation, layer.leaky_slope,
                                                         pre(r, c), post(r, c));
      }
    }
    const Eigen::MatrixXd& layer_input = li == 0 ? cache.input : cache.post[li - 1];
    weight_grads[li] = dpre.transpose() * layer_input;
    bias_grads[li] = dpre.colwise().sum().transpose();
    delta = dpre * layer.weights;
  }

  BackwardResult result;
  result.grads.reserve(net.parameter_count());
  for (std::size_t li = 0; li < layers.size(); ++li) {
    for (Eigen::Index r = 0; r < weight_grads[li].rows(); ++r) {
      for (Eigen::Index c = 0; c < weight_grads[li].cols(); ++c) {
        result.grads.push_back(weight_grads[li](r, c));
      }
    }
    for (Eigen::Index r = 0; r < bias_grads[li].size(); ++r) {
      result.grads.push_back(bias_grads[li](r));
    }
  }
  result.input_grad = std::move(delta);
  return result;
}

DenseNet init_net(const std::vector<LayerSpec>& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  layers.reserve(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const LayerSpec& ls = spec[i];
    if (ls.in <= 0 || ls.out <= 0) {
      throw std::invalid_argument("init_net: layer dimensions must be positive");
    }
    if (i > 0 && spec[i - 1].out != ls.in) {
      throw std::invalid_argument("init_net: layer " + std::to_string(i) +
                                  " input width does not chain");
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(ls.in + ls.out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer;
    layer.weights.resize(ls.out, ls.in);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = dist(rng);
      }
    }
    layer.bias = Eigen::VectorXd::Zero(ls.out);
    layer.activation = ls.activation;
    layer.leaky_slope = ls.leaky_slope;
    layers.push_back(std::move(layer));
  }
  return DenseNet(std::move(layers));
}

GradBundle finite_diff_gradient(const DenseNet& net,
                                const std::function<double(const Eigen::MatrixXd&)>& loss_of_outputs,
                                const Eigen::MatrixXd& batch, double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("finite_diff_gradient: h must be positive");
  }
  DenseNet probe = net;
  ParamBundle params = probe.parameters();
  GradBundle grads(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double original = params[i];
    params[i] = original + h;
    probe.set_parameters(params);
    const double loss_plus = loss_of_outputs(forward(probe, batch));
    params[i] = original - h;
    probe.set_parameters(params);
    const double loss_minus = loss_of_outputs(forward(probe, batch));
    params[i] = original;
    grads[i] = (loss_plus - loss_minus) / (2.0 * h);
  }
  probe.set_parameters(params);
  return grads;
}

}  // namespace gapsched
