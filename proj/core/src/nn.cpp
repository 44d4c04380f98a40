#include "liwuda/nn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "liwuda/error.hpp"

namespace liwuda::nn {
namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kSigmoid:
      return sigmoid(x);
    case Activation::kIdentity:
      return x;
  }
  return x;
}

// Derivative expressed through the pre-activation and the activation output.
double activation_slope(Activation a, double pre, double post) {
  switch (a) {
    case Activation::kRelu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kSigmoid:
      return post * (1.0 - post);
    case Activation::kIdentity:
      return 1.0;
  }
  return 1.0;
}

Matrix affine(const DenseLayer& layer, const Matrix& x) {
  Matrix z = matmul(x, layer.weight);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto r = z.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += layer.bias[j];
  }
  return z;
}

void check_input(const NetworkParams& params, const Matrix& batch) {
  if (params.layers.empty()) throw ShapeError("network has no layers");
  if (batch.cols() != params.input_dim()) {
    std::ostringstream msg;
    msg << "batch has " << batch.cols() << " columns, network expects " << params.input_dim();
    throw ShapeError(msg.str());
  }
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "identity") return Activation::kIdentity;
  throw InputError("unknown activation '" + std::string(name) + "'");
}

std::size_t NetworkParams::input_dim() const {
  return layers.empty() ? 0 : layers.front().in_dim();
}

std::size_t NetworkParams::output_dim() const {
  return layers.empty() ? 0 : layers.back().out_dim();
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

bool NetworkParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.all_finite()) return false;
    if (!std::all_of(l.bias.begin(), l.bias.end(), [](double b) { return std::isfinite(b); }))
      return false;
  }
  return true;
}

void NetworkParams::validate() const {
  if (layers.empty()) throw ShapeError("network has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.bias.size() != l.out_dim()) throw ShapeError("bias length differs from layer width");
    if (k > 0 && layers[k - 1].out_dim() != l.in_dim())
      throw ShapeError("layer " + std::to_string(k) + " input does not match previous output");
  }
}

NetworkParams make_network(std::size_t input_dim, std::span<const LayerSpec> specs, Rng& rng) {
  NetworkParams params;
  std::size_t fan_in = input_dim;
  for (const auto& spec : specs) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + spec.out_dim));
    std::uniform_real_distribution<double> dist(-s, s);
    DenseLayer layer{Matrix(fan_in, spec.out_dim), std::vector<double>(spec.out_dim, 0.0),
                     spec.activation};
    for (double& w : layer.weight.values()) w = dist(rng);
    params.layers.push_back(std::move(layer));
    fan_in = spec.out_dim;
  }
  return params;
}

ForwardResult forward(const NetworkParams& params, const Matrix& batch) {
  check_input(params, batch);
  ForwardResult result;
  result.trace.input = batch;
  const Matrix* x = &batch;
  for (const auto& layer : params.layers) {
    Matrix z = affine(layer, *x);
    Matrix a = z;
    for (double& v : a.values()) v = activate(layer.activation, v);
    result.trace.pre.push_back(std::move(z));
    result.trace.post.push_back(std::move(a));
    x = &result.trace.post.back();
  }
  result.output = result.trace.post.back();
  return result;
}

Matrix predict(const NetworkParams& params, const Matrix& batch) {
  check_input(params, batch);
  Matrix x = batch;
  for (const auto& layer : params.layers) {
    x = affine(layer, x);
    for (double& v : x.values()) v = activate(layer.activation, v);
  }
  return x;
}

ParamGrads ParamGrads::zeros_like(const NetworkParams& params) {
  ParamGrads g;
  for (const auto& l : params.layers)
    g.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()),
                        std::vector<double>(l.bias.size(), 0.0)});
  return g;
}

void ParamGrads::accumulate(const ParamGrads& other) {
  if (other.layers.size() != layers.size()) throw ShapeError("gradient layer counts differ");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    axpy(1.0, other.layers[k].weight, layers[k].weight);
    if (other.layers[k].bias.size() != layers[k].bias.size())
      throw ShapeError("gradient bias lengths differ");
    for (std::size_t j = 0; j < layers[k].bias.size(); ++j)
      layers[k].bias[j] += other.layers[k].bias[j];
  }
}

BackwardResult backward(const NetworkParams& params, const ForwardTrace& trace,
                        const Matrix& output_grad) {
  const std::size_t depth = params.layers.size();
  if (trace.pre.size() != depth || trace.post.size() != depth)
    throw ShapeError("trace does not match network depth");
  require_same_shape(trace.post.back(), output_grad, "backward output_grad");

  BackwardResult result;
  result.params.layers.resize(depth);
  Matrix delta = output_grad;
  for (std::size_t k = depth; k-- > 0;) {
    const auto& layer = params.layers[k];
    const Matrix& pre = trace.pre[k];
    const Matrix& post = trace.post[k];
    {
      auto d = delta.values();
      auto z = pre.values();
      auto a = post.values();
      for (std::size_t e = 0; e < d.size(); ++e) d[e] *= activation_slope(layer.activation, z[e], a[e]);
    }
    const Matrix& input = k == 0 ? trace.input : trace.post[k - 1];
    auto& g = result.params.layers[k];
    g.weight = matmul_tn(input, delta);
    g.bias.assign(layer.out_dim(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      auto r = delta.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) g.bias[j] += r[j];
    }
    delta = matmul_nt(delta, layer.weight);
  }
  result.input_grad = std::move(delta);
  return result;
}

CrossEntropyResult cross_entropy_loss(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw ShapeError("label count differs from batch size");
  if (logits.rows() == 0) throw InputError("cross-entropy of an empty batch");
  CrossEntropyResult result;
  result.logit_grad = Matrix(logits.rows(), logits.cols());
  const double inv_n = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols())
      throw InputError("label " + std::to_string(y) + " outside [0, " +
                       std::to_string(logits.cols()) + ")");
    auto z = logits.row(i);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double log_norm = zmax + std::log(sum);
    result.loss += (log_norm - z[static_cast<std::size_t>(y)]) * inv_n;
    auto g = result.logit_grad.row(i);
    for (std::size_t j = 0; j < z.size(); ++j) g[j] = std::exp(z[j] - log_norm) * inv_n;
    g[static_cast<std::size_t>(y)] -= inv_n;
  }
  return result;
}

OptimizerState OptimizerState::for_params(const NetworkParams& params, double learning_rate,
                                          double momentum, double weight_decay) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (momentum < 0.0 || weight_decay < 0.0)
    throw ConfigError("momentum and weight decay must be non-negative");
  OptimizerState state;
  state.velocity = ParamGrads::zeros_like(params).layers;
  state.learning_rate = learning_rate;
  state.momentum = momentum;
  state.weight_decay = weight_decay;
  return state;
}

void sgd_step(NetworkParams& params, const ParamGrads& grads, OptimizerState& state) {
  const std::size_t depth = params.layers.size();
  if (grads.layers.size() != depth || state.velocity.size() != depth)
    throw ShapeError("sgd_step: layer counts differ");
  for (std::size_t k = 0; k < depth; ++k) {
    auto& layer = params.layers[k];
    auto& v = state.velocity[k];
    const auto& g = grads.layers[k];
    require_same_shape(layer.weight, g.weight, "sgd_step weight");
    require_same_shape(layer.weight, v.weight, "sgd_step velocity");
    if (g.bias.size() != layer.bias.size() || v.bias.size() != layer.bias.size())
      throw ShapeError("sgd_step: bias lengths differ");

    auto w = layer.weight.values();
    auto vw = v.weight.values();
    auto gw = g.weight.values();
    for (std::size_t e = 0; e < w.size(); ++e) {
      vw[e] = state.momentum * vw[e] + gw[e] + state.weight_decay * w[e];
      w[e] -= state.learning_rate * vw[e];
    }
    for (std::size_t e = 0; e < layer.bias.size(); ++e) {
      v.bias[e] = state.momentum * v.bias[e] + g.bias[e] + state.weight_decay * layer.bias[e];
      layer.bias[e] -= state.learning_rate * v.bias[e];
    }
  }
}

bool Model::all_finite() const {
  return feature.all_finite() && classifier.all_finite() && weight.all_finite();
}

Model make_model(const ModelShape& shape, Rng& rng) {
  if (shape.input_dim == 0 || shape.hidden_width == 0 || shape.feature_dim == 0 ||
      shape.num_classes == 0)
    throw ConfigError("model dimensions must be positive");
  const LayerSpec feature_layers[] = {{shape.hidden_width, Activation::kRelu},
                                      {shape.hidden_width, Activation::kRelu},
                                      {shape.feature_dim, Activation::kIdentity}};
  const LayerSpec classifier_layers[] = {{shape.num_classes, Activation::kIdentity}};
  const LayerSpec weight_layers[] = {{1, Activation::kSigmoid}};
  Model model;
  model.feature = make_network(shape.input_dim, feature_layers, rng);
  model.classifier = make_network(shape.feature_dim, classifier_layers, rng);
  model.weight = make_network(shape.feature_dim, weight_layers, rng);
  return model;
}

}  // namespace liwuda::nn
