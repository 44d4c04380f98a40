#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "liwuda/matrix.hpp"

namespace liwuda::nn {

using Rng = std::mt19937_64;

enum class Activation { kRelu, kSigmoid, kIdentity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

// y = act(x * weight + bias), with weight stored as (in x out).
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct NetworkParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
  // Throws ShapeError when consecutive layer dimensions do not chain.
  void validate() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

struct LayerSpec {
  std::size_t out_dim;
  Activation activation;
};

// Glorot-uniform weights, zero biases.
NetworkParams make_network(std::size_t input_dim, std::span<const LayerSpec> layers, Rng& rng);

// Intermediates for one mini-batch; pre[k] / post[k] are layer k's input to and
// output from its activation.
struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

struct ForwardResult {
  Matrix output;
  ForwardTrace trace;
};

ForwardResult forward(const NetworkParams& params, const Matrix& batch);
// Same as forward() without retaining the trace.
Matrix predict(const NetworkParams& params, const Matrix& batch);

struct LayerGrad {
  Matrix weight;
  std::vector<double> bias;
};

// One entry per layer, shaped like the parameters.
struct ParamGrads {
  std::vector<LayerGrad> layers;

  static ParamGrads zeros_like(const NetworkParams& params);
  void accumulate(const ParamGrads& other);
};

struct BackwardResult {
  ParamGrads params;
  Matrix input_grad;
};

BackwardResult backward(const NetworkParams& params, const ForwardTrace& trace,
                        const Matrix& output_grad);

struct CrossEntropyResult {
  double loss = 0.0;
  Matrix logit_grad;
};

// Mean softmax cross-entropy over the batch.
CrossEntropyResult cross_entropy_loss(const Matrix& logits, std::span<const int> labels);

struct OptimizerState {
  std::vector<LayerGrad> velocity;
  double learning_rate = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.005;

  static OptimizerState for_params(const NetworkParams& params, double learning_rate,
                                   double momentum, double weight_decay);
};

// v <- momentum * v + grad + weight_decay * param;  param <- param - lr * v
void sgd_step(NetworkParams& params, const ParamGrads& grads, OptimizerState& state);

// The three sub-networks: feature extractor, classifier, weight network.
struct Model {
  NetworkParams feature;
  NetworkParams classifier;
  NetworkParams weight;

  std::size_t input_dim() const { return feature.input_dim(); }
  std::size_t num_classes() const { return classifier.output_dim(); }
  bool all_finite() const;

  friend bool operator==(const Model&, const Model&) = default;
};

struct ModelShape {
  std::size_t input_dim = 8;
  std::size_t hidden_width = 64;
  std::size_t feature_dim = 16;
  std::size_t num_classes = 2;
};

// Two rectifier hidden layers then a linear feature layer; linear classifier;
// linear + sigmoid weight head.
Model make_model(const ModelShape& shape, Rng& rng);

}  // namespace liwuda::nn
