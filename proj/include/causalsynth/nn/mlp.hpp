#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causalsynth/random.hpp"

namespace causalsynth::nn {

enum class Activation { relu, tanh, elu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// layer_widths[0] is the input width; every further entry is a hidden layer
// followed by the activation. The final affine layer maps to output_dim and
// is left linear.
struct MlpSpec {
  std::vector<int> layer_widths;
  Activation activation = Activation::relu;
  int output_dim = 1;

  int input_dim() const { return layer_widths.front(); }
  std::size_t num_layers() const { return layer_widths.size(); }
  void validate() const;
  bool operator==(const MlpSpec&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Also used as the container for gradients, which share the parameter shape.
struct MlpParams {
  std::vector<DenseLayer> layers;

  std::size_t size() const;
  bool all_finite() const;
  bool all_zero() const;
  // Row-major flattening, layer by layer: weights then bias.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
  bool operator==(const MlpParams& other) const;
};

MlpParams zeros_like(const MlpSpec& spec);
MlpParams zeros_like(const MlpParams& params);

// Glorot-uniform weights, zero biases.
MlpParams init_params(const MlpSpec& spec, Rng& rng);

void check_shapes(const MlpSpec& spec, const MlpParams& params);

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const MlpParams& params,
                            std::span<const double> input);

// Gradient of dot(output, upstream) with respect to every parameter.
MlpParams mlp_backward(const MlpSpec& spec, const MlpParams& params,
                       std::span<const double> input,
                       std::span<const double> upstream);

// Batched evaluation: columns are samples. The cache keeps what backward
// needs so a training step runs forward once.
struct BatchCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to layer l
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of layer l
  Eigen::MatrixXd output;
};

BatchCache forward_batch(const MlpSpec& spec, const MlpParams& params,
                         const Eigen::MatrixXd& input);

Eigen::MatrixXd predict_batch(const MlpSpec& spec, const MlpParams& params,
                              const Eigen::MatrixXd& input);

// Accumulates the batch-summed parameter gradient into grads and returns the
// gradient with respect to the batch input.
Eigen::MatrixXd backward_batch(const MlpSpec& spec, const MlpParams& params,
                               const BatchCache& cache,
                               const Eigen::MatrixXd& upstream, MlpParams& grads);

}  // namespace causalsynth::nn
