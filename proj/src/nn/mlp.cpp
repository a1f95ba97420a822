#include "causalsynth/nn/mlp.hpp"

#include <cmath>

#include "causalsynth/errors.hpp"

namespace causalsynth::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::elu: return "elu";
  }
  return "relu";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "elu") return Activation::elu;
  throw ArgumentError("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (layer_widths.empty()) throw ShapeError("MlpSpec needs at least one layer width");
  for (int w : layer_widths)
    if (w < 1) throw ShapeError("MlpSpec layer widths must be positive");
  if (output_dim < 1) throw ShapeError("MlpSpec output_dim must be positive");
}

std::size_t MlpParams::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool MlpParams::all_finite() const {
  for (const auto& l : layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

bool MlpParams::all_zero() const {
  for (const auto& l : layers)
    if (!l.weight.isZero(0.0) || !l.bias.isZero(0.0)) return false;
  return true;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias(r));
  }
  return flat;
}

void MlpParams::unflatten(std::span<const double> flat) {
  if (flat.size() != size()) throw ShapeError("flat parameter vector has wrong length");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[k++];
  }
}

bool MlpParams::operator==(const MlpParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols()) return false;
    if (a.weight != b.weight || a.bias != b.bias) return false;
  }
  return true;
}

MlpParams zeros_like(const MlpSpec& spec) {
  spec.validate();
  MlpParams p;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.layer_widths[l];
    const int out = l + 1 < spec.num_layers() ? spec.layer_widths[l + 1] : spec.output_dim;
    p.layers.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
  return p;
}

MlpParams zeros_like(const MlpParams& params) {
  MlpParams p;
  for (const auto& l : params.layers)
    p.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  return p;
}

MlpParams init_params(const MlpSpec& spec, Rng& rng) {
  MlpParams p = zeros_like(spec);
  for (auto& l : p.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        l.weight(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
  }
  return p;
}

void check_shapes(const MlpSpec& spec, const MlpParams& params) {
  spec.validate();
  if (params.layers.size() != spec.num_layers())
    throw ShapeError("parameter layer count does not match MlpSpec");
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.layer_widths[l];
    const int out = l + 1 < spec.num_layers() ? spec.layer_widths[l + 1] : spec.output_dim;
    const auto& layer = params.layers[l];
    if (layer.weight.rows() != out || layer.weight.cols() != in || layer.bias.size() != out)
      throw ShapeError("layer " + std::to_string(l) + " parameters do not match MlpSpec");
  }
}

namespace {

void activate(Activation a, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
  switch (a) {
    case Activation::relu: out = z.cwiseMax(0.0); break;
    case Activation::tanh: out = z.array().tanh().matrix(); break;
    case Activation::elu:
      out = z.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
      break;
  }
}

// Multiplies grad in place by the activation derivative evaluated at z.
void activation_backward(Activation a, const Eigen::MatrixXd& z, Eigen::MatrixXd& grad) {
  switch (a) {
    case Activation::relu:
      grad = grad.cwiseProduct(z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
      break;
    case Activation::tanh:
      grad = grad.cwiseProduct(z.unaryExpr([](double v) {
        const double t = std::tanh(v);
        return 1.0 - t * t;
      }));
      break;
    case Activation::elu:
      grad = grad.cwiseProduct(z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); }));
      break;
  }
}

Eigen::MatrixXd as_column(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

BatchCache forward_batch(const MlpSpec& spec, const MlpParams& params,
                         const Eigen::MatrixXd& input) {
  check_shapes(spec, params);
  if (input.rows() != spec.input_dim())
    throw ShapeError("input width " + std::to_string(input.rows()) + " does not match first layer width " +
                     std::to_string(spec.input_dim()));
  BatchCache cache;
  const std::size_t L = params.layers.size();
  cache.inputs.reserve(L);
  cache.pre.reserve(L);
  Eigen::MatrixXd a = input;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    cache.inputs.push_back(std::move(a));
    if (l + 1 < L) {
      activate(spec.activation, z, a);
    } else {
      a = z;
    }
    cache.pre.push_back(std::move(z));
  }
  cache.output = std::move(a);
  return cache;
}

Eigen::MatrixXd predict_batch(const MlpSpec& spec, const MlpParams& params,
                              const Eigen::MatrixXd& input) {
  check_shapes(spec, params);
  if (input.rows() != spec.input_dim()) throw ShapeError("input width does not match first layer width");
  Eigen::MatrixXd a = input;
  const std::size_t L = params.layers.size();
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = params.layers[l].weight * a;
    z.colwise() += params.layers[l].bias;
    if (l + 1 < L)
      activate(spec.activation, z, a);
    else
      a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd backward_batch(const MlpSpec& spec, const MlpParams& params,
                               const BatchCache& cache, const Eigen::MatrixXd& upstream,
                               MlpParams& grads) {
  if (upstream.rows() != spec.output_dim || upstream.cols() != cache.output.cols())
    throw ShapeError("upstream gradient shape does not match network output");
  if (grads.layers.size() != params.layers.size()) grads = zeros_like(params);
  Eigen::MatrixXd g = upstream;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    if (l + 1 < params.layers.size()) activation_backward(spec.activation, cache.pre[l], g);
    grads.layers[l].weight.noalias() += g * cache.inputs[l].transpose();
    grads.layers[l].bias += g.rowwise().sum();
    g = params.layers[l].weight.transpose() * g;
  }
  return g;
}

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const MlpParams& params,
                            std::span<const double> input) {
  if (static_cast<int>(input.size()) != spec.input_dim())
    throw ShapeError("input length " + std::to_string(input.size()) +
                     " does not match first layer width " + std::to_string(spec.input_dim()));
  return predict_batch(spec, params, as_column(input)).col(0);
}

MlpParams mlp_backward(const MlpSpec& spec, const MlpParams& params,
                       std::span<const double> input, std::span<const double> upstream) {
  if (static_cast<int>(input.size()) != spec.input_dim())
    throw ShapeError("input length does not match first layer width");
  if (static_cast<int>(upstream.size()) != spec.output_dim)
    throw ShapeError("upstream gradient length does not match output_dim");
  const BatchCache cache = forward_batch(spec, params, as_column(input));
  MlpParams grads = zeros_like(params);
  backward_batch(spec, params, cache, as_column(upstream), grads);
  return grads;
}

}  // namespace causalsynth::nn
