#include "causalsynth/nn/adam.hpp"

#include <cmath>

#include "causalsynth/errors.hpp"

namespace causalsynth::nn {

AdamState make_adam_state(const MlpParams& params, const AdamConfig& config) {
  if (!(config.learning_rate > 0.0) || !(config.beta1 > 0.0 && config.beta1 < 1.0) ||
      !(config.beta2 > 0.0 && config.beta2 < 1.0) || !(config.epsilon > 0.0))
    throw ArgumentError("invalid Adam hyperparameters");
  return AdamState{0, zeros_like(params), zeros_like(params), config};
}

void adam_update(AdamState& state, MlpParams& params, const MlpParams& grads) {
  if (grads.layers.size() != params.layers.size() ||
      state.first_moment.layers.size() != params.layers.size())
    throw ShapeError("gradient layer count does not match parameters");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& p = params.layers[l];
    const auto& g = grads.layers[l];
    if (p.weight.rows() != g.weight.rows() || p.weight.cols() != g.weight.cols() ||
        p.bias.size() != g.bias.size())
      throw ShapeError("gradient shape does not match parameters at layer " + std::to_string(l));
  }
  if (!grads.all_finite()) throw TrainingError("non-finite gradient at Adam step " + std::to_string(state.step + 1));

  ++state.step;
  if (grads.all_zero()) return;

  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    param.array() -= c.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + c.epsilon);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight, state.first_moment.layers[l].weight,
           state.second_moment.layers[l].weight, grads.layers[l].weight);
    update(params.layers[l].bias, state.first_moment.layers[l].bias,
           state.second_moment.layers[l].bias, grads.layers[l].bias);
  }
}

AdamResult adam_step(const AdamState& state, const MlpParams& params, const MlpParams& grads) {
  AdamResult r{state, params};
  adam_update(r.state, r.params, grads);
  return r;
}

}  // namespace causalsynth::nn
