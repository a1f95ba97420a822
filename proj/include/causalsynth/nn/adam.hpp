#pragma once

#include <cstdint>

#include "causalsynth/nn/mlp.hpp"

namespace causalsynth::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::int64_t step = 0;
  MlpParams first_moment;
  MlpParams second_moment;
  AdamConfig config;
};

AdamState make_adam_state(const MlpParams& params, const AdamConfig& config = {});

struct AdamResult {
  AdamState state;
  MlpParams params;
};

// Gradient-descent step on params (callers pass the gradient of the loss,
// i.e. the negative log-likelihood). Throws TrainingError on non-finite
// gradients. An all-zero gradient leaves params and moments untouched and
// only advances the step counter.
AdamResult adam_step(const AdamState& state, const MlpParams& params,
                     const MlpParams& grads);

// In-place variant used by the training loop.
void adam_update(AdamState& state, MlpParams& params, const MlpParams& grads);

}  // namespace causalsynth::nn
