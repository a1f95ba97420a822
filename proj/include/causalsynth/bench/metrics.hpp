#pragma once

#include <span>

namespace causalsynth::bench {

// Root mean squared difference between estimated and true individual effects.
double pehe(std::span<const double> iate_hat, std::span<const double> iate_true);

struct AteMetrics {
  double bias = 0.0;      // mean(estimate - truth)
  double abs_bias = 0.0;  // |bias|
  double std = 0.0;       // population std of the estimates
  double rmse = 0.0;      // sqrt(mean((estimate - truth)^2))
};

AteMetrics ate_metrics(std::span<const double> estimates, std::span<const double> truths);

}  // namespace causalsynth::bench
