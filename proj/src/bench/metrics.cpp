#include "causalsynth/bench/metrics.hpp"

#include <cmath>
#include <string>

#include "causalsynth/errors.hpp"

namespace causalsynth::bench {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ShapeError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  if (a == 0) throw ShapeError("vectors must be non-empty");
}

}  // namespace

double pehe(std::span<const double> iate_hat, std::span<const double> iate_true) {
  check_lengths(iate_hat.size(), iate_true.size());
  double s = 0.0;
  for (std::size_t i = 0; i < iate_hat.size(); ++i) {
    const double d = iate_hat[i] - iate_true[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(iate_hat.size()));
}

AteMetrics ate_metrics(std::span<const double> estimates, std::span<const double> truths) {
  check_lengths(estimates.size(), truths.size());
  const auto n = static_cast<double>(estimates.size());
  double err = 0.0, sq = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = estimates[i] - truths[i];
    err += e;
    sq += e * e;
    mean += estimates[i];
  }
  mean /= n;
  double var = 0.0;
  for (double v : estimates) var += (v - mean) * (v - mean);
  AteMetrics m;
  m.bias = err / n;
  m.abs_bias = std::abs(m.bias);
  m.std = std::sqrt(var / n);
  m.rmse = std::sqrt(sq / n);
  return m;
}

}  // namespace causalsynth::bench
