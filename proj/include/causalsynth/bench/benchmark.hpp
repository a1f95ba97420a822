#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "causalsynth/estimators/estimators.hpp"
#include "causalsynth/model/generative_model.hpp"

namespace causalsynth::bench {

// A caller-supplied estimator, reported under its name after the id-based ones.
struct CustomEstimator {
  std::string name;
  std::function<estimators::EstimatorResult(const model::Dataset&)> run;
};

struct BenchmarkConfig {
  int replications = 100;
  Eigen::Index samples = 1000;  // rows per replication
  std::vector<std::string> estimators;  // estimator ids
  std::vector<CustomEstimator> custom;
  std::uint64_t base_seed = 0;
  std::shared_ptr<const model::GenerativeModel> model;
  int threads = 1;

  void validate() const;
};

struct MetricRow {
  std::string estimator;
  // Over successful replications of the errors tau_hat_i - tau_i, with the
  // population standard deviation, so rmse^2 = bias^2 + std^2.
  double bias = 0.0;
  double abs_bias = 0.0;
  double std = 0.0;
  double rmse = 0.0;
  std::optional<double> mean_pehe;  // absent for estimators without IATEs
  int failures = 0;
  std::vector<std::string> failure_messages;  // first message per distinct text
};

// Replication i samples data with seed base_seed + i, takes the truth from the
// model on that sample's covariate rows, and runs every estimator on it.
// "ipw/oracle" uses the model's own propensity. Estimator failures are
// counted and excluded; they never abort the run.
std::vector<MetricRow> run_benchmark(const BenchmarkConfig& config);

// Columns: estimator,bias,abs_bias,std,rmse,mean_pehe,n_failures after one
// '#' comment line naming the std convention.
std::string benchmark_csv(const std::vector<MetricRow>& rows);

}  // namespace causalsynth::bench
