#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causalsynth/dist/heads.hpp"
#include "causalsynth/model/dataset.hpp"
#include "causalsynth/model/preprocess.hpp"
#include "causalsynth/nn/mlp.hpp"

namespace causalsynth::model {

struct KnobConfig {
  double positivity_alpha = 1.0;
  double effect_delta = 0.0;
  double heterogeneity_lambda = 1.0;

  bool is_identity() const {
    return positivity_alpha == 1.0 && effect_delta == 0.0 && heterogeneity_lambda == 1.0;
  }
  void validate() const;
  bool operator==(const KnobConfig&) const = default;
};

// Shared representation feeding a treatment net and two outcome nets.
struct Networks {
  nn::MlpSpec shared_spec;
  nn::MlpParams shared;
  nn::MlpSpec treatment_spec;  // output_dim 1: Bernoulli logit
  nn::MlpParams treatment;
  nn::MlpSpec outcome_spec;    // output_dim = family raw_dim
  nn::MlpParams outcome0;
  nn::MlpParams outcome1;

  void validate() const;
  bool operator==(const Networks&) const = default;
};

struct FitMetadata {
  std::uint64_t seed = 0;
  std::string candidate;
  int epochs = 0;
  double validation_log_likelihood = 0.0;
  std::vector<double> validation_trajectory;
  double gate_p_value = -1.0;  // negative when the gate did not run
  bool operator==(const FitMetadata&) const = default;
};

struct GenerativeModel {
  PreprocessSpec preprocess;
  Networks nets;
  dist::OutcomeFamily family;
  std::vector<double> atoms;  // original outcome scale
  std::vector<std::string> covariate_names;
  std::string treatment_name = "t";
  std::string outcome_name = "y";
  Eigen::MatrixXd covariate_pool;  // original scale, resampled by sample()
  KnobConfig knobs;
  double base_ate = 0.0;  // ATE over the covariate pool before knobs
  FitMetadata fit;

  Eigen::Index num_covariates() const { return covariate_pool.cols(); }
  std::vector<double> model_atoms() const;  // atoms on the preprocessed scale
  void validate() const;
};

struct GroundTruth {
  double ate = 0.0;
  Eigen::VectorXd iate;
  Eigen::VectorXd propensity;
  Eigen::VectorXd mu0;
  Eigen::VectorXd mu1;
};

// Network outputs for a block of covariate rows (original scale).
struct HeadOutputs {
  Eigen::VectorXd logit;  // knob-free treatment logit
  Eigen::MatrixXd raw0;   // raw_dim x n
  Eigen::MatrixXd raw1;
};

HeadOutputs forward_heads(const GenerativeModel& model, const Eigen::MatrixXd& w);

double propensity(const GenerativeModel& model, std::span<const double> w_row);
Eigen::VectorXd propensities(const GenerativeModel& model, const Eigen::MatrixXd& w);

// Conditional mean of Y given (t, w) on the original scale, knobs applied.
double mu(const GenerativeModel& model, int t, std::span<const double> w_row);

GroundTruth ground_truth(const GenerativeModel& model, const Eigen::MatrixXd& w);

// Recomputes base_ate from the covariate pool with the current networks.
void refresh_base_ate(GenerativeModel& model);

GenerativeModel apply_knobs(const GenerativeModel& model, const KnobConfig& knobs);

// Ancestral sampling: W from the pool, then T, then Y.
Dataset sample(const GenerativeModel& model, Eigen::Index n, std::uint64_t seed);

// Same, but the n covariate rows are distinct pool rows (n <= pool size).
Dataset sample_distinct(const GenerativeModel& model, Eigen::Index n, std::uint64_t seed);

struct SampleWithTruth {
  Dataset data;
  GroundTruth truth;
};
SampleWithTruth sample_with_truth(const GenerativeModel& model, Eigen::Index n, std::uint64_t seed);

struct TreatmentOutcome {
  Eigen::VectorXd T;
  Eigen::VectorXd Y;
};
// Draws T and Y for the given covariate rows.
TreatmentOutcome sample_conditional(const GenerativeModel& model, const Eigen::MatrixXd& w,
                                    std::uint64_t seed);

}  // namespace causalsynth::model
