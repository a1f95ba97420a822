#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "causalsynth/dist/heads.hpp"
#include "causalsynth/errors.hpp"
#include "causalsynth/model/dataset.hpp"
#include "causalsynth/model/generative_model.hpp"
#include "causalsynth/nn/mlp.hpp"

namespace causalsynth::model {

struct Candidate {
  int hidden_layers = 1;  // 0 gives fully linear networks
  int width = 64;
  nn::Activation activation = nn::Activation::relu;
  std::string name() const;
  bool operator==(const Candidate&) const = default;
};

std::vector<Candidate> default_grid();

struct SplitFractions {
  double train = 0.5;
  double validation = 0.1;
  double test = 0.4;
  void validate() const;
};

struct FitConfig {
  SplitFractions split;
  dist::OutcomeFamily family;  // num_atoms is overwritten from the atoms used
  bool use_atoms = true;       // false ignores atoms entirely
  bool detect_atoms = true;    // used when the dataset lists no atoms
  std::vector<Candidate> grid = default_grid();
  ScalingMode scaling = ScalingMode::standardize;
  int max_epochs = 300;
  int patience = 10;
  int batch_size = 128;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double gate_alpha = 0.05;  // 0 disables the gate
  int gate_permutations = 200;

  void validate() const;
};

// Linear networks with a Gaussian outcome head, no atoms and no gate.
FitConfig linear_gaussian_config(std::uint64_t seed);

struct DataSplit {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> validation;
  std::vector<Eigen::Index> test;
};

DataSplit split_rows(Eigen::Index n, const SplitFractions& f, std::uint64_t seed);

struct CandidateResult {
  Candidate candidate;
  std::vector<double> validation_trajectory;
  double best_validation_log_likelihood = 0.0;
  int epochs = 0;
  double gate_p_value = -1.0;
  bool passed_gate = false;
  std::string failure;  // non-empty when training failed
};

struct FitResult {
  GenerativeModel model;
  DataSplit split;
  std::vector<CandidateResult> candidates;
};

class NoRealisticModelError : public Error {
 public:
  NoRealisticModelError(std::shared_ptr<const GenerativeModel> best, std::vector<CandidateResult> results);
  const GenerativeModel& best_model() const { return *best_; }
  const std::vector<CandidateResult>& candidates() const { return results_; }

 private:
  std::shared_ptr<const GenerativeModel> best_;
  std::vector<CandidateResult> results_;
};

// Grid search; the winner has the highest validation log-likelihood among
// candidates whose realism-gate p-value exceeds gate_alpha.
FitResult fit_model(const Dataset& data, const FitConfig& config);
GenerativeModel fit(const Dataset& data, const FitConfig& config);

// Mean per-row log p(T|W) + log p(Y|T,W) on the preprocessed scale.
double mean_log_likelihood(const GenerativeModel& model, const Dataset& data);

}  // namespace causalsynth::model
