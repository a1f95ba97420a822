#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causalsynth/model/dataset.hpp"
#include "causalsynth/model/generative_model.hpp"
#include "causalsynth/stats/two_sample.hpp"

namespace causalsynth::bench {

// Test ids: ks_t, es_t, ks_y, es_y, then {wass1, wass2, fr, knn, energy}
// suffixed with _ty (joint T,Y) or _wty (joint W,T,Y).
std::vector<std::string> all_fidelity_tests();

struct FidelityOptions {
  int permutations = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  Eigen::Index exact_limit = stats::kExactAssignmentLimit;
  std::vector<std::string> tests;  // empty means all
  void validate() const;
};

struct FidelityRow {
  std::string test;
  std::string variables;  // T, Y, (T,Y) or (W,T,Y)
  stats::TestReport report;
};

struct EffectSummary {
  double true_ate = 0.0;
  double model_ate = 0.0;
  double abs_bias = 0.0;
  double pehe = 0.0;
};

struct FidelityReport {
  Eigen::Index sample_size = 0;  // rows per side
  std::vector<FidelityRow> rows;
  std::optional<EffectSummary> effects;
};

// Runs the selected tests on two equally sized joint samples whose columns
// are (W_1..W_d, T, Y).
FidelityReport fidelity_battery(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic, Eigen::Index d,
                                const FidelityOptions& options = {});

// Compares model samples with held-out rows. Model rows take distinct
// covariates from the model's pool (so they are never paired with held-out
// rows); both sides are compared in the model's preprocessed coordinates and
// truncated to a common size. When true_iate is given (one entry per
// held-out row) the effect summary is filled in.
FidelityReport fidelity_report(const model::GenerativeModel& model, const model::Dataset& heldout,
                               const FidelityOptions& options = {},
                               const Eigen::VectorXd* true_iate = nullptr);

// Columns: test,variables,statistic,p_value,method,permutations
std::string fidelity_csv(const FidelityReport& report);
// Columns: true_ate,model_ate,abs_bias,pehe
std::string effects_csv(const EffectSummary& effects);

}  // namespace causalsynth::bench
