#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causalsynth/estimators/classifiers.hpp"
#include "causalsynth/estimators/regressors.hpp"
#include "causalsynth/model/dataset.hpp"

namespace causalsynth::estimators {

enum class EstimatorFamily { com, gcom, xlearner, ipw };

std::string to_string(EstimatorFamily f);

struct EstimatorSpec {
  EstimatorFamily family = EstimatorFamily::com;
  RegressorSpec outcome;       // com, gcom, xlearner (both stages)
  ClassifierSpec propensity;   // ipw, xlearner
  // Sweep the family's main hyperparameter when it was not given explicitly.
  bool tune = true;
  bool trim = false;
  double trim_low = 0.01;
  double trim_high = 0.99;
  bool stabilized = false;
  // Debug hook: replaces the x-learner weight e(w) by a constant.
  std::optional<double> xlearner_weight;

  void validate() const;
};

struct EstimatorResult {
  double ate_hat = 0.0;
  std::optional<Eigen::VectorXd> iate_hat;  // absent for ipw
  Eigen::Index trimmed = 0;
  std::vector<std::string> diagnostics;
};

EstimatorResult com_estimate(const EstimatorSpec& spec, const model::Dataset& data);
EstimatorResult gcom_estimate(const EstimatorSpec& spec, const model::Dataset& data);
EstimatorResult xlearner_estimate(const EstimatorSpec& spec, const model::Dataset& data);
EstimatorResult ipw_estimate(const EstimatorSpec& spec, const model::Dataset& data);
// Dispatches on spec.family.
EstimatorResult estimate(const EstimatorSpec& spec, const model::Dataset& data);

// Identifiers look like "com/ridge", "gcom/ols_poly2?alpha=0.1",
// "xlearner/ridge?propensity=logistic_l1" or
// "ipw/logistic_l2?trim=true&stabilized=true". Query keys other than
// propensity, tune, trim, trim_low, trim_high, stabilized and standardize are
// hyperparameters of the named model. "ipw/oracle" needs its oracle function
// attached by the caller.
EstimatorSpec parse_estimator_id(const std::string& id);

// Ten log-spaced (or integer) candidate values for the swept hyperparameter;
// empty name when the family has nothing to sweep.
struct Sweep {
  std::string name;
  std::vector<double> values;
};
Sweep hyperparameter_sweep(RegressorFamily f);
Sweep hyperparameter_sweep(ClassifierFamily f);

// Picks the sweep value with the lowest held-out loss (squared error or
// log-loss) on a split of rows by content hash (about 20% held out), then
// returns the spec with that value set. Specs that already set the swept
// hyperparameter are returned unchanged.
RegressorSpec tune_regressor(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
ClassifierSpec tune_classifier(const ClassifierSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& t);

}  // namespace causalsynth::estimators
