#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causalsynth/estimators/regressors.hpp"

namespace causalsynth::estimators {

inline constexpr double kProbabilityClip = 1e-6;

enum class ClassifierFamily {
  logistic_l2,
  logistic_l1,
  logistic_unregularized,
  knn_clf,
  decision_tree_clf,
  gaussian_nb,
  qda,
  oracle,  // a supplied propensity function, nothing is fitted
};

std::string to_string(ClassifierFamily f);
ClassifierFamily classifier_family_from_string(const std::string& s);

// Hyperparameters (defaults in parentheses):
//   logistic_l2     lambda (1): sum of log-losses + lambda/2 ||b||^2
//   logistic_l1     lambda (0.01): mean log-loss + lambda ||b||_1
//   logistic_unregularized: logistic_l2 with lambda 1e-8
//   knn_clf         k (15)
//   decision_tree_clf max_depth (4), min_leaf (5)
//   gaussian_nb     var_smoothing (1e-9), times the largest feature variance
//   qda             reg (1e-6): added to each class covariance diagonal
struct ClassifierSpec {
  ClassifierFamily family = ClassifierFamily::logistic_l2;
  Hyperparameters params;
  bool standardize = true;
  // Required for the oracle family: maps covariate rows to P(T = 1 | W).
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> oracle;

  double param(const std::string& name) const;
  void validate() const;
};

Hyperparameters default_hyperparameters(ClassifierFamily f);

class Classifier {
 public:
  virtual ~Classifier() = default;
  // P(t = 1 | x), clipped to [kProbabilityClip, 1 - kProbabilityClip].
  virtual Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const = 0;
  const std::vector<std::string>& warnings() const { return warnings_; }

 protected:
  std::vector<std::string> warnings_;
};

// t must be 0/1 with both classes present (not checked for the oracle).
std::unique_ptr<Classifier> fit_classifier(const ClassifierSpec& spec, const Eigen::MatrixXd& x,
                                           const Eigen::VectorXd& t);

}  // namespace causalsynth::estimators
