#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace causalsynth::estimators {

using Hyperparameters = std::map<std::string, double>;

enum class RegressorFamily {
  ols,
  ols_interact,  // ols; the COM estimator appends T x W columns
  ols_poly2,
  ols_poly3,
  lasso,
  ridge,
  elastic_net,
  kernel_ridge_rbf,
  knn_reg,
  decision_tree_reg,
};

std::string to_string(RegressorFamily f);
RegressorFamily regressor_family_from_string(const std::string& s);
std::vector<RegressorFamily> all_regressor_families();

// Hyperparameters (defaults in parentheses):
//   ridge           alpha (1): ||y - Xb||^2 + alpha ||b||^2
//   lasso           alpha (0.01): ||y - Xb||^2 / 2n + alpha ||b||_1
//   elastic_net     alpha (0.01), l1_ratio (0.5)
//   kernel_ridge_rbf alpha (1), gamma (1 / columns)
//   knn_reg         k (5)
//   decision_tree_reg max_depth (6), min_leaf (5)
// The intercept is never penalized.
struct RegressorSpec {
  RegressorFamily family = RegressorFamily::ols;
  Hyperparameters params;
  bool standardize = true;  // with training statistics only

  double param(const std::string& name) const;  // explicit value or default
  void validate() const;
};

// Default value of every hyperparameter the family reads.
Hyperparameters default_hyperparameters(RegressorFamily f);

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& x) const = 0;
  const std::vector<std::string>& warnings() const { return warnings_; }

 protected:
  std::vector<std::string> warnings_;
};

std::unique_ptr<Regressor> fit_regressor(const RegressorSpec& spec, const Eigen::MatrixXd& x,
                                         const Eigen::VectorXd& y);

// All monomials of degree 1..degree in the columns of x, in graded
// lexicographic order.
Eigen::MatrixXd polynomial_features(const Eigen::MatrixXd& x, int degree);

}  // namespace causalsynth::estimators
