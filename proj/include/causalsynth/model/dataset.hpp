#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace causalsynth::model {

struct Dataset {
  Eigen::MatrixXd W;  // n x d
  Eigen::VectorXd T;  // 0/1
  Eigen::VectorXd Y;
  std::vector<double> atoms;  // outcome values with point mass, original scale
  std::vector<std::string> covariate_names;
  std::string treatment_name = "t";
  std::string outcome_name = "y";

  Eigen::Index size() const { return W.rows(); }
  Eigen::Index num_covariates() const { return W.cols(); }
  // Throws ShapeError / ArgumentError on violated invariants.
  void validate() const;
  // Rows in the given order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

// Default names w1..wd when none are given.
std::vector<std::string> default_covariate_names(Eigen::Index d);

}  // namespace causalsynth::model
