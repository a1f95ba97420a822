#pragma once

#include <string>

#include <Eigen/Dense>

#include "causalsynth/model/dataset.hpp"

namespace causalsynth::model {

enum class ScalingMode { standardize, normalize01 };

std::string to_string(ScalingMode m);
ScalingMode scaling_mode_from_string(const std::string& name);

// x_model = (x - center) / scale for every covariate and the outcome.
struct PreprocessSpec {
  ScalingMode mode = ScalingMode::standardize;
  Eigen::VectorXd w_center;
  Eigen::VectorXd w_scale;
  double y_center = 0.0;
  double y_scale = 1.0;

  void validate() const;
  Eigen::MatrixXd transform_w(const Eigen::MatrixXd& w) const;  // rows are observations
  double transform_y(double y) const { return (y - y_center) / y_scale; }
  double inverse_y(double y) const { return y * y_scale + y_center; }
  bool operator==(const PreprocessSpec&) const = default;
};

// Constant columns get scale 1 so they map to a constant instead of failing.
PreprocessSpec fit_preprocess(const Dataset& data, ScalingMode mode);
// Identity transform for d covariates.
PreprocessSpec identity_preprocess(Eigen::Index d);

}  // namespace causalsynth::model
