#include "causalsynth/model/preprocess.hpp"

#include <cmath>

#include "causalsynth/errors.hpp"

namespace causalsynth::model {

std::string to_string(ScalingMode m) { return m == ScalingMode::standardize ? "standardize" : "normalize01"; }

ScalingMode scaling_mode_from_string(const std::string& name) {
  if (name == "standardize") return ScalingMode::standardize;
  if (name == "normalize01" || name == "normalize") return ScalingMode::normalize01;
  throw ArgumentError("unknown scaling mode '" + name + "'");
}

void PreprocessSpec::validate() const {
  if (w_center.size() != w_scale.size()) throw ShapeError("preprocess centers and scales differ in length");
  if (!w_center.allFinite() || !std::isfinite(y_center)) throw ArgumentError("preprocess centers must be finite");
  for (Eigen::Index j = 0; j < w_scale.size(); ++j)
    if (!(w_scale(j) > 0.0) || !std::isfinite(w_scale(j))) throw ArgumentError("preprocess scales must be positive");
  if (!(y_scale > 0.0) || !std::isfinite(y_scale)) throw ArgumentError("preprocess scales must be positive");
}

Eigen::MatrixXd PreprocessSpec::transform_w(const Eigen::MatrixXd& w) const {
  if (w.cols() != w_center.size())
    throw ShapeError("covariate rows have " + std::to_string(w.cols()) + " columns, model expects " +
                     std::to_string(w_center.size()));
  Eigen::MatrixXd out = w;
  for (Eigen::Index j = 0; j < w.cols(); ++j) out.col(j) = (w.col(j).array() - w_center(j)) / w_scale(j);
  return out;
}

namespace {

std::pair<double, double> column_stats(const Eigen::VectorXd& v, ScalingMode mode) {
  double center, scale;
  if (mode == ScalingMode::standardize) {
    center = v.mean();
    scale = std::sqrt((v.array() - center).square().mean());
  } else {
    center = v.minCoeff();
    scale = v.maxCoeff() - center;
  }
  if (!(scale > 0.0)) scale = 1.0;
  return {center, scale};
}

}  // namespace

PreprocessSpec fit_preprocess(const Dataset& data, ScalingMode mode) {
  PreprocessSpec p;
  p.mode = mode;
  const Eigen::Index d = data.W.cols();
  p.w_center.resize(d);
  p.w_scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto [c, s] = column_stats(data.W.col(j), mode);
    p.w_center(j) = c;
    p.w_scale(j) = s;
  }
  const auto [c, s] = column_stats(data.Y, mode);
  p.y_center = c;
  p.y_scale = s;
  return p;
}

PreprocessSpec identity_preprocess(Eigen::Index d) {
  PreprocessSpec p;
  p.w_center = Eigen::VectorXd::Zero(d);
  p.w_scale = Eigen::VectorXd::Ones(d);
  return p;
}

}  // namespace causalsynth::model
