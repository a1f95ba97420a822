#include "causalsynth/model/dataset.hpp"

#include <cmath>

#include "causalsynth/errors.hpp"

namespace causalsynth::model {

void Dataset::validate() const {
  const Eigen::Index n = W.rows();
  if (T.size() != n || Y.size() != n)
    throw ShapeError("dataset columns have different lengths (W " + std::to_string(n) + ", T " +
                     std::to_string(T.size()) + ", Y " + std::to_string(Y.size()) + ")");
  if (n < 2) throw ArgumentError("dataset needs at least two rows");
  if (!covariate_names.empty() && static_cast<Eigen::Index>(covariate_names.size()) != W.cols())
    throw ShapeError("covariate name count does not match covariate columns");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < W.cols(); ++j)
      if (!std::isfinite(W(i, j)))
        throw ArgumentError("missing or non-finite covariate at row " + std::to_string(i) + ", column " +
                            std::to_string(j));
    if (T(i) != 0.0 && T(i) != 1.0) throw ArgumentError("treatment at row " + std::to_string(i) + " is not 0 or 1");
    if (!std::isfinite(Y(i))) throw ArgumentError("missing or non-finite outcome at row " + std::to_string(i));
  }
  const double treated = T.sum();
  if (treated == 0.0 || treated == static_cast<double>(n))
    throw ArgumentError("dataset needs both treated and control rows");
  for (double a : atoms)
    if (!std::isfinite(a)) throw ArgumentError("atom values must be finite");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.W = W(rows, Eigen::all);
  out.T = T(rows);
  out.Y = Y(rows);
  out.atoms = atoms;
  out.covariate_names = covariate_names;
  out.treatment_name = treatment_name;
  out.outcome_name = outcome_name;
  return out;
}

std::vector<std::string> default_covariate_names(Eigen::Index d) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < d; ++j) names.push_back("w" + std::to_string(j + 1));
  return names;
}

}  // namespace causalsynth::model
