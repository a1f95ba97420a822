#include "causalsynth/estimators/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "causalsynth/errors.hpp"
#include "common.hpp"

namespace causalsynth::estimators {

namespace {

using detail::Standardizer;

struct FamilyName {
  RegressorFamily family;
  const char* name;
};
constexpr FamilyName kNames[] = {
    {RegressorFamily::ols, "ols"},
    {RegressorFamily::ols_interact, "ols_interact"},
    {RegressorFamily::ols_poly2, "ols_poly2"},
    {RegressorFamily::ols_poly3, "ols_poly3"},
    {RegressorFamily::lasso, "lasso"},
    {RegressorFamily::ridge, "ridge"},
    {RegressorFamily::elastic_net, "elastic_net"},
    {RegressorFamily::kernel_ridge_rbf, "kernel_ridge_rbf"},
    {RegressorFamily::knn_reg, "knn_reg"},
    {RegressorFamily::decision_tree_reg, "decision_tree_reg"},
};

// Linear model on (possibly expanded) standardized features.
class LinearRegressor final : public Regressor {
 public:
  LinearRegressor(Standardizer s, int degree, Eigen::VectorXd coef, double intercept, std::vector<std::string> w)
      : s_(std::move(s)), degree_(degree), coef_(std::move(coef)), intercept_(intercept) {
    warnings_ = std::move(w);
  }
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    Eigen::MatrixXd f = s_.apply(x);
    if (degree_ > 1) f = polynomial_features(f, degree_);
    return (f * coef_).array() + intercept_;
  }

 private:
  Standardizer s_;
  int degree_;
  Eigen::VectorXd coef_;
  double intercept_;
};

// Minimizes ||yc - Xc b||^2 + alpha ||b||^2 on centered data.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& xc, const Eigen::VectorXd& yc, double alpha,
                            std::vector<std::string>& warnings) {
  const Eigen::Index p = xc.cols();
  if (p == 0) return Eigen::VectorXd();
  Eigen::MatrixXd a = xc.transpose() * xc;
  a.diagonal().array() += alpha;
  const Eigen::VectorXd rhs = xc.transpose() * yc;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  const double dmax = d.size() ? d.maxCoeff() : 0.0;
  if (ldlt.info() == Eigen::Success && dmax > 0.0 && d.minCoeff() > 1e-12 * dmax) return ldlt.solve(rhs);
  warnings.emplace_back("singular normal equations; used the pseudo-inverse");
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(1e-12);
  return cod.solve(rhs);
}

double soft_threshold(double z, double g) { return z > g ? z - g : (z < -g ? z + g : 0.0); }

// Minimizes ||yc - Xc b||^2 / 2n + alpha rho ||b||_1 + alpha (1 - rho) / 2 ||b||^2
// by cyclic coordinate descent until the duality gap (same scale) <= 1e-6.
Eigen::VectorXd elastic_net_solve(const Eigen::MatrixXd& xc, const Eigen::VectorXd& yc, double alpha, double rho,
                                  std::vector<std::string>& warnings) {
  const Eigen::Index n = xc.rows(), p = xc.cols();
  const double nd = static_cast<double>(n);
  const double l1 = alpha * rho * nd, l2 = alpha * (1.0 - rho) * nd;  // unnormalized scale
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = yc;
  const Eigen::VectorXd norms = xc.colwise().squaredNorm().transpose();
  const double ynorm = yc.squaredNorm();
  for (int sweep = 0; sweep < 100000; ++sweep) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (norms(j) == 0.0) continue;
      const double old = b(j);
      const double z = xc.col(j).dot(r) + norms(j) * old;
      b(j) = soft_threshold(z, l1) / (norms(j) + l2);
      if (b(j) != old) r -= (b(j) - old) * xc.col(j);
    }
    // Duality gap of the unnormalized problem.
    const Eigen::VectorXd xta = xc.transpose() * r - l2 * b;
    const double dual_norm = p ? xta.cwiseAbs().maxCoeff() : 0.0;
    const double rnorm = r.squaredNorm();
    double gap;
    double cst = 1.0;
    if (dual_norm > l1) {
      cst = l1 / dual_norm;
      gap = 0.5 * (rnorm + rnorm * cst * cst);
    } else {
      gap = rnorm;
    }
    gap += l1 * b.lpNorm<1>() - cst * r.dot(yc) + 0.5 * l2 * (1.0 + cst * cst) * b.squaredNorm();
    if (gap / nd <= 1e-6 || ynorm == 0.0) return b;
  }
  warnings.emplace_back("coordinate descent stopped before the duality gap reached 1e-6");
  return b;
}

std::unique_ptr<Regressor> fit_linear(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Standardizer s = Standardizer::fit(x, spec.standardize);
  int degree = 1;
  if (spec.family == RegressorFamily::ols_poly2) degree = 2;
  if (spec.family == RegressorFamily::ols_poly3) degree = 3;
  Eigen::MatrixXd f = s.apply(x);
  if (degree > 1) f = polynomial_features(f, degree);
  const Eigen::RowVectorXd fm = f.colwise().mean();
  const double ym = y.mean();
  const Eigen::MatrixXd fc = f.rowwise() - fm;
  const Eigen::VectorXd yc = y.array() - ym;
  std::vector<std::string> warnings;
  Eigen::VectorXd coef;
  switch (spec.family) {
    case RegressorFamily::ridge:
      coef = ridge_solve(fc, yc, spec.param("alpha"), warnings);
      break;
    case RegressorFamily::lasso:
      coef = elastic_net_solve(fc, yc, spec.param("alpha"), 1.0, warnings);
      break;
    case RegressorFamily::elastic_net:
      coef = elastic_net_solve(fc, yc, spec.param("alpha"), spec.param("l1_ratio"), warnings);
      break;
    default:
      coef = ridge_solve(fc, yc, 0.0, warnings);
  }
  const double intercept = ym - (coef.size() ? fm.dot(coef) : 0.0);
  return std::make_unique<LinearRegressor>(std::move(s), degree, std::move(coef), intercept, std::move(warnings));
}

class KernelRidge final : public Regressor {
 public:
  KernelRidge(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
      : s_(Standardizer::fit(x, spec.standardize)),
        gamma_(spec.params.count("gamma") ? spec.param("gamma")
                                          : 1.0 / static_cast<double>(std::max<Eigen::Index>(1, x.cols()))) {
    train_ = s_.apply(x);
    mean_ = y.mean();
    Eigen::MatrixXd k = kernel(train_);
    k.diagonal().array() += spec.param("alpha");
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) throw NumericError("kernel ridge system is not positive definite");
    dual_ = llt.solve((y.array() - mean_).matrix());
  }
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    return (kernel(s_.apply(x)) * dual_).array() + mean_;
  }

 private:
  Eigen::MatrixXd kernel(const Eigen::MatrixXd& a) const {
    const Eigen::VectorXd an = a.rowwise().squaredNorm(), tn = train_.rowwise().squaredNorm();
    Eigen::MatrixXd d = -2.0 * a * train_.transpose();
    d.colwise() += an;
    d.rowwise() += tn.transpose();
    return (-gamma_ * d.cwiseMax(0.0)).array().exp();
  }

  Standardizer s_;
  double gamma_;
  Eigen::MatrixXd train_;
  Eigen::VectorXd dual_;
  double mean_ = 0.0;
};

class KnnRegressor final : public Regressor {
 public:
  KnnRegressor(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
      : s_(Standardizer::fit(x, spec.standardize)), k_(static_cast<int>(spec.param("k"))) {
    const auto order = detail::canonical_order(x, y);
    train_ = s_.apply(x)(order, Eigen::all);
    y_ = y(order);
  }
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    const Eigen::MatrixXd q = s_.apply(x);
    Eigen::VectorXd out(q.rows());
    std::vector<double> scratch;
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      const auto nn = detail::nearest(train_, q.row(i), k_, scratch);
      double s = 0.0;
      for (Eigen::Index j : nn) s += y_(j);
      out(i) = s / static_cast<double>(nn.size());
    }
    return out;
  }

 private:
  Standardizer s_;
  int k_;
  Eigen::MatrixXd train_;
  Eigen::VectorXd y_;
};

class TreeRegressor final : public Regressor {
 public:
  TreeRegressor(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
      : tree_(x, y, static_cast<int>(spec.param("max_depth")), static_cast<int>(spec.param("min_leaf"))) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = tree_.predict(x.row(i));
    return out;
  }

 private:
  detail::Tree tree_;
};

}  // namespace

std::string to_string(RegressorFamily f) {
  for (const auto& n : kNames)
    if (n.family == f) return n.name;
  return "unknown";
}

RegressorFamily regressor_family_from_string(const std::string& s) {
  for (const auto& n : kNames)
    if (s == n.name) return n.family;
  throw ArgumentError("unknown regressor '" + s + "'");
}

std::vector<RegressorFamily> all_regressor_families() {
  std::vector<RegressorFamily> out;
  for (const auto& n : kNames) out.push_back(n.family);
  return out;
}

Hyperparameters default_hyperparameters(RegressorFamily f) {
  switch (f) {
    case RegressorFamily::ridge:
      return {{"alpha", 1.0}};
    case RegressorFamily::lasso:
      return {{"alpha", 0.01}};
    case RegressorFamily::elastic_net:
      return {{"alpha", 0.01}, {"l1_ratio", 0.5}};
    case RegressorFamily::kernel_ridge_rbf:
      return {{"alpha", 1.0}, {"gamma", 0.0}};  // 0 means 1 / columns
    case RegressorFamily::knn_reg:
      return {{"k", 5.0}};
    case RegressorFamily::decision_tree_reg:
      return {{"max_depth", 6.0}, {"min_leaf", 5.0}};
    default:
      return {};
  }
}

double RegressorSpec::param(const std::string& name) const {
  if (const auto it = params.find(name); it != params.end()) return it->second;
  const auto defaults = default_hyperparameters(family);
  if (const auto it = defaults.find(name); it != defaults.end()) return it->second;
  throw ArgumentError("regressor " + to_string(family) + " has no hyperparameter '" + name + "'");
}

void RegressorSpec::validate() const {
  const auto defaults = default_hyperparameters(family);
  for (const auto& [name, value] : params) {
    if (!defaults.count(name))
      throw ArgumentError("regressor " + to_string(family) + " has no hyperparameter '" + name + "'");
    if (!std::isfinite(value)) throw ArgumentError("hyperparameter " + name + " must be finite");
  }
  auto positive = [&](const char* n) {
    if (!(param(n) > 0.0)) throw ArgumentError(std::string("hyperparameter ") + n + " must be positive");
  };
  auto whole = [&](const char* n) {
    positive(n);
    if (param(n) != std::floor(param(n))) throw ArgumentError(std::string("hyperparameter ") + n + " must be an integer");
  };
  switch (family) {
    case RegressorFamily::ridge:
    case RegressorFamily::lasso:
      positive("alpha");
      break;
    case RegressorFamily::elastic_net:
      positive("alpha");
      if (!(param("l1_ratio") > 0.0 && param("l1_ratio") <= 1.0))
        throw ArgumentError("hyperparameter l1_ratio must lie in (0, 1]");
      break;
    case RegressorFamily::kernel_ridge_rbf:
      positive("alpha");
      if (params.count("gamma")) positive("gamma");
      break;
    case RegressorFamily::knn_reg:
      whole("k");
      break;
    case RegressorFamily::decision_tree_reg:
      whole("max_depth");
      whole("min_leaf");
      break;
    default:
      break;
  }
}

std::unique_ptr<Regressor> fit_regressor(const RegressorSpec& spec, const Eigen::MatrixXd& x,
                                         const Eigen::VectorXd& y) {
  spec.validate();
  if (x.rows() != y.size()) throw ShapeError("regressor inputs have different row counts");
  if (x.rows() == 0) throw ArgumentError("cannot fit a regressor on zero rows");
  if (!x.allFinite() || !y.allFinite()) throw ArgumentError("regressor inputs must be finite");
  switch (spec.family) {
    case RegressorFamily::kernel_ridge_rbf:
      return std::make_unique<KernelRidge>(spec, x, y);
    case RegressorFamily::knn_reg:
      return std::make_unique<KnnRegressor>(spec, x, y);
    case RegressorFamily::decision_tree_reg:
      return std::make_unique<TreeRegressor>(spec, x, y);
    default:
      return fit_linear(spec, x, y);
  }
}

Eigen::MatrixXd polynomial_features(const Eigen::MatrixXd& x, int degree) {
  if (degree < 1) throw ArgumentError("polynomial degree must be at least 1");
  std::vector<Eigen::VectorXd> cols;
  std::vector<int> term;
  // Non-decreasing index tuples of length d give each degree-d monomial once.
  std::function<void(int, int)> emit = [&](int start, int remaining) {
    if (remaining == 0) {
      Eigen::VectorXd c = Eigen::VectorXd::Ones(x.rows());
      for (int j : term) c.array() *= x.col(j).array();
      cols.push_back(std::move(c));
      return;
    }
    for (int j = start; j < x.cols(); ++j) {
      term.push_back(j);
      emit(j, remaining - 1);
      term.pop_back();
    }
  };
  for (int d = 1; d <= degree; ++d) emit(0, d);
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = cols[k];
  return out;
}

}  // namespace causalsynth::estimators
