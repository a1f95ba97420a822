#include "causalsynth/estimators/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "causalsynth/errors.hpp"
#include "common.hpp"

namespace causalsynth::estimators {

namespace {

using detail::Standardizer;

struct FamilyName {
  ClassifierFamily family;
  const char* name;
};
constexpr FamilyName kNames[] = {
    {ClassifierFamily::logistic_l2, "logistic_l2"},
    {ClassifierFamily::logistic_l1, "logistic_l1"},
    {ClassifierFamily::logistic_unregularized, "logistic_unregularized"},
    {ClassifierFamily::knn_clf, "knn_clf"},
    {ClassifierFamily::decision_tree_clf, "decision_tree_clf"},
    {ClassifierFamily::gaussian_nb, "gaussian_nb"},
    {ClassifierFamily::qda, "qda"},
    {ClassifierFamily::oracle, "oracle"},
};

Eigen::VectorXd clip(Eigen::VectorXd p) {
  return p.cwiseMax(kProbabilityClip).cwiseMin(1.0 - kProbabilityClip);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(x.cols()) = x;
  return out;
}

double log_loss_sum(const Eigen::MatrixXd& x1, const Eigen::VectorXd& t, const Eigen::VectorXd& b) {
  const Eigen::VectorXd eta = x1 * b;
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += softplus(eta(i)) - t(i) * eta(i);
  return s;
}

class Logistic final : public Classifier {
 public:
  Logistic(Standardizer s, Eigen::VectorXd b, std::vector<std::string> w) : s_(std::move(s)), b_(std::move(b)) {
    warnings_ = std::move(w);
  }
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const override {
    const Eigen::VectorXd eta = with_intercept(s_.apply(x)) * b_;
    return clip(eta.unaryExpr([](double z) { return sigmoid(z); }));
  }

 private:
  Standardizer s_;
  Eigen::VectorXd b_;
};

// Newton (IRLS) on sum of log-losses + lambda/2 ||b||^2, intercept free.
Eigen::VectorXd logistic_l2(const Eigen::MatrixXd& x1, const Eigen::VectorXd& t, double lambda,
                            std::vector<std::string>& warnings) {
  const Eigen::Index n = x1.rows(), p = x1.cols();
  Eigen::VectorXd pen = Eigen::VectorXd::Constant(p, lambda);
  pen(0) = 0.0;
  auto objective = [&](const Eigen::VectorXd& b) {
    return log_loss_sum(x1, t, b) + 0.5 * (pen.array() * b.array().square()).sum();
  };
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  double f = objective(b);
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd eta = x1 * b;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = sigmoid(eta(i));
      w(i) = mu(i) * (1.0 - mu(i));
    }
    const Eigen::VectorXd g = x1.transpose() * (mu - t) + pen.cwiseProduct(b);
    if (g.norm() / static_cast<double>(n) <= 1e-6) return b;
    Eigen::MatrixXd h = x1.transpose() * w.asDiagonal() * x1;
    h.diagonal() += pen;
    h.diagonal().array() += 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
    const Eigen::VectorXd step = h.ldlt().solve(g);
    double scale = 1.0;
    bool moved = false;
    for (int k = 0; k < 40; ++k, scale *= 0.5) {
      const Eigen::VectorXd cand = b - scale * step;
      const double fc = objective(cand);
      if (fc <= f) {
        moved = fc < f || scale == 1.0;
        b = cand;
        f = fc;
        break;
      }
    }
    if (!moved) break;
  }
  warnings.emplace_back("logistic regression stopped before the gradient norm reached 1e-6");
  return b;
}

// FISTA with restarts on mean log-loss + lambda ||b||_1, intercept free.
Eigen::VectorXd logistic_l1(const Eigen::MatrixXd& x1, const Eigen::VectorXd& t, double lambda,
                            std::vector<std::string>& warnings) {
  const Eigen::Index p = x1.cols();
  const double n = static_cast<double>(x1.rows());
  // Largest eigenvalue of X'X by power iteration bounds the curvature.
  const Eigen::MatrixXd gram = x1.transpose() * x1;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(p).normalized();
  double eig = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd gv = gram * v;
    eig = gv.norm();
    if (eig == 0.0) break;
    v = gv / eig;
  }
  const double lip = std::max(1e-12, 1.1 * eig / (4.0 * n));
  auto grad = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = x1 * b;
    Eigen::VectorXd r(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) r(i) = sigmoid(eta(i)) - t(i);
    return Eigen::VectorXd(x1.transpose() * r / n);
  };
  auto objective = [&](const Eigen::VectorXd& b) { return log_loss_sum(x1, t, b) / n + lambda * b.tail(p - 1).lpNorm<1>(); };
  auto prox = [&](Eigen::VectorXd z) {
    for (Eigen::Index j = 1; j < p; ++j) {
      const double g = lambda / lip;
      z(j) = z(j) > g ? z(j) - g : (z(j) < -g ? z(j) + g : 0.0);
    }
    return z;
  };
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p), y = b;
  double tk = 1.0, f = objective(b);
  for (int it = 0; it < 100000; ++it) {
    const Eigen::VectorXd next = prox(y - grad(y) / lip);
    if ((lip * (y - next)).norm() <= 1e-6) return next;
    const double fn = objective(next);
    if (fn > f) {  // restart momentum
      y = b;
      tk = 1.0;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    y = next + ((tk - 1.0) / tn) * (next - b);
    b = next;
    f = fn;
    tk = tn;
  }
  warnings.emplace_back("proximal gradient stopped before the gradient mapping reached 1e-6");
  return b;
}

class KnnClassifier final : public Classifier {
 public:
  KnnClassifier(const ClassifierSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& t)
      : s_(Standardizer::fit(x, spec.standardize)), k_(static_cast<int>(spec.param("k"))) {
    const auto order = detail::canonical_order(x, t);
    train_ = s_.apply(x)(order, Eigen::all);
    t_ = t(order);
  }
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const override {
    const Eigen::MatrixXd q = s_.apply(x);
    Eigen::VectorXd out(q.rows());
    std::vector<double> scratch;
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      const auto nn = detail::nearest(train_, q.row(i), k_, scratch);
      double s = 0.0;
      for (Eigen::Index j : nn) s += t_(j);
      out(i) = s / static_cast<double>(nn.size());
    }
    return clip(out);
  }

 private:
  Standardizer s_;
  int k_;
  Eigen::MatrixXd train_;
  Eigen::VectorXd t_;
};

class TreeClassifier final : public Classifier {
 public:
  TreeClassifier(const ClassifierSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& t)
      : tree_(x, t, static_cast<int>(spec.param("max_depth")), static_cast<int>(spec.param("min_leaf"))) {}
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const override {
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = tree_.predict(x.row(i));
    return clip(out);
  }

 private:
  detail::Tree tree_;
};

// Two-class Gaussian generative classifiers; log-joint differences give P(t=1|x).
class GaussianClassifier final : public Classifier {
 public:
  GaussianClassifier(const ClassifierSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& t)
      : s_(Standardizer::fit(x, spec.standardize)), naive_(spec.family == ClassifierFamily::gaussian_nb) {
    const Eigen::MatrixXd z = s_.apply(x);
    const Eigen::Index d = z.cols();
    double smoothing = 0.0;
    if (naive_) {
      const Eigen::RowVectorXd m = z.colwise().mean();
      const double maxvar = d ? ((z.rowwise() - m).array().square().colwise().mean()).maxCoeff() : 0.0;
      smoothing = spec.param("var_smoothing") * maxvar;
    }
    for (int k = 0; k < 2; ++k) {
      std::vector<Eigen::Index> rows;
      for (Eigen::Index i = 0; i < t.size(); ++i)
        if ((t(i) == 1.0) == (k == 1)) rows.push_back(i);
      const Eigen::MatrixXd zk = z(rows, Eigen::all);
      const auto nk = static_cast<double>(rows.size());
      Class& c = classes_[k];
      c.log_prior = std::log(nk / static_cast<double>(t.size()));
      c.mean = zk.colwise().mean();
      const Eigen::MatrixXd centered = zk.rowwise() - c.mean;
      if (naive_) {
        c.var = centered.array().square().colwise().mean().transpose() + smoothing;
        c.log_det = c.var.array().log().sum();
      } else {
        Eigen::MatrixXd cov = centered.transpose() * centered / std::max(1.0, nk - 1.0);
        cov.diagonal().array() += spec.param("reg");
        c.llt.compute(cov);
        if (c.llt.info() != Eigen::Success)
          throw NumericError("class covariance is not positive definite; increase reg");
        c.log_det = 2.0 * c.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      }
    }
  }

  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const override {
    const Eigen::MatrixXd z = s_.apply(x);
    Eigen::VectorXd out(z.rows());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double l0 = log_joint(classes_[0], z.row(i)), l1 = log_joint(classes_[1], z.row(i));
      out(i) = sigmoid(l1 - l0);
    }
    return clip(out);
  }

 private:
  struct Class {
    double log_prior = 0.0;
    Eigen::RowVectorXd mean;
    Eigen::VectorXd var;
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_det = 0.0;
  };

  double log_joint(const Class& c, const Eigen::Ref<const Eigen::RowVectorXd>& z) const {
    const Eigen::VectorXd r = (z - c.mean).transpose();
    const double quad = naive_ ? (r.array().square() / c.var.array()).sum()
                               : c.llt.matrixL().solve(r).squaredNorm();
    return c.log_prior - 0.5 * c.log_det - 0.5 * quad;
  }

  Standardizer s_;
  bool naive_;
  Class classes_[2];
};

class OracleClassifier final : public Classifier {
 public:
  explicit OracleClassifier(std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> f) : f_(std::move(f)) {}
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const override {
    Eigen::VectorXd p = f_(x);
    if (p.size() != x.rows()) throw ShapeError("oracle propensity returned the wrong number of rows");
    return clip(std::move(p));
  }

 private:
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> f_;
};

}  // namespace

std::string to_string(ClassifierFamily f) {
  for (const auto& n : kNames)
    if (n.family == f) return n.name;
  return "unknown";
}

ClassifierFamily classifier_family_from_string(const std::string& s) {
  for (const auto& n : kNames)
    if (s == n.name) return n.family;
  throw ArgumentError("unknown classifier '" + s + "'");
}

Hyperparameters default_hyperparameters(ClassifierFamily f) {
  switch (f) {
    case ClassifierFamily::logistic_l2:
      return {{"lambda", 1.0}};
    case ClassifierFamily::logistic_l1:
      return {{"lambda", 0.01}};
    case ClassifierFamily::knn_clf:
      return {{"k", 15.0}};
    case ClassifierFamily::decision_tree_clf:
      return {{"max_depth", 4.0}, {"min_leaf", 5.0}};
    case ClassifierFamily::gaussian_nb:
      return {{"var_smoothing", 1e-9}};
    case ClassifierFamily::qda:
      return {{"reg", 1e-6}};
    default:
      return {};
  }
}

double ClassifierSpec::param(const std::string& name) const {
  if (const auto it = params.find(name); it != params.end()) return it->second;
  const auto defaults = default_hyperparameters(family);
  if (const auto it = defaults.find(name); it != defaults.end()) return it->second;
  throw ArgumentError("classifier " + to_string(family) + " has no hyperparameter '" + name + "'");
}

void ClassifierSpec::validate() const {
  const auto defaults = default_hyperparameters(family);
  for (const auto& [name, value] : params) {
    if (!defaults.count(name))
      throw ArgumentError("classifier " + to_string(family) + " has no hyperparameter '" + name + "'");
    if (!std::isfinite(value)) throw ArgumentError("hyperparameter " + name + " must be finite");
    if (name == "reg" ? value < 0.0 : !(value > 0.0))
      throw ArgumentError("hyperparameter " + name + " is out of range");
    if ((name == "k" || name == "max_depth" || name == "min_leaf") && value != std::floor(value))
      throw ArgumentError("hyperparameter " + name + " must be an integer");
  }
  if (family == ClassifierFamily::oracle && !oracle)
    throw ArgumentError("the oracle classifier needs a propensity function");
}

std::unique_ptr<Classifier> fit_classifier(const ClassifierSpec& spec, const Eigen::MatrixXd& x,
                                           const Eigen::VectorXd& t) {
  spec.validate();
  if (spec.family == ClassifierFamily::oracle) return std::make_unique<OracleClassifier>(spec.oracle);
  if (x.rows() != t.size()) throw ShapeError("classifier inputs have different row counts");
  if (!x.allFinite()) throw ArgumentError("classifier inputs must be finite");
  Eigen::Index ones = 0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (t(i) != 0.0 && t(i) != 1.0) throw ArgumentError("classifier labels must be 0 or 1");
    ones += t(i) == 1.0;
  }
  if (ones == 0 || ones == t.size()) throw ArgumentError("classifier needs both classes present");

  std::vector<std::string> warnings;
  switch (spec.family) {
    case ClassifierFamily::logistic_l2:
    case ClassifierFamily::logistic_unregularized:
    case ClassifierFamily::logistic_l1: {
      Standardizer s = Standardizer::fit(x, spec.standardize);
      const Eigen::MatrixXd x1 = with_intercept(s.apply(x));
      Eigen::VectorXd b;
      if (spec.family == ClassifierFamily::logistic_l1)
        b = logistic_l1(x1, t, spec.param("lambda"), warnings);
      else
        b = logistic_l2(x1, t, spec.family == ClassifierFamily::logistic_l2 ? spec.param("lambda") : 1e-8, warnings);
      return std::make_unique<Logistic>(std::move(s), std::move(b), std::move(warnings));
    }
    case ClassifierFamily::knn_clf:
      return std::make_unique<KnnClassifier>(spec, x, t);
    case ClassifierFamily::decision_tree_clf:
      return std::make_unique<TreeClassifier>(spec, x, t);
    default:
      return std::make_unique<GaussianClassifier>(spec, x, t);
  }
}

}  // namespace causalsynth::estimators
