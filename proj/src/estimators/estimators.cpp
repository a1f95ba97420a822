#include "causalsynth/estimators/estimators.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "causalsynth/errors.hpp"
#include "common.hpp"

namespace causalsynth::estimators {

namespace {

std::vector<double> log_spaced(double lo, double hi) {
  std::vector<double> v(10);
  for (int i = 0; i < 10; ++i) v[static_cast<std::size_t>(i)] = std::pow(10.0, lo + (hi - lo) * i / 9.0);
  return v;
}

const std::vector<double> kNeighbourCounts = {1, 2, 3, 5, 8, 13, 22, 36, 60, 100};
const std::vector<double> kDepths = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

// Rows whose feature hash falls in one fifth of the range are held out.
// Targets are left out of the hash: they can be fitted residuals that vary in
// the last bit with row order.
std::vector<bool> holdout_mask(const Eigen::MatrixXd& x) {
  std::vector<bool> m(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) m[static_cast<std::size_t>(i)] = detail::row_hash(x.row(i), 0.0) % 5 == 0;
  return m;
}

std::vector<Eigen::Index> rows_where(const std::vector<bool>& mask, bool value) {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] == value) out.push_back(static_cast<Eigen::Index>(i));
  return out;
}

std::string format_value(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void append(std::vector<std::string>& out, const std::vector<std::string>& in, const std::string& prefix) {
  for (const auto& w : in) out.push_back(prefix + ": " + w);
}

std::unique_ptr<Regressor> fit_outcome(const EstimatorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const std::string& label, EstimatorResult& result) {
  RegressorSpec rs = spec.outcome;
  if (spec.tune) {
    const Sweep sw = hyperparameter_sweep(rs.family);
    const bool had = sw.name.empty() || rs.params.count(sw.name);
    rs = tune_regressor(rs, x, y);
    if (!had && rs.params.count(sw.name))
      result.diagnostics.push_back(label + ": tuned " + sw.name + "=" + format_value(rs.params.at(sw.name)));
  }
  auto m = fit_regressor(rs, x, y);
  append(result.diagnostics, m->warnings(), label);
  return m;
}

Eigen::VectorXd fit_propensity(const EstimatorSpec& spec, const Eigen::MatrixXd& w, const Eigen::VectorXd& t,
                               EstimatorResult& result) {
  ClassifierSpec cs = spec.propensity;
  if (spec.tune && cs.family != ClassifierFamily::oracle) {
    const Sweep sw = hyperparameter_sweep(cs.family);
    const bool had = sw.name.empty() || cs.params.count(sw.name);
    cs = tune_classifier(cs, w, t);
    if (!had && cs.params.count(sw.name))
      result.diagnostics.push_back("propensity: tuned " + sw.name + "=" + format_value(cs.params.at(sw.name)));
  }
  auto m = fit_classifier(cs, w, t);
  append(result.diagnostics, m->warnings(), "propensity");
  return m->predict_proba(w);
}

struct Arms {
  std::vector<Eigen::Index> treated, control;
};

Arms arms_of(const model::Dataset& data, Eigen::Index min_rows) {
  Arms a;
  for (Eigen::Index i = 0; i < data.size(); ++i) (data.T(i) == 1.0 ? a.treated : a.control).push_back(i);
  if (static_cast<Eigen::Index>(a.treated.size()) < min_rows || static_cast<Eigen::Index>(a.control.size()) < min_rows)
    throw ArgumentError("each treatment arm needs at least " + std::to_string(min_rows) + " rows (treated " +
                        std::to_string(a.treated.size()) + ", control " + std::to_string(a.control.size()) + ")");
  return a;
}

Eigen::MatrixXd com_features(const EstimatorSpec& spec, const Eigen::VectorXd& t, const Eigen::MatrixXd& w) {
  const bool interact = spec.outcome.family == RegressorFamily::ols_interact;
  Eigen::MatrixXd f(w.rows(), 1 + w.cols() * (interact ? 2 : 1));
  f.col(0) = t;
  f.middleCols(1, w.cols()) = w;
  if (interact) f.rightCols(w.cols()) = w.array().colwise() * t.array();
  return f;
}

EstimatorResult plug_in(EstimatorResult r, Eigen::VectorXd iate) {
  r.ate_hat = iate.mean();
  r.iate_hat = std::move(iate);
  return r;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ArgumentError("option " + key + " expects true or false, got '" + v + "'");
}

double parse_number(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ArgumentError("option " + key + " expects a number, got '" + v + "'");
  return out;
}

}  // namespace

std::string to_string(EstimatorFamily f) {
  switch (f) {
    case EstimatorFamily::com:
      return "com";
    case EstimatorFamily::gcom:
      return "gcom";
    case EstimatorFamily::xlearner:
      return "xlearner";
    case EstimatorFamily::ipw:
      return "ipw";
  }
  return "unknown";
}

void EstimatorSpec::validate() const {
  if (family != EstimatorFamily::ipw) outcome.validate();
  if (family == EstimatorFamily::ipw || family == EstimatorFamily::xlearner) propensity.validate();
  if (!(trim_low > 0.0 && trim_low < trim_high && trim_high < 1.0))
    throw ArgumentError("trim bounds must satisfy 0 < low < high < 1");
  if (xlearner_weight && !(*xlearner_weight >= 0.0 && *xlearner_weight <= 1.0))
    throw ArgumentError("x-learner weight must lie in [0, 1]");
}

EstimatorResult com_estimate(const EstimatorSpec& spec, const model::Dataset& data) {
  spec.validate();
  data.validate();
  EstimatorResult r;
  const auto m = fit_outcome(spec, com_features(spec, data.T, data.W), data.Y, "outcome", r);
  const Eigen::Index n = data.size();
  const Eigen::VectorXd mu1 = m->predict(com_features(spec, Eigen::VectorXd::Ones(n), data.W));
  const Eigen::VectorXd mu0 = m->predict(com_features(spec, Eigen::VectorXd::Zero(n), data.W));
  return plug_in(std::move(r), mu1 - mu0);
}

EstimatorResult gcom_estimate(const EstimatorSpec& spec, const model::Dataset& data) {
  spec.validate();
  data.validate();
  const Arms a = arms_of(data, 2);
  EstimatorResult r;
  const auto m1 = fit_outcome(spec, data.W(a.treated, Eigen::all), data.Y(a.treated), "treated outcome", r);
  const auto m0 = fit_outcome(spec, data.W(a.control, Eigen::all), data.Y(a.control), "control outcome", r);
  return plug_in(std::move(r), m1->predict(data.W) - m0->predict(data.W));
}

EstimatorResult xlearner_estimate(const EstimatorSpec& spec, const model::Dataset& data) {
  spec.validate();
  data.validate();
  const Arms a = arms_of(data, 2);
  EstimatorResult r;
  const Eigen::MatrixXd w1 = data.W(a.treated, Eigen::all), w0 = data.W(a.control, Eigen::all);
  const Eigen::VectorXd y1 = data.Y(a.treated), y0 = data.Y(a.control);
  const auto mu1 = fit_outcome(spec, w1, y1, "treated outcome", r);
  const auto mu0 = fit_outcome(spec, w0, y0, "control outcome", r);
  // Imputed effects per arm, then a second-stage regression on each.
  const Eigen::VectorXd d1 = y1 - mu0->predict(w1);
  const Eigen::VectorXd d0 = mu1->predict(w0) - y0;
  const auto tau1 = fit_outcome(spec, w1, d1, "treated effect", r);
  const auto tau0 = fit_outcome(spec, w0, d0, "control effect", r);
  Eigen::VectorXd e;
  if (spec.xlearner_weight)
    e = Eigen::VectorXd::Constant(data.size(), *spec.xlearner_weight);
  else
    e = fit_propensity(spec, data.W, data.T, r);
  const Eigen::VectorXd t0 = tau0->predict(data.W), t1 = tau1->predict(data.W);
  return plug_in(std::move(r), (e.array() * t0.array() + (1.0 - e.array()) * t1.array()).matrix());
}

EstimatorResult ipw_estimate(const EstimatorSpec& spec, const model::Dataset& data) {
  spec.validate();
  data.validate();
  EstimatorResult r;
  const Eigen::VectorXd e = fit_propensity(spec, data.W, data.T, r);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    if (!spec.trim || (e(i) >= spec.trim_low && e(i) <= spec.trim_high)) keep.push_back(i);
  r.trimmed = data.size() - static_cast<Eigen::Index>(keep.size());
  if (keep.empty()) throw ArgumentError("every row was trimmed; nothing left to weight");
  if (r.trimmed > 0) r.diagnostics.push_back("trimmed " + std::to_string(r.trimmed) + " rows");
  const auto m = static_cast<double>(keep.size());
  double p1 = 1.0, p0 = 1.0;
  if (spec.stabilized) {
    double treated = 0.0;
    for (Eigen::Index i : keep) treated += data.T(i);
    p1 = treated / m;
    p0 = 1.0 - p1;
  }
  double s = 0.0;
  for (Eigen::Index i : keep) {
    if (data.T(i) == 1.0)
      s += p1 * data.Y(i) / e(i);
    else
      s -= p0 * data.Y(i) / (1.0 - e(i));
  }
  r.ate_hat = s / m;
  return r;
}

EstimatorResult estimate(const EstimatorSpec& spec, const model::Dataset& data) {
  switch (spec.family) {
    case EstimatorFamily::com:
      return com_estimate(spec, data);
    case EstimatorFamily::gcom:
      return gcom_estimate(spec, data);
    case EstimatorFamily::xlearner:
      return xlearner_estimate(spec, data);
    case EstimatorFamily::ipw:
      return ipw_estimate(spec, data);
  }
  throw ArgumentError("unknown estimator family");
}

EstimatorSpec parse_estimator_id(const std::string& id) {
  const auto slash = id.find('/');
  if (slash == std::string::npos) throw ArgumentError("estimator id '" + id + "' must look like family/model");
  const std::string fam = id.substr(0, slash);
  const auto q = id.find('?', slash);
  const std::string model = id.substr(slash + 1, q == std::string::npos ? std::string::npos : q - slash - 1);
  EstimatorSpec spec;
  if (fam == "com")
    spec.family = EstimatorFamily::com;
  else if (fam == "gcom")
    spec.family = EstimatorFamily::gcom;
  else if (fam == "xlearner")
    spec.family = EstimatorFamily::xlearner;
  else if (fam == "ipw")
    spec.family = EstimatorFamily::ipw;
  else
    throw ArgumentError("unknown estimator family '" + fam + "' in '" + id + "'");
  const bool ipw = spec.family == EstimatorFamily::ipw;
  if (ipw)
    spec.propensity.family = classifier_family_from_string(model);
  else
    spec.outcome.family = regressor_family_from_string(model);

  if (q != std::string::npos) {
    std::stringstream ss(id.substr(q + 1));
    std::string item;
    while (std::getline(ss, item, '&')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) throw ArgumentError("malformed option '" + item + "' in '" + id + "'");
      const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
      if (key == "propensity" && spec.family == EstimatorFamily::xlearner)
        spec.propensity.family = classifier_family_from_string(value);
      else if (key == "tune")
        spec.tune = parse_bool(key, value);
      else if (key == "trim")
        spec.trim = parse_bool(key, value);
      else if (key == "stabilized")
        spec.stabilized = parse_bool(key, value);
      else if (key == "trim_low")
        spec.trim_low = parse_number(key, value);
      else if (key == "trim_high")
        spec.trim_high = parse_number(key, value);
      else if (key == "standardize")
        spec.outcome.standardize = spec.propensity.standardize = parse_bool(key, value);
      else if (ipw)
        spec.propensity.params[key] = parse_number(key, value);
      else
        spec.outcome.params[key] = parse_number(key, value);
    }
  }
  // The oracle function is attached later, so only check everything else.
  if (spec.propensity.family == ClassifierFamily::oracle) {
    ClassifierSpec probe = spec.propensity;
    probe.oracle = [](const Eigen::MatrixXd& x) { return Eigen::VectorXd::Constant(x.rows(), 0.5); };
    EstimatorSpec check = spec;
    check.propensity = probe;
    check.validate();
  } else {
    spec.validate();
  }
  return spec;
}

Sweep hyperparameter_sweep(RegressorFamily f) {
  switch (f) {
    case RegressorFamily::ridge:
      return {"alpha", log_spaced(-3, 3)};
    case RegressorFamily::lasso:
    case RegressorFamily::elastic_net:
      return {"alpha", log_spaced(-4, 0)};
    case RegressorFamily::kernel_ridge_rbf:
      return {"alpha", log_spaced(-3, 2)};
    case RegressorFamily::knn_reg:
      return {"k", kNeighbourCounts};
    case RegressorFamily::decision_tree_reg:
      return {"max_depth", kDepths};
    default:
      return {};
  }
}

Sweep hyperparameter_sweep(ClassifierFamily f) {
  switch (f) {
    case ClassifierFamily::logistic_l2:
      return {"lambda", log_spaced(-3, 3)};
    case ClassifierFamily::logistic_l1:
      return {"lambda", log_spaced(-4, 0)};
    case ClassifierFamily::knn_clf:
      return {"k", kNeighbourCounts};
    case ClassifierFamily::decision_tree_clf:
      return {"max_depth", kDepths};
    case ClassifierFamily::gaussian_nb:
      return {"var_smoothing", log_spaced(-12, -3)};
    case ClassifierFamily::qda:
      return {"reg", log_spaced(-6, 0)};
    default:
      return {};
  }
}

RegressorSpec tune_regressor(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Sweep sw = hyperparameter_sweep(spec.family);
  if (sw.name.empty() || spec.params.count(sw.name)) return spec;
  const auto mask = holdout_mask(x);
  const auto tr = rows_where(mask, false), va = rows_where(mask, true);
  if (tr.size() < 2 || va.empty()) return spec;
  const Eigen::MatrixXd xt = x(tr, Eigen::all), xv = x(va, Eigen::all);
  const Eigen::VectorXd yt = y(tr), yv = y(va);
  double best = std::numeric_limits<double>::infinity();
  RegressorSpec out = spec;
  for (double v : sw.values) {
    RegressorSpec cand = spec;
    cand.params[sw.name] = v;
    try {
      const double loss = (fit_regressor(cand, xt, yt)->predict(xv) - yv).squaredNorm();
      if (loss < best) {
        best = loss;
        out = cand;
      }
    } catch (const Error&) {
      // A value that cannot be fitted is simply not a candidate.
    }
  }
  return out;
}

ClassifierSpec tune_classifier(const ClassifierSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& t) {
  const Sweep sw = hyperparameter_sweep(spec.family);
  if (sw.name.empty() || spec.params.count(sw.name)) return spec;
  const auto mask = holdout_mask(x);
  const auto tr = rows_where(mask, false), va = rows_where(mask, true);
  if (tr.size() < 2 || va.empty()) return spec;
  const Eigen::MatrixXd xt = x(tr, Eigen::all), xv = x(va, Eigen::all);
  const Eigen::VectorXd tt = t(tr), tv = t(va);
  if (tt.sum() == 0.0 || tt.sum() == static_cast<double>(tt.size())) return spec;
  double best = std::numeric_limits<double>::infinity();
  ClassifierSpec out = spec;
  for (double v : sw.values) {
    ClassifierSpec cand = spec;
    cand.params[sw.name] = v;
    try {
      const Eigen::VectorXd p = fit_classifier(cand, xt, tt)->predict_proba(xv);
      double loss = 0.0;
      for (Eigen::Index i = 0; i < p.size(); ++i) loss -= tv(i) == 1.0 ? std::log(p(i)) : std::log1p(-p(i));
      if (loss < best) {
        best = loss;
        out = cand;
      }
    } catch (const Error&) {
      // As for regressors: skip values that cannot be fitted.
    }
  }
  return out;
}

}  // namespace causalsynth::estimators
