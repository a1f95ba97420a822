#include "causalsynth/model/generative_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <variant>

#include "causalsynth/errors.hpp"
#include "causalsynth/random.hpp"

namespace causalsynth::model {

void KnobConfig::validate() const {
  if (!std::isfinite(positivity_alpha) || positivity_alpha < 0.0)
    throw ArgumentError("positivity alpha must be finite and non-negative");
  if (!std::isfinite(effect_delta)) throw ArgumentError("effect delta must be finite");
  if (!std::isfinite(heterogeneity_lambda) || heterogeneity_lambda < 0.0)
    throw ArgumentError("heterogeneity lambda must be finite and non-negative");
}

void Networks::validate() const {
  shared_spec.validate();
  treatment_spec.validate();
  outcome_spec.validate();
  nn::check_shapes(shared_spec, shared);
  nn::check_shapes(treatment_spec, treatment);
  nn::check_shapes(outcome_spec, outcome0);
  nn::check_shapes(outcome_spec, outcome1);
  if (treatment_spec.input_dim() != shared_spec.output_dim || outcome_spec.input_dim() != shared_spec.output_dim)
    throw ShapeError("treatment and outcome nets must consume the shared representation");
  if (treatment_spec.output_dim != 1) throw ShapeError("treatment net must have one output");
}

std::vector<double> GenerativeModel::model_atoms() const {
  std::vector<double> out;
  out.reserve(atoms.size());
  for (double a : atoms) out.push_back(preprocess.transform_y(a));
  return out;
}

void GenerativeModel::validate() const {
  preprocess.validate();
  nets.validate();
  family.validate();
  knobs.validate();
  if (family.num_atoms != atoms.size()) throw ShapeError("atom list does not match the outcome family");
  if (nets.outcome_spec.output_dim != family.raw_dim()) throw ShapeError("outcome net output does not match head family");
  if (nets.shared_spec.input_dim() != preprocess.w_center.size())
    throw ShapeError("shared net input does not match covariate count");
  if (covariate_pool.cols() != preprocess.w_center.size() || covariate_pool.rows() < 1)
    throw ShapeError("covariate pool is empty or has the wrong width");
  if (!covariate_names.empty() && static_cast<Eigen::Index>(covariate_names.size()) != covariate_pool.cols())
    throw ShapeError("covariate names do not match covariate count");
}

HeadOutputs forward_heads(const GenerativeModel& model, const Eigen::MatrixXd& w) {
  const Eigen::MatrixXd input = model.preprocess.transform_w(w).transpose();
  const Eigen::MatrixXd rep = nn::predict_batch(model.nets.shared_spec, model.nets.shared, input);
  HeadOutputs out;
  out.logit = nn::predict_batch(model.nets.treatment_spec, model.nets.treatment, rep).row(0).transpose();
  out.raw0 = nn::predict_batch(model.nets.outcome_spec, model.nets.outcome0, rep);
  out.raw1 = nn::predict_batch(model.nets.outcome_spec, model.nets.outcome1, rep);
  return out;
}

namespace {

double knobbed_logit(const GenerativeModel& model, double logit) {
  return model.knobs.positivity_alpha == 1.0 ? logit : model.knobs.positivity_alpha * logit;
}

// Head mean on the original outcome scale, before knobs.
double base_mean(const GenerativeModel& model, const Eigen::MatrixXd& raw, Eigen::Index col,
                 const std::vector<double>& atoms) {
  const Eigen::VectorXd r = raw.col(col);
  const auto head = dist::make_head(model.family, std::span<const double>(r.data(), r.size()), atoms);
  return model.preprocess.inverse_y(dist::head_mean(head));
}

double knobbed_iate(const KnobConfig& k, double base_ate, double mu0, double mu1) {
  const double tau = mu1 - mu0;
  if (k.heterogeneity_lambda == 1.0) return tau + k.effect_delta;
  return base_ate + k.heterogeneity_lambda * (tau - base_ate) + k.effect_delta;
}

void check_rows(const GenerativeModel& model, const Eigen::MatrixXd& w) {
  if (w.cols() != model.num_covariates())
    throw ShapeError("covariate rows have " + std::to_string(w.cols()) + " columns, model expects " +
                     std::to_string(model.num_covariates()));
}

Eigen::MatrixXd as_row(std::span<const double> w_row) {
  Eigen::MatrixXd w(1, static_cast<Eigen::Index>(w_row.size()));
  for (std::size_t j = 0; j < w_row.size(); ++j) w(0, static_cast<Eigen::Index>(j)) = w_row[j];
  return w;
}

// Draws T and Y for every row; shift(i) is the T=1 outcome shift under knobs.
template <typename ShiftFn>
TreatmentOutcome draw(const GenerativeModel& model, const HeadOutputs& heads, Rng& rng, ShiftFn&& shift) {
  const Eigen::Index n = heads.logit.size();
  const std::vector<double> atoms = model.model_atoms();
  const bool identity = model.knobs.is_identity();
  TreatmentOutcome out;
  out.T.resize(n);
  out.Y.resize(n);
  Eigen::VectorXd r(model.family.raw_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = dist::sample(dist::BernoulliHead{knobbed_logit(model, heads.logit(i))}, rng);
    r = t == 1.0 ? heads.raw1.col(i) : heads.raw0.col(i);
    const auto head = dist::make_head(model.family, std::span<const double>(r.data(), r.size()), atoms);
    double y;
    if (const auto* mix = std::get_if<dist::AtomMixtureHead>(&head)) {
      const std::size_t branch = dist::sample_branch(*mix, rng);
      // Atoms come back as their exact original values.
      y = branch > 0 ? model.atoms[branch - 1] : model.preprocess.inverse_y(dist::sample(mix->continuous, rng));
    } else {
      y = model.preprocess.inverse_y(dist::sample(head, rng));
    }
    if (t == 1.0 && !identity) y += shift(i);
    out.T(i) = t;
    out.Y(i) = y;
  }
  return out;
}

double shift_for(const GenerativeModel& model, const HeadOutputs& heads, Eigen::Index i,
                 const std::vector<double>& atoms) {
  const KnobConfig& k = model.knobs;
  if (k.heterogeneity_lambda == 1.0) return k.effect_delta;
  const double m0 = base_mean(model, heads.raw0, i, atoms);
  const double m1 = base_mean(model, heads.raw1, i, atoms);
  return m0 + knobbed_iate(k, model.base_ate, m0, m1) - m1;
}

}  // namespace

double propensity(const GenerativeModel& model, std::span<const double> w_row) {
  if (static_cast<Eigen::Index>(w_row.size()) != model.num_covariates())
    throw ShapeError("covariate row has " + std::to_string(w_row.size()) + " entries, model expects " +
                     std::to_string(model.num_covariates()));
  return propensities(model, as_row(w_row))(0);
}

Eigen::VectorXd propensities(const GenerativeModel& model, const Eigen::MatrixXd& w) {
  check_rows(model, w);
  const HeadOutputs heads = forward_heads(model, w);
  Eigen::VectorXd p(heads.logit.size());
  for (Eigen::Index i = 0; i < p.size(); ++i)
    p(i) = dist::BernoulliHead{knobbed_logit(model, heads.logit(i))}.probability();
  return p;
}

GroundTruth ground_truth(const GenerativeModel& model, const Eigen::MatrixXd& w) {
  if (w.rows() == 0) throw ArgumentError("ground truth needs at least one covariate row");
  check_rows(model, w);
  const HeadOutputs heads = forward_heads(model, w);
  const std::vector<double> atoms = model.model_atoms();
  const Eigen::Index n = w.rows();
  GroundTruth g;
  g.mu0.resize(n);
  g.mu1.resize(n);
  g.iate.resize(n);
  g.propensity.resize(n);
  const KnobConfig& k = model.knobs;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m0 = base_mean(model, heads.raw0, i, atoms);
    const double m1 = base_mean(model, heads.raw1, i, atoms);
    g.propensity(i) = dist::BernoulliHead{knobbed_logit(model, heads.logit(i))}.probability();
    g.mu0(i) = m0;
    if (k.is_identity()) {
      g.mu1(i) = m1;
      g.iate(i) = m1 - m0;
    } else if (k.heterogeneity_lambda == 1.0) {
      g.mu1(i) = m1 + k.effect_delta;
      g.iate(i) = g.mu1(i) - m0;
    } else {
      g.iate(i) = knobbed_iate(k, model.base_ate, m0, m1);
      g.mu1(i) = m0 + g.iate(i);
    }
  }
  g.ate = g.iate.mean();
  return g;
}

double mu(const GenerativeModel& model, int t, std::span<const double> w_row) {
  if (t != 0 && t != 1) throw ArgumentError("treatment must be 0 or 1");
  if (static_cast<Eigen::Index>(w_row.size()) != model.num_covariates())
    throw ShapeError("covariate row has " + std::to_string(w_row.size()) + " entries, model expects " +
                     std::to_string(model.num_covariates()));
  const GroundTruth g = ground_truth(model, as_row(w_row));
  return t == 0 ? g.mu0(0) : g.mu1(0);
}

void refresh_base_ate(GenerativeModel& model) {
  GenerativeModel plain = model;
  plain.knobs = KnobConfig{};
  model.base_ate = ground_truth(plain, model.covariate_pool).ate;
}

GenerativeModel apply_knobs(const GenerativeModel& model, const KnobConfig& knobs) {
  knobs.validate();
  GenerativeModel out = model;
  out.knobs = knobs;
  return out;
}

TreatmentOutcome sample_conditional(const GenerativeModel& model, const Eigen::MatrixXd& w, std::uint64_t seed) {
  check_rows(model, w);
  const HeadOutputs heads = forward_heads(model, w);
  const std::vector<double> atoms = model.model_atoms();
  Rng rng = make_rng(seed, 0);
  // Repeated covariate rows share one shift computation.
  std::map<std::vector<double>, double> cache;
  auto shift = [&](Eigen::Index i) {
    const Eigen::RowVectorXd r = w.row(i);
    std::vector<double> key(r.data(), r.data() + r.size());
    const auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double v = shift_for(model, heads, i, atoms);
    cache.emplace(std::move(key), v);
    return v;
  };
  return draw(model, heads, rng, shift);
}

namespace {

Dataset sample_rows(const GenerativeModel& model, Eigen::Index n, std::uint64_t seed, std::vector<Eigen::Index>& idx,
                    bool distinct) {
  if (n <= 0) throw ArgumentError("sample size must be positive");
  const Eigen::Index pool = model.covariate_pool.rows();
  if (pool == 0) throw ArgumentError("model has an empty covariate pool");
  if (distinct && n > pool)
    throw ArgumentError("cannot draw " + std::to_string(n) + " distinct rows from a pool of " + std::to_string(pool));
  Rng rng = make_rng(seed, 0);
  if (distinct) {
    // Partial Fisher-Yates over the pool indices.
    std::vector<Eigen::Index> all(static_cast<std::size_t>(pool));
    for (Eigen::Index i = 0; i < pool; ++i) all[static_cast<std::size_t>(i)] = i;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
      std::swap(all[i], all[i + uniform_index(rng, all.size() - i)]);
    idx.assign(all.begin(), all.begin() + n);
  } else {
    idx.assign(static_cast<std::size_t>(n), 0);
    for (auto& i : idx) i = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(pool)));
  }

  Dataset out;
  out.W = model.covariate_pool(idx, Eigen::all);
  const HeadOutputs heads = forward_heads(model, out.W);
  const std::vector<double> atoms = model.model_atoms();
  // Shifts depend only on the pool row, so compute each at most once.
  std::vector<double> cache(static_cast<std::size_t>(pool), std::numeric_limits<double>::quiet_NaN());
  auto shift = [&](Eigen::Index i) {
    double& c = cache[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    if (std::isnan(c)) c = shift_for(model, heads, i, atoms);
    return c;
  };
  TreatmentOutcome ty = draw(model, heads, rng, shift);
  out.T = std::move(ty.T);
  out.Y = std::move(ty.Y);
  out.atoms = model.atoms;
  out.covariate_names = model.covariate_names.empty() ? default_covariate_names(model.num_covariates())
                                                      : model.covariate_names;
  out.treatment_name = model.treatment_name;
  out.outcome_name = model.outcome_name;
  return out;
}

}  // namespace

Dataset sample(const GenerativeModel& model, Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> idx;
  return sample_rows(model, n, seed, idx, false);
}

Dataset sample_distinct(const GenerativeModel& model, Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> idx;
  return sample_rows(model, n, seed, idx, true);
}

SampleWithTruth sample_with_truth(const GenerativeModel& model, Eigen::Index n, std::uint64_t seed) {
  SampleWithTruth s;
  std::vector<Eigen::Index> idx;
  s.data = sample_rows(model, n, seed, idx, false);
  // Means are evaluated once per distinct pool row.
  std::vector<Eigen::Index> unique = idx;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const GroundTruth pool_truth = ground_truth(model, model.covariate_pool(unique, Eigen::all));
  std::vector<Eigen::Index> where(static_cast<std::size_t>(model.covariate_pool.rows()), -1);
  for (std::size_t k = 0; k < unique.size(); ++k) where[static_cast<std::size_t>(unique[k])] = static_cast<Eigen::Index>(k);
  std::vector<Eigen::Index> map(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) map[i] = where[static_cast<std::size_t>(idx[i])];
  s.truth.iate = pool_truth.iate(map);
  s.truth.mu0 = pool_truth.mu0(map);
  s.truth.mu1 = pool_truth.mu1(map);
  s.truth.propensity = pool_truth.propensity(map);
  s.truth.ate = s.truth.iate.mean();
  return s;
}

}  // namespace causalsynth::model
