#include "causalsynth/model/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "causalsynth/nn/adam.hpp"
#include "causalsynth/random.hpp"
#include "causalsynth/stats/two_sample.hpp"

namespace causalsynth::model {

std::string Candidate::name() const {
  if (hidden_layers == 0) return "linear";
  return "l" + std::to_string(hidden_layers) + "-w" + std::to_string(width) + "-" + nn::to_string(activation);
}

std::vector<Candidate> default_grid() {
  std::vector<Candidate> grid;
  for (int layers : {1, 2})
    for (int width : {32, 64})
      for (auto act : {nn::Activation::relu, nn::Activation::elu}) grid.push_back({layers, width, act});
  return grid;
}

void SplitFractions::validate() const {
  if (!(train > 0.0) || !(validation > 0.0) || !(test > 0.0))
    throw ArgumentError("split fractions must be positive");
  if (std::abs(train + validation + test - 1.0) > 1e-9) throw ArgumentError("split fractions must sum to 1");
}

void FitConfig::validate() const {
  split.validate();
  family.validate();
  if (grid.empty()) throw ArgumentError("hyperparameter grid is empty");
  for (const auto& c : grid)
    if (c.hidden_layers < 0 || (c.hidden_layers > 0 && c.width < 1))
      throw ArgumentError("invalid grid candidate " + c.name());
  if (max_epochs < 1) throw ArgumentError("max_epochs must be at least 1");
  if (patience < 1) throw ArgumentError("patience must be at least 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be at least 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  if (!(gate_alpha >= 0.0 && gate_alpha < 1.0)) throw ArgumentError("gate alpha must lie in [0, 1)");
  if (gate_permutations < 1) throw ArgumentError("gate permutations must be at least 1");
}

FitConfig linear_gaussian_config(std::uint64_t seed) {
  FitConfig c;
  c.family.continuous = dist::ContinuousFamily::gaussian;
  c.use_atoms = false;
  c.detect_atoms = false;
  c.grid = {Candidate{0, 0, nn::Activation::relu}};
  c.seed = seed;
  c.gate_alpha = 0.0;
  return c;
}

DataSplit split_rows(Eigen::Index n, const SplitFractions& f, std::uint64_t seed) {
  f.validate();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, 0x5b1170);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  const auto ntr = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(f.train * n)), 1, n);
  const auto nval = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(f.validation * n)), 0, n - ntr);
  DataSplit s;
  s.train.assign(order.begin(), order.begin() + ntr);
  s.validation.assign(order.begin() + ntr, order.begin() + ntr + nval);
  s.test.assign(order.begin() + ntr + nval, order.end());
  return s;
}

NoRealisticModelError::NoRealisticModelError(std::shared_ptr<const GenerativeModel> best,
                                             std::vector<CandidateResult> results)
    : Error("no_realistic_model",
            [&] {
              std::ostringstream ss;
              ss << "no candidate passed the realism gate (best likelihood candidate '" << best->fit.candidate
                 << "' had p-value " << best->fit.gate_p_value << ")";
              return ss.str();
            }()),
      best_(std::move(best)),
      results_(std::move(results)) {}

namespace {

Networks build_networks(Eigen::Index d, const Candidate& c, const dist::OutcomeFamily& family, Rng& rng) {
  Networks n;
  const int din = static_cast<int>(d);
  if (c.hidden_layers == 0) {
    n.shared_spec = {{din}, c.activation, din};
    n.treatment_spec = {{din}, c.activation, 1};
    n.outcome_spec = {{din}, c.activation, family.raw_dim()};
  } else {
    std::vector<int> widths{din};
    for (int l = 0; l < c.hidden_layers; ++l) widths.push_back(c.width);
    n.shared_spec = {widths, c.activation, c.width};
    n.treatment_spec = {{c.width, c.width}, c.activation, 1};
    n.outcome_spec = {{c.width, c.width}, c.activation, family.raw_dim()};
  }
  n.shared = nn::init_params(n.shared_spec, rng);
  n.treatment = nn::init_params(n.treatment_spec, rng);
  n.outcome0 = nn::init_params(n.outcome_spec, rng);
  n.outcome1 = nn::init_params(n.outcome_spec, rng);
  return n;
}

// Training data on the preprocessed scale, one column per row.
struct Block {
  Eigen::MatrixXd X;  // d x n
  Eigen::VectorXd T;
  Eigen::VectorXd Y;
  Eigen::Index size() const { return X.cols(); }
};

Block make_block(const Dataset& data, const PreprocessSpec& p) {
  Block b;
  b.X = p.transform_w(data.W).transpose();
  b.T = data.T;
  b.Y = data.Y.unaryExpr([&](double y) { return p.transform_y(y); });
  return b;
}

struct Grads {
  nn::MlpParams shared, treatment, outcome0, outcome1;
};

std::vector<Eigen::Index> group_columns(const Eigen::VectorXd& t, double value) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    if (t(i) == value) idx.push_back(i);
  return idx;
}

// Sum of row log-likelihoods; when grads is set, accumulates the gradient of
// -(sum)/scale into it.
double evaluate_block(const Networks& nets, const dist::OutcomeFamily& family, const std::vector<double>& atoms,
                      const Block& b, Grads* grads, double scale) {
  const Eigen::Index n = b.size();
  const nn::BatchCache cs = nn::forward_batch(nets.shared_spec, nets.shared, b.X);
  const Eigen::MatrixXd& rep = cs.output;
  const nn::BatchCache ct = nn::forward_batch(nets.treatment_spec, nets.treatment, rep);
  double ll = 0.0;
  Eigen::MatrixXd up_t(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double g = 0.0;
    ll += dist::bernoulli_log_prob_and_grad(ct.output(0, i), b.T(i), g);
    up_t(0, i) = -g / scale;
  }
  Eigen::MatrixXd d_rep;
  if (grads) d_rep = nn::backward_batch(nets.treatment_spec, nets.treatment, ct, up_t, grads->treatment);

  const int raw_dim = family.raw_dim();
  std::vector<double> grad(static_cast<std::size_t>(raw_dim));
  for (int arm = 0; arm < 2; ++arm) {
    const auto idx = group_columns(b.T, static_cast<double>(arm));
    if (idx.empty()) continue;
    const nn::MlpParams& params = arm == 0 ? nets.outcome0 : nets.outcome1;
    const Eigen::MatrixXd rep_arm = rep(Eigen::all, idx);
    const nn::BatchCache co = nn::forward_batch(nets.outcome_spec, params, rep_arm);
    Eigen::MatrixXd up(raw_dim, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(k);
      const Eigen::VectorXd raw = co.output.col(col);
      ll += dist::log_prob_and_grad(family, std::span<const double>(raw.data(), raw.size()), atoms,
                                    b.Y(idx[k]), grad);
      for (int r = 0; r < raw_dim; ++r) up(r, col) = -grad[static_cast<std::size_t>(r)] / scale;
    }
    if (grads) {
      const Eigen::MatrixXd d_arm =
          nn::backward_batch(nets.outcome_spec, params, co, up, arm == 0 ? grads->outcome0 : grads->outcome1);
      for (std::size_t k = 0; k < idx.size(); ++k) d_rep.col(idx[k]) += d_arm.col(static_cast<Eigen::Index>(k));
    }
  }
  if (grads) nn::backward_batch(nets.shared_spec, nets.shared, cs, d_rep, grads->shared);
  return ll;
}

Block take_columns(const Block& b, std::span<const Eigen::Index> cols) {
  Block out;
  const std::vector<Eigen::Index> c(cols.begin(), cols.end());
  out.X = b.X(Eigen::all, c);
  out.T = b.T(c);
  out.Y = b.Y(c);
  return out;
}

struct Trained {
  Networks nets;
  CandidateResult result;
};

Trained train_candidate(const Candidate& cand, std::size_t index, const Block& train, const Block& val,
                        const dist::OutcomeFamily& family, const std::vector<double>& atoms, const FitConfig& cfg) {
  Rng init_rng = make_rng(cfg.seed, 1000 + index);
  Rng order_rng = make_rng(cfg.seed, 2000 + index);
  Networks nets = build_networks(train.X.rows(), cand, family, init_rng);
  nn::AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  nn::AdamState s_shared = nn::make_adam_state(nets.shared, adam);
  nn::AdamState s_treat = nn::make_adam_state(nets.treatment, adam);
  nn::AdamState s_out0 = nn::make_adam_state(nets.outcome0, adam);
  nn::AdamState s_out1 = nn::make_adam_state(nets.outcome1, adam);

  // Without validation rows, early stopping watches the training likelihood.
  const Block& monitor = val.size() > 0 ? val : train;
  Trained best;
  best.result.candidate = cand;
  best.nets = nets;
  double best_ll = -std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), 0);
  Grads g{nn::zeros_like(nets.shared), nn::zeros_like(nets.treatment), nn::zeros_like(nets.outcome0),
          nn::zeros_like(nets.outcome1)};
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(order_rng, i)]);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      const Block mb = take_columns(train, std::span<const Eigen::Index>(order).subspan(start, len));
      g = Grads{nn::zeros_like(nets.shared), nn::zeros_like(nets.treatment), nn::zeros_like(nets.outcome0),
                nn::zeros_like(nets.outcome1)};
      const double ll = evaluate_block(nets, family, atoms, mb, &g, static_cast<double>(len));
      if (!std::isfinite(ll)) throw TrainingError("non-finite training log-likelihood");
      nn::adam_update(s_shared, nets.shared, g.shared);
      nn::adam_update(s_treat, nets.treatment, g.treatment);
      nn::adam_update(s_out0, nets.outcome0, g.outcome0);
      nn::adam_update(s_out1, nets.outcome1, g.outcome1);
    }
    const double vll = evaluate_block(nets, family, atoms, monitor, nullptr, 1.0) / static_cast<double>(monitor.size());
    best.result.validation_trajectory.push_back(vll);
    best.result.epochs = epoch + 1;
    if (std::isfinite(vll) && vll > best_ll) {
      best_ll = vll;
      best.nets = nets;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  if (!std::isfinite(best_ll)) throw TrainingError("validation log-likelihood never became finite");
  best.result.best_validation_log_likelihood = best_ll;
  return best;
}

double gate_p_value(const GenerativeModel& m, const Dataset& val, const FitConfig& cfg, std::size_t index) {
  // Model rows use distinct training covariates, never the validation rows themselves.
  const Eigen::Index n = std::min(val.size(), m.covariate_pool.rows());
  const Dataset synth = sample_distinct(m, n, mix_seed(cfg.seed, 3000 + index));
  stats::SampleMatrix real(n, 2), fake(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    real(i, 0) = val.T(i);
    real(i, 1) = m.preprocess.transform_y(val.Y(i));
    fake(i, 0) = synth.T(i);
    fake(i, 1) = m.preprocess.transform_y(synth.Y(i));
  }
  stats::PermutationOptions opt;
  opt.permutations = cfg.gate_permutations;
  opt.seed = mix_seed(cfg.seed, 4000 + index);
  return stats::permutation_test(real, fake, stats::energy_statistic(), opt).p_value;
}

}  // namespace

double mean_log_likelihood(const GenerativeModel& model, const Dataset& data) {
  const Block b = make_block(data, model.preprocess);
  return evaluate_block(model.nets, model.family, model.model_atoms(), b, nullptr, 1.0) /
         static_cast<double>(b.size());
}

FitResult fit_model(const Dataset& data, const FitConfig& config) {
  data.validate();
  config.validate();
  FitResult out;
  out.split = split_rows(data.size(), config.split, config.seed);
  const Dataset train = data.subset(out.split.train);
  const Dataset val = data.subset(out.split.validation);

  std::vector<double> atoms = config.use_atoms ? data.atoms : std::vector<double>{};
  if (config.use_atoms && atoms.empty() && config.detect_atoms) {
    const std::vector<double> ys(train.Y.data(), train.Y.data() + train.Y.size());
    atoms = dist::detect_atoms(ys);
  }
  dist::OutcomeFamily family = config.family;
  family.num_atoms = atoms.size();

  GenerativeModel base;
  base.preprocess = fit_preprocess(train, config.scaling);
  base.family = family;
  base.atoms = atoms;
  base.covariate_names = data.covariate_names.empty() ? default_covariate_names(data.num_covariates())
                                                      : data.covariate_names;
  base.treatment_name = data.treatment_name;
  base.outcome_name = data.outcome_name;
  base.covariate_pool = train.W;

  const Block train_block = make_block(train, base.preprocess);
  const Block val_block = make_block(val, base.preprocess);
  const std::vector<double> model_atoms = base.model_atoms();
  const bool run_gate = config.gate_alpha > 0.0 && val.size() >= 2;

  std::shared_ptr<GenerativeModel> winner, best_any;
  double winner_ll = -std::numeric_limits<double>::infinity();
  double best_any_ll = winner_ll;
  for (std::size_t ci = 0; ci < config.grid.size(); ++ci) {
    CandidateResult result;
    result.candidate = config.grid[ci];
    Trained t;
    try {
      t = train_candidate(config.grid[ci], ci, train_block, val_block, family, model_atoms, config);
    } catch (const Error& e) {
      result.failure = e.what();
      out.candidates.push_back(result);
      continue;
    }
    result = t.result;
    auto m = std::make_shared<GenerativeModel>(base);
    m->nets = std::move(t.nets);
    m->fit.seed = config.seed;
    m->fit.candidate = result.candidate.name();
    m->fit.epochs = result.epochs;
    m->fit.validation_log_likelihood = result.best_validation_log_likelihood;
    m->fit.validation_trajectory = result.validation_trajectory;
    if (run_gate) {
      result.gate_p_value = gate_p_value(*m, val, config, ci);
      result.passed_gate = result.gate_p_value > config.gate_alpha;
    } else {
      result.passed_gate = true;
    }
    m->fit.gate_p_value = result.gate_p_value;
    const double ll = result.best_validation_log_likelihood;
    if (ll > best_any_ll) {
      best_any_ll = ll;
      best_any = m;
    }
    if (result.passed_gate && ll > winner_ll) {
      winner_ll = ll;
      winner = m;
    }
    out.candidates.push_back(std::move(result));
  }
  if (!best_any) throw TrainingError("every grid candidate failed to train: " + out.candidates.front().failure);
  if (!winner) {
    refresh_base_ate(*best_any);
    throw NoRealisticModelError(best_any, out.candidates);
  }
  refresh_base_ate(*winner);
  out.model = *winner;
  return out;
}

GenerativeModel fit(const Dataset& data, const FitConfig& config) { return fit_model(data, config).model; }

}  // namespace causalsynth::model
