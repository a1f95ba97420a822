// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...] [--reference]
// With no numbers every criterion runs. --reference adds, for criterion 1,
// the same battery on real training rows against real held-out rows.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "causalsynth/bench/benchmark.hpp"
#include "causalsynth/bench/fidelity.hpp"
#include "causalsynth/bench/metrics.hpp"
#include "causalsynth/dist/heads.hpp"
#include "causalsynth/errors.hpp"
#include "causalsynth/model/fit.hpp"
#include "causalsynth/nn/mlp.hpp"
#include "causalsynth/random.hpp"
#include "causalsynth/stats/two_sample.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace causalsynth;
using testsupport::NonlinearDgp;

namespace {

constexpr int kSeeds = 5;
constexpr Eigen::Index kRows = 2000;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared fits on the nonlinear benchmark data, one per seed.

struct SeedFit {
  model::Dataset data;
  model::FitResult fit;
  bool passed_gate = true;
  model::Dataset test;
  Eigen::VectorXd test_iate;  // true effects on the held-out rows
  double sd_y = 0.0;
  double fit_seconds = 0.0;
};

std::map<int, SeedFit> g_fits;

Eigen::VectorXd true_iate(const Eigen::MatrixXd& w) {
  Eigen::VectorXd out(w.rows());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const Eigen::RowVectorXd r = w.row(i);
    out(i) = NonlinearDgp::mu(r, 1.0) - NonlinearDgp::mu(r, 0.0);
  }
  return out;
}

const SeedFit& seed_fit(int seed) {
  auto it = g_fits.find(seed);
  if (it != g_fits.end()) return it->second;
  SeedFit s;
  s.data = NonlinearDgp::draw(kRows, static_cast<std::uint64_t>(seed));
  model::FitConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(seed);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    s.fit = model::fit_model(s.data, cfg);
  } catch (const model::NoRealisticModelError& e) {
    s.passed_gate = false;
    s.fit.model = e.best_model();
    s.fit.split = model::split_rows(s.data.size(), cfg.split, cfg.seed);
    s.fit.candidates = e.candidates();
  }
  s.fit_seconds = seconds_since(t0);
  s.test = s.data.subset(s.fit.split.test);
  s.test_iate = true_iate(s.test.W);
  const double mean = s.data.Y.mean();
  s.sd_y = std::sqrt((s.data.Y.array() - mean).square().mean());
  return g_fits.emplace(seed, std::move(s)).first->second;
}

std::vector<std::string> failing(const bench::FidelityReport& r, double alpha) {
  std::vector<std::string> out;
  for (const auto& row : r.rows)
    if (!(row.report.p_value > alpha)) out.push_back(row.test + "=" + fmt("%.3f", row.report.p_value));
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
  return s;
}

bool g_reference = false;

// ---------------------------------------------------------------------------

Verdict criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  int passing = 0;
  int reference_passing = 0;
  std::string detail;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const SeedFit& s = seed_fit(seed);
    bench::FidelityOptions o;
    o.permutations = 1000;
    o.seed = static_cast<std::uint64_t>(seed);
    const auto rep = bench::fidelity_report(s.fit.model, s.test, o);
    const auto bad = failing(rep, 0.05);
    double min_p = 1.0;
    for (const auto& r : rep.rows) min_p = std::min(min_p, r.report.p_value);
    passing += bad.empty();
    std::printf("  seed %d: gate %s (p %.3f, %s), %zu/%zu tests p > 0.05, min p %.4f%s%s\n", seed,
                s.passed_gate ? "passed" : "FAILED", s.fit.model.fit.gate_p_value, s.fit.model.fit.candidate.c_str(),
                rep.rows.size() - bad.size(), rep.rows.size(), min_p, bad.empty() ? "" : "; rejected: ",
                join(bad).c_str());
    std::fflush(stdout);
    if (g_reference) {
      // Same protocol with distinct training rows in place of model samples.
      const auto n = s.test.size();
      std::vector<Eigen::Index> rows = s.fit.split.train;
      Rng rng = make_rng(o.seed, 1);
      for (Eigen::Index i = 0; i < n; ++i)
        std::swap(rows[static_cast<std::size_t>(i)],
                  rows[static_cast<std::size_t>(i) + uniform_index(rng, rows.size() - static_cast<std::size_t>(i))]);
      rows.resize(static_cast<std::size_t>(n));
      const model::Dataset train = s.data.subset(rows);
      const auto& pp = s.fit.model.preprocess;
      auto joint = [&](const model::Dataset& d) {
        Eigen::MatrixXd j(d.size(), d.num_covariates() + 2);
        j.leftCols(d.num_covariates()) = pp.transform_w(d.W);
        j.col(d.num_covariates()) = d.T;
        for (Eigen::Index i = 0; i < d.size(); ++i) j(i, d.num_covariates() + 1) = pp.transform_y(d.Y(i));
        return j;
      };
      const auto ref = bench::fidelity_battery(joint(s.test), joint(train), s.test.num_covariates(), o);
      const auto rbad = failing(ref, 0.05);
      reference_passing += rbad.empty();
      std::printf("  seed %d reference (training rows vs held-out rows): %s\n", seed,
                  rbad.empty() ? "all pass" : join(rbad).c_str());
      std::fflush(stdout);
    }
  }
  const double elapsed = seconds_since(t0);
  const bool fast = elapsed <= 900.0;
  detail = std::to_string(passing) + "/5 seeds pass every test (need >= 4), " + fmt("%.0f", elapsed) +
           " s (limit 900 s)";
  if (g_reference) detail += "; model-free reference passes " + std::to_string(reference_passing) + "/5";
  return {passing >= 4 && fast, detail};
}

Verdict criterion2() {
  int rejected_seeds = 0;
  std::string detail;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const SeedFit& s = seed_fit(seed);
    const auto lin = model::fit_model(s.data, model::linear_gaussian_config(static_cast<std::uint64_t>(seed)));
    bench::FidelityOptions o;
    o.permutations = 1000;
    o.seed = static_cast<std::uint64_t>(seed);
    o.tests = {"wass1_ty", "wass2_ty", "fr_ty", "knn_ty", "energy_ty"};
    const auto rep = bench::fidelity_report(lin.model, s.data.subset(lin.split.test), o);
    int rejected = 0;
    std::string ps;
    for (const auto& r : rep.rows) {
      rejected += r.report.p_value < 0.05;
      ps += " " + r.test + "=" + fmt("%.4f", r.report.p_value);
    }
    rejected_seeds += rejected >= 2;
    std::printf("  seed %d: %d of 5 (T,Y) tests reject;%s\n", seed, rejected, ps.c_str());
    std::fflush(stdout);
  }
  return {rejected_seeds >= 4, std::to_string(rejected_seeds) + "/5 seeds with >= 2 rejections (need >= 4)"};
}

Verdict criterion3() {
  int ok = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const SeedFit& s = seed_fit(seed);
    const model::GroundTruth g = model::ground_truth(s.fit.model, s.test.W);
    const double true_ate = s.test_iate.mean();
    const double bias = std::abs(g.ate - true_ate);
    const std::vector<double> est(g.iate.data(), g.iate.data() + g.iate.size());
    const std::vector<double> tru(s.test_iate.data(), s.test_iate.data() + s.test_iate.size());
    const double pehe = bench::pehe(est, tru);
    const bool pass = bias <= 0.1 * s.sd_y && pehe <= 0.5 * s.sd_y;
    ok += pass;
    std::printf("  seed %d: true ATE %.4f, model ATE %.4f, abs bias %.4f (limit %.4f), PEHE %.4f (limit %.4f)\n", seed,
                true_ate, g.ate, bias, 0.1 * s.sd_y, pehe, 0.5 * s.sd_y);
  }
  return {ok == kSeeds, std::to_string(ok) + "/5 fitted models within both limits (all required)"};
}

double ks_to_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d = std::max({d, (i + 1) / n - p[i], p[i] - i / n});
  return d;
}

Verdict criterion4() {
  // One fixed distribution over (W, T, Y): T depends on W and Y has a point
  // mass at zero.
  auto draw = [](Rng& rng, Eigen::Index n) {
    stats::SampleMatrix m(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = standard_normal(rng);
      const double t = uniform01(rng) < 1.0 / (1.0 + std::exp(-w)) ? 1.0 : 0.0;
      m(i, 0) = w;
      m(i, 1) = t;
      m(i, 2) = uniform01(rng) < 0.2 ? 0.0 : w + t + 0.5 * standard_normal(rng);
    }
    return m;
  };
  const std::vector<stats::TwoSampleStatistic> tests = {stats::energy_statistic(), stats::fr_statistic(),
                                                       stats::knn_statistic(), stats::wasserstein_statistic(1),
                                                       stats::wasserstein_statistic(2)};
  std::vector<std::vector<double>> p(tests.size());
  for (int rep = 0; rep < 200; ++rep) {
    Rng rng = make_rng(4000 + static_cast<std::uint64_t>(rep), 0);
    const auto x = draw(rng, 200);
    const auto y = draw(rng, 200);
    for (std::size_t k = 0; k < tests.size(); ++k)
      p[k].push_back(stats::permutation_test(x, y, tests[k], {.permutations = 100, .seed = mix_seed(rep, k)}).p_value);
  }
  bool pass = true;
  std::string detail = "KS distance to uniform:";
  for (std::size_t k = 0; k < tests.size(); ++k) {
    const double d = ks_to_uniform(p[k]);
    pass = pass && d <= 0.1;
    detail += " " + tests[k].name + "=" + fmt("%.3f", d);
  }
  return {pass, detail + " (limit 0.1)"};
}

Verdict criterion5() {
  using namespace testsupport;
  Rng rng = make_rng(5005, 0);
  double worst = 0.0;
  int fr_mismatch = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 1 + static_cast<int>(uniform_index(rng, 3));
    const int m = 1 + static_cast<int>(uniform_index(rng, 4));
    const int n = 1 + static_cast<int>(uniform_index(rng, 4));
    const auto x = random_points(rng, m, d), y = random_points(rng, n, d);
    worst = std::max(worst, std::abs(stats::energy_stat(x, y) - brute_energy(x, y)));
    if (m + n >= 2) {
      fr_mismatch += stats::fr_counts(x, y).cross_edges != brute_fr_cross(x, y);
      worst = std::max(worst, std::abs(stats::fr_stat(x, y) - (brute_fr_cross(x, y) + 1)));
    }
    if (m + n >= 3) {
      const int k = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(m + n - 1)));
      worst = std::max(worst, std::abs(stats::knn_stat(x, y, k) - brute_knn(x, y, k)));
    }
    // Equal sizes and at least two columns so the assignment solver runs.
    const auto xa = random_points(rng, m, d + 1), ya = random_points(rng, m, d + 1);
    for (int order : {1, 2})
      worst = std::max(worst, std::abs(stats::wasserstein_dist(xa, ya, order) - brute_wasserstein(xa, ya, order)));
  }
  double worst_p = 0.0;
  Rng prng = make_rng(5006, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = random_points(prng, 3, 2);
    auto y = random_points(prng, 3, 2);
    if (rep % 2) y.array() += 1.5;
    for (const auto& s : {stats::energy_statistic(), stats::fr_statistic(), stats::knn_statistic(1),
                          stats::wasserstein_statistic(1), stats::wasserstein_statistic(2)}) {
      const double exact = exact_pvalue(x, y, s);
      const auto r = stats::permutation_test(
          x, y, s, {.permutations = 10000, .seed = static_cast<std::uint64_t>(rep), .shuffle_pooled = false});
      worst_p = std::max(worst_p, std::abs(r.p_value - exact));
    }
  }
  const bool pass = worst <= 1e-12 && fr_mismatch == 0 && worst_p <= 0.05;
  return {pass, "max statistic error " + fmt("%.2e", worst) + " (limit 1e-12), FR edge mismatches " +
                    std::to_string(fr_mismatch) + ", max |p - exact p| " + fmt("%.4f", worst_p) + " (limit 0.05)"};
}

bool near_relu_kink(const nn::MlpSpec& spec, const nn::MlpParams& p, const std::vector<double>& x) {
  if (spec.activation != nn::Activation::relu) return false;
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l + 1 < p.layers.size(); ++l) {
    Eigen::VectorXd z = p.layers[l].weight * a + p.layers[l].bias;
    if (z.cwiseAbs().minCoeff() < 1e-3) return true;
    a = z.cwiseMax(0.0);
  }
  return false;
}

Verdict criterion6() {
  // Each configuration is a random network feeding a random head; the
  // gradient of the log-likelihood is checked with respect to both the head's
  // raw inputs and every network parameter.
  Rng rng = make_rng(6006, 0);
  int checked = 0, skipped = 0, bad = 0;
  double worst = 0.0;
  double worst_unfloored = 0.0;  // over components with |gradient| > 1e-3, no absolute floor
  while (checked < 100) {
    nn::MlpSpec spec;
    const int depth = 1 + static_cast<int>(uniform_index(rng, 3));
    for (int i = 0; i < depth; ++i) spec.layer_widths.push_back(1 + static_cast<int>(uniform_index(rng, 6)));
    spec.activation = static_cast<nn::Activation>(uniform_index(rng, 3));
    const bool bernoulli = checked % 5 == 4;
    dist::OutcomeFamily fam;
    fam.continuous = uniform_index(rng, 3) == 0 ? dist::ContinuousFamily::gaussian : dist::ContinuousFamily::sigmoidal_flow;
    fam.flow_layers = 1 + static_cast<int>(uniform_index(rng, 2));
    fam.flow_units = 1 + static_cast<int>(uniform_index(rng, 6));
    fam.num_atoms = uniform_index(rng, 3);
    std::vector<double> atoms;
    for (std::size_t j = 0; j < fam.num_atoms; ++j) atoms.push_back(static_cast<double>(j) - 0.5);
    spec.output_dim = bernoulli ? 1 : fam.raw_dim();
    const nn::MlpParams p = nn::init_params(spec, rng);
    std::vector<double> x(static_cast<std::size_t>(spec.input_dim()));
    for (double& v : x) v = standard_normal(rng);
    if (near_relu_kink(spec, p, x)) {
      ++skipped;
      continue;
    }
    double value = bernoulli ? (uniform01(rng) < 0.5 ? 1.0 : 0.0) : 1.5 * standard_normal(rng);
    if (!bernoulli && !atoms.empty() && uniform01(rng) < 0.3) value = atoms[uniform_index(rng, atoms.size())];

    auto loglik_raw = [&](const std::vector<double>& raw) {
      if (bernoulli) {
        double g = 0.0;
        return dist::bernoulli_log_prob_and_grad(raw[0], value, g);
      }
      return dist::log_prob(dist::make_head(fam, raw, atoms), value);
    };
    const Eigen::VectorXd out = nn::mlp_forward(spec, p, x);
    const std::vector<double> raw(out.data(), out.data() + out.size());
    std::vector<double> grad_raw(raw.size());
    if (bernoulli) {
      dist::bernoulli_log_prob_and_grad(raw[0], value, grad_raw[0]);
    } else {
      dist::log_prob_and_grad(fam, raw, atoms, value, grad_raw);
    }
    const auto fd_raw = testsupport::central_differences(loglik_raw, raw);
    const double e_head = testsupport::max_relative_error(grad_raw, fd_raw);
    const std::vector<double> analytic = nn::mlp_backward(spec, p, x, grad_raw).flatten();
    auto objective = [&](const std::vector<double>& flat) {
      nn::MlpParams q = p;
      q.unflatten(flat);
      const Eigen::VectorXd o = nn::mlp_forward(spec, q, x);
      return loglik_raw(std::vector<double>(o.data(), o.data() + o.size()));
    };
    const auto fd_net = testsupport::central_differences(objective, p.flatten());
    const double e_net = testsupport::max_relative_error(analytic, fd_net);
    worst = std::max({worst, e_head, e_net});
    const auto unfloored = [&](const std::vector<double>& a, const std::vector<double>& fd) {
      for (std::size_t i = 0; i < fd.size(); ++i)
        if (std::abs(fd[i]) > 1e-3) worst_unfloored = std::max(worst_unfloored, std::abs(a[i] - fd[i]) / std::abs(fd[i]));
    };
    unfloored(grad_raw, fd_raw);
    unfloored(analytic, fd_net);
    bad += std::max(e_head, e_net) > 1e-4;
    ++checked;
  }
  return {bad == 0, std::to_string(checked) + " configurations, worst relative error " + fmt("%.2e", worst) +
                        " (limit 1e-4, differences below 1e-7 count as 0), " + fmt("%.2e", worst_unfloored) +
                        " without the floor, " + std::to_string(bad) + " over the limit, " + std::to_string(skipped) +
                        " redrawn at ReLU kinks"};
}

std::shared_ptr<const model::GenerativeModel> linear_confounded_model() {
  Rng rng = make_rng(7007, 0);
  Eigen::MatrixXd pool(3000, 3);
  for (Eigen::Index i = 0; i < pool.rows(); ++i)
    for (int j = 0; j < 3; ++j) pool(i, j) = standard_normal(rng);
  // Treatment favours high w1 and low w2, which also drive the outcome.
  return std::make_shared<const model::GenerativeModel>(testsupport::linear_gaussian_model(
      pool, Eigen::Vector3d(0.8, -0.6, 0.3), -0.2, Eigen::Vector3d(1.0, -0.7, 0.4), Eigen::Vector3d(1.8, -0.7, 1.2), 1.5,
      0.0));
}

std::vector<std::vector<bench::MetricRow>> g_tables;

Verdict criterion7() {
  bench::BenchmarkConfig c;
  c.model = linear_confounded_model();
  c.replications = 100;
  c.samples = 1000;
  c.base_seed = 70000;
  c.estimators = {"com/ols_interact", "gcom/ols", "ipw/oracle", "com/ols"};
  const auto rows = bench::run_benchmark(c);
  g_tables.push_back(rows);
  bool pass = true;
  std::string detail;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& r = rows[k];
    const int ok = 100 - r.failures;
    const double se = r.std * std::sqrt(static_cast<double>(ok) / (ok - 1)) / std::sqrt(static_cast<double>(ok));
    const bool within = r.failures == 0 && std::abs(r.bias) <= 3.0 * se;
    pass = pass && within;
    detail += r.estimator + " bias " + fmt("%.4f", r.bias) + " (3 SE " + fmt("%.4f", 3 * se) + "); ";
    std::printf("  %s: bias %.5f, MC SE %.5f, rmse %.5f, failures %d\n", r.estimator.c_str(), r.bias, se, r.rmse,
                r.failures);
  }
  const double pehe_com = rows[3].mean_pehe.value_or(NAN);
  const double pehe_gcom = rows[1].mean_pehe.value_or(NAN);
  std::printf("  mean PEHE com/ols %.4f vs gcom/ols %.4f\n", pehe_com, pehe_gcom);
  pass = pass && pehe_com > pehe_gcom;
  detail += "PEHE com/ols " + fmt("%.4f", pehe_com) + " > gcom/ols " + fmt("%.4f", pehe_gcom);
  return {pass, detail};
}

Verdict criterion8() {
  const SeedFit& s = seed_fit(1);
  bench::BenchmarkConfig c;
  c.model = std::make_shared<const model::GenerativeModel>(model::apply_knobs(s.fit.model, {4.0, 0.0, 1.0}));
  c.replications = 100;
  c.samples = 1000;
  c.base_seed = 80000;
  c.estimators = {"ipw/logistic_l2", "ipw/logistic_l2?trim=true"};
  const auto rows = bench::run_benchmark(c);
  g_tables.push_back(rows);
  const Eigen::VectorXd e = model::propensities(*c.model, c.model->covariate_pool);
  const double extreme = ((e.array() < 0.01) || (e.array() > 0.99)).cast<double>().mean();
  std::printf("  pool share with propensity outside [0.01, 0.99]: %.3f\n", extreme);
  for (const auto& r : rows)
    std::printf("  %s: bias %.4f, std %.4f, rmse %.4f, failures %d\n", r.estimator.c_str(), r.bias, r.std, r.rmse,
                r.failures);
  const bool pass = rows[1].rmse < rows[0].rmse && rows[0].failures == 0 && rows[1].failures == 0;
  return {pass, "trimmed rmse " + fmt("%.4f", rows[1].rmse) + " vs untrimmed " + fmt("%.4f", rows[0].rmse)};
}

Verdict criterion9() {
  const model::GenerativeModel& m = seed_fit(1).fit.model;
  const Eigen::MatrixXd& w = m.covariate_pool;
  const model::GroundTruth base = model::ground_truth(m, w);
  double delta_err = 0.0;
  for (double delta : {-1.5, 0.7, 3.0}) {
    const auto g = model::ground_truth(model::apply_knobs(m, {1.0, delta, 1.0}), w);
    delta_err = std::max(delta_err, std::abs(g.ate - (base.ate + delta)));
  }
  const auto flat = model::ground_truth(model::apply_knobs(m, {1.0, 0.4, 0.0}), w);
  const bool all_equal = (flat.iate.array() == flat.iate(0)).all();
  const auto half = model::ground_truth(model::apply_knobs(m, {0.0, 0.0, 1.0}), w);
  const bool all_half = (half.propensity.array() == 0.5).all();
  bool identical = true;
  const model::GenerativeModel roundabout = model::apply_knobs(model::apply_knobs(m, {4.0, 1.0, 0.0}), {});
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = model::sample(m, 500, seed);
    for (const auto* other : {&roundabout}) {
      const auto b = model::sample(model::apply_knobs(*other, {}), 500, seed);
      identical = identical && a.W == b.W && a.T == b.T && a.Y == b.Y;
    }
  }
  const bool pass = delta_err <= 1e-12 && all_equal && all_half && identical;
  return {pass, "max |ATE shift - delta| " + fmt("%.1e", delta_err) + ", lambda=0 IATEs identical: " +
                    (all_equal ? "yes" : "no") + ", alpha=0 propensities all 0.5: " + (all_half ? "yes" : "no") +
                    ", identity knobs bit-identical samples: " + (identical ? "yes" : "no")};
}

Verdict criterion10() {
  if (g_tables.empty()) {
    bench::BenchmarkConfig c;
    c.model = linear_confounded_model();
    c.replications = 30;
    c.samples = 500;
    c.base_seed = 100000;
    c.estimators = {"com/ols", "gcom/ridge", "xlearner/ols", "ipw/logistic_l2?stabilized=true", "ipw/oracle"};
    g_tables.push_back(bench::run_benchmark(c));
  }
  double worst = 0.0;
  std::size_t rows = 0;
  for (const auto& table : g_tables)
    for (const auto& r : table) {
      worst = std::max(worst, std::abs(r.rmse * r.rmse - (r.bias * r.bias + r.std * r.std)) /
                                  std::max(1.0, r.rmse * r.rmse));
      ++rows;
    }
  const std::vector<double> v = {0.3, -1.2, 4.5, 0.0};
  const double self = bench::pehe(v, v);
  const double spot = bench::ate_metrics(std::vector<double>{4.1908}, std::vector<double>{4.0161}).abs_bias;
  const bool pass = worst <= 1e-9 && self == 0.0 && std::abs(spot - 0.1747) <= 1e-12;
  return {pass, "max scaled |rmse^2 - bias^2 - std^2| " + fmt("%.1e", worst) + " over " + std::to_string(rows) +
                    " rows, pehe(v, v) = " + fmt("%g", self) + ", spot abs bias " + fmt("%.4f", spot)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--reference") {
      g_reference = true;
    } else {
      try {
        wanted.insert(std::stoi(a));
      } catch (...) {
        std::fprintf(stderr, "usage: acceptance [1-10 ...] [--reference]\n");
        return 2;
      }
    }
  }
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"realism of the fitted model", criterion1},
      {"power against the linear-Gaussian baseline", criterion2},
      {"effect fidelity", criterion3},
      {"permutation test calibration", criterion4},
      {"oracle equivalence", criterion5},
      {"gradient correctness", criterion6},
      {"estimator sanity", criterion7},
      {"trimming under weak positivity", criterion8},
      {"knob identities", criterion9},
      {"metric identities", criterion10},
  };
  // Criterion 10 checks every benchmark table produced earlier in the run.
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    std::printf("criterion %d: %s\n", id, criteria[k].first.c_str());
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("criterion %d %s: %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
