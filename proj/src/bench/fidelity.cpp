#include "causalsynth/bench/fidelity.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "causalsynth/bench/metrics.hpp"
#include "causalsynth/errors.hpp"
#include "causalsynth/random.hpp"

namespace causalsynth::bench {

namespace {

const char* const kJointStats[] = {"wass1", "wass2", "fr", "knn", "energy"};

stats::TwoSampleStatistic joint_statistic(const std::string& name, Eigen::Index exact_limit) {
  if (name == "wass1") return stats::wasserstein_statistic(1, exact_limit);
  if (name == "wass2") return stats::wasserstein_statistic(2, exact_limit);
  if (name == "fr") return stats::fr_statistic();
  if (name == "knn") return stats::knn_statistic();
  return stats::energy_statistic();
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  return {m.col(c).data(), m.col(c).data() + m.rows()};
}

}  // namespace

std::vector<std::string> all_fidelity_tests() {
  std::vector<std::string> out = {"ks_t", "es_t", "ks_y", "es_y"};
  for (const char* suffix : {"_ty", "_wty"})
    for (const char* s : kJointStats) out.push_back(std::string(s) + suffix);
  return out;
}

void FidelityOptions::validate() const {
  if (permutations < 1) throw ArgumentError("permutations must be at least 1");
  if (threads < 1) throw ArgumentError("threads must be at least 1");
  const auto known = all_fidelity_tests();
  for (const auto& t : tests)
    if (std::find(known.begin(), known.end(), t) == known.end()) throw ArgumentError("unknown test '" + t + "'");
}

FidelityReport fidelity_battery(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::Index d,
                                const FidelityOptions& options) {
  options.validate();
  if (a.cols() != d + 2 || b.cols() != d + 2) throw ShapeError("joint samples must have d + 2 columns");
  if (a.rows() != b.rows()) throw ShapeError("joint samples must have equal row counts");
  const auto& wanted = options.tests.empty() ? all_fidelity_tests() : options.tests;
  FidelityReport report;
  report.sample_size = a.rows();
  const auto ids = all_fidelity_tests();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const std::string& id = ids[k];
    if (std::find(wanted.begin(), wanted.end(), id) == wanted.end()) continue;
    FidelityRow row;
    row.test = id;
    if (id.size() == 4 && (id[0] == 'k' || id[0] == 'e') && id[2] == '_') {
      const bool is_t = id[3] == 't';
      row.variables = is_t ? "T" : "Y";
      const auto x = column(a, is_t ? d : d + 1), y = column(b, is_t ? d : d + 1);
      row.report = id[0] == 'k' ? stats::ks_test(x, y) : stats::es_test(x, y);
    } else {
      const bool wty = id.ends_with("_wty");
      row.variables = wty ? "(W,T,Y)" : "(T,Y)";
      const std::string stat = id.substr(0, id.rfind('_'));
      stats::PermutationOptions po;
      po.permutations = options.permutations;
      po.threads = options.threads;
      po.seed = mix_seed(options.seed, 100 + k);
      const Eigen::MatrixXd x = wty ? a : a.rightCols(2).eval();
      const Eigen::MatrixXd y = wty ? b : b.rightCols(2).eval();
      row.report = stats::permutation_test(x, y, joint_statistic(stat, options.exact_limit), po);
    }
    row.report.name = id;
    report.rows.push_back(std::move(row));
  }
  return report;
}

FidelityReport fidelity_report(const model::GenerativeModel& model, const model::Dataset& heldout,
                               const FidelityOptions& options, const Eigen::VectorXd* true_iate) {
  options.validate();
  model.validate();
  heldout.validate();
  if (heldout.num_covariates() != model.num_covariates())
    throw ShapeError("held-out data has " + std::to_string(heldout.num_covariates()) + " covariates, model expects " +
                     std::to_string(model.num_covariates()));
  if (true_iate && true_iate->size() != heldout.size())
    throw ShapeError("true effects must have one entry per held-out row");

  const Eigen::Index n = std::min(heldout.size(), model.covariate_pool.rows());
  if (n < 2) throw ArgumentError("fidelity needs at least two rows on each side");

  // Held-out rows beyond the pool size are dropped at random.
  std::vector<Eigen::Index> keep(static_cast<std::size_t>(heldout.size()));
  std::iota(keep.begin(), keep.end(), 0);
  if (n < heldout.size()) {
    Rng rng = make_rng(options.seed, 2);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
      std::swap(keep[i], keep[i + uniform_index(rng, keep.size() - i)]);
    keep.resize(static_cast<std::size_t>(n));
    std::sort(keep.begin(), keep.end());
  }
  const model::Dataset real = heldout.subset(keep);
  const model::Dataset fake = model::sample_distinct(model, n, mix_seed(options.seed, 1));

  const auto& pre = model.preprocess;
  const Eigen::Index d = model.num_covariates();
  auto joint = [&](const model::Dataset& s) {
    Eigen::MatrixXd m(n, d + 2);
    m.leftCols(d) = pre.transform_w(s.W);
    m.col(d) = s.T;
    for (Eigen::Index i = 0; i < n; ++i) m(i, d + 1) = pre.transform_y(s.Y(i));
    return m;
  };
  FidelityReport report = fidelity_battery(joint(real), joint(fake), d, options);

  if (true_iate) {
    const model::GroundTruth g = model::ground_truth(model, heldout.W);
    EffectSummary e;
    e.true_ate = true_iate->mean();
    e.model_ate = g.ate;
    e.abs_bias = std::abs(e.model_ate - e.true_ate);
    e.pehe = pehe({g.iate.data(), static_cast<std::size_t>(g.iate.size())},
                  {true_iate->data(), static_cast<std::size_t>(true_iate->size())});
    report.effects = e;
  }
  return report;
}

std::string fidelity_csv(const FidelityReport& report) {
  std::ostringstream os;
  os << std::setprecision(17) << "test,variables,statistic,p_value,method,permutations\n";
  for (const auto& r : report.rows)
    os << r.test << ",\"" << r.variables << "\"," << r.report.statistic << ',' << r.report.p_value << ','
       << r.report.method << ',' << r.report.permutations << '\n';
  return os.str();
}

std::string effects_csv(const EffectSummary& e) {
  std::ostringstream os;
  os << std::setprecision(17) << "true_ate,model_ate,abs_bias,pehe\n"
     << e.true_ate << ',' << e.model_ate << ',' << e.abs_bias << ',' << e.pehe << '\n';
  return os.str();
}

}  // namespace causalsynth::bench
