#include "causalsynth/bench/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "causalsynth/bench/metrics.hpp"
#include "causalsynth/errors.hpp"
#include "causalsynth/estimators/estimators.hpp"

namespace causalsynth::bench {

namespace {

struct Outcome {
  bool ok = false;
  double error = 0.0;
  std::optional<double> pehe;
  std::string message;
};

}  // namespace

void BenchmarkConfig::validate() const {
  if (!model) throw ArgumentError("benchmark needs a fitted model");
  if (replications < 1) throw ArgumentError("replications must be at least 1");
  if (samples < 10) throw ArgumentError("samples per replication must be at least 10");
  if (estimators.empty() && custom.empty()) throw ArgumentError("benchmark needs at least one estimator");
  for (const auto& c : custom)
    if (!c.run) throw ArgumentError("custom estimator '" + c.name + "' has no function");
  if (threads < 1) throw ArgumentError("threads must be at least 1");
}

std::vector<MetricRow> run_benchmark(const BenchmarkConfig& config) {
  config.validate();
  config.model->validate();
  const model::GenerativeModel& gm = *config.model;

  std::vector<estimators::EstimatorSpec> specs;
  for (const auto& id : config.estimators) {
    estimators::EstimatorSpec s;
    try {
      s = estimators::parse_estimator_id(id);
    } catch (const ArgumentError& e) {
      throw ArgumentError("estimator '" + id + "': " + e.what());
    }
    if (s.propensity.family == estimators::ClassifierFamily::oracle)
      s.propensity.oracle = [&gm](const Eigen::MatrixXd& w) { return model::propensities(gm, w); };
    specs.push_back(std::move(s));
  }

  using Runner = std::function<estimators::EstimatorResult(const model::Dataset&)>;
  std::vector<Runner> runners;
  std::vector<std::string> names = config.estimators;
  for (const auto& s : specs) runners.push_back([&s](const model::Dataset& d) { return estimators::estimate(s, d); });
  for (const auto& c : config.custom) {
    runners.push_back(c.run);
    names.push_back(c.name);
  }

  const auto reps = static_cast<std::size_t>(config.replications);
  std::vector<std::vector<Outcome>> results(reps, std::vector<Outcome>(runners.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < reps; i = next++) {
      const model::SampleWithTruth s = model::sample_with_truth(gm, config.samples, config.base_seed + i);
      for (std::size_t k = 0; k < runners.size(); ++k) {
        Outcome& o = results[i][k];
        try {
          const estimators::EstimatorResult r = runners[k](s.data);
          if (!std::isfinite(r.ate_hat)) throw NumericError("non-finite estimate");
          o.error = r.ate_hat - s.truth.ate;
          if (r.iate_hat && r.iate_hat->size() != s.truth.iate.size())
            throw ShapeError("estimator returned the wrong number of individual effects");
          if (r.iate_hat)
            o.pehe = pehe({r.iate_hat->data(), static_cast<std::size_t>(r.iate_hat->size())},
                          {s.truth.iate.data(), static_cast<std::size_t>(s.truth.iate.size())});
          o.ok = true;
        } catch (const std::exception& e) {
          o.message = e.what();
        }
      }
    }
  };
  const int nthreads = std::min<int>(config.threads, config.replications);
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<MetricRow> rows;
  for (std::size_t k = 0; k < runners.size(); ++k) {
    MetricRow row;
    row.estimator = names[k];
    std::vector<double> errors, pehes;
    bool all_pehe = true;
    for (std::size_t i = 0; i < reps; ++i) {
      const Outcome& o = results[i][k];
      if (!o.ok) {
        ++row.failures;
        if (std::find(row.failure_messages.begin(), row.failure_messages.end(), o.message) ==
            row.failure_messages.end())
          row.failure_messages.push_back(o.message);
        continue;
      }
      errors.push_back(o.error);
      if (o.pehe)
        pehes.push_back(*o.pehe);
      else
        all_pehe = false;
    }
    if (errors.empty()) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.bias = row.abs_bias = row.std = row.rmse = nan;
    } else {
      const std::vector<double> zeros(errors.size(), 0.0);
      const AteMetrics m = ate_metrics(errors, zeros);
      row.bias = m.bias;
      row.abs_bias = m.abs_bias;
      row.std = m.std;
      row.rmse = m.rmse;
      if (all_pehe) {
        double s = 0.0;
        for (double v : pehes) s += v;
        row.mean_pehe = s / static_cast<double>(pehes.size());
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string benchmark_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# errors are tau_hat - tau per replication; std is their population standard deviation\n";
  os << "estimator,bias,abs_bias,std,rmse,mean_pehe,n_failures\n";
  for (const auto& r : rows) {
    os << '"' << r.estimator << "\"," << r.bias << ',' << r.abs_bias << ',' << r.std << ',' << r.rmse << ',';
    if (r.mean_pehe) os << *r.mean_pehe;
    os << ',' << r.failures << '\n';
  }
  return os.str();
}

}  // namespace causalsynth::bench
