#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "causalsynth/bench/benchmark.hpp"
#include "causalsynth/bench/fidelity.hpp"
#include "causalsynth/errors.hpp"
#include "causalsynth/io/csv.hpp"
#include "causalsynth/io/files.hpp"
#include "causalsynth/io/plot_data.hpp"
#include "causalsynth/io/run_config.hpp"
#include "causalsynth/model/fit.hpp"
#include "causalsynth/model/model_io.hpp"

namespace causalsynth::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSeedEnv = "CAUSALSYNTH_SEED";
constexpr const char* kThreadsEnv = "CAUSALSYNTH_THREADS";

template <class T>
std::optional<T> env_number(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  const std::string s = v;
  T out{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError(std::string("environment variable ") + name + "='" + s + "' is not a valid number");
  return out;
}

// Flag, then environment, then config, then default.
std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t flag_value, std::uint64_t fallback) {
  if (flag->count() > 0) return flag_value;
  if (auto e = env_number<std::uint64_t>(kSeedEnv)) return *e;
  return fallback;
}

int resolve_threads(const CLI::Option* flag, int flag_value, int fallback) {
  int t = fallback;
  if (flag->count() > 0) {
    t = flag_value;
  } else if (auto e = env_number<int>(kThreadsEnv)) {
    t = *e;
  }
  if (t < 1) throw ArgumentError("threads must be at least 1");
  return t;
}

std::string sidecar_path(const std::string& out) {
  fs::path p(out);
  const std::string ext = p.extension().string();
  p.replace_extension();
  return p.string() + ".truth" + (ext.empty() ? ".csv" : ext);
}

model::GenerativeModel load_knobbed(const std::string& path, const model::KnobConfig& knobs) {
  model::GenerativeModel m = model::load_model(path);
  knobs.validate();
  return knobs == m.knobs ? m : model::apply_knobs(m, knobs);
}

std::string candidates_csv(const std::vector<model::CandidateResult>& cs) {
  std::string s = "candidate,epochs,validation_log_likelihood,gate_p_value,passed_gate,failure\n";
  for (const auto& c : cs)
    s += io::quote_csv(c.candidate.name()) + "," + std::to_string(c.epochs) + "," +
         io::format_double(c.best_validation_log_likelihood) + "," + io::format_double(c.gate_p_value) + "," +
         (c.passed_gate ? "1" : "0") + "," + io::quote_csv(c.failure) + "\n";
  return s;
}

struct Knobs {
  double alpha = 1.0, delta = 0.0, lambda = 1.0;
  void add(CLI::App* app) {
    app->add_option("--knob-positivity", alpha, "Positivity knob alpha (1 leaves propensities unchanged)");
    app->add_option("--knob-effect", delta, "Shift added to every treated mean");
    app->add_option("--knob-heterogeneity", lambda, "Heterogeneity knob lambda in [0,1]");
  }
  model::KnobConfig config() const { return {alpha, delta, lambda}; }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto end = s.find(',', pos);
    if (end == std::string::npos) end = s.size();
    std::string item = s.substr(pos, end - pos);
    if (!item.empty()) out.push_back(item);
    pos = end + 1;
  }
  return out;
}

std::vector<std::string> estimator_list(const std::string& s) {
  // Ids may contain '&'-joined options but never commas, so a comma list is safe.
  auto ids = split_list(s);
  if (ids.empty()) throw ArgumentError("no estimator ids given");
  for (const auto& id : ids) {
    try {
      estimators::parse_estimator_id(id);
    } catch (const Error& e) {
      throw ArgumentError("unknown estimator id '" + id + "': " + e.what());
    }
  }
  return ids;
}

// Fits on data and evaluates on its test split.
struct FitOutcome {
  model::FitResult result;
  model::Dataset test;
  std::vector<Eigen::Index> test_rows;
};

model::FitResult fit_or_keep(const model::Dataset& data, const model::FitConfig& cfg, bool keep_best, std::ostream& out) {
  try {
    return model::fit_model(data, cfg);
  } catch (const model::NoRealisticModelError& e) {
    if (!keep_best) throw;
    out << "warning: no candidate passed the realism gate; keeping the best by validation likelihood\n";
    model::FitResult r;
    r.model = e.best_model();
    r.split = model::split_rows(data.size(), cfg.split, cfg.seed);
    r.candidates = e.candidates();
    return r;
  }
}

void write_fidelity(const bench::FidelityReport& rep, const std::string& path, const std::string& effects_path,
                    std::ostream& out) {
  io::write_file_atomic(path, bench::fidelity_csv(rep));
  std::size_t rejected = 0;
  for (const auto& r : rep.rows) rejected += r.report.p_value <= 0.05;
  out << "wrote " << path << " (" << rep.rows.size() << " tests, " << rejected << " with p <= 0.05)\n";
  if (!effects_path.empty()) {
    if (!rep.effects) throw ArgumentError("effects output needs a ground-truth sidecar");
    io::write_file_atomic(effects_path, bench::effects_csv(*rep.effects));
    out << "wrote " << effects_path << "\n";
  }
}

Eigen::VectorXd truth_for(const std::string& truth_path, Eigen::Index n) {
  model::GroundTruth g;
  try {
    g = io::parse_truth(io::read_file(truth_path));
  } catch (const ParseError& e) {
    throw ParseError(truth_path + ": " + e.what());
  }
  if (g.iate.size() != n)
    throw ShapeError("truth file " + truth_path + " has " + std::to_string(g.iate.size()) + " rows, data has " +
                     std::to_string(n));
  return g.iate;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fit generative models of causal data, sample from them, test their realism and benchmark estimators"};
  app.name("causalsynth");
  app.require_subcommand(1, 1);
  app.fallthrough(false);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model to a dataset and save it");
  std::string fit_data, fit_config, fit_out, fit_report;
  std::vector<double> fit_atoms;
  std::uint64_t fit_seed = 0;
  bool fit_keep = false;
  fit->add_option("--data", fit_data, "Dataset CSV (columns: covariates..., t, y)");
  fit->add_option("--atoms", fit_atoms, "Outcome values with point mass")->delimiter(',');
  fit->add_option("--config", fit_config, "Run configuration JSON");
  fit->add_option("--out", fit_out, "Model file to write");
  auto* fit_seed_opt = fit->add_option("--seed", fit_seed, "Seed (overrides config and " + std::string(kSeedEnv) + ")");
  fit->add_option("--report", fit_report, "Optional CSV of per-candidate results");
  fit->add_flag("--keep-best", fit_keep, "Save the best candidate even if none passes the realism gate");

  // sample
  auto* sample = app.add_subcommand("sample", "Draw a dataset and its ground truth from a model");
  std::string smp_model, smp_out, smp_truth;
  long smp_n = 0;
  std::uint64_t smp_seed = 0;
  Knobs smp_knobs;
  sample->add_option("--model", smp_model, "Model file")->required();
  sample->add_option("--n", smp_n, "Rows to draw")->required()->check(CLI::PositiveNumber);
  auto* smp_seed_opt = sample->add_option("--seed", smp_seed, "Seed");
  smp_knobs.add(sample);
  sample->add_option("--out", smp_out, "Dataset CSV to write")->required();
  sample->add_option("--truth", smp_truth, "Ground-truth CSV (default: <out>.truth.csv)");

  // test
  auto* test = app.add_subcommand("test", "Run the two-sample test battery of a model against data");
  std::string tst_model, tst_data, tst_out, tst_tests, tst_truth, tst_effects;
  std::vector<double> tst_atoms;
  int tst_perms = 1000, tst_threads = 1;
  std::uint64_t tst_seed = 0;
  test->add_option("--model", tst_model, "Model file")->required();
  test->add_option("--data", tst_data, "Held-out dataset CSV")->required();
  test->add_option("--atoms", tst_atoms, "Outcome atoms of the dataset")->delimiter(',');
  test->add_option("--permutations", tst_perms, "Permutations per test")->check(CLI::PositiveNumber);
  auto* tst_seed_opt = test->add_option("--seed", tst_seed, "Seed");
  auto* tst_threads_opt = test->add_option("--threads", tst_threads, "Worker threads");
  test->add_option("--tests", tst_tests, "Comma-separated test ids (default: all)");
  test->add_option("--truth", tst_truth, "Ground-truth CSV aligned with --data, enables effect metrics");
  test->add_option("--effects", tst_effects, "Effect metrics CSV to write (needs --truth)");
  test->add_option("--out", tst_out, "Report CSV to write")->required();

  // fidelity
  auto* fid = app.add_subcommand("fidelity", "Fit on a dataset and test the model on its held-out split");
  std::string fid_data, fid_config, fid_out, fid_truth, fid_effects, fid_model_out, fid_tests;
  std::vector<double> fid_atoms;
  int fid_perms = 1000, fid_threads = 1;
  std::uint64_t fid_seed = 0;
  bool fid_keep = false;
  fid->add_option("--data", fid_data, "Dataset CSV");
  fid->add_option("--atoms", fid_atoms, "Outcome atoms")->delimiter(',');
  fid->add_option("--config", fid_config, "Run configuration JSON");
  auto* fid_perms_opt = fid->add_option("--permutations", fid_perms, "Permutations per test")->check(CLI::PositiveNumber);
  auto* fid_seed_opt = fid->add_option("--seed", fid_seed, "Seed");
  auto* fid_threads_opt = fid->add_option("--threads", fid_threads, "Worker threads");
  auto* fid_tests_opt = fid->add_option("--tests", fid_tests, "Comma-separated test ids (default: all)");
  fid->add_option("--truth", fid_truth, "Ground-truth CSV aligned with --data");
  fid->add_option("--effects", fid_effects, "Effect metrics CSV to write (needs --truth)");
  fid->add_option("--model-out", fid_model_out, "Also save the fitted model");
  fid->add_flag("--keep-best", fid_keep, "Continue with the best candidate if none passes the realism gate");
  fid->add_option("--out", fid_out, "Report CSV to write")->required();

  // benchmark
  auto* bm = app.add_subcommand("benchmark", "Evaluate estimators on repeated samples from a model");
  std::string bm_model, bm_estimators, bm_out;
  int bm_reps = 100, bm_threads = 1;
  long bm_samples = 1000;
  std::uint64_t bm_seed = 0;
  Knobs bm_knobs;
  bm->add_option("--model", bm_model, "Model file")->required();
  bm->add_option("--estimators", bm_estimators, "Comma-separated estimator ids, e.g. com/ols,ipw/logistic_l2?trim=true")
      ->required();
  bm->add_option("--reps", bm_reps, "Replications")->check(CLI::PositiveNumber);
  bm->add_option("--samples", bm_samples, "Rows per replication")->check(CLI::PositiveNumber);
  auto* bm_seed_opt = bm->add_option("--seed", bm_seed, "Base seed");
  auto* bm_threads_opt = bm->add_option("--threads", bm_threads, "Worker threads");
  bm_knobs.add(bm);
  bm->add_option("--out", bm_out, "Metrics CSV to write")->required();

  // plot-data
  auto* plot = app.add_subcommand("plot-data", "Write histogram, density and Q-Q data comparing model and data");
  std::string pl_model, pl_data, pl_dir;
  std::vector<double> pl_atoms;
  std::uint64_t pl_seed = 0;
  plot->add_option("--model", pl_model, "Model file")->required();
  plot->add_option("--data", pl_data, "Dataset CSV")->required();
  plot->add_option("--atoms", pl_atoms, "Outcome atoms")->delimiter(',');
  auto* pl_seed_opt = plot->add_option("--seed", pl_seed, "Seed");
  plot->add_option("--out-dir", pl_dir, "Directory for the CSV files")->required();

  // run
  auto* run = app.add_subcommand("run", "Run the pipeline described by a configuration file");
  std::string run_config;
  std::uint64_t run_seed = 0;
  int run_threads = 1;
  bool run_keep = false;
  run->add_option("--config", run_config, "Run configuration JSON")->required();
  auto* run_seed_opt = run->add_option("--seed", run_seed, "Seed");
  auto* run_threads_opt = run->add_option("--threads", run_threads, "Worker threads");
  run->add_flag("--keep-best", run_keep, "Continue with the best candidate if none passes the realism gate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) {
      io::RunConfig cfg;
      if (!fit_config.empty()) cfg = io::load_run_config(fit_config);
      cfg.fit.seed = resolve_seed(fit_seed_opt, fit_seed, cfg.seed);
      const std::string data_path = fit_data.empty() ? cfg.data.path : fit_data;
      const std::string out_path = fit_out.empty() ? cfg.outputs.model : fit_out;
      if (data_path.empty()) throw ArgumentError("fit needs --data or data.path in the config");
      if (out_path.empty()) throw ArgumentError("fit needs --out or outputs.model in the config");
      const model::Dataset data = io::load_dataset(data_path, fit_atoms.empty() ? cfg.data.atoms : fit_atoms);
      const model::FitResult r = fit_or_keep(data, cfg.fit, fit_keep, out);
      model::save_model(r.model, out_path);
      if (!fit_report.empty()) io::write_file_atomic(fit_report, candidates_csv(r.candidates));
      out << "wrote " << out_path << " (candidate " << r.model.fit.candidate << ", validation log-likelihood "
          << r.model.fit.validation_log_likelihood << ")\n";
    } else if (sample->parsed()) {
      const model::GenerativeModel m = load_knobbed(smp_model, smp_knobs.config());
      const auto s = model::sample_with_truth(m, smp_n, resolve_seed(smp_seed_opt, smp_seed, 0));
      const std::string truth = smp_truth.empty() ? sidecar_path(smp_out) : smp_truth;
      io::save_dataset(s.data, smp_out);
      io::write_file_atomic(truth, io::truth_csv(s.truth));
      out << "wrote " << smp_out << " and " << truth << " (ate " << s.truth.ate << ")\n";
    } else if (test->parsed()) {
      const model::GenerativeModel m = model::load_model(tst_model);
      const model::Dataset data = io::load_dataset(tst_data, tst_atoms);
      bench::FidelityOptions o;
      o.permutations = tst_perms;
      o.seed = resolve_seed(tst_seed_opt, tst_seed, 0);
      o.threads = resolve_threads(tst_threads_opt, tst_threads, 1);
      o.tests = split_list(tst_tests);
      o.validate();
      if (!tst_effects.empty() && tst_truth.empty()) throw ArgumentError("--effects needs --truth");
      Eigen::VectorXd iate;
      if (!tst_truth.empty()) iate = truth_for(tst_truth, data.size());
      const auto rep = bench::fidelity_report(m, data, o, tst_truth.empty() ? nullptr : &iate);
      write_fidelity(rep, tst_out, tst_effects, out);
    } else if (fid->parsed()) {
      io::RunConfig cfg;
      if (!fid_config.empty()) cfg = io::load_run_config(fid_config);
      cfg.fit.seed = resolve_seed(fid_seed_opt, fid_seed, cfg.seed);
      bench::FidelityOptions o;
      o.permutations = fid_perms_opt->count() ? fid_perms : cfg.tests.permutations;
      o.seed = cfg.fit.seed;
      o.threads = resolve_threads(fid_threads_opt, fid_threads, cfg.threads);
      o.tests = fid_tests_opt->count() ? split_list(fid_tests) : cfg.tests.tests;
      o.validate();
      const std::string data_path = fid_data.empty() ? cfg.data.path : fid_data;
      const std::string truth_path = fid_truth.empty() ? cfg.data.truth : fid_truth;
      if (data_path.empty()) throw ArgumentError("fidelity needs --data or data.path in the config");
      if (!fid_effects.empty() && truth_path.empty()) throw ArgumentError("--effects needs --truth");
      const model::Dataset data = io::load_dataset(data_path, fid_atoms.empty() ? cfg.data.atoms : fid_atoms);
      Eigen::VectorXd iate;
      if (!truth_path.empty()) iate = truth_for(truth_path, data.size());
      const model::FitResult r = fit_or_keep(data, cfg.fit, fid_keep, out);
      if (!fid_model_out.empty()) model::save_model(r.model, fid_model_out);
      Eigen::VectorXd test_iate;
      if (!truth_path.empty()) test_iate = iate(r.split.test);
      const auto rep = bench::fidelity_report(r.model, data.subset(r.split.test), o,
                                              truth_path.empty() ? nullptr : &test_iate);
      write_fidelity(rep, fid_out, fid_effects, out);
    } else if (bm->parsed()) {
      bench::BenchmarkConfig c;
      c.estimators = estimator_list(bm_estimators);
      c.model = std::make_shared<const model::GenerativeModel>(load_knobbed(bm_model, bm_knobs.config()));
      c.replications = bm_reps;
      c.samples = bm_samples;
      c.base_seed = resolve_seed(bm_seed_opt, bm_seed, 0);
      c.threads = resolve_threads(bm_threads_opt, bm_threads, 1);
      const auto rows = bench::run_benchmark(c);
      io::write_file_atomic(bm_out, bench::benchmark_csv(rows));
      out << "wrote " << bm_out << " (" << rows.size() << " estimators, " << bm_reps << " replications)\n";
    } else if (plot->parsed()) {
      const model::GenerativeModel m = model::load_model(pl_model);
      const model::Dataset data = io::load_dataset(pl_data, pl_atoms);
      io::export_plot_data(m, data, pl_dir, resolve_seed(pl_seed_opt, pl_seed, 0));
      out << "wrote hist_t.csv, hist_y.csv, kde_y.csv, qq_y.csv to " << pl_dir << "\n";
    } else if (run->parsed()) {
      io::RunConfig cfg = io::load_run_config(run_config);
      const std::uint64_t seed = resolve_seed(run_seed_opt, run_seed, cfg.seed);
      const int threads = resolve_threads(run_threads_opt, run_threads, cfg.threads);
      cfg.fit.seed = seed;
      if (cfg.data.path.empty()) throw ConfigError("data.path is required by run");
      const model::Dataset data = io::load_dataset(cfg.data.path, cfg.data.atoms);
      Eigen::VectorXd iate;
      if (!cfg.data.truth.empty()) iate = truth_for(cfg.data.truth, data.size());
      if (!cfg.outputs.effects.empty() && cfg.data.truth.empty())
        throw ConfigError("outputs.effects needs data.truth");

      const model::FitResult r = fit_or_keep(data, cfg.fit, run_keep, out);
      if (!cfg.outputs.model.empty()) {
        model::save_model(r.model, cfg.outputs.model);
        out << "wrote " << cfg.outputs.model << "\n";
      }
      if (!cfg.outputs.fidelity.empty()) {
        bench::FidelityOptions o;
        o.permutations = cfg.tests.permutations;
        o.tests = cfg.tests.tests;
        o.seed = seed;
        o.threads = threads;
        Eigen::VectorXd test_iate;
        if (iate.size() > 0) test_iate = iate(r.split.test);
        const auto rep =
            bench::fidelity_report(r.model, data.subset(r.split.test), o, iate.size() > 0 ? &test_iate : nullptr);
        write_fidelity(rep, cfg.outputs.fidelity, cfg.outputs.effects, out);
      }
      if (!cfg.outputs.plot_dir.empty()) {
        io::export_plot_data(r.model, data.subset(r.split.test), cfg.outputs.plot_dir, seed);
        out << "wrote plot data to " << cfg.outputs.plot_dir << "\n";
      }
      const auto knobbed = std::make_shared<const model::GenerativeModel>(
          cfg.knobs == r.model.knobs ? r.model : model::apply_knobs(r.model, cfg.knobs));
      if (!cfg.outputs.samples.empty()) {
        const auto s = model::sample_with_truth(*knobbed, cfg.sample_size > 0 ? cfg.sample_size : data.size(), seed);
        io::save_dataset(s.data, cfg.outputs.samples);
        io::write_file_atomic(sidecar_path(cfg.outputs.samples), io::truth_csv(s.truth));
        out << "wrote " << cfg.outputs.samples << " and " << sidecar_path(cfg.outputs.samples) << "\n";
      }
      if (!cfg.outputs.benchmark.empty()) {
        bench::BenchmarkConfig c;
        c.estimators = cfg.benchmark.estimators;
        c.model = knobbed;
        c.replications = cfg.benchmark.replications;
        c.samples = cfg.benchmark.samples;
        c.base_seed = seed;
        c.threads = threads;
        io::write_file_atomic(cfg.outputs.benchmark, bench::benchmark_csv(bench::run_benchmark(c)));
        out << "wrote " << cfg.outputs.benchmark << "\n";
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace causalsynth::cli
