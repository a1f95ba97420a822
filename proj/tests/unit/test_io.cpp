#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "causalsynth/bench/fidelity.hpp"
#include "causalsynth/errors.hpp"
#include "causalsynth/io/csv.hpp"
#include "causalsynth/io/files.hpp"
#include "causalsynth/io/plot_data.hpp"
#include "causalsynth/io/run_config.hpp"
#include "causalsynth/random.hpp"
#include "cli.hpp"
#include "support/synthetic.hpp"

using namespace causalsynth;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("causalsynth_io_" + std::to_string(::getpid())) / name;
  fs::create_directories(p);
  return p;
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "causalsynth");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

// Small, fast fit settings for CLI tests.
const char* kQuickConfig = R"({"seed": 4, "fit": {"grid": [{"hidden_layers": 1, "width": 16, "activation": "relu"}],
  "max_epochs": 40, "gate_alpha": 0}})";

}  // namespace

TEST_CASE("well-formed dataset file") {
  const auto d = io::parse_dataset("# comment\nx1, \"x,2\" ,t,y\n1,2,0,3.5\n\n-1,0.5,1,0\n2e3,-0,1,-7\n", {0.0});
  CHECK(d.size() == 3);
  CHECK(d.num_covariates() == 2);
  CHECK(d.covariate_names == std::vector<std::string>{"x1", "x,2"});
  CHECK(d.W(2, 0) == 2000.0);
  CHECK(d.T(1) == 1.0);
  CHECK(d.Y(2) == -7.0);
  CHECK(d.atoms == std::vector<double>{0.0});
  // t and y may sit anywhere.
  const auto e = io::parse_dataset("y,a,t\n1,2,1\n4,5,0\n");
  CHECK(e.W(0, 0) == 2.0);
  CHECK(e.Y(0) == 1.0);
}

TEST_CASE("dataset errors name row and column") {
  const std::string bad_t = "a,t,y\n1,0,1\n2,1,2\n3,0,3\n4,1,4\n5,2,5\n";
  const std::string m = message_of([&] { io::parse_dataset(bad_t); });
  CHECK(m.find("row 5") != std::string::npos);
  CHECK(m.find("column t") != std::string::npos);
  CHECK_THROWS_AS(io::parse_dataset(bad_t), ParseError);
  CHECK(message_of([] { io::parse_dataset("a,t,y\n1,0,1\n2,1,abc\n"); }).find("row 2, column y") != std::string::npos);
  CHECK(message_of([] { io::parse_dataset("a,t,y\n1,0,1\nnan,1,1\n"); }).find("row 2, column a") != std::string::npos);
  CHECK(message_of([] { io::parse_dataset("a,t,y\n1,0,1\n,1,1\n"); }).find("row 2, column a") != std::string::npos);
  CHECK(message_of([] { io::parse_dataset("a,t\n1,0\n"); }).find("column y") != std::string::npos);
  CHECK(message_of([] { io::parse_dataset("a,y\n1,0\n"); }).find("column t") != std::string::npos);
  CHECK(message_of([] { io::parse_dataset("a,t,y\n1,0,1\n1,0\n"); }).find("row 2") != std::string::npos);
  CHECK_THROWS_AS(io::parse_dataset("a,t,y\n"), ParseError);
  CHECK_THROWS_AS(io::parse_dataset("a,a,t,y\n1,1,0,1\n"), ParseError);
  CHECK_THROWS_AS(io::parse_dataset("\"a,t,y\n1,0,1\n"), ParseError);
  CHECK_THROWS_AS(io::load_dataset("/nonexistent/causalsynth.csv"), IoError);
}

TEST_CASE("dataset round trip is bit exact") {
  Rng rng = make_rng(31, 0);
  model::Dataset d;
  d.W.resize(200, 3);
  d.T.resize(200);
  d.Y.resize(200);
  for (Eigen::Index i = 0; i < 200; ++i) {
    for (int j = 0; j < 3; ++j) d.W(i, j) = std::ldexp(standard_normal(rng), static_cast<int>(uniform_index(rng, 200)) - 100);
    d.T(i) = uniform01(rng) < 0.5;
    d.Y(i) = standard_normal(rng) / 3.0;
  }
  d.W(0, 0) = std::numeric_limits<double>::denorm_min();
  d.W(1, 0) = std::numeric_limits<double>::max();
  d.W(2, 0) = -0.0;
  d.Y(3) = 0.1 + 0.2;
  d.covariate_names = {"age", "x,1", "q\"uote"};
  const fs::path p = scratch("roundtrip") / "d.csv";
  io::save_dataset(d, p);
  const auto back = io::load_dataset(p);
  CHECK(back.covariate_names == d.covariate_names);
  for (Eigen::Index i = 0; i < 200; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(std::memcmp(&back.W(i, j), &d.W(i, j), sizeof(double)) == 0);
    CHECK(back.T(i) == d.T(i));
    CHECK(std::memcmp(&back.Y(i), &d.Y(i), sizeof(double)) == 0);
  }
  CHECK(io::dataset_csv(back) == io::dataset_csv(d));
}

TEST_CASE("truth sidecar round trip") {
  model::GroundTruth g;
  g.propensity = Eigen::Vector3d(0.1, 0.5, 1.0 / 3.0);
  g.mu0 = Eigen::Vector3d(-1.0, 0.0, 2.5);
  g.mu1 = Eigen::Vector3d(0.0, 0.3, 4.0);
  g.iate = g.mu1 - g.mu0;
  g.ate = g.iate.mean();
  const std::string text = io::truth_csv(g);
  CHECK(text.rfind("row,propensity,mu0,mu1,iate\n1,", 0) == 0);
  CHECK(text.find("# ate=") != std::string::npos);
  const auto back = io::parse_truth(text);
  CHECK(back.ate == g.ate);
  CHECK(back.iate == g.iate);
  CHECK(back.propensity == g.propensity);
  CHECK_THROWS_AS(io::parse_truth("row,propensity,mu0,mu1,iate\n1,0.5,0,1,1\n"), ParseError);
}

TEST_CASE("report csvs parse back") {
  const auto rows = io::parse_csv("# note\ntest,variables,p\nks_t,\"(T,Y)\",0.5\n");
  CHECK(rows.comments == std::vector<std::string>{" note"});
  CHECK(rows.rows[0][1] == "(T,Y)");
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("quantiles and bandwidth by hand") {
  const std::vector<double> x = {4.0, 1.0, 3.0, 2.0};
  CHECK(io::quantile(x, 0.0) == 1.0);
  CHECK(io::quantile(x, 1.0) == 4.0);
  CHECK(io::quantile(x, 0.5) == 2.5);
  CHECK(io::quantile(x, 0.25) == doctest::Approx(1.75));
  // sd = sqrt(5/3) = 1.2910; IQR/1.34 = 1.5/1.34 = 1.1194 is smaller.
  CHECK(io::silverman_bandwidth(x) == doctest::Approx(0.9 * (1.5 / 1.34) * std::pow(4.0, -0.2)).epsilon(1e-12));
  CHECK(io::silverman_bandwidth({2.0, 2.0, 2.0}) == doctest::Approx(0.9 * std::pow(3.0, -0.2)));
  CHECK_THROWS_AS(io::quantile({}, 0.5), ArgumentError);
}

TEST_CASE("plot data self comparison and conservation") {
  const auto d = testsupport::NonlinearDgp::draw(700, 3);
  const io::PlotData p = io::plot_data(d, d);
  for (std::size_t i = 0; i < p.qq_y.real.size(); ++i) CHECK(p.qq_y.real[i] == p.qq_y.generated[i]);
  CHECK(p.qq_y.probability.size() == 99);
  CHECK(p.qq_y.probability.front() == doctest::Approx(0.01));
  long ty = 0, yy = 0;
  for (auto c : p.t.real) ty += c;
  for (auto c : p.y.real) yy += c;
  CHECK(ty == 700);
  CHECK(yy == 700);
  CHECK(p.t.real[1] == static_cast<long>(d.T.sum()));
  CHECK(p.y.edges.size() == 31);

  for (const auto* c : {&p.y_t0, &p.y_t1}) {
    double area = 0.0;
    for (std::size_t i = 1; i < c->grid.size(); ++i)
      area += 0.5 * (c->grid[i] - c->grid[i - 1]) * (c->real[i] + c->real[i - 1]);
    CHECK(std::abs(area - 1.0) <= 0.01);
    // One density value from the kernel sum written out directly.
    const std::size_t g = c->grid.size() / 3;
    double s = 0.0;
    long count = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (d.T(i) != c->t) continue;
      const double z = (c->grid[g] - d.Y(i)) / c->bandwidth_real;
      s += std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
      ++count;
    }
    CHECK(c->real[g] == doctest::Approx(s / (count * c->bandwidth_real)).epsilon(1e-12));
  }
}

TEST_CASE("plot data shifted sample moves the quantiles") {
  auto d = testsupport::NonlinearDgp::draw(400, 8);
  auto g = d;
  g.Y.array() += 1.0;
  const io::PlotData p = io::plot_data(d, g);
  for (std::size_t i = 0; i < 99; ++i) CHECK(p.qq_y.generated[i] == doctest::Approx(p.qq_y.real[i] + 1.0));
}

TEST_CASE("run config parsing and validation") {
  const fs::path root = fs::path(CAUSALSYNTH_SOURCE_DIR);
  for (const char* name : {"demo.json", "linear_baseline.json", "positivity_stress.json"}) {
    INFO(name);
    CHECK_NOTHROW(io::load_run_config(root / "configs" / name));
  }
  const auto lin = io::load_run_config(root / "configs" / "linear_baseline.json");
  CHECK(lin.fit.family.continuous == dist::ContinuousFamily::gaussian);
  CHECK(lin.fit.gate_alpha == 0.0);
  CHECK(lin.tests.tests.size() == 5);

  const auto c = io::parse_run_config(R"({"seed": 12, "knobs": {"effect_delta": 2},
    "fit": {"split": {"train": 0.6, "validation": 0.1, "test": 0.3}, "grid": [{"hidden_layers": 2, "width": 8, "activation": "tanh"}]}})");
  CHECK(c.seed == 12);
  CHECK(c.fit.seed == 12);
  CHECK(c.knobs.effect_delta == 2.0);
  CHECK(c.fit.split.train == 0.6);
  REQUIRE(c.fit.grid.size() == 1);
  CHECK(c.fit.grid[0].activation == nn::Activation::tanh);

  const auto err = [](const std::string& text) { return message_of([&] { io::parse_run_config(text); }); };
  CHECK(err(R"({"sead": 1})").find("sead") != std::string::npos);
  CHECK(err(R"({"fit": {"max_epoch": 3}})").find("fit.max_epoch") != std::string::npos);
  CHECK(err(R"({"seed": -1})").find("seed") != std::string::npos);
  CHECK(err(R"({"seed": "x"})").find("seed") != std::string::npos);
  CHECK(err(R"({"tests": {"select": ["ks_z"]}})").find("ks_z") != std::string::npos);
  CHECK(err(R"({"benchmark": {"estimators": ["com/svm"]}})").find("benchmark.estimators") != std::string::npos);
  CHECK(err(R"({"knobs": {"positivity_alpha": -1}})").find("knobs") != std::string::npos);
  CHECK(err(R"({"fit": {"split": {"train": 0.9}}})").find("fit") != std::string::npos);
  CHECK(err(R"({"fit": {"outcome": {"family": "beta"}}})").find("fit.outcome.family") != std::string::npos);
  CHECK(err(R"({"preset": "cubic"})").find("preset") != std::string::npos);
  CHECK(err("{").find("JSON") != std::string::npos);
  CHECK_THROWS_AS(io::parse_run_config("[]"), ConfigError);
}

TEST_CASE("cli sample then test") {
  const fs::path dir = scratch("pipeline");
  const auto data = testsupport::NonlinearDgp::draw(400, 21);
  io::save_dataset(data, dir / "d.csv");
  io::write_file_atomic(dir / "c.json", kQuickConfig);
  const auto fit = run_cli({"fit", "--data", (dir / "d.csv").string(), "--atoms", "0", "--config", (dir / "c.json").string(),
                        "--out", (dir / "m.json").string()});
  REQUIRE_MESSAGE(fit.code == 0, fit.err);
  const auto smp = run_cli({"sample", "--model", (dir / "m.json").string(), "--n", "150", "--seed", "5", "--out",
                        (dir / "s.csv").string(), "--knob-effect", "0.5"});
  REQUIRE_MESSAGE(smp.code == 0, smp.err);
  const auto s = io::load_dataset(dir / "s.csv");
  CHECK(s.size() == 150);
  const auto truth = io::parse_truth(io::read_file(dir / "s.truth.csv"));
  CHECK(truth.iate.size() == 150);

  const auto tst = run_cli({"test", "--model", (dir / "m.json").string(), "--data", (dir / "d.csv").string(),
                        "--permutations", "20", "--seed", "1", "--out", (dir / "r.csv").string()});
  REQUIRE_MESSAGE(tst.code == 0, tst.err);
  const auto rep = io::parse_csv(io::read_file(dir / "r.csv"));
  CHECK(rep.rows.size() == bench::all_fidelity_tests().size());
  const auto some = run_cli({"test", "--model", (dir / "m.json").string(), "--data", (dir / "s.csv").string(), "--tests",
                         "ks_y,energy_ty", "--permutations", "20", "--truth", (dir / "s.truth.csv").string(),
                         "--effects", (dir / "e.csv").string(), "--out", (dir / "r2.csv").string()});
  REQUIRE_MESSAGE(some.code == 0, some.err);
  CHECK(io::parse_csv(io::read_file(dir / "r2.csv")).rows.size() == 2);
  // The sample came from the knobbed model, so the effect gap equals the knob.
  const auto eff = io::parse_csv(io::read_file(dir / "e.csv"));
  CHECK(std::stod(eff.rows[0][2]) == doctest::Approx(0.5).epsilon(1e-9));

  const auto plot = run_cli({"plot-data", "--model", (dir / "m.json").string(), "--data", (dir / "d.csv").string(),
                         "--out-dir", (dir / "plots").string()});
  REQUIRE_MESSAGE(plot.code == 0, plot.err);
  for (const char* f : {"hist_t.csv", "hist_y.csv", "kde_y.csv", "qq_y.csv"}) CHECK(fs::exists(dir / "plots" / f));
  CHECK(io::parse_csv(io::read_file(dir / "plots" / "qq_y.csv")).rows.size() == 99);

  const auto bm = run_cli({"benchmark", "--model", (dir / "m.json").string(), "--estimators", "com/ols,ipw/oracle", "--reps",
                       "3", "--samples", "100", "--out", (dir / "b.csv").string()});
  REQUIRE_MESSAGE(bm.code == 0, bm.err);
  CHECK(io::parse_csv(io::read_file(dir / "b.csv")).rows.size() == 2);
}

TEST_CASE("cli fit is byte reproducible") {
  const fs::path dir = scratch("determinism");
  io::save_dataset(testsupport::NonlinearDgp::draw(300, 2), dir / "d.csv");
  io::write_file_atomic(dir / "c.json", kQuickConfig);
  for (const char* out : {"a.json", "b.json"}) {
    const auto r = run_cli({"fit", "--data", (dir / "d.csv").string(), "--config", (dir / "c.json").string(), "--out",
                        (dir / out).string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }
  CHECK(io::read_file(dir / "a.json") == io::read_file(dir / "b.json"));
  const auto other = run_cli({"fit", "--data", (dir / "d.csv").string(), "--config", (dir / "c.json").string(), "--seed",
                          "99", "--out", (dir / "c.json.model").string()});
  REQUIRE(other.code == 0);
  CHECK(io::read_file(dir / "a.json") != io::read_file(dir / "c.json.model"));

  // The seed variable stands in for --seed.
  for (const char* out : {"s1.csv", "s2.csv"}) {
    if (std::string(out) == "s2.csv") ::setenv("CAUSALSYNTH_SEED", "8", 1);
    const auto r = run_cli({"sample", "--model", (dir / "a.json").string(), "--n", "40", "--out", (dir / out).string()});
    ::unsetenv("CAUSALSYNTH_SEED");
    REQUIRE(r.code == 0);
  }
  const auto r3 = run_cli({"sample", "--model", (dir / "a.json").string(), "--n", "40", "--seed", "8", "--out",
                       (dir / "s3.csv").string()});
  REQUIRE(r3.code == 0);
  CHECK(io::read_file(dir / "s2.csv") == io::read_file(dir / "s3.csv"));
  CHECK(io::read_file(dir / "s1.csv") != io::read_file(dir / "s2.csv"));
}

TEST_CASE("cli errors and usage") {
  const fs::path dir = scratch("errors");
  io::save_dataset(testsupport::NonlinearDgp::draw(300, 2), dir / "d.csv");
  io::write_file_atomic(dir / "c.json", kQuickConfig);
  REQUIRE(run_cli({"fit", "--data", (dir / "d.csv").string(), "--config", (dir / "c.json").string(), "--out",
               (dir / "m.json").string()})
              .code == 0);

  const auto bad_id = run_cli({"benchmark", "--model", (dir / "m.json").string(), "--estimators", "com/ols,gcom/svm",
                           "--out", (dir / "b.csv").string()});
  CHECK(bad_id.code != 0);
  CHECK(bad_id.err.find("gcom/svm") != std::string::npos);
  CHECK(bad_id.err.rfind("error: argument: ", 0) == 0);
  CHECK(std::count(bad_id.err.begin(), bad_id.err.end(), '\n') == 1);
  CHECK_FALSE(fs::exists(dir / "b.csv"));

  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"sample", "--model", "m.json", "--n", "3", "--out", "x.csv", "--bogus"}).code == 2);
  CHECK(run_cli({"sample", "--model", "m.json", "--out", "x.csv"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);

  const auto missing = run_cli({"sample", "--model", (dir / "nope.json").string(), "--n", "3", "--out",
                            (dir / "x.csv").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.rfind("error: io: ", 0) == 0);

  io::write_file_atomic(dir / "bad.csv", "a,t,y\n1,0,1\n2,3,1\n");
  const auto parse = run_cli({"fit", "--data", (dir / "bad.csv").string(), "--out", (dir / "z.json").string()});
  CHECK(parse.code == 1);
  CHECK(parse.err.find("row 2, column t") != std::string::npos);

  // A bad config fails before the data is even read.
  io::write_file_atomic(dir / "bad.json", R"({"data": {"path": "/nonexistent.csv"}, "fit": {"patience": 0},
    "outputs": {"model": ")" + (dir / "never.json").string() + R"("}})");
  const auto cfg = run_cli({"run", "--config", (dir / "bad.json").string()});
  CHECK(cfg.code == 1);
  CHECK(cfg.err.rfind("error: config: ", 0) == 0);
  CHECK_FALSE(fs::exists(dir / "never.json"));

  ::setenv("CAUSALSYNTH_THREADS", "many", 1);
  const auto env = run_cli({"benchmark", "--model", (dir / "m.json").string(), "--estimators", "com/ols", "--reps", "2",
                        "--samples", "50", "--out", (dir / "b.csv").string()});
  ::unsetenv("CAUSALSYNTH_THREADS");
  CHECK(env.code == 1);
  CHECK(env.err.find("CAUSALSYNTH_THREADS") != std::string::npos);
}
