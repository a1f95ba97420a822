#include "causalsynth/io/run_config.hpp"

#include <set>

#include <json.hpp>

#include "causalsynth/bench/fidelity.hpp"
#include "causalsynth/errors.hpp"
#include "causalsynth/estimators/estimators.hpp"
#include "causalsynth/io/files.hpp"

namespace causalsynth::io {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key " + (where == "config" ? k : where + "." + k));
}

template <class T>
void read(const json& j, const std::string& key, const std::string& where, T& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  const std::string name = where == "config" ? key : where + "." + key;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(name + " must be a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(name + " must be a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(name + " must be an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError(name + " must be non-negative");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(name + " must be a number");
    }
    out = v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(name + " has the wrong type");
  }
}

std::vector<std::string> strings(const json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError(name + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ConfigError(name + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

template <class F>
void rethrow_as_config(const std::string& name, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

void read_fit(const json& j, RunConfig& c) {
  only_keys(j, "fit", {"split", "outcome", "use_atoms", "detect_atoms", "grid", "scaling", "max_epochs", "patience",
                       "batch_size", "learning_rate", "gate_alpha", "gate_permutations"});
  model::FitConfig& f = c.fit;
  if (j.contains("split")) {
    const json& s = j.at("split");
    only_keys(s, "fit.split", {"train", "validation", "test"});
    read(s, "train", "fit.split", f.split.train);
    read(s, "validation", "fit.split", f.split.validation);
    read(s, "test", "fit.split", f.split.test);
  }
  if (j.contains("outcome")) {
    const json& o = j.at("outcome");
    only_keys(o, "fit.outcome", {"family", "flow_layers", "flow_units"});
    std::string fam = dist::to_string(f.family.continuous);
    read(o, "family", "fit.outcome", fam);
    rethrow_as_config("fit.outcome.family", [&] { f.family.continuous = dist::continuous_family_from_string(fam); });
    read(o, "flow_layers", "fit.outcome", f.family.flow_layers);
    read(o, "flow_units", "fit.outcome", f.family.flow_units);
  }
  read(j, "use_atoms", "fit", f.use_atoms);
  read(j, "detect_atoms", "fit", f.detect_atoms);
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    if (!g.is_array() || g.empty()) throw ConfigError("fit.grid must be a non-empty array");
    f.grid.clear();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::string where = "fit.grid[" + std::to_string(i) + "]";
      only_keys(g[i], where, {"hidden_layers", "width", "activation"});
      model::Candidate cand;
      std::string act = nn::to_string(cand.activation);
      read(g[i], "hidden_layers", where, cand.hidden_layers);
      read(g[i], "width", where, cand.width);
      read(g[i], "activation", where, act);
      rethrow_as_config(where + ".activation", [&] { cand.activation = nn::activation_from_string(act); });
      f.grid.push_back(cand);
    }
  }
  if (j.contains("scaling")) {
    std::string s;
    read(j, "scaling", "fit", s);
    rethrow_as_config("fit.scaling", [&] { f.scaling = model::scaling_mode_from_string(s); });
  }
  read(j, "max_epochs", "fit", f.max_epochs);
  read(j, "patience", "fit", f.patience);
  read(j, "batch_size", "fit", f.batch_size);
  read(j, "learning_rate", "fit", f.learning_rate);
  read(j, "gate_alpha", "fit", f.gate_alpha);
  read(j, "gate_permutations", "fit", f.gate_permutations);
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("not valid JSON: ") + e.what());
  }
  only_keys(j, "config", {"data", "preset", "fit", "knobs", "tests", "benchmark", "sample_size", "seed", "threads",
                          "outputs"});
  RunConfig c;
  read(j, "seed", "config", c.seed);
  read(j, "threads", "config", c.threads);
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  read(j, "preset", "config", c.preset);
  if (c.preset == "default") {
    c.fit = model::FitConfig{};
  } else if (c.preset == "linear_gaussian") {
    c.fit = model::linear_gaussian_config(c.seed);
  } else {
    throw ConfigError("preset must be \"default\" or \"linear_gaussian\"");
  }
  c.fit.seed = c.seed;

  if (j.contains("data")) {
    const json& d = j.at("data");
    only_keys(d, "data", {"path", "atoms", "truth"});
    read(d, "path", "data", c.data.path);
    read(d, "truth", "data", c.data.truth);
    if (d.contains("atoms")) {
      const json& a = d.at("atoms");
      if (!a.is_array()) throw ConfigError("data.atoms must be an array of numbers");
      for (const auto& v : a) {
        if (!v.is_number()) throw ConfigError("data.atoms must be an array of numbers");
        c.data.atoms.push_back(v.get<double>());
      }
    }
  }
  if (j.contains("fit")) read_fit(j.at("fit"), c);
  rethrow_as_config("fit", [&] { c.fit.validate(); });

  if (j.contains("knobs")) {
    const json& k = j.at("knobs");
    only_keys(k, "knobs", {"positivity_alpha", "effect_delta", "heterogeneity_lambda"});
    read(k, "positivity_alpha", "knobs", c.knobs.positivity_alpha);
    read(k, "effect_delta", "knobs", c.knobs.effect_delta);
    read(k, "heterogeneity_lambda", "knobs", c.knobs.heterogeneity_lambda);
  }
  rethrow_as_config("knobs", [&] { c.knobs.validate(); });

  if (j.contains("tests")) {
    const json& t = j.at("tests");
    only_keys(t, "tests", {"select", "permutations"});
    if (t.contains("select")) c.tests.tests = strings(t.at("select"), "tests.select");
    read(t, "permutations", "tests", c.tests.permutations);
  }
  rethrow_as_config("tests", [&] {
    bench::FidelityOptions o;
    o.permutations = c.tests.permutations;
    o.tests = c.tests.tests;
    o.validate();
  });

  if (j.contains("benchmark")) {
    const json& b = j.at("benchmark");
    only_keys(b, "benchmark", {"replications", "samples", "estimators"});
    read(b, "replications", "benchmark", c.benchmark.replications);
    read(b, "samples", "benchmark", c.benchmark.samples);
    if (b.contains("estimators")) c.benchmark.estimators = strings(b.at("estimators"), "benchmark.estimators");
  }
  if (c.benchmark.replications < 1) throw ConfigError("benchmark.replications must be at least 1");
  if (c.benchmark.samples < 10) throw ConfigError("benchmark.samples must be at least 10");
  for (const auto& id : c.benchmark.estimators)
    rethrow_as_config("benchmark.estimators", [&] { estimators::parse_estimator_id(id); });

  read(j, "sample_size", "config", c.sample_size);
  if (c.sample_size < 0) throw ConfigError("sample_size must be non-negative");

  if (j.contains("outputs")) {
    const json& o = j.at("outputs");
    only_keys(o, "outputs", {"model", "samples", "fidelity", "effects", "benchmark", "plot_dir"});
    read(o, "model", "outputs", c.outputs.model);
    read(o, "samples", "outputs", c.outputs.samples);
    read(o, "fidelity", "outputs", c.outputs.fidelity);
    read(o, "effects", "outputs", c.outputs.effects);
    read(o, "benchmark", "outputs", c.outputs.benchmark);
    read(o, "plot_dir", "outputs", c.outputs.plot_dir);
  }
  if (!c.outputs.benchmark.empty() && c.benchmark.estimators.empty())
    throw ConfigError("outputs.benchmark is set but benchmark.estimators is empty");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_run_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace causalsynth::io
