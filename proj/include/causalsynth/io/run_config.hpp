#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "causalsynth/model/fit.hpp"
#include "causalsynth/model/generative_model.hpp"

namespace causalsynth::io {

struct DataSection {
  std::string path;
  std::vector<double> atoms;
  std::string truth;  // optional sidecar with the data's true effects
};

struct TestSection {
  std::vector<std::string> tests;  // empty means the full battery
  int permutations = 1000;
};

struct BenchmarkSection {
  int replications = 100;
  long samples = 1000;
  std::vector<std::string> estimators;
};

// Empty paths are skipped by the run command.
struct OutputSection {
  std::string model;
  std::string samples;
  std::string fidelity;
  std::string effects;
  std::string benchmark;
  std::string plot_dir;
};

struct RunConfig {
  DataSection data;
  std::string preset = "default";  // or "linear_gaussian"
  model::FitConfig fit;
  model::KnobConfig knobs;
  TestSection tests;
  BenchmarkSection benchmark;
  long sample_size = 0;  // rows written to outputs.samples; 0 means the data size
  std::uint64_t seed = 0;
  int threads = 1;
  OutputSection outputs;
};

// Parses and validates the whole document; every problem is a ConfigError
// naming the offending key. Unknown keys are rejected.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace causalsynth::io
