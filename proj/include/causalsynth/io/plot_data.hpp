#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causalsynth/model/dataset.hpp"
#include "causalsynth/model/generative_model.hpp"

namespace causalsynth::io {

struct Histogram {
  std::vector<double> edges;  // bins [e_k, e_{k+1}), the last one closed
  std::vector<long> real;
  std::vector<long> generated;
};

struct KdeCurve {
  int t = 0;
  double bandwidth_real = 0.0;
  double bandwidth_generated = 0.0;
  std::vector<double> grid;
  std::vector<double> real;
  std::vector<double> generated;
};

struct QqPairs {
  std::vector<double> probability;  // 0.01 .. 0.99
  std::vector<double> real;
  std::vector<double> generated;
};

struct PlotData {
  Histogram t;
  Histogram y;
  KdeCurve y_t0;
  KdeCurve y_t1;
  QqPairs qq_y;
};

// Silverman's rule: 0.9 min(sd, IQR/1.34) n^(-1/5), falling back to sd and
// then 1 when the spread is zero.
double silverman_bandwidth(const std::vector<double>& x);
// Linear interpolation between order statistics (p in [0,1]).
double quantile(std::vector<double> x, double p);

PlotData plot_data(const model::Dataset& real, const model::Dataset& generated, int y_bins = 30, int kde_points = 512);

// Samples the model with the real data's covariate rows and writes
// hist_t.csv, hist_y.csv, kde_y.csv and qq_y.csv into out_dir.
PlotData export_plot_data(const model::GenerativeModel& model, const model::Dataset& data,
                          const std::filesystem::path& out_dir, std::uint64_t seed);

void write_plot_data(const PlotData& p, const std::filesystem::path& out_dir);

}  // namespace causalsynth::io
