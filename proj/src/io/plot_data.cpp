#include "causalsynth/io/plot_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "causalsynth/errors.hpp"
#include "causalsynth/io/csv.hpp"
#include "causalsynth/io/files.hpp"

namespace causalsynth::io {

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> outcomes_with(const model::Dataset& d, int t) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d.T(i) == t) out.push_back(d.Y(i));
  return out;
}

std::vector<long> bin_counts(const std::vector<double>& x, const std::vector<double>& edges) {
  std::vector<long> c(edges.size() - 1, 0);
  for (double v : x) {
    auto k = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
    if (k == 0) continue;
    if (k == edges.size()) {
      if (v != edges.back()) continue;
      --k;
    }
    ++c[k - 1];
  }
  return c;
}

double sd(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return x.size() > 1 ? std::sqrt(s / static_cast<double>(x.size() - 1)) : 0.0;
}

std::vector<double> kde(const std::vector<double>& x, double h, const std::vector<double>& grid) {
  std::vector<double> out(grid.size(), 0.0);
  if (x.empty()) return out;
  const double norm = 1.0 / (static_cast<double>(x.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (double v : x) {
      const double z = (grid[g] - v) / h;
      s += std::exp(-0.5 * z * z);
    }
    out[g] = s * norm;
  }
  return out;
}

KdeCurve kde_curve(const model::Dataset& real, const model::Dataset& gen, int t, int points) {
  KdeCurve k;
  k.t = t;
  const auto r = outcomes_with(real, t);
  const auto g = outcomes_with(gen, t);
  k.bandwidth_real = r.empty() ? 0.0 : silverman_bandwidth(r);
  k.bandwidth_generated = g.empty() ? 0.0 : silverman_bandwidth(g);
  if (r.empty() && g.empty()) return k;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto* xs : {&r, &g})
    for (double v : *xs) lo = std::min(lo, v), hi = std::max(hi, v);
  // Four bandwidths past the data keeps the lost tail mass near 1e-4.
  const double pad = 4.0 * std::max(k.bandwidth_real, k.bandwidth_generated);
  lo -= pad;
  hi += pad;
  k.grid.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) k.grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  k.real = kde(r, k.bandwidth_real, k.grid);
  k.generated = kde(g, k.bandwidth_generated, k.grid);
  return k;
}

}  // namespace

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw ArgumentError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("quantile probability must be in [0,1]");
  std::sort(x.begin(), x.end());
  const double pos = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double silverman_bandwidth(const std::vector<double>& x) {
  if (x.empty()) throw ArgumentError("bandwidth of an empty sample");
  const double s = sd(x);
  const double iqr = (quantile(x, 0.75) - quantile(x, 0.25)) / 1.34;
  double spread = std::min(s, iqr);
  if (spread <= 0.0) spread = s;
  if (spread <= 0.0) spread = 1.0;
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

PlotData plot_data(const model::Dataset& real, const model::Dataset& gen, int y_bins, int kde_points) {
  if (real.size() == 0 || gen.size() == 0) throw ArgumentError("plot data needs non-empty samples");
  if (y_bins < 1 || kde_points < 2) throw ArgumentError("plot data needs at least one bin and two grid points");
  PlotData p;
  p.t.edges = {-0.5, 0.5, 1.5};
  p.t.real = bin_counts(to_std(real.T), p.t.edges);
  p.t.generated = bin_counts(to_std(gen.T), p.t.edges);

  const double lo = std::min(real.Y.minCoeff(), gen.Y.minCoeff());
  double hi = std::max(real.Y.maxCoeff(), gen.Y.maxCoeff());
  if (hi == lo) hi = lo + 1.0;
  for (int k = 0; k <= y_bins; ++k) p.y.edges.push_back(k == y_bins ? hi : lo + (hi - lo) * k / y_bins);
  p.y.real = bin_counts(to_std(real.Y), p.y.edges);
  p.y.generated = bin_counts(to_std(gen.Y), p.y.edges);

  p.y_t0 = kde_curve(real, gen, 0, kde_points);
  p.y_t1 = kde_curve(real, gen, 1, kde_points);

  const auto ry = to_std(real.Y);
  const auto gy = to_std(gen.Y);
  for (int k = 1; k <= 99; ++k) {
    const double q = k / 100.0;
    p.qq_y.probability.push_back(q);
    p.qq_y.real.push_back(quantile(ry, q));
    p.qq_y.generated.push_back(quantile(gy, q));
  }
  return p;
}

void write_plot_data(const PlotData& p, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
  const auto hist = [](const Histogram& h) {
    std::string s = "bin_left,bin_right,count_real,count_generated\n";
    for (std::size_t k = 0; k + 1 < h.edges.size(); ++k)
      s += format_double(h.edges[k]) + "," + format_double(h.edges[k + 1]) + "," + std::to_string(h.real[k]) + "," +
           std::to_string(h.generated[k]) + "\n";
    return s;
  };
  write_file_atomic(dir / "hist_t.csv", hist(p.t));
  write_file_atomic(dir / "hist_y.csv", hist(p.y));
  std::string kd = "t,y,density_real,density_generated,bandwidth_real,bandwidth_generated\n";
  for (const auto* c : {&p.y_t0, &p.y_t1})
    for (std::size_t i = 0; i < c->grid.size(); ++i)
      kd += std::to_string(c->t) + "," + format_double(c->grid[i]) + "," + format_double(c->real[i]) + "," +
            format_double(c->generated[i]) + "," + format_double(c->bandwidth_real) + "," +
            format_double(c->bandwidth_generated) + "\n";
  write_file_atomic(dir / "kde_y.csv", kd);
  std::string qq = "probability,real,generated\n";
  for (std::size_t i = 0; i < p.qq_y.probability.size(); ++i)
    qq += format_double(p.qq_y.probability[i]) + "," + format_double(p.qq_y.real[i]) + "," +
          format_double(p.qq_y.generated[i]) + "\n";
  write_file_atomic(dir / "qq_y.csv", qq);
}

PlotData export_plot_data(const model::GenerativeModel& m, const model::Dataset& data,
                          const std::filesystem::path& out_dir, std::uint64_t seed) {
  if (data.num_covariates() != m.num_covariates())
    throw ShapeError("dataset has " + std::to_string(data.num_covariates()) + " covariates, model expects " +
                     std::to_string(m.num_covariates()));
  model::Dataset gen;
  gen.W = data.W;
  auto to = model::sample_conditional(m, data.W, seed);
  gen.T = std::move(to.T);
  gen.Y = std::move(to.Y);
  PlotData p = plot_data(data, gen);
  write_plot_data(p, out_dir);
  return p;
}

}  // namespace causalsynth::io
