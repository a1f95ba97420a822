#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Dense>

#include "causalsynth/errors.hpp"
#include "causalsynth/stats/two_sample.hpp"

namespace causalsynth::stats {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double e : v)
    if (!std::isfinite(e)) throw ArgumentError(std::string(what) + " contains non-finite values");
}

// Linear-interpolation percentile of a sorted vector.
double percentile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + frac * (s[hi] - s[lo]);
}

}  // namespace

std::string to_string(Orientation o) {
  return o == Orientation::larger_is_different ? "larger_is_different" : "smaller_is_different";
}

double kolmogorov_sf(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.0) {
    // Jacobi-theta form of the cdf converges fast for small lambda.
    const double pi = std::numbers::pi;
    const double f = -pi * pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(odd * odd * f);
      cdf += term;
      if (term < 1e-18 * cdf) break;
    }
    cdf *= std::sqrt(2.0 * pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sf = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sf += sign * term;
    sign = -sign;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sf, 0.0, 1.0);
}

TestReport ks_test(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ArgumentError("ks_test needs two non-empty samples");
  require_finite(x, "ks_test sample");
  require_finite(y, "ks_test sample");
  std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double m = static_cast<double>(a.size());
  const double n = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == t) ++i;
    while (j < b.size() && b[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  TestReport r;
  r.name = "ks";
  r.statistic = d;
  r.p_value = kolmogorov_sf(d * std::sqrt(m * n / (m + n)));
  return r;
}

TestReport es_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 5 || y.size() < 5) throw ArgumentError("es_test needs at least 5 observations per sample");
  require_finite(x, "es_test sample");
  require_finite(y, "es_test sample");
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::sort(pooled.begin(), pooled.end());
  const double semi_iqr = 0.5 * (percentile_sorted(pooled, 0.75) - percentile_sorted(pooled, 0.25));
  if (!(semi_iqr > 0.0)) throw NumericError("es_test: pooled sample has zero semi-interquartile range");
  const double t1 = 0.4 / semi_iqr;
  const double t2 = 0.8 / semi_iqr;

  auto features = [&](std::span<const double> s, Eigen::Vector4d& mean, Eigen::Matrix4d& cov) {
    const auto k = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd g(k, 4);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double v = s[static_cast<std::size_t>(i)];
      g(i, 0) = std::cos(t1 * v);
      g(i, 1) = std::sin(t1 * v);
      g(i, 2) = std::cos(t2 * v);
      g(i, 3) = std::sin(t2 * v);
    }
    mean = g.colwise().mean().transpose();
    const Eigen::MatrixXd c = g.rowwise() - mean.transpose();
    cov = (c.transpose() * c) / static_cast<double>(k);
  };
  Eigen::Vector4d mx, my;
  Eigen::Matrix4d cx, cy;
  features(x, mx, cx);
  features(y, my, cy);
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  const double total = nx + ny;
  const Eigen::Matrix4d est = (total / nx) * cx + (total / ny) * cy;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(est);
  const Eigen::Vector4d ev = eig.eigenvalues();
  const double cutoff = 1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  Eigen::Matrix4d pinv = Eigen::Matrix4d::Zero();
  int rank = 0;
  for (int k = 0; k < 4; ++k) {
    if (ev(k) > cutoff && ev(k) > 0.0) {
      pinv += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose() / ev(k);
      ++rank;
    }
  }
  const Eigen::Vector4d diff = mx - my;
  double w = total * diff.dot(pinv * diff);
  if (std::min(nx, ny) < 25.0) {
    const double corr =
        1.0 / (1.0 + std::pow(total, -0.45) + 10.1 * (std::pow(nx, -1.7) + std::pow(ny, -1.7)));
    w *= corr;
  }
  w = std::max(w, 0.0);
  TestReport r;
  r.name = "es";
  r.statistic = w;
  r.p_value = rank == 0 ? 1.0 : boost::math::gamma_q(0.5 * rank, 0.5 * w);
  return r;
}

}  // namespace causalsynth::stats
