#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "causalsynth/errors.hpp"
#include "causalsynth/stats/assignment.hpp"
#include "causalsynth/stats/two_sample.hpp"

namespace causalsynth::stats {

namespace {

void check_pair(const SampleMatrix& x, const SampleMatrix& y) {
  if (x.cols() != y.cols()) throw ShapeError("samples have different column counts");
  if (x.rows() == 0 || y.rows() == 0) throw ArgumentError("two-sample statistic needs non-empty samples");
  if (!x.allFinite() || !y.allFinite()) throw ArgumentError("samples contain non-finite values");
}

SampleMatrix stack(const SampleMatrix& x, const SampleMatrix& y) {
  SampleMatrix pooled(x.rows() + y.rows(), x.cols());
  pooled << x, y;
  return pooled;
}

std::vector<std::uint8_t> original_labels(Eigen::Index m, Eigen::Index n) {
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(m + n), 0);
  std::fill(labels.begin() + m, labels.end(), std::uint8_t{1});
  return labels;
}

double evaluate(const TwoSampleStatistic& s, const SampleMatrix& x, const SampleMatrix& y) {
  check_pair(x, y);
  const auto bound = s.bind(stack(x, y));
  const auto labels = original_labels(x.rows(), y.rows());
  return (*bound)(labels);
}

std::pair<int, int> label_counts(std::span<const std::uint8_t> labels) {
  int ones = 0;
  for (auto l : labels) ones += l != 0;
  return {static_cast<int>(labels.size()) - ones, ones};
}

class EnergyStatistic final : public LabelStatistic {
 public:
  explicit EnergyStatistic(const SampleMatrix& pooled)
      : dist_(pairwise_distances(pooled)), total_(dist_.sum()) {}

  double operator()(std::span<const std::uint8_t> labels) const override {
    const auto [m, n] = label_counts(labels);
    if (m == 0 || n == 0) throw ArgumentError("energy statistic needs both samples non-empty");
    Eigen::VectorXd l(dist_.rows());
    for (Eigen::Index i = 0; i < l.size(); ++i) l(i) = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    const Eigen::VectorXd dl = dist_ * l;
    const double s11 = l.dot(dl);
    const double s01 = dl.sum() - s11;
    const double s00 = total_ - 2.0 * s01 - s11;
    const double dm = m, dn = n;
    return 2.0 * s01 / (dm * dn) - s00 / (dm * dm) - s11 / (dn * dn);
  }

 private:
  Eigen::MatrixXd dist_;
  double total_;
};

// Prim's algorithm on the dense distance matrix starting from vertex 0;
// strict comparisons keep the lowest index on ties.
std::vector<std::pair<int, int>> minimum_spanning_tree(const Eigen::MatrixXd& d) {
  const int n = static_cast<int>(d.rows());
  std::vector<std::pair<int, int>> edges;
  if (n < 2) return edges;
  edges.reserve(static_cast<std::size_t>(n - 1));
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<char> in_tree(n, 0);
  key[0] = 0.0;
  for (int step = 0; step < n; ++step) {
    int u = -1;
    for (int j = 0; j < n; ++j)
      if (!in_tree[j] && (u < 0 || key[j] < key[u])) u = j;
    in_tree[u] = 1;
    if (parent[u] >= 0) edges.emplace_back(parent[u], u);
    for (int j = 0; j < n; ++j) {
      if (!in_tree[j] && d(u, j) < key[j]) {
        key[j] = d(u, j);
        parent[j] = u;
      }
    }
  }
  return edges;
}

class FrStatistic final : public LabelStatistic {
 public:
  explicit FrStatistic(const SampleMatrix& pooled) {
    if (pooled.rows() < 2) throw ArgumentError("Friedman-Rafsky statistic needs at least two points");
    edges_ = minimum_spanning_tree(pairwise_distances(pooled));
  }
  double operator()(std::span<const std::uint8_t> labels) const override {
    int cross = 0;
    for (const auto& [a, b] : edges_) cross += labels[static_cast<std::size_t>(a)] != labels[static_cast<std::size_t>(b)];
    return static_cast<double>(cross + 1);
  }
  int cross_edges(std::span<const std::uint8_t> labels) const { return static_cast<int>((*this)(labels)) - 1; }

 private:
  std::vector<std::pair<int, int>> edges_;
};

class KnnStatistic final : public LabelStatistic {
 public:
  KnnStatistic(const SampleMatrix& pooled, int k) : k_(k) {
    const Eigen::Index n = pooled.rows();
    if (k < 1) throw ArgumentError("kNN statistic needs k >= 1");
    if (k >= n) throw ArgumentError("kNN statistic needs k < pooled size");
    const Eigen::MatrixXd d = pairwise_distances(pooled);
    neighbours_.resize(static_cast<std::size_t>(n * k));
    std::vector<int> idx(static_cast<std::size_t>(n - 1));
    for (Eigen::Index i = 0; i < n; ++i) {
      int c = 0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) idx[static_cast<std::size_t>(c++)] = static_cast<int>(j);
      std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
        if (d(i, a) != d(i, b)) return d(i, a) < d(i, b);
        return a < b;
      });
      std::copy(idx.begin(), idx.begin() + k, neighbours_.begin() + i * k);
    }
  }
  double operator()(std::span<const std::uint8_t> labels) const override {
    const std::size_t n = labels.size();
    long same = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (int t = 0; t < k_; ++t)
        same += labels[i] == labels[static_cast<std::size_t>(neighbours_[i * static_cast<std::size_t>(k_) + static_cast<std::size_t>(t)])];
    return static_cast<double>(same) / (static_cast<double>(n) * k_);
  }

 private:
  int k_;
  std::vector<int> neighbours_;
};

// Quantile coupling of two sorted samples.
double quantile_coupling(const std::vector<double>& xs, const std::vector<double>& ys, int order) {
  const std::size_t m = xs.size(), n = ys.size();
  std::size_t i = 0, j = 0;
  std::size_t last = 0;  // in units of 1/(m n)
  double total = 0.0;
  while (i < m && j < n) {
    const std::size_t a = (i + 1) * n;
    const std::size_t b = (j + 1) * m;
    const std::size_t next = std::min(a, b);
    const double gap = std::abs(xs[i] - ys[j]);
    total += static_cast<double>(next - last) * (order == 1 ? gap : gap * gap);
    last = next;
    if (a == next) ++i;
    if (b == next) ++j;
  }
  total /= static_cast<double>(m) * static_cast<double>(n);
  return order == 1 ? total : std::sqrt(total);
}

class Wasserstein1dStatistic final : public LabelStatistic {
 public:
  Wasserstein1dStatistic(const SampleMatrix& pooled, int order) : order_(order) {
    const auto n = static_cast<std::size_t>(pooled.rows());
    values_.resize(n);
    for (std::size_t i = 0; i < n; ++i) values_[i] = pooled(static_cast<Eigen::Index>(i), 0);
    sorted_.resize(n);
    std::iota(sorted_.begin(), sorted_.end(), 0);
    std::stable_sort(sorted_.begin(), sorted_.end(), [&](int a, int b) { return values_[static_cast<std::size_t>(a)] < values_[static_cast<std::size_t>(b)]; });
  }
  double operator()(std::span<const std::uint8_t> labels) const override {
    std::vector<double> xs, ys;
    xs.reserve(labels.size());
    ys.reserve(labels.size());
    for (int idx : sorted_) {
      const auto u = static_cast<std::size_t>(idx);
      (labels[u] ? ys : xs).push_back(values_[u]);
    }
    if (xs.empty() || ys.empty()) throw ArgumentError("Wasserstein statistic needs both samples non-empty");
    return quantile_coupling(xs, ys, order_);
  }

 private:
  int order_;
  std::vector<double> values_;
  std::vector<int> sorted_;
};

void split_indices(std::span<const std::uint8_t> labels, std::vector<Eigen::Index>& xi, std::vector<Eigen::Index>& yi) {
  xi.clear();
  yi.clear();
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? yi : xi).push_back(static_cast<Eigen::Index>(i));
}

class WassersteinStatistic final : public LabelStatistic {
 public:
  WassersteinStatistic(const SampleMatrix& pooled, int order, Eigen::Index exact_limit)
      : order_(order), exact_(pooled.rows() <= exact_limit) {
    cost_ = pairwise_distances(pooled);
    if (order == 2) cost_ = cost_.cwiseProduct(cost_);
    if (!exact_) {
      epsilon_ = sinkhorn_epsilon(cost_);
      kernel_ = (-cost_ / epsilon_).array().exp().matrix();
    }
  }
  bool exact() const override { return exact_; }
  double operator()(std::span<const std::uint8_t> labels) const override {
    std::vector<Eigen::Index> xi, yi;
    split_indices(labels, xi, yi);
    if (xi.size() != yi.size())
      throw ArgumentError("multivariate Wasserstein needs equal sample sizes");
    if (xi.empty()) throw ArgumentError("Wasserstein statistic needs non-empty samples");
    const Eigen::MatrixXd c = cost_(xi, yi);
    const double m = static_cast<double>(xi.size());
    double mean_cost;
    if (exact_) {
      mean_cost = solve_assignment(c).cost / m;
    } else {
      const Eigen::MatrixXd k = kernel_(xi, yi);
      mean_cost = sinkhorn(c, k).transport_cost;
    }
    mean_cost = std::max(mean_cost, 0.0);
    return order_ == 1 ? mean_cost : std::sqrt(mean_cost);
  }

 private:
  int order_;
  bool exact_;
  double epsilon_ = 0.0;
  Eigen::MatrixXd cost_;
  Eigen::MatrixXd kernel_;
};

class FunctionStatistic final : public LabelStatistic {
 public:
  FunctionStatistic(const SampleMatrix& pooled, std::function<double(const SampleMatrix&, const SampleMatrix&)> fn)
      : pooled_(pooled), fn_(std::move(fn)) {}
  double operator()(std::span<const std::uint8_t> labels) const override {
    const auto [x, y] = split_by_labels(pooled_, labels);
    return fn_(x, y);
  }

 private:
  SampleMatrix pooled_;
  std::function<double(const SampleMatrix&, const SampleMatrix&)> fn_;
};

}  // namespace

Eigen::MatrixXd pairwise_distances(const SampleMatrix& pooled) {
  const Eigen::Index n = pooled.rows();
  // Column-major transpose so each point is contiguous.
  const Eigen::MatrixXd p = pooled.transpose();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = (p.col(i) - p.col(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

std::pair<SampleMatrix, SampleMatrix> split_by_labels(const SampleMatrix& pooled,
                                                      std::span<const std::uint8_t> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != pooled.rows()) throw ShapeError("label count does not match pooled rows");
  std::vector<Eigen::Index> xi, yi;
  split_indices(labels, xi, yi);
  return {pooled(xi, Eigen::all), pooled(yi, Eigen::all)};
}

TwoSampleStatistic energy_statistic() {
  return {"energy", Orientation::larger_is_different,
          [](const SampleMatrix& p) { return std::make_unique<EnergyStatistic>(p); }};
}

TwoSampleStatistic fr_statistic() {
  return {"fr", Orientation::smaller_is_different,
          [](const SampleMatrix& p) { return std::make_unique<FrStatistic>(p); }};
}

TwoSampleStatistic knn_statistic(int k) {
  return {"knn", Orientation::larger_is_different,
          [k](const SampleMatrix& p) { return std::make_unique<KnnStatistic>(p, k); }};
}

TwoSampleStatistic wasserstein_statistic(int order, Eigen::Index exact_limit) {
  if (order != 1 && order != 2) throw ArgumentError("Wasserstein order must be 1 or 2");
  return {order == 1 ? "wass1" : "wass2", Orientation::larger_is_different,
          [order, exact_limit](const SampleMatrix& p) -> std::unique_ptr<LabelStatistic> {
            if (p.cols() == 1) return std::make_unique<Wasserstein1dStatistic>(p, order);
            return std::make_unique<WassersteinStatistic>(p, order, exact_limit);
          }};
}

TwoSampleStatistic function_statistic(std::string name, Orientation orientation,
                                      std::function<double(const SampleMatrix&, const SampleMatrix&)> fn) {
  return {std::move(name), orientation,
          [fn = std::move(fn)](const SampleMatrix& p) { return std::make_unique<FunctionStatistic>(p, fn); }};
}

double energy_stat(const SampleMatrix& x, const SampleMatrix& y) {
  return evaluate(energy_statistic(), x, y);
}

FrCounts fr_counts(const SampleMatrix& x, const SampleMatrix& y) {
  const double runs = evaluate(fr_statistic(), x, y);
  FrCounts c;
  c.runs = static_cast<int>(runs);
  c.cross_edges = c.runs - 1;
  return c;
}

double fr_stat(const SampleMatrix& x, const SampleMatrix& y) { return evaluate(fr_statistic(), x, y); }

double knn_stat(const SampleMatrix& x, const SampleMatrix& y, int k) {
  return evaluate(knn_statistic(k), x, y);
}

WassersteinResult wasserstein(const SampleMatrix& x, const SampleMatrix& y, int order, Eigen::Index exact_limit) {
  check_pair(x, y);
  if (x.cols() > 1 && x.rows() != y.rows())
    throw ArgumentError("multivariate Wasserstein needs equal sample sizes");
  const auto bound = wasserstein_statistic(order, exact_limit).bind(stack(x, y));
  const auto labels = original_labels(x.rows(), y.rows());
  return {(*bound)(labels), bound->exact()};
}

double wasserstein_dist(const SampleMatrix& x, const SampleMatrix& y, int order) {
  return wasserstein(x, y, order).distance;
}

}  // namespace causalsynth::stats
