#include "common.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace causalsynth::estimators::detail {

Standardizer Standardizer::fit(const Eigen::MatrixXd& x, bool enabled) {
  Standardizer s;
  s.mean = Eigen::RowVectorXd::Zero(x.cols());
  s.scale = Eigen::RowVectorXd::Ones(x.cols());
  if (!enabled || x.rows() == 0) return s;
  s.mean = x.colwise().mean();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt((x.col(j).array() - s.mean(j)).square().mean());
    s.scale(j) = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

std::vector<Eigen::Index> canonical_order(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    return y(a) < y(b);
  });
  return order;
}

std::uint64_t row_hash(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    if (v == 0.0) v = 0.0;  // fold -0
    h ^= std::bit_cast<std::uint64_t>(v);
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  };
  for (Eigen::Index j = 0; j < x.size(); ++j) mix(x(j));
  mix(y);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

std::vector<Eigen::Index> nearest(const Eigen::MatrixXd& train, const Eigen::Ref<const Eigen::RowVectorXd>& q,
                                  int k, std::vector<double>& scratch) {
  const Eigen::Index n = train.rows();
  scratch.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) scratch[static_cast<std::size_t>(i)] = (train.row(i) - q).squaredNorm();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  const auto kk = static_cast<std::size_t>(std::min<Eigen::Index>(k, n));
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    const double da = scratch[static_cast<std::size_t>(a)], db = scratch[static_cast<std::size_t>(b)];
    return da != db ? da < db : a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(), less);
  idx.resize(kk);
  return idx;
}

Tree::Tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int max_depth, int min_leaf)
    : max_depth_(max_depth), min_leaf_(min_leaf) {
  std::vector<Eigen::Index> rows = canonical_order(x, y);
  build(x, y, rows, 0);
}

int Tree::build(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<Eigen::Index>& rows, int depth) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  double sum = 0.0, sq = 0.0;
  for (Eigen::Index r : rows) {
    sum += y(r);
    sq += y(r) * y(r);
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  nodes_[static_cast<std::size_t>(id)].value = sum / static_cast<double>(n);
  const double sse = sq - sum * sum / static_cast<double>(n);
  if (depth >= max_depth_ || n < 2 * min_leaf_ || sse <= 1e-12 * std::max(1.0, sq)) return id;

  int best_feature = -1;
  double best_threshold = 0.0, best_gain = 0.0;
  std::vector<Eigen::Index> sorted(rows);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    std::stable_sort(sorted.begin(), sorted.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a, j) < x(b, j); });
    double left_sum = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      left_sum += y(sorted[static_cast<std::size_t>(i)]);
      const Eigen::Index nl = i + 1, nr = n - nl;
      if (nl < min_leaf_) continue;
      if (nr < min_leaf_) break;
      const double a = x(sorted[static_cast<std::size_t>(i)], j), b = x(sorted[static_cast<std::size_t>(i + 1)], j);
      if (a == b) continue;
      const double right_sum = sum - left_sum;
      // SSE reduction = between-group sum of squares.
      const double gain = left_sum * left_sum / static_cast<double>(nl) +
                          right_sum * right_sum / static_cast<double>(nr) - sum * sum / static_cast<double>(n);
      if (gain > best_gain * (1.0 + 1e-12) + 1e-15) {
        best_gain = gain;
        best_feature = static_cast<int>(j);
        best_threshold = 0.5 * (a + b);
      }
    }
  }
  if (best_feature < 0) return id;

  std::vector<Eigen::Index> left, right;
  for (Eigen::Index r : rows) (x(r, best_feature) <= best_threshold ? left : right).push_back(r);
  rows.clear();
  rows.shrink_to_fit();
  const int l = build(x, y, left, depth + 1);
  const int r = build(x, y, right, depth + 1);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.feature = best_feature;
  node.threshold = best_threshold;
  node.left = l;
  node.right = r;
  return id;
}

double Tree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int i = 0;
  while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    i = row(n.feature) <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(i)].value;
}

}  // namespace causalsynth::estimators::detail
