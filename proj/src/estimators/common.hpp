#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace causalsynth::estimators::detail {

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x, bool enabled);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

// Row order sorted by (x row lexicographically, then y); lets order-sensitive
// fits (trees, neighbour ties) ignore the order rows arrived in.
std::vector<Eigen::Index> canonical_order(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Hash of a row's bit patterns, independent of its position.
std::uint64_t row_hash(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y);

// k nearest training rows (Euclidean) of query q; ties by training index.
std::vector<Eigen::Index> nearest(const Eigen::MatrixXd& train, const Eigen::Ref<const Eigen::RowVectorXd>& q,
                                  int k, std::vector<double>& scratch);

// CART on squared error (for 0/1 targets this is the Gini criterion).
class Tree {
 public:
  Tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int max_depth, int min_leaf);
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  int build(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<Eigen::Index>& rows, int depth);

  int max_depth_;
  int min_leaf_;
  std::vector<Node> nodes_;
};

}  // namespace causalsynth::estimators::detail
