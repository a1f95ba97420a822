#pragma once

#include <vector>

#include <Eigen/Dense>

namespace causalsynth::stats {

struct Assignment {
  std::vector<int> column_of_row;
  double cost = 0.0;
};

// Minimum-cost perfect matching on a square cost matrix (shortest augmenting
// paths with dual potentials, seeded by column reduction).
Assignment solve_assignment(const Eigen::MatrixXd& cost);

struct SinkhornResult {
  double transport_cost = 0.0;  // sum of plan * cost, uniform marginals
  int iterations = 0;
  bool converged = false;
};

// Entropic optimal transport between uniform marginals. kernel holds
// exp(-cost / epsilon) for the same cost matrix.
SinkhornResult sinkhorn(const Eigen::MatrixXd& cost, const Eigen::MatrixXd& kernel,
                        int max_iterations = 1000, double tolerance = 1e-3);

// Regularization strength used for a cost matrix: a fifth of the mean cost, raised
// when needed so the kernel never underflows.
double sinkhorn_epsilon(const Eigen::MatrixXd& cost);

}  // namespace causalsynth::stats
