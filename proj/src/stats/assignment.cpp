#include "causalsynth/stats/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "causalsynth/errors.hpp"

namespace causalsynth::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  const Eigen::Index n = cost.rows();
  if (cost.cols() != n) throw ShapeError("assignment cost matrix must be square");
  if (!cost.allFinite()) throw NumericError("assignment cost matrix has non-finite entries");
  Assignment out;
  if (n == 0) return out;

  // Row-major copy so the inner loops walk contiguous memory.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> c = cost;
  const int m = static_cast<int>(n);
  std::vector<double> u(m, 0.0), v(m, 0.0), spc(m);
  std::vector<int> col4row(m, -1), row4col(m, -1), path(m, -1), remaining(m);
  std::vector<char> sr(m), sc(m);

  // Column reduction: every column starts at its cheapest row.
  for (int j = m - 1; j >= 0; --j) {
    int best = 0;
    for (int i = 1; i < m; ++i)
      if (c(i, j) < c(best, j)) best = i;
    v[j] = c(best, j);
    if (col4row[best] < 0) {
      col4row[best] = j;
      row4col[j] = best;
    }
  }
  // Reduction transfer: move slack from the matched column onto the row.
  for (int i = 0; i < m; ++i) {
    const int j1 = col4row[i];
    if (j1 < 0) continue;
    double second = kInf;
    for (int j = 0; j < m; ++j)
      if (j != j1) second = std::min(second, c(i, j) - v[j]);
    if (m == 1) second = 0.0;
    u[i] = second;
    v[j1] = c(i, j1) - u[i];
  }

  for (int row = 0; row < m; ++row) {
    if (col4row[row] >= 0) continue;
    std::fill(sr.begin(), sr.end(), 0);
    std::fill(sc.begin(), sc.end(), 0);
    std::fill(spc.begin(), spc.end(), kInf);
    int num_remaining = m;
    for (int it = 0; it < m; ++it) remaining[it] = m - it - 1;

    double min_val = 0.0;
    int sink = -1;
    int i = row;
    while (sink < 0) {
      sr[i] = 1;
      int index = -1;
      double lowest = kInf;
      const double base = min_val - u[i];
      const double* ci = &c(i, 0);
      for (int it = 0; it < num_remaining; ++it) {
        const int j = remaining[it];
        const double r = base + ci[j] - v[j];
        if (r < spc[j]) {
          path[j] = i;
          spc[j] = r;
        }
        if (spc[j] < lowest || (spc[j] == lowest && row4col[j] < 0)) {
          lowest = spc[j];
          index = it;
        }
      }
      min_val = lowest;
      if (index < 0 || !std::isfinite(min_val)) throw NumericError("assignment problem is infeasible");
      const int j = remaining[index];
      sc[j] = 1;
      remaining[index] = remaining[--num_remaining];
      if (row4col[j] < 0)
        sink = j;
      else
        i = row4col[j];
    }

    u[row] += min_val;
    for (int r = 0; r < m; ++r)
      if (sr[r] && r != row) u[r] += min_val - spc[col4row[r]];
    for (int j = 0; j < m; ++j)
      if (sc[j]) v[j] -= min_val - spc[j];

    int j = sink;
    while (true) {
      const int r = path[j];
      row4col[j] = r;
      std::swap(col4row[r], j);
      if (r == row) break;
    }
  }

  out.column_of_row = col4row;
  for (int r = 0; r < m; ++r) out.cost += c(r, col4row[r]);
  return out;
}

double sinkhorn_epsilon(const Eigen::MatrixXd& cost) {
  const double mean = cost.mean();
  const double top = cost.maxCoeff();
  double eps = 0.2 * mean;
  eps = std::max(eps, top / 600.0);
  if (!(eps > 0.0)) eps = 1.0;
  return eps;
}

SinkhornResult sinkhorn(const Eigen::MatrixXd& cost, const Eigen::MatrixXd& kernel,
                        int max_iterations, double tolerance) {
  const Eigen::Index m = kernel.rows();
  const Eigen::Index n = kernel.cols();
  if (cost.rows() != m || cost.cols() != n) throw ShapeError("sinkhorn cost and kernel shapes differ");
  SinkhornResult res;
  if (m == 0 || n == 0) return res;
  const double a = 1.0 / static_cast<double>(m);
  const double b = 1.0 / static_cast<double>(n);
  Eigen::VectorXd u = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd ku(m), ktu(n);
  for (int it = 0; it < max_iterations; ++it) {
    ktu.noalias() = kernel.transpose() * u;
    v = (b / ktu.array()).matrix();
    ku.noalias() = kernel * v;
    res.iterations = it + 1;
    // Column marginals are exact after the v update; check the rows.
    const double err = (u.array() * ku.array() - a).abs().sum();
    u = (a / ku.array()).matrix();
    if (err <= tolerance) {
      res.converged = true;
      break;
    }
  }
  if (!u.allFinite() || !v.allFinite()) throw NumericError("sinkhorn iterations diverged");
  res.transport_cost = (u.asDiagonal() * kernel.cwiseProduct(cost) * v).sum();
  return res;
}

}  // namespace causalsynth::stats
