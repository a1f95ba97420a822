#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace causalsynth::stats {

// Rows are observations, columns are coordinates.
using SampleMatrix = Eigen::MatrixXd;

enum class Orientation { larger_is_different, smaller_is_different };

std::string to_string(Orientation o);

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double p_value = 1.0;
  int permutations = 0;  // 0 for analytic tests
  std::uint64_t seed = 0;
  Orientation orientation = Orientation::larger_is_different;
  std::string method = "analytic";  // analytic | permutation | permutation-entropic
};

// ---------------------------------------------------------------------------
// Univariate tests

// Survival function of the limiting Kolmogorov distribution.
double kolmogorov_sf(double lambda);

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
TestReport ks_test(std::span<const double> x, std::span<const double> y);

// Epps-Singleton test on the empirical characteristic function at
// t = (0.4, 0.8) / semi-IQR of the pooled sample. Degrees of freedom are the
// rank of the estimated covariance (4 when it is full rank).
TestReport es_test(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Multivariate statistics (Euclidean distance on raw coordinates)

// V-statistic form: 2 E|X-Y| - E|X-X'| - E|Y-Y'| over all ordered pairs.
double energy_stat(const SampleMatrix& x, const SampleMatrix& y);

struct FrCounts {
  int cross_edges = 0;
  int runs = 0;  // cross_edges + 1
};

// Cross-sample edges of the Euclidean minimum spanning tree of the pooled
// sample (Prim, ties broken by lowest index).
FrCounts fr_counts(const SampleMatrix& x, const SampleMatrix& y);
// Friedman-Rafsky runs statistic.
double fr_stat(const SampleMatrix& x, const SampleMatrix& y);

// Fraction of (point, neighbour) pairs among the k nearest neighbours of every
// pooled point that belong to the same sample.
double knn_stat(const SampleMatrix& x, const SampleMatrix& y, int k);

// Pooled sizes above this use the entropic approximation.
inline constexpr Eigen::Index kExactAssignmentLimit = 512;

struct WassersteinResult {
  double distance = 0.0;
  bool exact = true;
};

// order 1 or 2. One-column samples use the quantile-coupling formula (any
// sizes); otherwise sizes must match and the optimal assignment is solved.
WassersteinResult wasserstein(const SampleMatrix& x, const SampleMatrix& y, int order,
                              Eigen::Index exact_limit = kExactAssignmentLimit);
double wasserstein_dist(const SampleMatrix& x, const SampleMatrix& y, int order);

// ---------------------------------------------------------------------------
// Permutation tests

// A statistic bound to a pooled sample; evaluated on a 0/1 labelling where
// label 0 marks the first sample.
class LabelStatistic {
 public:
  virtual ~LabelStatistic() = default;
  virtual double operator()(std::span<const std::uint8_t> labels) const = 0;
  virtual bool exact() const { return true; }
};

struct TwoSampleStatistic {
  std::string name;
  Orientation orientation = Orientation::larger_is_different;
  std::function<std::unique_ptr<LabelStatistic>(const SampleMatrix& pooled)> bind;
};

TwoSampleStatistic energy_statistic();
TwoSampleStatistic fr_statistic();
TwoSampleStatistic knn_statistic(int k = 3);
TwoSampleStatistic wasserstein_statistic(int order, Eigen::Index exact_limit = kExactAssignmentLimit);
// Wraps an arbitrary two-sample function; recomputes from scratch each time.
TwoSampleStatistic function_statistic(std::string name, Orientation orientation,
                                      std::function<double(const SampleMatrix&, const SampleMatrix&)> fn);

struct PermutationOptions {
  int permutations = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  // Shuffle the pooled row order once (seeded) before binding, so index
  // based tie-breaking is independent of sample membership.
  bool shuffle_pooled = true;
};

// p = (1 + #{permuted at least as extreme as observed}) / (1 + permutations).
// Comparisons allow a relative slack of 1e-12 for floating-point ties.
TestReport permutation_test(const SampleMatrix& x, const SampleMatrix& y,
                            const TwoSampleStatistic& statistic,
                            const PermutationOptions& options = {});

// Splits a pooled matrix by labels (0 -> first).
std::pair<SampleMatrix, SampleMatrix> split_by_labels(const SampleMatrix& pooled,
                                                      std::span<const std::uint8_t> labels);

Eigen::MatrixXd pairwise_distances(const SampleMatrix& pooled);

}  // namespace causalsynth::stats
