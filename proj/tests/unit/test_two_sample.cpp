#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "causalsynth/errors.hpp"
#include "causalsynth/random.hpp"
#include "causalsynth/stats/assignment.hpp"
#include "causalsynth/stats/two_sample.hpp"
#include "support/oracles.hpp"

using namespace causalsynth;
using namespace causalsynth::stats;
using namespace testsupport;

namespace {

SampleMatrix column(std::initializer_list<double> v) {
  SampleMatrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double e : v) m(i++, 0) = e;
  return m;
}

std::vector<double> to_vec(const SampleMatrix& m) { return {m.data(), m.data() + m.rows()}; }

}  // namespace

TEST_CASE("kolmogorov survival function matches reference values") {
  CHECK(kolmogorov_sf(0.0) == 1.0);
  CHECK(kolmogorov_sf(0.3) == doctest::Approx(0.9999906941986655).epsilon(1e-12));
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.5) == doctest::Approx(0.022217962616525127).epsilon(1e-12));
  CHECK(kolmogorov_sf(2.5) == doctest::Approx(7.453306344157342e-06).epsilon(1e-10));
}

TEST_CASE("ks statistic examples") {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 3, 4, 5};
  CHECK(ks_test(a, b).statistic == doctest::Approx(0.25));
  const std::vector<double> z{0, 0, 0}, o{1, 1, 1};
  CHECK(ks_test(z, o).statistic == 1.0);
  const auto same = ks_test(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  CHECK(same.permutations == 0);
  CHECK_THROWS_AS(ks_test(std::vector<double>{}, a), ArgumentError);
}

TEST_CASE("ks statistic equals an exhaustive ecdf scan") {
  Rng rng = make_rng(3, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const int m = 2 + static_cast<int>(uniform_index(rng, 15));
    const int n = 2 + static_cast<int>(uniform_index(rng, 15));
    std::vector<double> x(m), y(n);
    // Coarse values force ties.
    for (auto& v : x) v = static_cast<double>(uniform_index(rng, 6));
    for (auto& v : y) v = static_cast<double>(uniform_index(rng, 6));
    double d = 0;
    std::vector<double> all = x;
    all.insert(all.end(), y.begin(), y.end());
    for (double t : all) {
      const double fx = std::count_if(x.begin(), x.end(), [&](double v) { return v <= t; }) / double(m);
      const double fy = std::count_if(y.begin(), y.end(), [&](double v) { return v <= t; }) / double(n);
      d = std::max(d, std::abs(fx - fy));
    }
    CHECK(ks_test(x, y).statistic == doctest::Approx(d).epsilon(1e-14));
  }
}

TEST_CASE("ks asymptotic p-value") {
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) x.push_back(std::fmod(0.1 * i * i, 3.7));
  for (int i = 0; i < 40; ++i) y.push_back(std::fmod(0.37 * i, 4.1));
  const auto r = ks_test(x, y);
  CHECK(r.statistic == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(0.8352317250690608).epsilon(1e-10));
}

TEST_CASE("epps-singleton matches a reference implementation") {
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) x.push_back(std::fmod(0.1 * i * i, 3.7));
  for (int i = 0; i < 40; ++i) y.push_back(std::fmod(0.37 * i, 4.1));
  const auto r = es_test(x, y);
  CHECK(r.statistic == doctest::Approx(7.586365951126961).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(0.10796067046601154).epsilon(1e-9));
}

TEST_CASE("epps-singleton edge cases") {
  const std::vector<double> bin{0, 1, 0, 1, 1, 0, 0, 1, 1, 0};
  const auto r = es_test(bin, bin);
  CHECK(r.statistic == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(1.0));
  const std::vector<double> flat{1, 1, 1, 1, 1, 1};
  CHECK_THROWS_AS(es_test(flat, flat), NumericError);
  CHECK_THROWS_AS(es_test(std::vector<double>{1, 2, 3}, bin), ArgumentError);
}

TEST_CASE("epps-singleton calibration and power") {
  Rng rng = make_rng(11, 0);
  int pass = 0;
  int reject_shift = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> a(500), b(500), c(500);
    for (auto& v : a) v = standard_normal(rng);
    for (auto& v : b) v = standard_normal(rng);
    for (auto& v : c) v = standard_normal(rng) + 3.0;
    pass += es_test(a, b).p_value > 0.05;
    if (rep < 20) reject_shift += es_test(a, c).p_value < 0.01;
  }
  CHECK(pass >= 90);
  CHECK(reject_shift == 20);
}

TEST_CASE("energy statistic examples") {
  CHECK(energy_stat(column({0}), column({2})) == doctest::Approx(4.0));
  CHECK(energy_stat(column({1, 2, 3}), column({3, 1, 2})) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(energy_stat(SampleMatrix::Zero(2, 1), SampleMatrix::Zero(2, 2)), ShapeError);
}

TEST_CASE("friedman-rafsky examples") {
  const auto a = fr_counts(column({0, 1}), column({10, 11}));
  CHECK(a.cross_edges == 1);
  CHECK(a.runs == 2);
  CHECK(fr_stat(column({0, 2, 4}), column({1, 3, 5})) == 6.0);
  CHECK(fr_counts(column({1}), column({1})).cross_edges == 1);
}

TEST_CASE("knn examples") {
  CHECK(knn_stat(column({0, 1}), column({10, 11}), 1) == 1.0);
  CHECK(knn_stat(column({0, 2}), column({1, 3}), 1) == 0.0);
  // With every other point a neighbour the value only depends on sizes.
  Rng rng = make_rng(5, 0);
  const auto x = random_points(rng, 3, 2), y = random_points(rng, 4, 2);
  const double expected = (3.0 * 2 + 4.0 * 3) / (7.0 * 6);
  CHECK(knn_stat(x, y, 6) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(knn_stat(x, y, 7), ArgumentError);
}

TEST_CASE("wasserstein examples") {
  CHECK(wasserstein_dist(column({0}), column({1}), 1) == 1.0);
  CHECK(wasserstein_dist(column({0}), column({1}), 2) == 1.0);
  CHECK(wasserstein_dist(column({0, 1}), column({1, 2}), 1) == 1.0);
  // Unequal sizes in one dimension: quantile coupling.
  CHECK(wasserstein_dist(column({0}), column({0, 2}), 1) == doctest::Approx(1.0));
  CHECK(wasserstein_dist(column({0}), column({0, 2}), 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(wasserstein_dist(SampleMatrix::Zero(2, 2), SampleMatrix::Zero(3, 2), 1), ArgumentError);
  CHECK_THROWS_AS(wasserstein_statistic(3), ArgumentError);
}

TEST_CASE("statistics match exhaustive oracles on small instances") {
  Rng rng = make_rng(17, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 1 + static_cast<int>(uniform_index(rng, 3));
    const int m = 1 + static_cast<int>(uniform_index(rng, 4));
    const int n = 1 + static_cast<int>(uniform_index(rng, 4));
    const auto x = random_points(rng, m, d), y = random_points(rng, n, d);
    CHECK(std::abs(energy_stat(x, y) - brute_energy(x, y)) <= 1e-12);
    if (m + n >= 2) CHECK(fr_counts(x, y).cross_edges == brute_fr_cross(x, y));
    if (m + n >= 3) {
      const int k = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(m + n - 1)));
      CHECK(std::abs(knn_stat(x, y, k) - brute_knn(x, y, k)) <= 1e-12);
    }
    const auto ys = random_points(rng, m, d);
    for (int order : {1, 2}) CHECK(std::abs(wasserstein_dist(x, ys, order) - brute_wasserstein(x, ys, order)) <= 1e-12);
  }
}

TEST_CASE("statistics are symmetric and invariant to row order") {
  Rng rng = make_rng(19, 0);
  for (int rep = 0; rep < 30; ++rep) {
    const auto x = random_points(rng, 6, 2), y = random_points(rng, 6, 2);
    Eigen::PermutationMatrix<Eigen::Dynamic> p(6);
    p.setIdentity();
    std::reverse(p.indices().data(), p.indices().data() + 6);
    const SampleMatrix xp = p * x;
    CHECK(energy_stat(x, y) == doctest::Approx(energy_stat(y, x)).epsilon(1e-12));
    CHECK(energy_stat(x, y) == doctest::Approx(energy_stat(xp, y)).epsilon(1e-12));
    CHECK(fr_stat(x, y) == fr_stat(y, x));
    CHECK(fr_stat(x, y) == fr_stat(xp, y));
    CHECK(knn_stat(x, y, 3) == knn_stat(y, x, 3));
    CHECK(knn_stat(x, y, 3) == knn_stat(xp, y, 3));
    CHECK(wasserstein_dist(x, y, 2) == doctest::Approx(wasserstein_dist(y, x, 2)).epsilon(1e-12));
    CHECK(wasserstein_dist(x, y, 1) == doctest::Approx(wasserstein_dist(xp, y, 1)).epsilon(1e-12));
  }
}

TEST_CASE("assignment solver agrees with enumeration") {
  Rng rng = make_rng(23, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 7));
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = rep % 3 == 0 ? double(uniform_index(rng, 3)) : uniform01(rng);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
      double s = 0;
      for (int i = 0; i < n; ++i) s += c(i, perm[i]);
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto a = solve_assignment(c);
    CHECK(std::abs(a.cost - best) <= 1e-12);
    std::vector<int> cols = a.column_of_row;
    std::sort(cols.begin(), cols.end());
    for (int i = 0; i < n; ++i) CHECK(cols[i] == i);
  }
}

TEST_CASE("sinkhorn approaches the exact transport cost") {
  Rng rng = make_rng(29, 0);
  const auto x = random_points(rng, 40, 2), y = random_points(rng, 40, 2);
  const auto exact = wasserstein(x, y, 1);
  const auto approx = wasserstein(x, y, 1, 10);
  CHECK(exact.exact);
  CHECK_FALSE(approx.exact);
  // Any coupling costs at least the optimum.
  CHECK(approx.distance >= exact.distance - 1e-9);
  SampleMatrix p(80, 2);
  p << x, y;
  const Eigen::MatrixXd c = pairwise_distances(p).topRightCorner(40, 40);
  const double eps = 0.01 * c.mean();
  const Eigen::MatrixXd k = (-c / eps).array().exp().matrix();
  const auto s = sinkhorn(c, k, 200000, 1e-9);
  CHECK(s.converged);
  // Uniform marginals: entropy gap of the regularized plan is at most log n.
  CHECK(s.transport_cost >= exact.distance - 1e-9);
  CHECK(s.transport_cost <= exact.distance + eps * std::log(40.0) + 1e-9);
}

TEST_CASE("permutation test basics") {
  const auto x = column({1, 2, 3, 4}), y = column({4, 3, 2, 1});
  const auto r = permutation_test(x, y, energy_statistic(), {.permutations = 200, .seed = 1});
  CHECK(r.statistic == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(r.p_value == 1.0);
  CHECK(r.permutations == 200);
  CHECK(r.method == "permutation");
  CHECK_THROWS_AS(permutation_test(x, y, energy_statistic(), {.permutations = 0}), ArgumentError);

  Rng rng = make_rng(31, 0);
  SampleMatrix far = random_points(rng, 20, 2);
  far.array() += 100.0;
  const auto sep = permutation_test(random_points(rng, 20, 2), far, energy_statistic(), {.permutations = 1000, .seed = 2});
  CHECK(sep.p_value <= 0.002);
  CHECK(sep.p_value > 0.0);
  const auto fr = permutation_test(random_points(rng, 20, 2), far, fr_statistic(), {.permutations = 1000, .seed = 2});
  CHECK(fr.orientation == Orientation::smaller_is_different);
  CHECK(fr.p_value <= 0.002);
}

TEST_CASE("permutation test is reproducible and thread-count independent") {
  Rng rng = make_rng(37, 0);
  const auto x = random_points(rng, 30, 3), y = random_points(rng, 30, 3);
  for (const auto& s : {energy_statistic(), fr_statistic(), knn_statistic(), wasserstein_statistic(1)}) {
    const auto a = permutation_test(x, y, s, {.permutations = 300, .seed = 9, .threads = 1});
    const auto b = permutation_test(x, y, s, {.permutations = 300, .seed = 9, .threads = 3});
    CHECK(a.p_value == b.p_value);
    CHECK(a.statistic == b.statistic);
  }
}

TEST_CASE("sampled p-values match all re-splits at pooled size six") {
  Rng rng = make_rng(41, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = random_points(rng, 3, 2);
    auto y = random_points(rng, 3, 2);
    if (rep % 2) y.array() += 1.5;
    for (const auto& s : {energy_statistic(), fr_statistic(), knn_statistic(1), wasserstein_statistic(1),
                          wasserstein_statistic(2)}) {
      const double exact = exact_pvalue(x, y, s);
      const auto r = permutation_test(x, y, s, {.permutations = 1000, .seed = static_cast<std::uint64_t>(rep), .shuffle_pooled = false});
      CHECK(std::abs(r.p_value - exact) <= 0.05);
    }
  }
}

TEST_CASE("function statistics recompute on each split") {
  Rng rng = make_rng(43, 0);
  const auto x = random_points(rng, 10, 2), y = random_points(rng, 12, 2);
  const auto wrapped = function_statistic("energy-direct", Orientation::larger_is_different,
                                          [](const SampleMatrix& a, const SampleMatrix& b) { return brute_energy(a, b); });
  const auto a = permutation_test(x, y, wrapped, {.permutations = 100, .seed = 4});
  const auto b = permutation_test(x, y, energy_statistic(), {.permutations = 100, .seed = 4});
  CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-12));
  CHECK(a.p_value == b.p_value);
}

TEST_CASE("one-dimensional wasserstein permutation uses the sorted path") {
  Rng rng = make_rng(47, 0);
  const auto x = random_points(rng, 25, 1), y = random_points(rng, 35, 1);
  const auto r = permutation_test(x, y, wasserstein_statistic(2), {.permutations = 50, .seed = 1});
  CHECK(r.statistic == doctest::Approx(wasserstein_dist(x, y, 2)).epsilon(1e-12));
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value <= 1.0);
  (void)to_vec;
}
