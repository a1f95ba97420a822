#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <vector>

#include "causalsynth/errors.hpp"
#include "causalsynth/random.hpp"
#include "causalsynth/stats/two_sample.hpp"

namespace causalsynth::stats {

namespace {

constexpr std::uint64_t kPoolShuffleStream = 0xffffffffffffULL;

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

}  // namespace

TestReport permutation_test(const SampleMatrix& x, const SampleMatrix& y,
                            const TwoSampleStatistic& statistic, const PermutationOptions& options) {
  if (options.permutations < 1) throw ArgumentError("permutation test needs at least one permutation");
  if (x.cols() != y.cols()) throw ShapeError("samples have different column counts");
  if (x.rows() == 0 || y.rows() == 0) throw ArgumentError("permutation test needs non-empty samples");
  if (!x.allFinite() || !y.allFinite()) throw ArgumentError("samples contain non-finite values");

  const Eigen::Index n = x.rows() + y.rows();
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(n), 0);
  std::fill(labels.begin() + x.rows(), labels.end(), std::uint8_t{1});
  SampleMatrix pooled(n, x.cols());
  pooled << x, y;
  if (options.shuffle_pooled) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(options.seed, kPoolShuffleStream);
    shuffle_in_place(order, rng);
    pooled = SampleMatrix(pooled(order, Eigen::all));
    std::vector<std::uint8_t> relabelled(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) relabelled[i] = labels[static_cast<std::size_t>(order[i])];
    labels = std::move(relabelled);
  }

  const auto bound = statistic.bind(pooled);
  const double observed = (*bound)(labels);
  const double slack = 1e-12 * std::max(1.0, std::abs(observed));
  const bool larger = statistic.orientation == Orientation::larger_is_different;

  const int total = options.permutations;
  auto run_range = [&](int begin, int end) {
    long hits = 0;
    std::vector<std::uint8_t> perm;
    for (int p = begin; p < end; ++p) {
      perm = labels;
      Rng rng = make_rng(options.seed, static_cast<std::uint64_t>(p));
      shuffle_in_place(perm, rng);
      const double v = (*bound)(perm);
      hits += larger ? (v >= observed - slack) : (v <= observed + slack);
    }
    return hits;
  };

  long hits = 0;
  const int threads = std::clamp(options.threads, 1, total);
  if (threads == 1) {
    hits = run_range(0, total);
  } else {
    std::vector<long> partial(static_cast<std::size_t>(threads), 0);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      const int b = static_cast<int>(static_cast<long>(total) * t / threads);
      const int e = static_cast<int>(static_cast<long>(total) * (t + 1) / threads);
      pool.emplace_back([&, t, b, e] { partial[static_cast<std::size_t>(t)] = run_range(b, e); });
    }
    for (auto& th : pool) th.join();
    hits = std::accumulate(partial.begin(), partial.end(), 0L);
  }

  TestReport r;
  r.name = statistic.name;
  r.statistic = observed;
  r.p_value = static_cast<double>(1 + hits) / static_cast<double>(1 + total);
  r.permutations = total;
  r.seed = options.seed;
  r.orientation = statistic.orientation;
  r.method = bound->exact() ? "permutation" : "permutation-entropic";
  return r;
}

}  // namespace causalsynth::stats
