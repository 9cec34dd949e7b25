#include <benchmark/benchmark.h>

#include <vector>

#include "ngcn/data.hpp"
#include "ngcn/gcn.hpp"
#include "ngcn/graph.hpp"
#include "ngcn/kfac.hpp"
#include "ngcn/linalg.hpp"
#include "ngcn/rng.hpp"

namespace {

using namespace ngcn;

DenseMatrix random_dense(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (auto& v : m.values()) v = rng.uniform() - 0.5;
  return m;
}

// Roughly the density of a bag-of-words feature matrix.
DenseMatrix random_sparse_features(std::size_t d, std::size_t n, double density, Rng& rng) {
  DenseMatrix m(d, n);
  for (auto& v : m.values())
    if (rng.uniform() < density) v = 1.0;
  row_normalize_features(m);
  return m;
}

SparseAdjacency random_graph(std::size_t n, std::size_t avg_degree, Rng& rng) {
  std::vector<Edge> edges;
  for (std::size_t e = 0; e < n * avg_degree / 2; ++e) {
    edges.emplace_back(static_cast<NodeIndex>(rng.next() % n),
                       static_cast<NodeIndex>(rng.next() % n));
  }
  return SparseAdjacency::from_edge_list(n, edges);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto a = random_dense(n, n, rng);
  const auto b = random_dense(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oNCubed);

void BM_DampedInverse(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto b = random_dense(n, n, rng);
  auto x = scale(matmul_nt(b, b), 1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x(j, i) = x(i, j);
  for (auto _ : state) benchmark::DoNotOptimize(damped_spd_inverse(x, 100.0));
  state.SetComplexityN(state.range(0));
}
// 3705 is the first-layer V factor on CiteSeer.
BENCHMARK(BM_DampedInverse)
    ->RangeMultiplier(4)
    ->Range(16, 1024)
    ->Arg(3705)
    ->Unit(benchmark::kMillisecond)
    ->Complexity(benchmark::oNCubed);

void BM_Spmm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const auto norm = normalize(random_graph(n, 4, rng));
  const auto x = random_dense(64, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(spmm(norm, x));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(norm.nonzeros() * 64));
}
BENCHMARK(BM_Spmm)->RangeMultiplier(4)->Range(1 << 10, 1 << 16);

// One training step's model work at CiteSeer scale (no optimizer).
void BM_ForwardBackward(benchmark::State& state) {
  constexpr std::size_t n = 3327, d0 = 3703, classes = 6;
  Rng rng(4);
  const auto norm = normalize(random_graph(n, 3, rng));
  const auto features = random_sparse_features(d0, n, 0.0086, rng);
  const auto input = aggregate_features(norm, features);
  const auto params = init_glorot({{d0, 64, classes}}, 5);
  std::vector<int> labels(n);
  std::vector<double> weights(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % classes);
  for (std::size_t i = 0; i < 120; ++i) weights[i] = 1.0 / 120.0;
  Rng drop(6);
  for (auto _ : state) {
    const auto cache = forward(params, norm, input, Mode::kTrain, drop);
    benchmark::DoNotOptimize(backward(cache, params, norm, labels, weights));
  }
}
BENCHMARK(BM_ForwardBackward)->Unit(benchmark::kMillisecond);

void BM_Precondition(benchmark::State& state) {
  const auto d_in = static_cast<std::size_t>(state.range(0));
  const auto d_out = static_cast<std::size_t>(state.range(1));
  Rng rng(7);
  KfacState kfac;
  kfac.layers.push_back({DenseMatrix::identity(d_out), DenseMatrix::identity(d_in + 1),
                         random_dense(d_out, d_out, rng), random_dense(d_in + 1, d_in + 1, rng)});
  const std::vector<DenseMatrix> grads{random_dense(d_out, d_in + 1, rng)};
  for (auto _ : state) benchmark::DoNotOptimize(precondition(kfac, grads));
}
BENCHMARK(BM_Precondition)->Args({64, 6})->Args({1433, 64})->Args({3703, 64});

}  // namespace

BENCHMARK_MAIN();
