#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "stgin/data.hpp"
#include "stgin/kernels.hpp"
#include "stgin/train.hpp"

using namespace stgin;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

template <bool Parallel>
void gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n * n, 1), b = random_vector(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0);
    if constexpr (Parallel) {
      kernels::parallel::gemm_nn(a, b, c, n, n, n);
    } else {
      kernels::serial::gemm_nn(a, b, c, n, n, n);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
  state.counters["threads"] = Parallel ? kernels::max_threads() : 1;
}

// One batch gradient of a 20-node model, samples serial or spread over threads.
template <bool Parallel>
void batch_gradient_bench(benchmark::State& state) {
  SynthConfig sc;
  sc.days = 1;
  const SynthData data = synthesize(sc);
  const NormStats stats = fit_normalization(data.speeds, data.speeds.rows());
  const auto windows = sliding_windows(normalize(data.speeds, stats), 12, 3);
  const RoadGraph graph =
      build_adjacency(data.distances, sigma_from_distances(data.distances),
                      kappa_from_percentile(data.distances, 5.0));
  StginDims d;
  d.nodes = sc.nodes;
  d.input_len = 12;
  d.token_len = 6;
  const StginModel model = init_params(d, 1);
  std::vector<const SampleWindow*> batch;
  for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)); ++i) {
    batch.push_back(&windows[i * 7]);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_gradient(model, graph, batch, Parallel).loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(gemm<false>)->Name("gemm_nn/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(gemm<true>)->Name("gemm_nn/openmp")->Arg(64)->Arg(128)->Arg(256)->UseRealTime();
BENCHMARK(batch_gradient_bench<false>)->Name("batch_gradient/serial")->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(batch_gradient_bench<true>)
    ->Name("batch_gradient/openmp")
    ->Arg(8)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
