// Serial reference against the OpenMP path for the batched kernels.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "onlab/kernels.hpp"
#include "onlab/network.hpp"

namespace {

using namespace onlab;

struct Workload {
  Network net = Network::random({64, 32, 32, 3}, 1);
  std::vector<Vec> inputs;
  std::vector<std::size_t> labels;
  std::vector<std::uint64_t> seeds;

  explicit Workload(std::size_t n) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (std::size_t i = 0; i < n; ++i) {
      Vec x(64);
      for (double& v : x) v = g(rng);
      inputs.push_back(x);
      labels.push_back(i % 3);
      seeds.push_back(i);
    }
  }
};

ExecPolicy policy_of(const benchmark::State& state) {
  return state.range(1) != 0 ? ExecPolicy::Parallel : ExecPolicy::Serial;
}

void BM_BatchTopSigma(benchmark::State& state) {
  const Workload w(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(batch_top_sigma(w.net, w.inputs, MapLayer::LastHidden, policy_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchAttack(benchmark::State& state) {
  const Workload w(static_cast<std::size_t>(state.range(0)));
  AttackConfig cfg;
  cfg.eps = 1.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(batch_attack(w.net, w.inputs, w.labels, cfg, w.seeds, policy_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

// Second argument: 0 serial, 1 OpenMP.
BENCHMARK(BM_BatchTopSigma)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchAttack)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
