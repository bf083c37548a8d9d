#include <benchmark/benchmark.h>

#include "poselift/data.hpp"
#include "poselift/model.hpp"
#include "poselift/training.hpp"

using namespace poselift;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& x : t.data) x = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  const Tensor a = random_tensor(rng, {n, n});
  const Tensor b = random_tensor(rng, {n, n});
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n) * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_GroupedGconv(benchmark::State& state) {
  Rng rng(2);
  const Skeleton skeleton = resolve_skeleton("h36m17");
  const PartitionedAdjacency part = partition_adjacency(skeleton);
  const int d = static_cast<int>(state.range(0));
  GroupedConvWeights w;
  w.theta1 = random_tensor(rng, {d, d});
  w.theta2 = random_tensor(rng, {d, d});
  w.theta3 = random_tensor(rng, {d, d});
  w.bias = random_tensor(rng, {d});
  const Tensor x = random_tensor(rng, {17, d});
  for (auto _ : state) {
    benchmark::DoNotOptimize(grouped_gconv(x, part, w));
  }
}
BENCHMARK(BM_GroupedGconv)->Arg(64)->Arg(512);

void BM_ForwardTiny(benchmark::State& state) {
  ModelConfig cfg;
  cfg.num_joints = 17;
  cfg.channels = 64;
  cfg.depth = 2;
  cfg.num_heads = 4;
  const Model model = build_model(cfg, 1);
  Rng rng(3);
  const Tensor input = random_tensor(rng, {17, 2});
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(model, input));
  }
}
BENCHMARK(BM_ForwardTiny);

void BM_ForwardDefaultConfig(benchmark::State& state) {
  const Model model = build_model(ModelConfig{}, 1);
  Rng rng(4);
  const Tensor input = random_tensor(rng, {17, 2});
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(model, input));
  }
}
BENCHMARK(BM_ForwardDefaultConfig)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  ModelConfig cfg;
  cfg.num_joints = 5;
  cfg.channels = 16;
  cfg.depth = 1;
  cfg.num_heads = 2;
  cfg.skeleton = "tiny5";
  Model model = build_model(cfg, 1);
  const Dataset data = synth_dataset(1, 8, model.skeleton);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  tc.lr0 = 1e-4;
  for (auto _ : state) {
    TrainState ts;
    benchmark::DoNotOptimize(train(model, data, nullptr, tc, ts));
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
