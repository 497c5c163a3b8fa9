// Microbenchmarks for the hot numerical paths: forward pass, batch gradient,
// and the first-order parameter update.

#include <benchmark/benchmark.h>

#include "ulbench/grad.hpp"
#include "ulbench/scenario.hpp"
#include "ulbench/unlearn.hpp"

using namespace ulbench;

namespace {

LabeledDataset bench_images(int per_class) {
  SyntheticImageSpec spec;
  spec.num_classes = 10;
  spec.per_class = per_class;
  spec.seed = 1;
  return make_synthetic_images(spec, Split::kTrain, "bench");
}

void BM_ForwardPass(benchmark::State& state) {
  const auto ds = bench_images(4);
  const auto arch = make_cnn3(ds.shape(), 10, static_cast<int>(state.range(0)));
  const auto params = init_params(arch, 2);
  Workspace<float> ws;
  std::size_t i = 0;
  for (auto _ : state) {
    net_forward(arch, params.data(), ds.input(i % ds.size()), ws);
    benchmark::DoNotOptimize(ws.act.back().data());
    ++i;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_ForwardPass)->Arg(8)->Arg(16);

void BM_BatchGradient(benchmark::State& state) {
  const auto ds = bench_images(8);
  const auto arch = make_cnn3(ds.shape(), 10, static_cast<int>(state.range(0)));
  const auto params = init_params(arch, 3);
  const auto batch = make_batch(ds, ds.all_indices());
  std::vector<float> grad;
  for (auto _ : state) {
    ce_batch_gradient(arch, params, batch, grad);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(ds.size()));
}
BENCHMARK(BM_BatchGradient)->Arg(8)->Arg(16);

void BM_FirstOrderUpdate(benchmark::State& state) {
  const auto ds = bench_images(8);
  ModelState model;
  model.arch = make_cnn3(ds.shape(), 10, 8);
  model.params = init_params(model.arch, 4);
  model.trained_on = ds.fingerprint();
  const auto plan = select_all_classes(ds, 16, 5);
  UnlearnContext ctx;
  ctx.original = &model;
  ctx.dataset = &ds;
  ctx.plan = &plan;
  ctx.method_params = {{"tau", 0.04}};
  for (auto _ : state) {
    const auto res = influence_first_order(ctx);
    benchmark::DoNotOptimize(res.model.params.data());
  }
}
BENCHMARK(BM_FirstOrderUpdate);

}  // namespace

BENCHMARK_MAIN();
