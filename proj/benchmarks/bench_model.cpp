// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <benchmark/benchmark.h>

#include "tagm/training.hpp"

namespace {

using namespace tagm;

Sequence random_sequence(std::size_t T, std::size_t D, std::size_t K) {
  std::mt19937_64 rng(T);
  std::normal_distribution<double> n(0.0, 1.0);
  Sequence s{Matrix(T, D), Label::single(T % K), {}};
  for (double& v : s.x.values()) v = n(rng);
  return s;
}

Model bench_model(ModelKind kind, std::size_t hidden) {
  return Model::initialized(kind, ModelDims{13, kind == ModelKind::rnn ? 0 : hidden, hidden, 10},
                            HeadMode::multiclass, 1);
}

void BM_Forward(benchmark::State& state, ModelKind kind) {
  const auto T = static_cast<std::size_t>(state.range(0));
  const auto H = static_cast<std::size_t>(state.range(1));
  const Model m = bench_model(kind, H);
  const Sequence s = random_sequence(T, 13, 10);
  for (auto _ : state) benchmark::DoNotOptimize(forward_full(s, m).loss);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(T));
}

void BM_ForwardBackward(benchmark::State& state, ModelKind kind) {
  const auto T = static_cast<std::size_t>(state.range(0));
  const auto H = static_cast<std::size_t>(state.range(1));
  const Model m = bench_model(kind, H);
  const Sequence s = random_sequence(T, 13, 10);
  for (auto _ : state) {
    const ForwardCache c = forward_full(s, m);
    benchmark::DoNotOptimize(backward_full(c, m));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(T));
}

void BM_RmspropStep(benchmark::State& state) {
  Model m = bench_model(ModelKind::tagm, static_cast<std::size_t>(state.range(0)));
  Model g = m.zeros_like();
  g.for_each_tensor([](TensorRef r) {
    for (double& v : r.values) v = 1e-3;
  });
  RmspropState st = RmspropState::for_model(m);
  const TrainConfig cfg;
  for (auto _ : state) rmsprop_step(m, g, st, cfg);
}

const std::vector<std::vector<std::int64_t>> kShapes{{50, 100}, {16, 64, 128}};

BENCHMARK_CAPTURE(BM_Forward, tagm, ModelKind::tagm)->ArgsProduct(kShapes);
BENCHMARK_CAPTURE(BM_Forward, rnn, ModelKind::rnn)->ArgsProduct(kShapes);
BENCHMARK_CAPTURE(BM_Forward, amnn, ModelKind::amnn)->ArgsProduct(kShapes);
BENCHMARK_CAPTURE(BM_ForwardBackward, tagm, ModelKind::tagm)->ArgsProduct(kShapes);
BENCHMARK_CAPTURE(BM_ForwardBackward, rnn, ModelKind::rnn)->ArgsProduct(kShapes);
BENCHMARK(BM_RmspropStep)->Arg(16)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
