// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "pitlab/curriculum.hpp"
#include "pitlab/model.hpp"
#include "pitlab/ops.hpp"
#include "pitlab/optim.hpp"
#include "pitlab/random.hpp"

using namespace pitlab;

namespace {

Tensor<float> filled(Shape shape, Rng& rng) {
  Tensor<float> t(std::move(shape));
  for (auto& x : t.values()) x = static_cast<float>(rng.normal(0, 1));
  return t;
}

ModelConfig desk_model(std::size_t layers, std::size_t dim) {
  ModelConfig c;
  c.layers = layers;
  c.heads = 8;
  c.dim = dim;
  c.context = 256;
  c.vocab_size = 1500;
  return c;
}

std::vector<TrainExample> random_batch(Rng& rng, std::size_t n, std::size_t len, std::size_t vocab) {
  std::vector<TrainExample> out(n);
  for (auto& e : out) {
    e.tokens.resize(len);
    for (auto& t : e.tokens) t = static_cast<TokenId>(rng.index(vocab));
    e.loss_weights.assign(len - 1, 1.0f);
  }
  return out;
}

}  // namespace

static void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor<float> a = filled({n, n}, rng), b = filled({n, n}, rng);
  for (auto _ : state) {
    Tape<float> tape;
    Var x = tape.leaf(a), y = tape.leaf(b);
    tape.backward(ops::sum<float>(tape, ops::matmul<float>(tape, x, y)));
    benchmark::DoNotOptimize(tape.grad(x).data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(6 * n * n * n));
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMicrosecond);

static void BM_TrainStep(benchmark::State& state) {
  Model<float> model(desk_model(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1))));
  Rng rng(2);
  const auto batch = random_batch(rng, 8, 64, 1500);
  std::vector<const TrainExample*> ptrs;
  for (const auto& e : batch) ptrs.push_back(&e);
  OptimConfig oc;
  oc.total_steps = 1000000;
  OptimState<float> st;
  for (auto _ : state) {
    model.zero_grad();
    Tape<float> tape;
    tape.backward(batch_loss<float>(tape, model, ptrs));
    adamw_step(model.parameters(), st, oc, 1e-4);
  }
  state.SetItemsProcessed(state.iterations() * 8 * 64);
}
BENCHMARK(BM_TrainStep)->Args({2, 128})->Args({4, 256})->Unit(benchmark::kMillisecond);

static void BM_GreedyDecode(benchmark::State& state) {
  Model<float> model(desk_model(4, 256));
  Rng rng(3);
  std::vector<TokenSequence> prompts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : prompts) {
    p.resize(16);
    for (auto& t : p) t = static_cast<TokenId>(rng.index(1500));
  }
  for (auto _ : state) benchmark::DoNotOptimize(greedy_decode(model, prompts, 12, {}, 64));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 12);
}
BENCHMARK(BM_GreedyDecode)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
