// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "msnf/data/generator.hpp"
#include "msnf/engine/ops.hpp"
#include "msnf/engine/parameters.hpp"
#include "msnf/engine/rng.hpp"
#include "msnf/engine/tape.hpp"
#include "msnf/model/msnf_model.hpp"
#include "msnf/model/trainer.hpp"
#include "msnf/text/embedding.hpp"

namespace {

using namespace msnf;

Tensor noise(Shape shape, Rng& rng, double scale = 0.1) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = scale * normal(rng);
  return t;
}

// 32 sequences of 12 steps, 20 features in, 75 units: the first temporal layer
void BM_LstmForward(benchmark::State& state) {
  Rng rng(1);
  const std::size_t seqs = 32, steps = 12, in = 20, units = 75;
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i <= seqs; ++i) offsets.push_back(i * steps);
  const Tensor x = noise({seqs * steps, in}, rng, 1.0);
  const Tensor w = noise({4, units, in + units}, rng);
  const Tensor b({4, units});
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(
        tape.value(ops::lstm(tape, tape.constant(x), offsets, tape.constant(w), tape.constant(b))));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seqs * steps));
}
BENCHMARK(BM_LstmForward)->Unit(benchmark::kMillisecond);

void BM_LstmBackward(benchmark::State& state) {
  Rng rng(2);
  const std::size_t seqs = 32, steps = 12, in = 20, units = 75;
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i <= seqs; ++i) offsets.push_back(i * steps);
  const Tensor x = noise({seqs * steps, in}, rng, 1.0);
  ParameterStore store;
  const auto w = store.add("w", noise({4, units, in + units}, rng));
  const auto b = store.add("b", Tensor({4, units}));
  for (auto _ : state) {
    store.zero_grad();
    Tape tape;
    const Var h = ops::lstm(tape, tape.constant(x), offsets, tape.parameter(store, w), tape.parameter(store, b));
    tape.backward(ops::sum(tape, h));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seqs * steps));
}
BENCHMARK(BM_LstmBackward)->Unit(benchmark::kMillisecond);

// batch of 32 performance vectors, 8 filters of width 11
void BM_Conv1d(benchmark::State& state) {
  Rng rng(3);
  const Tensor x = noise({32, 120, 1}, rng, 1.0);
  const Tensor w = noise({8, 1, 11}, rng);
  const Tensor b({8});
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(tape.value(
        ops::conv1d(tape, tape.constant(x), tape.constant(w), tape.constant(b), ops::Padding::same)));
  }
}
BENCHMARK(BM_Conv1d)->Unit(benchmark::kMicrosecond);

void BM_TrainStep(benchmark::State& state) {
  data::CohortSpec spec;
  spec.n_students = 256;
  spec.seed = 4;
  text::HashingEmbedder embedder(64, 0);
  const auto students = data::encode_dataset(data::generate_cohort(spec), embedder);
  MsnfModel model(ModelConfig{}, 5);
  model.fit_scaler(students);
  TrainOptions opt;
  opt.schedule.learning_rates = {1e-3};
  opt.schedule.iterations = {1};
  opt.schedule.scale = 1.0;
  opt.seed = 6;
  for (auto _ : state) benchmark::DoNotOptimize(train(model, students, opt).loss_trace);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(opt.schedule.batch_size));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
