#include <benchmark/benchmark.h>

#include "attnet/attack.hpp"
#include "attnet/jacobian.hpp"
#include "attnet/rng.hpp"
#include "attnet/train.hpp"

namespace {

using namespace attnet;

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  auto rng = make_rng(seed, 7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = unif(rng);
  return m;
}

AttractorModel reference_model(std::uint64_t seed) {
  AttractorModel model;
  model.arch = ArchSpec::reference_net();
  model.params = he_init(model.arch, seed);
  return model;
}

void BM_ForwardBatch64(benchmark::State& state) {
  const AttractorModel model = reference_model(1);
  const Matrix x = random_batch(64, 784, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(model.params, model.arch, x, true));
  }
}
BENCHMARK(BM_ForwardBatch64);

void BM_LossAndGradsBatch64(benchmark::State& state) {
  const AttractorModel model = reference_model(1);
  const Matrix x = random_batch(64, 784, 2);
  std::vector<int> y(64, 3);
  for (auto _ : state) {
    ForwardTrace trace = forward(model.params, model.arch, x, true);
    ParamGrads grads;
    benchmark::DoNotOptimize(
        loss_and_grads(model.params, model.arch, trace, x, y, 0.99, 0.01, &grads));
  }
}
BENCHMARK(BM_LossAndGradsBatch64);

void BM_InputJacobian(benchmark::State& state) {
  const AttractorModel model = reference_model(1);
  const Matrix x = random_batch(1, 784, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(input_jacobian(model.params, model.arch, x.row(0)));
  }
}
BENCHMARK(BM_InputJacobian);

void BM_EigenLossGradsBatch(benchmark::State& state) {
  const AttractorModel model = reference_model(1);
  const auto batch = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_batch(batch, 784, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        eigen_loss_param_grads(model.params, model.arch, x, static_cast<unsigned>(state.range(1))));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EigenLossGradsBatch)->Args({8, 1})->Args({8, 2});

void BM_Fgsm(benchmark::State& state) {
  const AttractorModel model = reference_model(1);
  const Matrix x = random_batch(64, 784, 2);
  std::vector<int> y(64, 3);
  AttackSpec spec;
  spec.epsilon_pixels = 20.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fgsm(model, x, y, spec));
  }
}
BENCHMARK(BM_Fgsm);

}  // namespace

BENCHMARK_MAIN();
