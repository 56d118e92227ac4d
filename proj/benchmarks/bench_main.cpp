#include <benchmark/benchmark.h>

#include <vector>

#include "varorder/linalg.hpp"
#include "varorder/matrix.hpp"
#include "varorder/model.hpp"
#include "varorder/reparam.hpp"
#include "varorder/rng.hpp"
#include "varorder/simulate.hpp"

namespace {

using varorder::linalg::Matrix;

Matrix random_spd(int m, std::uint64_t seed) {
  varorder::Rng rng(seed, 0);
  Matrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = rng.normal();
  Matrix s = varorder::symmetrize(a * varorder::transpose(a));
  for (int i = 0; i < m; ++i) s(i, i) += m;
  return s;
}

void BM_DenmanBeaversSqrt(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Matrix s = random_spd(m, 7);
  for (auto _ : state) {
    auto pair = varorder::denman_beavers(s);
    benchmark::DoNotOptimize(pair);
  }
}
BENCHMARK(BM_DenmanBeaversSqrt)->Arg(2)->Arg(4)->Arg(8);

void BM_PacfToVar(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int p = static_cast<int>(state.range(1));
  varorder::GroundTruth truth = varorder::random_model(m, p, 11);
  Matrix sigma = Matrix::identity(m);
  for (auto _ : state) {
    auto model = varorder::pacf_to_var(sigma, truth.pacf);
    benchmark::DoNotOptimize(model);
  }
}
BENCHMARK(BM_PacfToVar)->Args({2, 4})->Args({3, 6})->Args({8, 8});

void BM_PosteriorGradient(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int p_max = static_cast<int>(state.range(1));
  varorder::GroundTruth truth = varorder::random_model(m, 2, 23);
  varorder::Dataset data = varorder::simulate(truth.model, 200, 29);
  varorder::ModelConfig cfg;
  cfg.p_max = p_max;
  auto target = varorder::make_target(data, cfg);
  varorder::ParamLayout lay{m, p_max};
  std::vector<double> theta(lay.dim(), 0.05), grad(lay.dim());
  for (auto _ : state) {
    double v = target(theta, grad);
    benchmark::DoNotOptimize(v);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_PosteriorGradient)->Args({2, 4})->Args({3, 6});

}  // namespace

BENCHMARK_MAIN();
