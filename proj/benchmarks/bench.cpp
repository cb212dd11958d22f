#include <filesystem>

#include <benchmark/benchmark.h>

#include "dppm/data.hpp"
#include "dppm/dpm_sampler.hpp"
#include "dppm/evaluation.hpp"
#include "dppm/finite_sampler.hpp"
#include "dppm/model_selection.hpp"

using namespace dppm;

namespace {

const DataMatrix& geyser() {
  static const DataMatrix data =
      standardize(load_csv(std::filesystem::path(DPPM_DATA_DIR) / "faithful.csv"));
  return data;
}

// Full DP chains of 200 iterations on the standardized Geyser data, one per model.
void BM_GibbsGeyser(benchmark::State& state) {
  const auto model = kAllModels[state.range(0)];
  const auto& x = geyser().values;
  const Hyperparams h = Hyperparams::from_data(x);
  GibbsOptions opt;
  opt.n_samples = 200;
  opt.burn_in = 20;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    RngHandle rng(seed++);
    benchmark::DoNotOptimize(run_gibbs(x, model, h, opt, rng));
  }
  state.SetLabel(std::string(model_code(model)));
}
BENCHMARK(BM_GibbsGeyser)->DenseRange(0, 8)->Unit(benchmark::kMillisecond);

void BM_FiniteGibbs(benchmark::State& state) {
  const auto& x = geyser().values;
  const Hyperparams h = Hyperparams::from_data(x);
  FiniteOptions opt;
  opt.n_samples = 200;
  opt.burn_in = 20;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    RngHandle rng(seed++);
    benchmark::DoNotOptimize(run_finite_gibbs(x, ModelFamily::GeneralEqual, static_cast<int>(state.range(0)), h, opt, rng));
  }
}
BENCHMARK(BM_FiniteGibbs)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Laplace(benchmark::State& state) {
  const auto& x = geyser().values;
  const Hyperparams h = Hyperparams::from_data(x);
  RngHandle rng(1);
  const auto chain = run_gibbs(x, ModelFamily::GeneralEqual, h, {}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(laplace_marginal_loglik(chain, ModelFamily::GeneralEqual, h, x));
}
BENCHMARK(BM_Laplace)->Unit(benchmark::kMillisecond);

void BM_AlphaUpdate(benchmark::State& state) {
  RngHandle rng(2);
  double alpha = 1.0;
  for (auto _ : state) {
    alpha = sample_alpha(alpha, 3, 272, 1.0, 1.0, rng);
    benchmark::DoNotOptimize(alpha);
  }
}
BENCHMARK(BM_AlphaUpdate);

void BM_Misclassification(benchmark::State& state) {
  const int n = 1000, K = static_cast<int>(state.range(0));
  RngHandle rng(3);
  std::vector<int> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = i % K;
    b[i] = rng.uniform() < 0.9 ? (a[i] + 1) % K : static_cast<int>(rng.uniform() * K);
  }
  for (auto _ : state) benchmark::DoNotOptimize(misclassification_error(a, b));
}
BENCHMARK(BM_Misclassification)->Arg(2)->Arg(6)->Arg(12);

}  // namespace

BENCHMARK_MAIN();
