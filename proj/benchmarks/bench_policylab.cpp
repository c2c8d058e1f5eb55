#include <benchmark/benchmark.h>

#include "policylab/dgp.hpp"
#include "policylab/harness.hpp"
#include "policylab/policy.hpp"

using namespace policylab;

namespace {

DgpSpec latent_spec() {
  LatentNormalParams p;
  p.d = 2;
  p.tau_coefficients = {0.1, 0.3, -0.2, 1.0};
  return {p, 1};
}

Dataset with_proxy(std::size_t n) { return build_proxy(generate(latent_spec(), n), {5}); }

void BM_Generate(benchmark::State& state) {
  const DgpSpec spec = latent_spec();
  for (auto _ : state) benchmark::DoNotOptimize(generate(spec, static_cast<std::size_t>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Generate)->Arg(1000)->Arg(100000);

void BM_IpwWelfare(benchmark::State& state) {
  const Dataset d = with_proxy(static_cast<std::size_t>(state.range(0)));
  const ThresholdRule rule{{0.0, kNoThreshold}, 0.25};
  for (auto _ : state) benchmark::DoNotOptimize(ipw_welfare(d, rule));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IpwWelfare)->Arg(1000)->Arg(100000);

void BM_EwmSearch(benchmark::State& state) {
  const Dataset d = with_proxy(static_cast<std::size_t>(state.range(0)));
  const PolicyClassSpec cls = materialize_grid({PolicyKind::augmented, {}, {}, 3, static_cast<int>(state.range(1))}, d);
  for (auto _ : state) benchmark::DoNotOptimize(ewm_search(d, cls));
  state.counters["grid"] = static_cast<double>(cls.grid_size());
}
BENCHMARK(BM_EwmSearch)->Args({1000, 10})->Args({10000, 10})->Args({10000, 20})->Unit(benchmark::kMillisecond);

void BM_Algorithm2(benchmark::State& state) {
  const Dataset d = generate(latent_spec(), 1000);
  DesignEvaluation config;
  config.budgets = {600, 1000};
  config.t_grid = {0, 1, 2, 3};
  config.R = 2;
  for (auto _ : state) benchmark::DoNotOptimize(run_algorithm2(d, config, {0.6, 2, 0}));
}
BENCHMARK(BM_Algorithm2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
