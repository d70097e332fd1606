#include <benchmark/benchmark.h>

#include "ucate/estimator.hpp"
#include "ucate/sem.hpp"
#include "ucate/synth.hpp"
#include "ucate/timeline.hpp"

namespace {

using namespace ucate;

synth::GeneratorSpec bench_spec() {
  synth::GeneratorSpec spec;
  spec.beta << 5.0, -8.0, 2.0, 0.4, 0.05, 0.1;
  spec.alpha << 10.0, 0.5, -0.3, -0.6;
  spec.sigma_b = 4.0;
  spec.sigma_l = 1.5;
  spec.timepoints = 23;
  spec.regime = estimator::Regime::treated_from(23, 12);
  spec.b1 = 50.0;
  spec.l1 = 20.0;
  spec.seed = 7;
  return spec;
}

void BM_SimulateForward(benchmark::State& state) {
  const auto spec = bench_spec();
  const auto coeffs = synth::true_coefficients(spec);
  const std::size_t t_points = static_cast<std::size_t>(state.range(0));
  const auto regime = estimator::Regime::treated_from(t_points, t_points / 2);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sem::simulate_forward(coeffs, spec.b1, spec.l1, regime.a, seed++));
  }
}
BENCHMARK(BM_SimulateForward)->Arg(23)->Arg(200);

void BM_FitSem(benchmark::State& state) {
  const auto spec = bench_spec();
  const auto tl = synth::generate_dataset(spec);
  const auto series = timeline::extract_series(tl, spec.drug);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sem::fit_sem(series));
  }
}
BENCHMARK(BM_FitSem);

void BM_GcomputeMc(benchmark::State& state) {
  const auto spec = bench_spec();
  const auto coeffs = synth::true_coefficients(spec);
  const auto treated = estimator::Regime::treated_from(23, 12);
  const auto control = estimator::Regime::never(23);
  estimator::McOptions options;
  options.n_mc = static_cast<int>(state.range(0));
  options.seed = 11;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimator::gcompute_mc(coeffs, spec.b1, spec.l1, treated,
                                                    control, IndexRange{12, 22}, options));
  }
}
BENCHMARK(BM_GcomputeMc)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_BootstrapCi(benchmark::State& state) {
  const auto spec = bench_spec();
  const auto tl = synth::generate_dataset(spec);
  const auto observed = timeline::extract_series(tl, spec.drug);
  const auto coeffs = sem::fit_sem(observed);
  const auto treated = estimator::Regime::treated_from(23, 12);
  const auto control = estimator::Regime::never(23);
  estimator::BootstrapOptions options;
  options.n_boot = static_cast<int>(state.range(0));
  options.seed = 13;
  options.threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimator::bootstrap_ci(coeffs, observed, treated, control,
                                                     IndexRange{12, 22}, options));
  }
}
BENCHMARK(BM_BootstrapCi)->Args({1000, 1})->Args({1000, 4})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
