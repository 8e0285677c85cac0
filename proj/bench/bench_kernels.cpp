// Production (blocked, OpenMP) kernels vs the plain serial reference
// implementations, across a small rig and a large one.

#include <quadrig/model.hpp>
#include <quadrig/reference.hpp>
#include <quadrig/solver.hpp>
#include <quadrig/spectral.hpp>
#include <quadrig/surrogate.hpp>
#include <quadrig/synth.hpp>

#include <benchmark/benchmark.h>

using namespace quadrig;

namespace {

struct Fixture {
  BlendshapeModel model;
  SpectralCache cache;
  TargetMesh target;
  WeightVector weights;
};

Fixture make_fixture(int n, int m, int pairs) {
  SynthSpec spec;
  spec.n_vertices = n;
  spec.n_blendshapes = m;
  spec.n_pairs = pairs;
  spec.locality = 0.2;
  spec.seed = 42;
  Fixture f;
  f.model = generate_model(spec);
  f.cache = assemble(f.model);
  compute_spectra(f.cache);
  TargetSample sample = generate_target(f.model, spec);
  f.target = sample.target;
  SplitMix64 rng(7);
  f.weights = WeightVector::zeros(m);
  for (int j = 0; j < m; ++j) f.weights.values[j] = rng.uniform();
  return f;
}

Fixture& fixture(int which) {
  static Fixture small = make_fixture(100, 20, 30);
  static Fixture large = make_fixture(4000, 40, 120);
  return which == 0 ? small : large;
}

void args(benchmark::internal::Benchmark* b) { b->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond); }

}  // namespace

static void bm_evaluate_quadratic(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_quadratic(f.model, f.weights));
}
BENCHMARK(bm_evaluate_quadratic)->Apply(args);

static void bm_evaluate_quadratic_ref(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ref::evaluate_quadratic(f.model, f.weights));
}
BENCHMARK(bm_evaluate_quadratic_ref)->Apply(args);

static void bm_compute_spectra(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    SpectralCache cache = assemble(f.model);
    compute_spectra(cache);
    benchmark::DoNotOptimize(cache.sigma_sq_sum);
  }
}
BENCHMARK(bm_compute_spectra)->Apply(args);

static void bm_compute_spectra_ref(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    SpectralCache cache = assemble(f.model);
    ref::compute_spectra(cache);
    benchmark::DoNotOptimize(cache.sigma_sq_sum);
  }
}
BENCHMARK(bm_compute_spectra_ref)->Apply(args);

static void bm_residual_state(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(residual_state(f.model, f.cache, f.weights, f.target));
}
BENCHMARK(bm_residual_state)->Apply(args);

static void bm_residual_state_ref(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(ref::residual_state(f.model, f.cache, f.weights, f.target));
}
BENCHMARK(bm_residual_state_ref)->Apply(args);

static void bm_coefficients(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  const ResidualState rs = residual_state(f.model, f.cache, f.weights, f.target);
  for (auto _ : state) benchmark::DoNotOptimize(coefficients(rs, f.cache, 0.1));
}
BENCHMARK(bm_coefficients)->Apply(args);

static void bm_coefficients_ref(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  const ResidualState rs = ref::residual_state(f.model, f.cache, f.weights, f.target);
  for (auto _ : state) benchmark::DoNotOptimize(ref::coefficients(rs, f.cache, 0.1));
}
BENCHMARK(bm_coefficients_ref)->Apply(args);

static void bm_full_solve(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  SolverConfig config;
  config.max_iterations = 50;
  for (auto _ : state)
    benchmark::DoNotOptimize(solve(f.model, f.cache, f.target, config).weights);
}
BENCHMARK(bm_full_solve)->Apply(args);

BENCHMARK_MAIN();
