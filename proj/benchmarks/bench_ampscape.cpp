#include <benchmark/benchmark.h>

#include "ampscape/factored_solver.hpp"
#include "ampscape/losses.hpp"
#include "ampscape/phasecut.hpp"
#include "ampscape/rng.hpp"

using namespace ampscape;

namespace {

struct Instance {
  MeasurementEnsemble ens;
  RVector y;
};

Instance make(Index d, Index n, Field field, double noise) {
  EnsembleSpec spec;
  spec.d = d;
  spec.n = n;
  spec.field = field;
  spec.dist = field == Field::Real ? Distribution::GaussianIID : Distribution::ComplexGaussianIID;
  auto ens = gen_ensemble(spec, 1);
  Rng rng(2);
  CMatrix x = rng.gaussian(d, 1, field);
  x /= x.norm();
  const Observation obs =
      observe(ens, GroundTruth{x}, noise > 0 ? NoiseSpec::gaussian(noise) : NoiseSpec::none(), 3);
  return {std::move(ens), obs.y};
}

LossSpec amplitude(const RVector& y, double lambda = 0.0) {
  LossSpec s;
  s.family = LossFamily::Amplitude;
  s.delta = default_delta(LossFamily::Amplitude, y);
  s.lambda = lambda;
  return s;
}

}  // namespace

static void BM_BuildPhaseCut(benchmark::State& state) {
  const Index d = state.range(0);
  const auto inst = make(d, 8 * d, Field::Complex, 0.0);
  const double lambda = state.range(1) ? 0.01 : 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(build_phasecut(inst.ens, inst.y, lambda));
}
BENCHMARK(BM_BuildPhaseCut)->Args({20, 0})->Args({20, 1})->Args({64, 1})->Unit(benchmark::kMillisecond);

static void BM_RidgeRecover(benchmark::State& state) {
  const Index d = state.range(0);
  const auto inst = make(d, 8 * d, Field::Complex, 0.0);
  const auto prob = build_phasecut(inst.ens, inst.y, 0.01);
  Rng rng(4);
  const CMatrix u = normalize_rows(rng.gaussian(inst.ens.n(), 3, Field::Complex));
  for (auto _ : state) benchmark::DoNotOptimize(ridge_recover(prob, u));
}
BENCHMARK(BM_RidgeRecover)->Arg(20)->Arg(64);

static void BM_ObjectiveGrad(benchmark::State& state) {
  const Index d = state.range(0);
  const auto inst = make(d, 8 * d, Field::Real, 0.0);
  const LossSpec spec = amplitude(inst.y);
  Rng rng(5);
  const CMatrix x = rng.gaussian(d, 3, Field::Real);
  for (auto _ : state) benchmark::DoNotOptimize(objective_grad(spec, inst.ens, inst.y, x));
}
BENCHMARK(BM_ObjectiveGrad)->Arg(20)->Arg(64)->Arg(128);

static void BM_HessVec(benchmark::State& state) {
  const Index d = state.range(0);
  const auto inst = make(d, 8 * d, Field::Real, 0.0);
  const LossSpec spec = amplitude(inst.y);
  Rng rng(6);
  const LossEvaluation ev = evaluate_loss(spec, inst.ens, inst.y, rng.gaussian(d, 3, Field::Real));
  const CMatrix v = rng.gaussian(d, 3, Field::Real);
  for (auto _ : state) benchmark::DoNotOptimize(hess_vec(spec, inst.ens, ev, v));
}
BENCHMARK(BM_HessVec)->Arg(20)->Arg(64)->Arg(128);

static void BM_CertifyFactored(benchmark::State& state) {
  const Index d = state.range(0);
  const auto inst = make(d, 8 * d, Field::Real, 0.05);
  const LossSpec spec = amplitude(inst.y);
  SolverConfig sc;
  sc.seed = 7;
  const FactoredResult r = solve_factored(spec, inst.ens, inst.y, sc);
  const double scale = certification_scale(inst.y, 0.0, d);
  for (auto _ : state)
    benchmark::DoNotOptimize(certify_factored(spec, inst.ens, inst.y, r.x, 1e-8 * scale, 1e-6 * scale, 8));
}
BENCHMARK(BM_CertifyFactored)->Arg(20)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_SolveFactored(benchmark::State& state) {
  const Index d = state.range(0);
  const auto inst = make(d, 8 * d, Field::Real, 0.0);
  const LossSpec spec = amplitude(inst.y);
  SolverConfig sc;
  sc.seed = 9;
  for (auto _ : state) benchmark::DoNotOptimize(solve_factored(spec, inst.ens, inst.y, sc));
}
BENCHMARK(BM_SolveFactored)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_SolvePhaseCut(benchmark::State& state) {
  const Index d = state.range(0);
  const auto inst = make(d, 8 * d, Field::Real, 0.0);
  const auto prob = build_phasecut(inst.ens, inst.y, 0.0);
  PhaseCutConfig pc;
  pc.seed = 10;
  for (auto _ : state) benchmark::DoNotOptimize(solve_phasecut(prob, pc));
}
BENCHMARK(BM_SolvePhaseCut)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
