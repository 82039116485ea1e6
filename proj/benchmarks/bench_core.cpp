#include <benchmark/benchmark.h>

#include "lpmech/dynamics.hpp"
#include "lpmech/hamiltonian.hpp"
#include "lpmech/lpbundle.hpp"
#include "lpmech/reduction.hpp"
#include "lpmech/systems.hpp"

using namespace lpmech;

namespace {

void BM_LagrangianJet(benchmark::State& st) {
  const SystemRecord fb = flat_bundle_particle();
  for (auto _ : st) benchmark::DoNotOptimize(lagrangian_jet(fb.lagrangian, fb.initial));
}
BENCHMARK(BM_LagrangianJet);

void BM_Accelerations(benchmark::State& st) {
  const SystemRecord ht = parameter_lagrangian();
  for (auto _ : st) benchmark::DoNotOptimize(accelerations(ht.lagrangian, ht.initial));
}
BENCHMARK(BM_Accelerations);

void BM_CheckAxioms(benchmark::State& st) {
  const SystemRecord fb = flat_bundle_particle();
  const int samples = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(check_axioms(fb.lagrangian.bundle, samples, 1));
  st.SetItemsProcessed(st.iterations() * samples);
}
BENCHMARK(BM_CheckAxioms)->Arg(10)->Arg(100);

void BM_IntegrateRigidBody(benchmark::State& st) {
  const SystemRecord rb = rigid_body();
  const double h = 1.0 / static_cast<double>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(integrate_lp(rb.lagrangian, rb.initial, 0.0, 1.0, h));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_IntegrateRigidBody)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ReconstructHeavyTop(benchmark::State& st) {
  const SystemRecord ht = parameter_lagrangian();
  for (auto _ : st) {
    benchmark::DoNotOptimize(integrate_reconstructed(ht.scenario->scenario, ht.lagrangian, ht.initial,
                                                     ht.scenario->g0, 0.0, 1.0, 1e-2));
  }
}
BENCHMARK(BM_ReconstructHeavyTop)->Unit(benchmark::kMillisecond);

void BM_BuildReducedBundle(benchmark::State& st) {
  const SystemRecord ht = parameter_lagrangian();
  for (auto _ : st) benchmark::DoNotOptimize(build_reduced_bundle(ht.scenario->scenario, 20, 1));
}
BENCHMARK(BM_BuildReducedBundle)->Unit(benchmark::kMillisecond);

void BM_StagesReduce(benchmark::State& st) {
  const SystemRecord hs = heisenberg_stages();
  StagesOptions opt;
  opt.n_samples = 20;
  for (auto _ : st) {
    benchmark::DoNotOptimize(stages_reduce(hs.scenario->scenario, hs.scenario->normal, hs.scenario->unreduced, opt));
  }
}
BENCHMARK(BM_StagesReduce)->Unit(benchmark::kMillisecond);

void BM_LegendreHamiltonianFlow(benchmark::State& st) {
  const SystemRecord fb = flat_bundle_particle();
  const Hamiltonian ham = legendre_hamiltonian(fb.lagrangian);
  const HPState s0 = legendre(fb.lagrangian, fb.initial);
  for (auto _ : st) benchmark::DoNotOptimize(integrate_hp(ham, s0, 0.0, 0.1, 1e-3));
}
BENCHMARK(BM_LegendreHamiltonianFlow)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
