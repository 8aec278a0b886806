#include "opocat/closed_forms.hpp"
#include "opocat/conditioning.hpp"
#include "opocat/detection.hpp"
#include "opocat/fock_oracle.hpp"
#include "opocat/gaussian_dynamics.hpp"

#include <benchmark/benchmark.h>

using namespace opocat;

namespace {

SystemParams small_time(double nbar) {
  const double s = 1e-3;
  return {s, ratio_for_nbar(nbar) * s, s, s};
}

void BM_Propagator(benchmark::State& st) {
  const auto dd = build_drift_diffusion({0.1, 0.5, 1.0, 1.0}, DynamicsConfig::full6);
  for (auto _ : st) benchmark::DoNotOptimize(propagator(dd, 0.7));
}
BENCHMARK(BM_Propagator);

void BM_NoiseCovariance(benchmark::State& st) {
  const auto dd = build_drift_diffusion({0.1, 0.5, 1.0, 1.0}, DynamicsConfig::full6);
  for (auto _ : st) benchmark::DoNotOptimize(noise_covariance(dd, Horizon::finite(1.0)));
}
BENCHMARK(BM_NoiseCovariance);

// one application of the Liouvillian on a 2 x c x c basis
void BM_LiouvillianApply(benchmark::State& st) {
  const int c = static_cast<int>(st.range(0));
  const FockBasis b{2, c, c};
  const auto l = build_liouvillian({0.1, 0.5, 1.0, 1.0}, b);
  const auto rho = gaussian_to_rho(tensor(vacuum(1), opo_equilibrium(ratio_for_nbar(0.1))), b);
  for (auto _ : st) benchmark::DoNotOptimize(l.apply_hermitian(rho.data()));
  st.SetLabel("dim " + std::to_string(b.dimension()));
}
BENCHMARK(BM_LiouvillianApply)->Arg(6)->Arg(10)->Arg(16);

void BM_CatGeneration(benchmark::State& st) {
  const int c = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(run_cat_generation({small_time(0.5), 1.0, FockBasis{2, c, c}}));
}
BENCHMARK(BM_CatGeneration)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_DetectionRecord(benchmark::State& st) {
  const auto run = run_cat_generation({small_time(0.5), 1.0, FockBasis{2, 10, 10}});
  const auto as = assemble_cat_and_mixture(run.blocks, 0);
  const CatStateView cat(as, CatBranch::cat);
  for (auto _ : st) benchmark::DoNotOptimize(detection_record(cat, 32));
}
BENCHMARK(BM_DetectionRecord)->Unit(benchmark::kMillisecond);

void BM_FockWigner(benchmark::State& st) {
  const auto run = run_cat_generation({small_time(0.5), 1.0, FockBasis{2, 10, 10}});
  const auto dp = to_dpm_and_condition(herald_45basis(run.evolved), ComplexAmplitudePair({1.0, 0.0}, {0.0, 0.0}));
  const auto w = wigner_source(dp.dplus);
  double x = 0.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(w(x, 0.3));
    x += 1e-3;
  }
}
BENCHMARK(BM_FockWigner);

void BM_ClosedFormMarginal(benchmark::State& st) {
  const ComplexAmplitudePair amps({1.0, 0.0}, {0.0, 0.0});
  const double r = ratio_for_nbar(2.93);
  const auto grid = linspace(-3.0, 3.0, 601);
  for (auto _ : st) {
    std::vector<double> py;
    for (double y : grid) py.push_back(closed_form::dplus_marginal(r, amps, Axis::y, y));
    benchmark::DoNotOptimize(fringe_contrast(py));
  }
}
BENCHMARK(BM_ClosedFormMarginal);

}  // namespace

BENCHMARK_MAIN();
