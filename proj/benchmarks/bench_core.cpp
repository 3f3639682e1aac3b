// Microbenchmarks for the hot paths: lattice construction, operator
// assembly, dense decomposition, and the chunked evolution kernels.
// Decompositions used as inputs to later stages are built once and cached.

#include <benchmark/benchmark.h>

#include <vector>

#include "qfrac/analysis.hpp"
#include "qfrac/ctrw.hpp"
#include "qfrac/dynamics.hpp"
#include "qfrac/hamiltonian.hpp"
#include "qfrac/lattice.hpp"
#include "qfrac/spectral.hpp"

using namespace qfrac;

namespace {

const lattice::LatticeGraph& cached_gasket(int generation) {
    static std::vector<lattice::LatticeGraph> cache(10);
    auto& slot = cache[generation];
    if (slot.sites.empty()) slot = lattice::build_gasket(generation);
    return slot;
}

const spectral::SpectralDecomposition& cached_decomposition(int generation) {
    static std::vector<spectral::SpectralDecomposition> cache(10);
    auto& slot = cache[generation];
    if (slot.n == 0)
        slot = spectral::eigendecompose(
            hamiltonian::assemble_quantum(cached_gasket(generation), {1.0, 1.0}));
    return slot;
}

}  // namespace

static void BM_BuildGasket(benchmark::State& state) {
    const int g = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(lattice::build_gasket(g));
    state.SetComplexityN(lattice::build_gasket(g).site_count());
}
BENCHMARK(BM_BuildGasket)->DenseRange(3, 6)->Complexity(benchmark::oN);

static void BM_BuildCarpet(benchmark::State& state) {
    const int g = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(lattice::build_carpet(g));
}
BENCHMARK(BM_BuildCarpet)->DenseRange(3, 5);

static void BM_AssembleQuantum(benchmark::State& state) {
    const auto& lat = cached_gasket(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(hamiltonian::assemble_quantum(lat, {1.0, 1.0}));
}
BENCHMARK(BM_AssembleQuantum)->DenseRange(4, 6);

static void BM_Eigendecompose(benchmark::State& state) {
    const auto& lat = cached_gasket(static_cast<int>(state.range(0)));
    const auto H = hamiltonian::assemble_quantum(lat, {1.0, 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(spectral::eigendecompose(H));
}
BENCHMARK(BM_Eigendecompose)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

static void BM_EigenvaluesOnly(benchmark::State& state) {
    const auto& lat = cached_gasket(static_cast<int>(state.range(0)));
    const auto H = hamiltonian::assemble_quantum(lat, {1.0, 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(spectral::eigenvalues_only(H));
}
BENCHMARK(BM_EigenvaluesOnly)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

static void BM_EvolveSeries(benchmark::State& state) {
    const int g = static_cast<int>(state.range(0));
    const auto& lat = cached_gasket(g);
    const auto& decomp = cached_decomposition(g);
    const auto psi0 = dynamics::prepare(dynamics::InitialStateSpec::single(0), lat);
    const auto times = dynamics::log_time_grid(1e-2, 1e4, 400);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            dynamics::evolve_series(decomp, psi0, times, lat, lat.sites[0], 0));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(times.size()));
}
BENCHMARK(BM_EvolveSeries)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

static void BM_CtrwSeries(benchmark::State& state) {
    const int g = static_cast<int>(state.range(0));
    const auto& lat = cached_gasket(g);
    static spectral::SpectralDecomposition decomp;
    if (decomp.n != static_cast<std::int32_t>(lat.site_count()))
        decomp = spectral::eigendecompose(hamiltonian::assemble_ctrw_generator(lat, 1.0));
    const auto times = dynamics::log_time_grid(1e-2, 1e4, 400);
    for (auto _ : state)
        benchmark::DoNotOptimize(ctrw::ctrw_series(decomp, 0, times, lat));
}
BENCHMARK(BM_CtrwSeries)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_LevelSpacing(benchmark::State& state) {
    const auto& decomp = cached_decomposition(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(spectral::level_spacing_analysis(decomp.eigenvalues));
}
BENCHMARK(BM_LevelSpacing)->DenseRange(4, 5);

static void BM_FitAlpha(benchmark::State& state) {
    const auto& lat = cached_gasket(4);
    const auto& decomp = cached_decomposition(4);
    const auto psi0 = dynamics::prepare(dynamics::InitialStateSpec::single(0), lat);
    const auto times = dynamics::log_time_grid(1e-2, 1e4, 400);
    const auto series = dynamics::evolve_series(decomp, psi0, times, lat, lat.sites[0], 0);
    const auto window = analysis::default_windows(lat).intermediate;
    for (auto _ : state) benchmark::DoNotOptimize(analysis::fit_alpha(series.msd, window));
}
BENCHMARK(BM_FitAlpha);

BENCHMARK_MAIN();
