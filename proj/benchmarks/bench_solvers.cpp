#include "matmi/functional.hpp"
#include "matmi/neumann.hpp"
#include "matmi/presets.hpp"
#include "matmi/transport.hpp"

#include <benchmark/benchmark.h>

using namespace matmi;

namespace {

struct Setup {
    MeshPtr mesh;
    AnisotropyFamily family;
    NodalField gamma;
};

Setup setup(const char* preset, int n) {
    const ExperimentPreset& p = find_preset(preset);
    MeshPtr mesh = preset_mesh(p, n);
    const auto [lo, hi] = default_t_range(p, *mesh);
    return {mesh, builtin(p.family).with_range(lo, hi), interpolate(mesh, p.gamma_star)};
}

TransportProblem transport(const Setup& s) {
    const FieldSolve f = solve_field(s.family, s.gamma);
    TransportProblem p{s.family, f.field, synthesize(s.family, s.gamma), s.gamma, {}, NodalField::constant(s.mesh, 1.0)};
    p.inflow_facets = flux_inflow(s.family, p.initial, p.field);
    return p;
}

void BM_Assemble(benchmark::State& state) {
    const Setup s = setup("example4", static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(assemble(s.family, s.gamma));
    state.SetComplexityN(s.mesh->num_vertices());
}

void BM_NeumannSolve(benchmark::State& state) {
    const Setup s = setup("example4", static_cast<int>(state.range(0)));
    const SparseSystem sys = assemble(s.family, s.gamma);
    for (auto _ : state) benchmark::DoNotOptimize(solve_mean_zero(sys));
    state.SetComplexityN(s.mesh->num_vertices());
}

void BM_DgTransport(benchmark::State& state) {
    const TransportProblem p = transport(setup("example1", static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(solve_linear_dg(p));
}

void BM_PicardStep(benchmark::State& state) {
    const TransportProblem p = transport(setup("example4", static_cast<int>(state.range(0))));
    PicardOptions one{1, 1e-8, 1.0, true};
    for (auto _ : state) benchmark::DoNotOptimize(solve_nonlinear(p, one));
}

void BM_Synthesize3D(benchmark::State& state) {
    const Setup s = setup("example6", static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(synthesize(s.family, s.gamma));
}

}  // namespace

BENCHMARK(BM_Assemble)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_NeumannSolve)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_DgTransport)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PicardStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Synthesize3D)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
