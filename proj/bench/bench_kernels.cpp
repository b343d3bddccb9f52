#include "morin/analysis.hpp"

#include <benchmark/benchmark.h>

// Serial reference against the OpenMP kernels. Arg 0 is serial, arg 1 is parallel.

using namespace morin;

namespace {

model::Scene scene(const std::string& name) { return model::load_scene(std::string(MORIN_SCENES) + "/" + name + ".scene"); }

solver::Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? solver::Exec::serial : solver::Exec::parallel; }

void BM_NewtonBatch(benchmark::State& state) {
    analysis::Context ctx(scene("torus"));
    solver::ExprEquations eq(analysis::sigma_equations(ctx.scene(), 1), ctx.dim());
    solver::SolveOptions opts = ctx.solve();
    std::vector<solver::Point> seeds = solver::grid_points(opts.box, 12);
    for (auto _ : state) benchmark::DoNotOptimize(solver::newton_batch(eq, seeds, opts, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(seeds.size()));
}

void BM_CellTestBatch(benchmark::State& state) {
    analysis::Context ctx(scene("torus"));
    solver::OracleSystem sys(analysis::sigma_equations(ctx.scene(), 2), ctx.dim());
    const auto& box = ctx.solve().box;
    std::vector<solver::Point> centers = solver::grid_points(box, 48);
    double radius = 0.5 * (box[0].second - box[0].first) / 48.0;
    std::vector<double> scores;
    for (auto _ : state) benchmark::DoNotOptimize(solver::cell_test_batch(sys, centers, radius, scores, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(centers.size()));
}

void BM_GridOracle(benchmark::State& state) {
    analysis::Context ctx(scene("ex7"));
    solver::OracleSystem sys(analysis::sigma_equations(ctx.scene(), 2), ctx.dim());
    solver::OracleOptions opts = ctx.oracle_options(64);
    opts.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(solver::grid_oracle(sys, opts));
}

void BM_XiZeros(benchmark::State& state) {
    analysis::Context ctx(scene("sphere_w"), exec_of(state));
    analysis::Strata strata = analysis::compute_strata(ctx, 2);
    std::vector<double> a{1.0, 0.0};
    for (auto _ : state) benchmark::DoNotOptimize(analysis::find_xi_zeros(ctx, strata, a));
}

}  // namespace

BENCHMARK(BM_NewtonBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CellTestBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridOracle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_XiZeros)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
