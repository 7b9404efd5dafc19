#include "srhc/controller.hpp"
#include "srhc/optimizer.hpp"

#include "support.hpp"

#include <benchmark/benchmark.h>

using namespace srhc;

namespace {

struct Rotation {
    ValidatedModel vm = validate_model(srhc::testing::rotation_plant());
    JordanSplit split = validate_split(vm, 1, 2, 2);
    SaturationFunction sat = SaturationFunction::clip(1.0);
    ControlProblem cp;

    explicit Rotation(int N)
        : cp(make_control_problem(vm, split, {N, 2, srhc::testing::kRotationUmax, 1.0},
                                  srhc::testing::rotation_weights(N), sat,
                                  steady_state_lambdas(vm.model(), N, sat, 20000, 1), 10.0))
    {
    }
};

// Build and solve one program; the state is far enough out that the drift cone is active.
void BM_SolveProgram(benchmark::State& state)
{
    const Rotation r(static_cast<int>(state.range(0)));
    Vector xhat(3);
    xhat << 10.0, 120.0, -30.0;
    int vars = 0;
    for (auto _ : state) {
        const ConvexProgram prog = build_program(r.cp.ctx, xhat);
        const SolveResult res = solve(prog, r.cp.ctx.solve_options);
        vars = prog.vars.size();
        benchmark::DoNotOptimize(res.objective);
    }
    state.counters["variables"] = vars;
}
BENCHMARK(BM_SolveProgram)->Arg(3)->Arg(5)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_EstimateLambdas(benchmark::State& state)
{
    const SystemModel m = srhc::testing::rotation_plant();
    const RiccatiSolution ric = riccati_limit(m);
    const auto sat = SaturationFunction::clip(1.0);
    for (auto _ : state) {
        const LambdaSet l = estimate_lambdas(ric.P_circ, m, ric, 5, sat, state.range(0), 1);
        benchmark::DoNotOptimize(l.lambda_phi_phi.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateLambdas)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_ClosedLoopPath(benchmark::State& state)
{
    const Rotation r(5);
    SimulationConfig sim;
    sim.t_end = static_cast<int>(state.range(0));
    sim.x0 = srhc::testing::rotation_x0();
    for (auto _ : state) {
        const TrajectoryRecord rec = run_receding_horizon(r.cp, sim, 0);
        benchmark::DoNotOptimize(rec.x.back().data());
    }
}
BENCHMARK(BM_ClosedLoopPath)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
