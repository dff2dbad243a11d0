// Serial vs OpenMP comparison for the hot paths: the per-node power flow
// fan-out and interpolant sampling.

#include <benchmark/benchmark.h>

#include "plf/driver.hpp"
#include "plf/stats.hpp"
#include "plf/util.hpp"

using namespace plf;

namespace {

struct Setup {
    PowerSystemCase sys;
    GlobalXiSpace space;
    PLFConfig config;

    static const Setup& instance() {
        static Setup s = [] {
            Setup s;
            s.sys = load_case(std::string(PLF_DATA_DIR) + "/case118.m");
            s.config.seed = 7;
            s.config.l_max = 5;
            s.config.rule_kind = RuleKind::fejer2;
            s.config.grid_kind = GridKind::anisotropic;
            const auto specs = ieee118_morales_preset(s.sys);
            s.space = build_xi_space(s.sys, specs, s.config);
            return s;
        }();
        return s;
    }
};

void collocation_run(benchmark::State& state, int workers) {
    const Setup& s = Setup::instance();
    PLFConfig config = s.config;
    config.workers = workers;
    for (auto _ : state) {
        const PLFResult r = run_collocation(s.sys, s.space, config);
        benchmark::DoNotOptimize(r.outputs.sum());
    }
}

void BM_collocation_serial(benchmark::State& state) { collocation_run(state, 1); }
void BM_collocation_parallel(benchmark::State& state) { collocation_run(state, 0); }

void BM_newton_118(benchmark::State& state) {
    const Setup& s = Setup::instance();
    for (auto _ : state) {
        const PowerFlowSolution sol = solve_newton(s.sys);
        benchmark::DoNotOptimize(sol.max_mismatch);
    }
}

void interp_sampling(benchmark::State& state, int workers) {
    const Setup& s = Setup::instance();
    PLFConfig config = s.config;
    config.workers = 0;
    const PLFResult r = run_collocation(s.sys, s.space, config);
    std::vector<int> cols;
    for (int c = 0; c < r.n_bus; ++c) cols.push_back(c);  // all v_mag columns
    for (auto _ : state) {
        const Eigen::MatrixXd out =
            sample_interpolant(r.grid, r.outputs, cols, 4096, 42, workers);
        benchmark::DoNotOptimize(out.sum());
    }
}

void BM_interp_sampling_serial(benchmark::State& state) { interp_sampling(state, 1); }
void BM_interp_sampling_parallel(benchmark::State& state) { interp_sampling(state, 0); }

}  // namespace

BENCHMARK(BM_newton_118)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_collocation_serial)->Unit(benchmark::kMillisecond)->Iterations(3);
BENCHMARK(BM_collocation_parallel)->Unit(benchmark::kMillisecond)->Iterations(3);
BENCHMARK(BM_interp_sampling_serial)->Unit(benchmark::kMillisecond)->Iterations(5);
BENCHMARK(BM_interp_sampling_parallel)->Unit(benchmark::kMillisecond)->Iterations(5);

BENCHMARK_MAIN();
