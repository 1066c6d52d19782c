// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "mlsrk/experiments.hpp"
#include "mlsrk/multilevel.hpp"

using namespace mlsrk;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "parallel" : "serial"); }

void BM_rate_experiment(benchmark::State& state) {
    ExperimentConfig c = default_config("gbm1d");
    c.schemes = {"heun", "rk4"};
    c.rate_samples = 500;
    c.rate_reference_level = 10;
    for (auto _ : state) benchmark::DoNotOptimize(run_rate_experiment(c, mode(state)));
    label(state);
}

void BM_ml_estimate(benchmark::State& state) {
    const ExperimentConfig c = default_config("gbm1d");
    const ModelPreset p = make_preset("gbm1d");
    ExperimentConfig small = c;
    small.observations = 20;
    const Dataset data = experiment_dataset(small);
    MlConfig cfg = allocate(std::sqrt(2e-2), 4, 1, 20);
    cfg.n_particles = 16;
    cfg.seed = 5;
    const Scheme rk4 = make_scheme("rk4");
    const GaussianRandomWalk proposal(p.proposal_step);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            ml_estimate(cfg, rk4, *p.sde, *p.obs, p.prior, proposal, data, theta_functional(), mode(state)));
    label(state);
}

void BM_cost_mse_cells(benchmark::State& state) {
    ExperimentConfig c = default_config("gbm1d");
    c.schemes = {"heun", "rk4"};
    c.mse_targets = {5e-2, 2e-2};
    c.repetitions = 4;
    c.particles = 8;
    c.burn_in = 20;
    c.observations = 10;
    c.data_level = 6;
    c.record_wall_clock = false;
    for (auto _ : state) benchmark::DoNotOptimize(run_cost_mse_experiment(c, mode(state)));
    label(state);
}

}  // namespace

BENCHMARK(BM_rate_experiment)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ml_estimate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cost_mse_cells)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
