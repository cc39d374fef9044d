#include <benchmark/benchmark.h>

#include "nlsd/delay_profile.hpp"
#include "nlsd/equilibrium.hpp"
#include "nlsd/kernel.hpp"
#include "nlsd/simulator.hpp"

#include <cmath>
#include <vector>

using namespace nlsd;

namespace {

// National-table shape: ages 0..100, h = 90, smooth increasing history.
struct Setup {
    KernelWeights kernel = build_kernel(KernelConfig{});
    DelayProfile profile = make_profile(-0.0035, discretized_exponential(11.0 / 12.0, 90), 11.0 / 12.0);
    History history = make_history();

    static History make_history() {
        std::vector<std::vector<double>> slices;
        for (int d = 0; d <= 90; ++d) {
            std::vector<double> q;
            for (int x = 0; x <= 100; ++x) q.push_back(std::min(0.9, 2e-4 * std::exp(0.09 * x) * (1 + 0.01 * d)));
            slices.push_back(q);
        }
        return History(2018, slices);
    }
};

const Setup &setup() {
    static const Setup s;
    return s;
}

void BM_BuildKernel(benchmark::State &state) {
    KernelConfig c;
    c.bandwidth = static_cast<double>(state.range(0)) / 100.0;
    for (auto _ : state) benchmark::DoNotOptimize(build_kernel(c));
}
BENCHMARK(BM_BuildKernel)->Arg(25)->Arg(300);

void BM_DriftAll(benchmark::State &state) {
    const auto &s = setup();
    DelayWindow window(s.history, 90);
    for (auto _ : state) benchmark::DoNotOptimize(drift_all(window, s.profile, s.kernel, BoundaryRule{}));
}
BENCHMARK(BM_DriftAll);

void BM_Ensemble(benchmark::State &state) {
    const auto &s = setup();
    SimConfig cfg;
    cfg.n_trajectories = static_cast<int>(state.range(0));
    cfg.horizon_years = 15;
    cfg.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            simulate_ensemble(s.history, s.profile, s.kernel, BoundaryRule{}, NoiseSpec{}, cfg));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ensemble)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_FixedPoint(benchmark::State &state) {
    const auto &s = setup();
    const double M1 = compute_M1(s.profile);
    const ExteriorProfile g = [](int age) { return age < 0 ? 0.003 : 0.385; };
    for (auto _ : state) benchmark::DoNotOptimize(solve_fixed_point(s.kernel, M1, g));
}
BENCHMARK(BM_FixedPoint);

} // namespace

BENCHMARK_MAIN();
