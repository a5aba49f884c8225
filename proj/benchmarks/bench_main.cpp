#include <tclm/characterize.hpp>
#include <tclm/fit.hpp>
#include <tclm/io.hpp>
#include <tclm/lambert_w.hpp>

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

namespace {

using namespace tclm;

const PatientConfig& patient_a()
{
    static const PatientConfig a = builtin_patients()[0];
    return a;
}

void BM_IntegratePatientA(benchmark::State& state)
{
    const PatientConfig& a = patient_a();
    for (auto _ : state) {
        benchmark::DoNotOptimize(integrate(a.initial_condition(), a.params));
    }
}
BENCHMARK(BM_IntegratePatientA)->Unit(benchmark::kMicrosecond);

void BM_LambertWPrincipal(benchmark::State& state)
{
    std::vector<double> z;
    for (int k = 1; k <= 1024; ++k) {
        z.push_back(-std::exp(-1.0) + k * 1e-3);
    }
    for (auto _ : state) {
        for (double x : z) {
            benchmark::DoNotOptimize(lambert_w(x));
        }
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(z.size()));
}
BENCHMARK(BM_LambertWPrincipal);

void BM_EvaluateCandidate(benchmark::State& state)
{
    const PatientConfig& a = patient_a();
    std::vector<double> times;
    for (int k = 0; k < 12; ++k) {
        times.push_back(1.0 + 19.0 * k / 11.0);
    }
    FitProblem prob;
    prob.v0 = a.v0;
    prob.data = synthesize_measurements(a.params, a.initial_condition().state0, times, prob.lod, 0.0, 1);
    IntegratorConfig search;
    search.rel_tol = 1e-7;
    search.abs_tol = 1e-7;
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate_candidate(a.params, prob, search));
    }
}
BENCHMARK(BM_EvaluateCandidate)->Unit(benchmark::kMicrosecond);

void BM_AlphaThresholdUnit(benchmark::State& state)
{
    const ModelParams unit = ModelParams::make(1, 1, 1, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(alpha_threshold(0.25, 0.4, unit));
    }
}
BENCHMARK(BM_AlphaThresholdUnit)->Unit(benchmark::kMillisecond);

void BM_CharacterizeCohort(benchmark::State& state)
{
    const auto cohort = builtin_patients();
    for (auto _ : state) {
        for (const PatientConfig& pc : cohort) {
            benchmark::DoNotOptimize(characterize(pc.initial_condition(), pc.params));
        }
    }
}
BENCHMARK(BM_CharacterizeCohort)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
