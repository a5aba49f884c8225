#pragma once

#include <tclm/integrator.hpp>
#include <tclm/model.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace tclm {

/// One viral-load observation. Censored points carry below_lod = true and
/// v = the detection limit.
struct Measurement {
    double t = 0.0;  ///< days since infection
    double v = 0.0;  ///< copies/mL
    bool below_lod = false;

    friend bool operator==(const Measurement&, const Measurement&) = default;
};

struct ParamBounds {
    double lo = 0.0;
    double hi = 0.0;
};

struct FitBounds {
    ParamBounds beta{1e-10, 1e-5};
    ParamBounds delta{0.1, 200.0};
    ParamBounds p{1.0, 5000.0};
    ParamBounds c{0.1, 10.0};
    ParamBounds v0{1e-2, 10.0};  ///< used only when V0 is fitted
};

struct FitProblem {
    std::vector<Measurement> data;
    double u0 = 1e7;
    double i0 = 0.0;
    double v0 = 1.0;
    bool fit_v0 = false;
    FitBounds bounds{};
    double lod = 100.0;

    void validate() const;
};

struct DEConfig {
    int population_size = 40;
    double differential_weight = 0.8;  ///< F
    double crossover_rate = 0.9;       ///< CR
    int max_generations = 300;
    std::uint64_t rng_seed = 0;
    double stop_tol = 1e-9;       ///< best-cost improvement over stall_window counted as converged
    int stall_window = 50;
    double search_tol = 1e-7;     ///< integrator tolerances used while searching
    int workers = 1;

    void validate() const;
};

struct FitResult {
    ModelParams params;
    double v0 = 0.0;
    double cost = 0.0;  ///< log10-RMS, re-evaluated at the strict tolerances
    int generations_used = 0;
    bool converged = false;
    double population_final_spread = 0.0;
    std::vector<double> best_cost_history;  ///< best-so-far cost after each generation

    friend bool operator==(const FitResult&, const FitResult&) = default;
};

/// Cost of integration failures and degenerate candidates.
inline constexpr double kPenaltyCost = 1e6;
/// Predictions are clamped here before taking log10.
inline constexpr double kLogFloor = 1e-12;

/// Root-mean-square of log10 residuals.
///
/// Quantified points contribute log10 max(pred, floor) - log10 v. A censored
/// point contributes log10 pred - log10 lod only when pred > lod and is
/// otherwise left out. Throws DegenerateCostError when nothing is included.
double log_rms_cost(std::span<const double> predicted, std::span<const Measurement> measured,
                    double lod);

/// Forward-simulate from (u0, i0, v0) and score against problem.data.
/// Failures map to kPenaltyCost.
double evaluate_candidate(const ModelParams& params, const FitProblem& problem,
                          const IntegratorConfig& cfg = {});
double evaluate_candidate(const ModelParams& params, double v0, const FitProblem& problem,
                          const IntegratorConfig& cfg = {});

/// Predicted viral load at each measurement time.
std::vector<double> predict_viral_load(const ModelParams& params, const State& x0,
                                       std::span<const Measurement> data,
                                       const IntegratorConfig& cfg = {});

/// DE/rand/1/bin in log10 parameter space. Deterministic for a given seed,
/// independent of the worker count.
FitResult fit_de(const FitProblem& problem, const DEConfig& de, const IntegratorConfig& cfg = {});

/// Forward-model measurements at the given times, with optional Gaussian
/// noise on log10 V. Values under lod are censored.
std::vector<Measurement> synthesize_measurements(const ModelParams& params, const State& x0,
                                                 std::span<const double> times, double lod,
                                                 double noise_sd_log10, std::uint64_t seed,
                                                 const IntegratorConfig& cfg = {});

}  // namespace tclm
