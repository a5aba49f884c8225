#include <tclm/fit.hpp>

#include <tclm/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace tclm {

namespace {

void require_bounds(const ParamBounds& b, const char* name)
{
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo > 0.0) || !(b.lo < b.hi)) {
        throw DomainError(std::string("fit bounds for '") + name + "' must satisfy 0 < lo < hi");
    }
}

IntegratorConfig forward_config(const IntegratorConfig& cfg, std::span<const Measurement> data)
{
    IntegratorConfig out = cfg;
    out.early_stop = false;
    double last = 0.0;
    for (const Measurement& m : data) {
        last = std::max(last, m.t);
    }
    out.t_max = std::max(last, 1e-9);
    return out;
}

enum class Outcome { Ok, Degenerate, Failed };

struct Scored {
    double cost = kPenaltyCost;
    Outcome outcome = Outcome::Failed;
};

Scored score(const ModelParams& params, double v0, const FitProblem& problem,
             const IntegratorConfig& cfg)
{
    try {
        const auto predicted =
            predict_viral_load(params, {problem.u0, problem.i0, v0}, problem.data, cfg);
        const double cost = log_rms_cost(predicted, problem.data, problem.lod);
        if (!std::isfinite(cost)) {
            return {};
        }
        return {cost, Outcome::Ok};
    } catch (const DegenerateCostError&) {
        return {kPenaltyCost, Outcome::Degenerate};
    } catch (const IntegrationError&) {
        return {};
    } catch (const DomainError&) {
        return {};
    }
}

struct Decoded {
    ModelParams params;
    double v0;
};

Decoded decode(const std::vector<double>& genome, const FitProblem& problem)
{
    Decoded d{{std::pow(10.0, genome[0]), std::pow(10.0, genome[1]), std::pow(10.0, genome[2]),
               std::pow(10.0, genome[3])},
              problem.v0};
    if (problem.fit_v0) {
        d.v0 = std::pow(10.0, genome[4]);
    }
    return d;
}

double reflect(double v, double lo, double hi)
{
    if (v < lo) {
        v = lo + (lo - v);
    } else if (v > hi) {
        v = hi - (v - hi);
    }
    return std::clamp(v, lo, hi);
}

}  // namespace

void FitProblem::validate() const
{
    if (!std::isfinite(u0) || !(u0 > 0.0) || !std::isfinite(i0) || i0 < 0.0 || !std::isfinite(v0) ||
        v0 < 0.0) {
        throw DomainError("fit initial condition requires u0 > 0, i0 >= 0, v0 >= 0");
    }
    if (!std::isfinite(lod) || !(lod > 0.0)) {
        throw DomainError("detection limit must be positive");
    }
    require_bounds(bounds.beta, "beta");
    require_bounds(bounds.delta, "delta");
    require_bounds(bounds.p, "p");
    require_bounds(bounds.c, "c");
    if (fit_v0) {
        require_bounds(bounds.v0, "v0");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Measurement& m = data[i];
        if (!std::isfinite(m.t) || m.t < 0.0) {
            throw DomainError("measurement times must be finite and >= 0");
        }
        if (!m.below_lod && !(m.v > 0.0 && std::isfinite(m.v))) {
            throw DomainError("quantified measurements must be positive");
        }
        if (i > 0 && !(m.t > data[i - 1].t)) {
            throw DomainError("measurement times must be strictly increasing");
        }
    }
}

void DEConfig::validate() const
{
    if (population_size < 4) {
        throw DomainError("DE population_size must be >= 4");
    }
    if (!(differential_weight > 0.0 && differential_weight <= 2.0)) {
        throw DomainError("DE differential weight F must lie in (0, 2]");
    }
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
        throw DomainError("DE crossover rate CR must lie in [0, 1]");
    }
    if (max_generations < 0 || stall_window < 1) {
        throw DomainError("DE generation counts must be non-negative");
    }
    if (!(stop_tol >= 0.0) || !(search_tol > 0.0 && search_tol <= 1e-2)) {
        throw DomainError("DE tolerances out of range");
    }
}

double log_rms_cost(std::span<const double> predicted, std::span<const Measurement> measured,
                    double lod)
{
    if (predicted.size() != measured.size()) {
        throw DomainError("log_rms_cost: predicted and measured series differ in length");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
        const double pred = std::max(predicted[i], kLogFloor);
        const Measurement& m = measured[i];
        if (m.below_lod) {
            if (pred > lod) {
                const double r = std::log10(pred) - std::log10(lod);
                sum += r * r;
                ++n;
            }
            continue;
        }
        const double r = std::log10(pred) - std::log10(m.v);
        sum += r * r;
        ++n;
    }
    if (n == 0) {
        throw DegenerateCostError("log_rms_cost: no includable measurement");
    }
    return std::sqrt(sum / static_cast<double>(n));
}

std::vector<double> predict_viral_load(const ModelParams& params, const State& x0,
                                       std::span<const Measurement> data,
                                       const IntegratorConfig& cfg)
{
    const Trajectory traj = integrate({x0, 0.0}, params, forward_config(cfg, data));
    std::vector<double> out;
    out.reserve(data.size());
    for (const Measurement& m : data) {
        out.push_back(traj.state_at(m.t).V);
    }
    return out;
}

double evaluate_candidate(const ModelParams& params, const FitProblem& problem,
                          const IntegratorConfig& cfg)
{
    return evaluate_candidate(params, problem.v0, problem, cfg);
}

double evaluate_candidate(const ModelParams& params, double v0, const FitProblem& problem,
                          const IntegratorConfig& cfg)
{
    return score(params, v0, problem, cfg).cost;
}

FitResult fit_de(const FitProblem& problem, const DEConfig& de, const IntegratorConfig& cfg)
{
    problem.validate();
    de.validate();
    cfg.validate();
    if (std::none_of(problem.data.begin(), problem.data.end(),
                     [](const Measurement& m) { return !m.below_lod; })) {
        throw DegenerateCostError("fit_de: every measurement is below the detection limit");
    }

    IntegratorConfig search = cfg;
    search.rel_tol = std::max(cfg.rel_tol, de.search_tol);
    search.abs_tol = std::max(cfg.abs_tol, de.search_tol);

    const std::size_t dims = problem.fit_v0 ? 5 : 4;
    std::vector<double> lo{std::log10(problem.bounds.beta.lo), std::log10(problem.bounds.delta.lo),
                           std::log10(problem.bounds.p.lo), std::log10(problem.bounds.c.lo)};
    std::vector<double> hi{std::log10(problem.bounds.beta.hi), std::log10(problem.bounds.delta.hi),
                           std::log10(problem.bounds.p.hi), std::log10(problem.bounds.c.hi)};
    if (problem.fit_v0) {
        lo.push_back(std::log10(problem.bounds.v0.lo));
        hi.push_back(std::log10(problem.bounds.v0.hi));
    }

    const auto np = static_cast<std::size_t>(de.population_size);
    std::mt19937_64 rng(de.rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::vector<double>> pop(np, std::vector<double>(dims));
    for (auto& member : pop) {
        for (std::size_t d = 0; d < dims; ++d) {
            member[d] = lo[d] + (hi[d] - lo[d]) * unit(rng);
        }
    }

    auto evaluate_all = [&](const std::vector<std::vector<double>>& genomes) {
        std::vector<Scored> scores(genomes.size());
        parallel_for(genomes.size(), de.workers, [&](std::size_t i) {
            const Decoded d = decode(genomes[i], problem);
            scores[i] = score(d.params, d.v0, problem, search);
        });
        return scores;
    };

    std::vector<Scored> scores = evaluate_all(pop);
    if (std::all_of(scores.begin(), scores.end(),
                    [](const Scored& s) { return s.outcome == Outcome::Degenerate; })) {
        throw DegenerateCostError("fit_de: every initial member has a degenerate cost");
    }

    auto best_index = [&] {
        std::size_t best = 0;
        for (std::size_t i = 1; i < np; ++i) {
            if (scores[i].cost < scores[best].cost) {
                best = i;
            }
        }
        return best;
    };

    FitResult result;
    std::size_t best = best_index();
    std::vector<std::vector<double>> trials(np, std::vector<double>(dims));
    std::uniform_int_distribution<std::size_t> pick(0, np - 1);
    std::uniform_int_distribution<std::size_t> pick_dim(0, dims - 1);

    int generation = 0;
    for (; generation < de.max_generations; ++generation) {
        // Trial vectors are drawn sequentially so the RNG stream does not
        // depend on how evaluations are scheduled.
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t r1, r2, r3;
            do { r1 = pick(rng); } while (r1 == i);
            do { r2 = pick(rng); } while (r2 == i || r2 == r1);
            do { r3 = pick(rng); } while (r3 == i || r3 == r1 || r3 == r2);
            const std::size_t forced = pick_dim(rng);
            for (std::size_t d = 0; d < dims; ++d) {
                const bool cross = unit(rng) < de.crossover_rate || d == forced;
                if (cross) {
                    const double mutant =
                        pop[r1][d] + de.differential_weight * (pop[r2][d] - pop[r3][d]);
                    trials[i][d] = reflect(mutant, lo[d], hi[d]);
                } else {
                    trials[i][d] = pop[i][d];
                }
            }
        }
        const std::vector<Scored> trial_scores = evaluate_all(trials);
        for (std::size_t i = 0; i < np; ++i) {
            if (trial_scores[i].cost <= scores[i].cost) {
                pop[i] = trials[i];
                scores[i] = trial_scores[i];
            }
        }
        best = best_index();
        result.best_cost_history.push_back(scores[best].cost);

        const auto& hist = result.best_cost_history;
        const auto window = static_cast<std::size_t>(de.stall_window);
        if (hist.size() > window && hist[hist.size() - 1 - window] - hist.back() < de.stop_tol) {
            result.converged = true;
            ++generation;
            break;
        }
    }

    const Decoded d = decode(pop[best], problem);
    result.params = d.params;
    result.v0 = d.v0;
    result.cost = score(d.params, d.v0, problem, cfg).cost;
    result.generations_used = generation;
    const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end(),
                                              [](const Scored& a, const Scored& b) { return a.cost < b.cost; });
    result.population_final_spread = mx->cost - mn->cost;
    return result;
}

std::vector<Measurement> synthesize_measurements(const ModelParams& params, const State& x0,
                                                 std::span<const double> times, double lod,
                                                 double noise_sd_log10, std::uint64_t seed,
                                                 const IntegratorConfig& cfg)
{
    if (!(lod > 0.0) || !(noise_sd_log10 >= 0.0)) {
        throw DomainError("synthesize_measurements: lod > 0 and noise >= 0 required");
    }
    std::vector<Measurement> data;
    data.reserve(times.size());
    for (double t : times) {
        data.push_back({t, 0.0, false});
    }
    const auto clean = predict_viral_load(params, x0, data, cfg);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sd_log10);
    for (std::size_t i = 0; i < data.size(); ++i) {
        double log_v = std::log10(std::max(clean[i], kLogFloor));
        if (noise_sd_log10 > 0.0) {
            log_v += noise(rng);
        }
        const double v = std::pow(10.0, log_v);
        if (v < lod) {
            data[i].v = lod;
            data[i].below_lod = true;
        } else {
            data[i].v = v;
        }
    }
    return data;
}

}  // namespace tclm
