#include <tclm/characterize.hpp>

#include <tclm/asymptotics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tclm {

std::string_view to_string(SpreadTag tag) noexcept
{
    return tag == SpreadTag::Spread ? "Spread" : "NoSpread";
}

std::string_view to_string(ThresholdCase c) noexcept
{
    switch (c) {
    case ThresholdCase::CaseI:
        return "CaseI";
    case ThresholdCase::CaseII:
        return "CaseII";
    case ThresholdCase::CaseIII:
        return "CaseIII";
    }
    return "unknown";
}

namespace {

// A trajectory cut by the horizon while V is still rising has a maximum
// beyond the horizon, since V eventually decays to zero.
bool rising_at_horizon(const Trajectory& traj)
{
    if (traj.stop_reason() != StopReason::Horizon) {
        return false;
    }
    const auto events = traj.events();
    auto last_v = std::find_if(events.rbegin(), events.rend(), [](const Event& e) {
        return e.kind == EventKind::VLocalMin || e.kind == EventKind::VLocalMax;
    });
    if (last_v != events.rend() && last_v->kind != EventKind::VLocalMin) {
        return false;
    }
    const double base = last_v != events.rend() ? last_v->state.V : traj.initial().state0.V;
    const Sample& end = traj.samples().back();
    return end.dx.dV > 0.0 && end.x.V >= base * (1.0 + 1e-9) && end.x.V > 0.0;
}

}  // namespace

SpreadClass classify_spread(const Trajectory& traj)
{
    SpreadClass out;
    const bool spreads = traj.first_event(EventKind::VLocalMax).has_value() ||
                         rising_at_horizon(traj);
    out.tag = spreads ? SpreadTag::Spread : SpreadTag::NoSpread;

    const State& x0 = traj.initial().state0;
    const ModelParams& m = traj.params();
    // I0 = 0 gives R_V(t0) = 0 without forming the ratio.
    bool rv_above_one = false;
    if (x0.I > 0.0) {
        rv_above_one = x0.V == 0.0 || m.p * x0.I > m.c * x0.V;
    }
    if (rv_above_one) {
        out.threshold_case = ThresholdCase::CaseIII;
    } else {
        out.threshold_case = spreads ? ThresholdCase::CaseII : ThresholdCase::CaseI;
    }
    return out;
}

double alpha_threshold(double I0, double V0, const ModelParams& params, const AlphaOptions& options)
{
    validate(params);
    if (!std::isfinite(options.tol) || !(options.tol > 0.0)) {
        throw DomainError("alpha_threshold: tol must be positive");
    }
    if (!std::isfinite(I0) || I0 < 0.0 || !std::isfinite(V0) || !(V0 > 0.0)) {
        throw DomainError("alpha_threshold requires I0 >= 0 and V0 > 0");
    }
    if (!(params.p * I0 < params.c * V0)) {
        throw DomainError("alpha_threshold requires R_V(t0) < 1");
    }

    const double uc = critical_u(params);
    auto spreads_at = [&](double alpha) {
        const InitialCondition x0{{(1.0 + alpha) * uc, I0, V0}, 0.0};
        return classify_spread(integrate(x0, params, options.integrator)).spreads();
    };

    double lo = 0.0;
    if (spreads_at(lo)) {
        throw ThresholdNotFound("alpha_threshold: trajectory spreads already at R(t0) = 1");
    }
    double hi = std::max(4.0, 2.0 * options.r_hint) - 1.0;
    int expansions = 0;
    while (!spreads_at(hi)) {
        lo = hi;
        hi = 2.0 * hi + 1.0;
        if (++expansions > 32) {
            throw ThresholdNotFound("alpha_threshold: no spreading trajectory up to R(t0) = " +
                                    std::to_string(1.0 + hi));
        }
    }
    while (hi - lo > options.tol) {
        const double mid = 0.5 * (lo + hi);
        if (spreads_at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

CharacterizationReport characterize(const InitialCondition& x0, const ModelParams& params,
                                    const IntegratorConfig& cfg, const CharacterizeOptions& options)
{
    if (!in_open_region(x0.state0)) {
        throw DomainError("characterize requires U0 > 0 and V0 > 0");
    }
    return characterize(x0, integrate(x0, params, cfg), cfg, options);
}

CharacterizationReport characterize(const InitialCondition& x0, const Trajectory& traj,
                                    const IntegratorConfig& cfg, const CharacterizeOptions& options)
{
    const ModelParams& params = traj.params();
    const State& s0 = x0.state0;
    if (!in_open_region(s0)) {
        throw DomainError("characterize requires U0 > 0 and V0 > 0");
    }

    CharacterizationReport r;
    r.u_c = critical_u(params);
    r.r0 = reproduction_number(s0.U, params);
    r.k0 = k0_constant(s0.I, s0.V, params);
    r.u_inf_closed = u_infinity(s0.U, s0.I, s0.V, params).u_infinity;
    r.u_inf_sim = traj.final_state().U;
    r.spread = classify_spread(traj);
    r.limit_eigenvalues = equilibrium_eigenvalues(r.u_inf_closed, params);

    if (r.spread.spreads()) {
        const auto v_max = traj.first_event(EventKind::VLocalMax);
        const auto v_min = traj.first_event(EventKind::VLocalMin);
        if (v_min && (!v_max || v_min->time < v_max->time)) {
            r.t_v_min = v_min->time;
        }
        if (const auto i_max = traj.first_event(EventKind::ILocalMax)) {
            r.t_i_max = i_max->time;
        }
        if (const auto tc = traj.first_event(EventKind::UCrossesUc)) {
            r.t_c = tc->time;
        }
        if (v_max) {
            r.t_v_max = v_max->time;
            r.v_max = v_max->state.V;
        }
    }

    if (options.compute_alpha && params.p * s0.I < params.c * s0.V) {
        AlphaOptions ao;
        ao.tol = options.alpha_tol;
        ao.r_hint = r.r0;
        ao.integrator = cfg;
        r.alpha0 = alpha_threshold(s0.I, s0.V, params, ao);
    }
    return r;
}

}  // namespace tclm
