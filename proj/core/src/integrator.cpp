#include <tclm/integrator.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

namespace tclm {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 to_vec(const State& x) { return {x.U, x.I, x.V}; }
Vec3 to_vec(const StateDerivative& d) { return {d.dU, d.dI, d.dV}; }
State to_state(const Vec3& v) { return {v[0], v[1], v[2]}; }

Vec3 rhs(const Vec3& y, const ModelParams& m)
{
    return to_vec(detail::rhs(to_state(y), m));
}

// y + h * sum_j a_j k_j
template <std::size_t N>
Vec3 combine(const Vec3& y, double h, const std::array<double, N>& a,
             const std::array<const Vec3*, N>& k)
{
    Vec3 out = y;
    for (std::size_t i = 0; i < 3; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            acc += a[j] * (*k[j])[i];
        }
        out[i] += h * acc;
    }
    return out;
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr std::array<double, 1> a2{1.0 / 5};
constexpr std::array<double, 2> a3{3.0 / 40, 9.0 / 40};
constexpr std::array<double, 3> a4{44.0 / 45, -56.0 / 15, 32.0 / 9};
constexpr std::array<double, 4> a5{19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561,
                                   -212.0 / 729};
constexpr std::array<double, 5> a6{9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                                   -5103.0 / 18656};
constexpr std::array<double, 6> b5{35.0 / 384,     0.0, 500.0 / 1113, 125.0 / 192,
                                   -2187.0 / 6784, 11.0 / 84};
// b5 - b4, acting on k1..k7
constexpr std::array<double, 7> err_w{71.0 / 57600,      0.0,        -71.0 / 16695, 71.0 / 1920,
                                      -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

double error_norm(const Vec3& err, const Vec3& y0, const Vec3& y1, const IntegratorConfig& cfg)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / scale;
        sum += r * r;
    }
    return std::sqrt(sum / 3.0);
}

double initial_step(const Vec3& y0, const Vec3& f0, const ModelParams& m,
                    const IntegratorConfig& cfg)
{
    auto norm = [&](const Vec3& v) {
        double sum = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            const double r = v[i] / (cfg.abs_tol + cfg.rel_tol * std::abs(y0[i]));
            sum += r * r;
        }
        return std::sqrt(sum / 3.0);
    };
    const double d0 = norm(y0);
    const double d1 = norm(f0);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, cfg.max_step);
    Vec3 y1 = y0;
    for (std::size_t i = 0; i < 3; ++i) {
        y1[i] += h0 * f0[i];
    }
    const Vec3 f1 = rhs(y1, m);
    Vec3 df{};
    for (std::size_t i = 0; i < 3; ++i) {
        df[i] = f1[i] - f0[i];
    }
    const double d2 = norm(df) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, cfg.max_step});
}

bool should_stop_early(const Vec3& y, const Vec3& f, double uc, const ModelParams& m,
                       const IntegratorConfig& cfg)
{
    return y[0] < uc && f[2] < 0.0 && y[2] < cfg.v_clear && y[1] < cfg.v_clear * m.c / m.p;
}

void clamp_small_negatives(Vec3& y, double abs_tol)
{
    for (double& v : y) {
        if (v < 0.0 && v >= -abs_tol) {
            v = 0.0;
        }
    }
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept
{
    switch (kind) {
    case EventKind::VLocalMin:
        return "V_LocalMin";
    case EventKind::VLocalMax:
        return "V_LocalMax";
    case EventKind::ILocalMax:
        return "I_LocalMax";
    case EventKind::UCrossesUc:
        return "U_CrossesUc";
    case EventKind::VClearance:
        return "V_Clearance";
    }
    return "unknown";
}

std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept
{
    for (EventKind k : {EventKind::VLocalMin, EventKind::VLocalMax, EventKind::ILocalMax,
                        EventKind::UCrossesUc, EventKind::VClearance}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    return std::nullopt;
}

void IntegratorConfig::validate() const
{
    auto tol_ok = [](double t) { return std::isfinite(t) && t > 0.0 && t <= 1e-2; };
    if (!tol_ok(rel_tol) || !tol_ok(abs_tol)) {
        throw DomainError("integrator tolerances must lie in (0, 1e-2]");
    }
    if (!std::isfinite(t_max) || !(t_max > 0.0)) {
        throw DomainError("integrator t_max must be positive");
    }
    if (!std::isfinite(max_step) || !(max_step > 0.0)) {
        throw DomainError("integrator max_step must be positive");
    }
    if (!std::isfinite(v_clear) || !(v_clear > 0.0)) {
        throw DomainError("integrator v_clear must be positive");
    }
    if (!std::isfinite(event_time_tol) || !(event_time_tol > 0.0)) {
        throw DomainError("event_time_tol must be positive");
    }
    if (max_steps <= 0) {
        throw DomainError("max_steps must be positive");
    }
}

Trajectory::Trajectory(InitialCondition x0, ModelParams params, std::vector<Sample> samples,
                       std::vector<Event> events, StopReason reason)
    : x0_(x0), params_(params), samples_(std::move(samples)), events_(std::move(events)),
      reason_(reason)
{
    if (samples_.empty()) {
        throw DomainError("a trajectory needs at least one sample");
    }
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
}

State Trajectory::state_at(double t) const
{
    const double slack = 1e-12 * std::max(1.0, std::abs(t_end()));
    if (!(t >= t_begin() - slack && t <= t_end() + slack)) {
        throw DomainError("state_at: t = " + std::to_string(t) + " outside trajectory span");
    }
    if (samples_.size() == 1 || t <= t_begin()) {
        return samples_.front().x;
    }
    if (t >= t_end()) {
        return samples_.back().x;
    }
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double value, const Sample& s) { return value < s.t; });
    const Sample& s1 = *it;
    const Sample& s0 = *(it - 1);
    const double h = s1.t - s0.t;
    const double s = (t - s0.t) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    auto blend = [&](double y0, double d0, double y1, double d1) {
        return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    };
    return {blend(s0.x.U, s0.dx.dU, s1.x.U, s1.dx.dU), blend(s0.x.I, s0.dx.dI, s1.x.I, s1.dx.dI),
            blend(s0.x.V, s0.dx.dV, s1.x.V, s1.dx.dV)};
}

std::vector<Event> Trajectory::events_of(EventKind kind) const
{
    std::vector<Event> out;
    std::copy_if(events_.begin(), events_.end(), std::back_inserter(out),
                 [kind](const Event& e) { return e.kind == kind; });
    return out;
}

std::optional<Event> Trajectory::first_event(EventKind kind) const
{
    auto it = std::find_if(events_.begin(), events_.end(),
                           [kind](const Event& e) { return e.kind == kind; });
    if (it == events_.end()) {
        return std::nullopt;
    }
    return *it;
}

Trajectory Trajectory::with_events(std::vector<Event> events) const
{
    return Trajectory(x0_, params_, samples_, std::move(events), reason_);
}

Trajectory integrate(const InitialCondition& x0, const ModelParams& params,
                     const IntegratorConfig& cfg)
{
    validate(params);
    validate(x0.state0);
    cfg.validate();
    if (!std::isfinite(x0.t0)) {
        throw DomainError("initial time must be finite");
    }

    const double uc = critical_u(params);
    const double t_final = x0.t0 + cfg.t_max;

    Vec3 y = to_vec(x0.state0);
    Vec3 k1 = rhs(y, params);
    double t = x0.t0;

    std::vector<Sample> samples;
    samples.push_back({t, to_state(y), detail::rhs(to_state(y), params)});

    double h = initial_step(y, k1, params, cfg);
    StopReason reason = StopReason::Horizon;
    long steps = 0;
    bool rejected_last = false;

    while (t < t_final) {
        if (++steps > cfg.max_steps) {
            Trajectory partial(x0, params, std::move(samples));
            throw IntegrationError("step budget exhausted at t = " + std::to_string(t),
                                   detect_events(partial, cfg));
        }
        const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (h < h_min) {
            Trajectory partial(x0, params, std::move(samples));
            throw IntegrationError("step size underflow at t = " + std::to_string(t),
                                   detect_events(partial, cfg));
        }
        h = std::min(h, cfg.max_step);
        bool last = false;
        if (t + h >= t_final) {
            h = t_final - t;
            last = true;
        }

        const Vec3 k2 = rhs(combine(y, h, a2, {&k1}), params);
        const Vec3 k3 = rhs(combine(y, h, a3, {&k1, &k2}), params);
        const Vec3 k4 = rhs(combine(y, h, a4, {&k1, &k2, &k3}), params);
        const Vec3 k5 = rhs(combine(y, h, a5, {&k1, &k2, &k3, &k4}), params);
        const Vec3 k6 = rhs(combine(y, h, a6, {&k1, &k2, &k3, &k4, &k5}), params);
        Vec3 y_new = combine(y, h, b5, {&k1, &k2, &k3, &k4, &k5, &k6});
        const Vec3 k7 = rhs(y_new, params);

        Vec3 err{};
        const std::array<const Vec3*, 7> ks{&k1, &k2, &k3, &k4, &k5, &k6, &k7};
        for (std::size_t i = 0; i < 3; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < 7; ++j) {
                acc += err_w[j] * (*ks[j])[i];
            }
            err[i] = h * acc;
        }
        double err_norm = error_norm(err, y, y_new, cfg);
        const bool left_orthant =
            std::any_of(y_new.begin(), y_new.end(), [&](double v) { return v < -cfg.abs_tol; });
        if (!std::isfinite(err_norm) || left_orthant) {
            h *= 0.25;
            rejected_last = true;
            continue;
        }

        if (err_norm > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
            rejected_last = true;
            continue;
        }

        // Accepted.
        t = last ? t_final : t + h;
        clamp_small_negatives(y_new, cfg.abs_tol);
        y = y_new;
        k1 = rhs(y, params);
        samples.push_back({t, to_state(y), {k1[0], k1[1], k1[2]}});

        if (cfg.early_stop && should_stop_early(y, k1, uc, params, cfg)) {
            reason = StopReason::Clearance;
            break;
        }

        double factor = err_norm == 0.0 ? 5.0 : 0.9 * std::pow(err_norm, -0.2);
        factor = std::clamp(factor, 0.2, rejected_last ? 1.0 : 5.0);
        h *= factor;
        rejected_last = false;
    }

    Trajectory raw(x0, params, std::move(samples), {}, reason);
    return detect_events(raw, cfg);
}

namespace {

struct Crossing {
    double time;
    int from_sign;  // sign before the crossing
};

// Sub-points per step scanned for sign changes; a minimum and a maximum of
// V can both fall inside one accepted step.
constexpr int kScanPerStep = 8;

// Sign changes of g over the samples and the interior scan points, refined
// on the dense output.
std::vector<Crossing> find_crossings(const Trajectory& traj,
                                     const std::function<double(const State&)>& g, double time_tol)
{
    std::vector<Crossing> out;
    const auto samples = traj.samples();
    int last_sign = 0;
    double last_t = 0.0;
    double last_value = 0.0;
    auto visit = [&](double t, double value) {
        const int sign = (value > 0.0) - (value < 0.0);
        if (sign == 0) {
            return;
        }
        if (last_sign != 0 && sign != last_sign) {
            double ta = last_t;
            double tb = t;
            double ga = last_value;
            double gb = value;
            while (tb - ta > time_tol) {
                const double tm = 0.5 * (ta + tb);
                const double gm = g(traj.state_at(tm));
                if (gm == 0.0) {
                    ta = tb = tm;
                    ga = gb = 0.0;
                    break;
                }
                if ((gm > 0.0) == (ga > 0.0)) {
                    ta = tm;
                    ga = gm;
                } else {
                    tb = tm;
                    gb = gm;
                }
            }
            // Final regula falsi step inside the bracket.
            double root = 0.5 * (ta + tb);
            if (gb != ga) {
                root = std::clamp(ta - ga * (tb - ta) / (gb - ga), ta, tb);
            }
            out.push_back({root, last_sign});
        }
        last_sign = sign;
        last_t = t;
        last_value = value;
    };
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (k > 0) {
            const double t0 = samples[k - 1].t;
            const double h = samples[k].t - t0;
            for (int j = 1; j < kScanPerStep; ++j) {
                const double t = t0 + h * j / kScanPerStep;
                visit(t, g(traj.state_at(t)));
            }
        }
        visit(samples[k].t, g(samples[k].x));
    }
    return out;
}

}  // namespace

Trajectory detect_events(const Trajectory& raw, const IntegratorConfig& cfg)
{
    cfg.validate();
    const ModelParams& m = raw.params();
    std::vector<Event> events;
    if (raw.samples().size() < 2) {
        return raw.with_events({});
    }
    const double uc = critical_u(m);
    const double tol = cfg.event_time_tol;

    auto make_event = [&](EventKind kind, double time) {
        return Event{kind, time, raw.state_at(time)};
    };

    // V extrema with the noise floor and the minimum-rise filter.
    std::vector<Event> v_extrema;
    for (const Crossing& c :
         find_crossings(raw, [&](const State& x) { return m.p * x.I - m.c * x.V; }, tol)) {
        Event e = make_event(c.from_sign < 0 ? EventKind::VLocalMin : EventKind::VLocalMax, c.time);
        if (e.state.V < cfg.abs_tol) {
            continue;
        }
        if (e.kind == EventKind::VLocalMax) {
            const double base = (!v_extrema.empty() && v_extrema.back().kind == EventKind::VLocalMin)
                                    ? v_extrema.back().state.V
                                    : raw.initial().state0.V;
            if (e.state.V < base * (1.0 + 1e-9)) {
                if (!v_extrema.empty() && v_extrema.back().kind == EventKind::VLocalMin) {
                    v_extrema.pop_back();
                }
                continue;
            }
        }
        v_extrema.push_back(e);
    }
    events.insert(events.end(), v_extrema.begin(), v_extrema.end());

    for (const Crossing& c :
         find_crossings(raw, [&](const State& x) { return m.beta * x.U * x.V - m.delta * x.I; }, tol)) {
        if (c.from_sign > 0) {
            Event e = make_event(EventKind::ILocalMax, c.time);
            if (e.state.I >= cfg.abs_tol) {
                events.push_back(e);
            }
        }
    }

    for (const Crossing& c : find_crossings(raw, [&](const State& x) { return x.U - uc; }, tol)) {
        if (c.from_sign > 0) {
            events.push_back(make_event(EventKind::UCrossesUc, c.time));
        }
    }

    for (const Crossing& c :
         find_crossings(raw, [&](const State& x) { return x.V - cfg.v_clear; }, tol)) {
        if (c.from_sign > 0) {
            events.push_back(make_event(EventKind::VClearance, c.time));
        }
    }

    return raw.with_events(std::move(events));
}

}  // namespace tclm
