#pragma once

#include <tclm/model.hpp>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tclm {

enum class EventKind {
    VLocalMin,    ///< dV/dt changes sign - to +
    VLocalMax,    ///< dV/dt changes sign + to -
    ILocalMax,    ///< dI/dt changes sign + to -
    UCrossesUc,   ///< U falls through U_c (R = 1)
    VClearance,   ///< V falls through the clearance level
};

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept;

struct Event {
    EventKind kind;
    double time = 0.0;
    State state;
};

/// One accepted integrator step. The derivative is stored so the
/// trajectory can be interpolated (cubic Hermite) between samples.
struct Sample {
    double t = 0.0;
    State x;
    StateDerivative dx;
};

enum class StopReason { Horizon, Clearance };

struct IntegratorConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-9;
    double max_step = 0.25;       ///< [day]
    double t_max = 60.0;          ///< horizon measured from t0 [day]
    double v_clear = 50.0;        ///< clearance level [copies/mL]
    bool early_stop = true;       ///< stop once the infection is provably over
    double event_time_tol = 1e-6; ///< bisection width for event refinement [day]
    long max_steps = 2'000'000;

    void validate() const;
};

class Trajectory {
public:
    Trajectory(InitialCondition x0, ModelParams params, std::vector<Sample> samples,
               std::vector<Event> events = {}, StopReason reason = StopReason::Horizon);

    const InitialCondition& initial() const noexcept { return x0_; }
    const ModelParams& params() const noexcept { return params_; }
    std::span<const Sample> samples() const noexcept { return samples_; }
    std::span<const Event> events() const noexcept { return events_; }
    StopReason stop_reason() const noexcept { return reason_; }

    double t_begin() const noexcept { return samples_.front().t; }
    double t_end() const noexcept { return samples_.back().t; }
    const State& final_state() const noexcept { return samples_.back().x; }

    /// Dense output: cubic Hermite interpolation between accepted steps.
    /// Throws DomainError outside [t_begin, t_end].
    State state_at(double t) const;

    std::vector<Event> events_of(EventKind kind) const;
    std::optional<Event> first_event(EventKind kind) const;

    /// Copy with the event list replaced (sorted by time).
    Trajectory with_events(std::vector<Event> events) const;

private:
    InitialCondition x0_;
    ModelParams params_;
    std::vector<Sample> samples_;
    std::vector<Event> events_;
    StopReason reason_;
};

/// Step-size underflow or step-budget exhaustion. Carries what was
/// integrated so far.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, Trajectory partial)
        : std::runtime_error(what), partial_(std::move(partial))
    {
    }
    const Trajectory& partial() const noexcept { return partial_; }

private:
    Trajectory partial_;
};

/// Adaptive Dormand-Prince 5(4) integration with event detection.
///
/// Terminates at t0 + t_max, or (with early_stop) at the first accepted step
/// where U < U_c, dV/dt < 0, V < v_clear and I < v_clear c / p. Past that
/// point V can have no further extremum, since a local minimum of V needs
/// R(U) > 1 and U only decreases.
Trajectory integrate(const InitialCondition& x0, const ModelParams& params,
                     const IntegratorConfig& cfg = {});

/// Locates V extrema, I maxima, the U = U_c crossing and V clearance on the
/// dense output of raw, refined by bisection to cfg.event_time_tol.
///
/// Extrema whose value sits below abs_tol are treated as noise, and a V
/// rise of less than 1e-9 relative to the preceding minimum is discarded
/// together with that minimum.
Trajectory detect_events(const Trajectory& raw, const IntegratorConfig& cfg);

}  // namespace tclm
