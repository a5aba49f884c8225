#pragma once

// Target-cell-limited within-host model:
//
//   dU/dt = -beta U V
//   dI/dt =  beta U V - delta I
//   dV/dt =  p I - c V
//
// U susceptible cells [cell], I infected cells [cell], V viral load
// [copies/mL], time in days.

#include <tclm/errors.hpp>

namespace tclm {

/// Kinetic rates of the model. All four must be strictly positive and finite;
/// use make() to obtain a validated instance.
struct ModelParams {
    double beta = 0.0;   ///< infection rate [(copies/mL)^-1 day^-1]
    double delta = 0.0;  ///< infected-cell death rate [day^-1]
    double p = 0.0;      ///< virion production rate [(copies/mL) day^-1 cell^-1]
    double c = 0.0;      ///< virus clearance rate [day^-1]

    static ModelParams make(double beta, double delta, double p, double c);

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Throws DomainError unless every rate is finite and > 0.
void validate(const ModelParams& params);

struct State {
    double U = 0.0;
    double I = 0.0;
    double V = 0.0;

    friend bool operator==(const State&, const State&) = default;
};

struct StateDerivative {
    double dU = 0.0;
    double dI = 0.0;
    double dV = 0.0;
};

/// Throws DomainError unless all components are finite and >= 0.
void validate(const State& x);

/// True for the closed orthant (U, I, V >= 0).
[[nodiscard]] bool in_closed_orthant(const State& x) noexcept;
/// True for the infection-relevant region (U > 0, I >= 0, V > 0).
[[nodiscard]] bool in_open_region(const State& x) noexcept;

struct InitialCondition {
    State state0;
    double t0 = 0.0;
};

namespace detail {
// Unchecked right-hand side, used on trial stages inside the integrator.
inline StateDerivative rhs(const State& x, const ModelParams& m) noexcept
{
    const double infection = m.beta * x.U * x.V;
    return {-infection, infection - m.delta * x.I, m.p * x.I - m.c * x.V};
}
}  // namespace detail

StateDerivative vector_field(const State& x, const ModelParams& params);

/// R(U) = U beta p / (c delta); R0 when evaluated at U0.
double reproduction_number(double U, const ModelParams& params);

/// R_V = p I / (c V). The sign of dV/dt equals the sign of (R_V - 1).
double rv_number(double I, double V, const ModelParams& params);

/// U_c = c delta / (p beta), the susceptible count at which R = 1.
double critical_u(const ModelParams& params);

/// K0 = -(beta / c) (p I0 / delta + V0) <= 0.
double k0_constant(double I0, double V0, const ModelParams& params);

/// First integral of the flow. Zero along any exact solution through x0:
///   ln(U/U0) - (beta p / c delta)(U - U0 + I - I0) - (beta / c)(V - V0)
double conserved_residual(const State& x, const State& x0, const ModelParams& params);

}  // namespace tclm
