#include <tclm/model.hpp>

#include <cmath>
#include <string>

namespace tclm {

namespace {

void require_positive_rate(double value, const char* name)
{
    if (!std::isfinite(value) || !(value > 0.0)) {
        throw DomainError(std::string("model rate '") + name +
                          "' must be finite and positive, got " + std::to_string(value));
    }
}

void require_nonnegative(double value, const char* name)
{
    if (!std::isfinite(value) || value < 0.0) {
        throw DomainError(std::string(name) + " must be finite and non-negative, got " +
                          std::to_string(value));
    }
}

}  // namespace

ModelParams ModelParams::make(double beta, double delta, double p, double c)
{
    ModelParams m{beta, delta, p, c};
    validate(m);
    return m;
}

void validate(const ModelParams& params)
{
    require_positive_rate(params.beta, "beta");
    require_positive_rate(params.delta, "delta");
    require_positive_rate(params.p, "p");
    require_positive_rate(params.c, "c");
}

void validate(const State& x)
{
    require_nonnegative(x.U, "U");
    require_nonnegative(x.I, "I");
    require_nonnegative(x.V, "V");
}

bool in_closed_orthant(const State& x) noexcept
{
    return std::isfinite(x.U) && std::isfinite(x.I) && std::isfinite(x.V) && x.U >= 0.0 &&
           x.I >= 0.0 && x.V >= 0.0;
}

bool in_open_region(const State& x) noexcept
{
    return in_closed_orthant(x) && x.U > 0.0 && x.V > 0.0;
}

StateDerivative vector_field(const State& x, const ModelParams& params)
{
    validate(x);
    validate(params);
    return detail::rhs(x, params);
}

double reproduction_number(double U, const ModelParams& params)
{
    require_nonnegative(U, "U");
    validate(params);
    return U * params.beta * params.p / (params.c * params.delta);
}

double rv_number(double I, double V, const ModelParams& params)
{
    require_nonnegative(I, "I");
    if (!std::isfinite(V) || !(V > 0.0)) {
        throw DomainError("R_V is undefined for V <= 0");
    }
    validate(params);
    return params.p * I / (params.c * V);
}

double critical_u(const ModelParams& params)
{
    validate(params);
    return params.c * params.delta / (params.p * params.beta);
}

double k0_constant(double I0, double V0, const ModelParams& params)
{
    require_nonnegative(I0, "I0");
    require_nonnegative(V0, "V0");
    validate(params);
    return -(params.beta / params.c) * (params.p / params.delta * I0 + V0);
}

double conserved_residual(const State& x, const State& x0, const ModelParams& params)
{
    validate(params);
    if (!(x.U > 0.0) || !(x0.U > 0.0) || !std::isfinite(x.U) || !std::isfinite(x0.U)) {
        throw DomainError("conserved_residual requires U > 0 and U0 > 0");
    }
    const double r_per_cell = params.beta * params.p / (params.c * params.delta);
    return std::log(x.U / x0.U) - r_per_cell * (x.U - x0.U) - r_per_cell * (x.I - x0.I) -
           (params.beta / params.c) * (x.V - x0.V);
}

}  // namespace tclm
