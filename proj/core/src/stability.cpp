#include <tclm/stability.hpp>

#include <algorithm>
#include <cmath>
#include <complex>

namespace tclm {

namespace {

void require_equilibrium(double u_s)
{
    if (!std::isfinite(u_s) || u_s < 0.0) {
        throw DomainError("equilibrium u_s must be finite and >= 0");
    }
}

Matrix2 multiply(const Matrix2& a, const Matrix2& b)
{
    Matrix2 out{};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    return out;
}

}  // namespace

Matrix3 jacobian(const State& x, const ModelParams& params)
{
    validate(x);
    validate(params);
    const double bu = params.beta * x.U;
    const double bv = params.beta * x.V;
    return {{{-bv, 0.0, -bu}, {bv, -params.delta, bu}, {0.0, params.p, -params.c}}};
}

EigenTriple equilibrium_eigenvalues(double u_s, const ModelParams& params)
{
    require_equilibrium(u_s);
    validate(params);
    const double trace = params.c + params.delta;
    // beta u_s p - c delta, factored so it vanishes exactly when u_s = U_c
    // up to one rounding.
    const double excess = params.c * params.delta * (u_s / critical_u(params) - 1.0);
    const double disc = trace * trace + 4.0 * excess;
    const double root = std::sqrt(disc);
    // Larger root via the product form avoids cancellation near u_s = U_c.
    const double lambda2 = 2.0 * excess / (trace + root);
    const double lambda3 = -0.5 * (trace + root);
    return {0.0, lambda2, lambda3};
}

EquilibriumBranch classify_equilibrium(double u_s, const ModelParams& params)
{
    require_equilibrium(u_s);
    return u_s < critical_u(params) ? EquilibriumBranch::Xs1 : EquilibriumBranch::Xs2;
}

double lyapunov_value(const State& x, double u_s, const ModelParams& params)
{
    validate(params);
    validate(x);
    if (!(x.U > 0.0)) {
        throw DomainError("lyapunov_value requires U > 0");
    }
    if (!std::isfinite(u_s) || u_s < 0.0) {
        throw DomainError("lyapunov_value requires u_s >= 0");
    }
    const double log_term = u_s == 0.0 ? 0.0 : u_s * std::log(x.U / u_s);
    return x.U - u_s - log_term + x.I + (params.delta / params.p) * x.V;
}

double lyapunov_derivative(const State& x, double u_s, const ModelParams& params)
{
    validate(params);
    validate(x);
    if (!(x.U > 0.0)) {
        throw DomainError("lyapunov_derivative requires U > 0");
    }
    if (!std::isfinite(u_s) || u_s < 0.0) {
        throw DomainError("lyapunov_derivative requires u_s >= 0");
    }
    return x.V * (u_s * params.beta - params.delta * params.c / params.p);
}

NextGenerationMatrices next_generation_matrices(double U0, const ModelParams& params)
{
    require_equilibrium(U0);
    validate(params);
    NextGenerationMatrices out{};
    out.F = {{{0.0, params.beta * U0}, {0.0, 0.0}}};
    out.G = {{{params.delta, 0.0}, {-params.p, params.c}}};
    const double det = params.delta * params.c;
    out.G_inv = {{{params.c / det, 0.0}, {params.p / det, params.delta / det}}};
    out.FG_inv = multiply(out.F, out.G_inv);
    return out;
}

double spectral_radius(const Matrix2& a)
{
    const double tr = a[0][0] + a[1][1];
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det));
    const std::complex<double> l1 = 0.5 * (tr + disc);
    const std::complex<double> l2 = 0.5 * (tr - disc);
    return std::max(std::abs(l1), std::abs(l2));
}

double next_generation_r0(double U0, const ModelParams& params)
{
    return spectral_radius(next_generation_matrices(U0, params).FG_inv);
}

}  // namespace tclm
