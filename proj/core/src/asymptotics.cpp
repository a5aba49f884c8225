#include <tclm/asymptotics.hpp>

#include <cmath>

namespace tclm {

AsymptoticResult u_infinity(double U0, double I0, double V0, const ModelParams& params)
{
    validate(params);
    if (!std::isfinite(U0) || !(U0 > 0.0)) {
        throw DomainError("u_infinity requires U0 > 0");
    }
    const double r0 = reproduction_number(U0, params);
    const double k0 = k0_constant(I0, V0, params);
    const double uc = critical_u(params);
    if (I0 == 0.0 && V0 == 0.0 && U0 > uc) {
        // Uninfected equilibrium above U_c: the flow never leaves U0, and the
        // principal-branch root would describe a different orbit.
        throw DomainError("u_infinity: uninfected initial state with U0 > U_c");
    }

    // exp(K0 - R0) in one call keeps patients with R0 ~ 40 away from underflow
    // in the intermediate product.
    const double z = -r0 * std::exp(k0 - r0);
    const double w = lambert_w(z, Branch::Principal);
    return {-uc * w, z, w};
}

}  // namespace tclm
