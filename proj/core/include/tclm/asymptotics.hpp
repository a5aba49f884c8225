#pragma once

#include <tclm/lambert_w.hpp>
#include <tclm/model.hpp>

namespace tclm {

/// Closed-form limit of the susceptible population.
struct AsymptoticResult {
    double u_infinity = 0.0;  ///< U(t -> inf) [cell], in [0, U_c)
    double z_argument = 0.0;  ///< -R0 e^{-R0} e^{K0}, in (-1/e, 0]
    double w_value = 0.0;     ///< W_p(z_argument), in (-1, 0]
};

/// U_inf = -U_c W_p(-R0 e^{-R0} e^{K0}).
///
/// Throws DomainError for invalid inputs or when z falls below -1/e beyond
/// rounding (inconsistent initial condition).
AsymptoticResult u_infinity(double U0, double I0, double V0, const ModelParams& params);

}  // namespace tclm
