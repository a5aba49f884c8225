#pragma once

#include <tclm/model.hpp>

#include <array>

namespace tclm {

using Matrix3 = std::array<std::array<double, 3>, 3>;
using Matrix2 = std::array<std::array<double, 2>, 2>;

/// A point (u_s, 0, 0) of the equilibrium line.
struct EquilibriumPoint {
    double u_s = 0.0;
};

/// Eigenvalues of the Jacobian at (u_s, 0, 0). lambda1 is identically zero;
/// the remaining pair is always real because the discriminant equals
/// (c - delta)^2 + 4 beta u_s p. lambda2 is the larger root.
struct EigenTriple {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;
};

enum class EquilibriumBranch {
    Xs1,  ///< u_s in [0, U_c): stable, attracts the open region
    Xs2,  ///< u_s in [U_c, inf): unstable
};

/// Rows: [-beta V, 0, -beta U; beta V, -delta, beta U; 0, p, -c].
Matrix3 jacobian(const State& x, const ModelParams& params);

EigenTriple equilibrium_eigenvalues(double u_s, const ModelParams& params);

EquilibriumBranch classify_equilibrium(double u_s, const ModelParams& params);

/// J(x) = U - u_s - u_s ln(U / u_s) + I + (delta / p) V.
/// u_s = 0 uses the continuous extension u_s ln(U / u_s) -> 0.
double lyapunov_value(const State& x, double u_s, const ModelParams& params);

/// dJ/dt along the flow: V (u_s beta - delta c / p).
double lyapunov_derivative(const State& x, double u_s, const ModelParams& params);

/// The two blocks of the next-generation construction at the disease-free
/// state (U0, 0, 0), over the infected compartments (I, V).
struct NextGenerationMatrices {
    Matrix2 F;       ///< new infections
    Matrix2 G;       ///< transitions
    Matrix2 G_inv;
    Matrix2 FG_inv;  ///< next-generation matrix
};

NextGenerationMatrices next_generation_matrices(double U0, const ModelParams& params);

/// Spectral radius of a real 2x2 matrix.
double spectral_radius(const Matrix2& a);

/// R0 as the spectral radius of F G^-1.
double next_generation_r0(double U0, const ModelParams& params);

}  // namespace tclm
