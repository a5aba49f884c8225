#pragma once

#include <tclm/integrator.hpp>
#include <tclm/model.hpp>
#include <tclm/stability.hpp>

#include <optional>
#include <string_view>

namespace tclm {

enum class SpreadTag { NoSpread, Spread };

/// Three-way split on the initial ratio R_V(t0) and the spread outcome:
///   CaseI   R_V(t0) < 1, V strictly decreasing
///   CaseII  R_V(t0) < 1, V dips to a minimum and then peaks
///   CaseIII R_V(t0) > 1, V rises straight to a single peak
enum class ThresholdCase { CaseI, CaseII, CaseIII };

struct SpreadClass {
    SpreadTag tag = SpreadTag::NoSpread;
    ThresholdCase threshold_case = ThresholdCase::CaseI;

    bool spreads() const noexcept { return tag == SpreadTag::Spread; }
    friend bool operator==(const SpreadClass&, const SpreadClass&) = default;
};

std::string_view to_string(SpreadTag tag) noexcept;
std::string_view to_string(ThresholdCase c) noexcept;

/// Spread iff V has a local maximum, or the trajectory was cut by the
/// horizon while V was still rising.
SpreadClass classify_spread(const Trajectory& traj);

struct AlphaOptions {
    double tol = 1e-3;
    /// Reproduction number used to size the initial upper bracket,
    /// R_hi = max(4, 2 r_hint).
    double r_hint = 1.0;
    IntegratorConfig integrator{};
};

/// Smallest margin alpha >= 0 such that an initial state with
/// R(t0) = 1 + alpha + tol spreads while 1 + alpha - tol does not, found by
/// bisection on U0 = (1 + alpha) U_c with classify_spread as the oracle.
///
/// Requires R_V(t0) < 1. Throws ThresholdNotFound when the bracket ends do
/// not differ in class.
double alpha_threshold(double I0, double V0, const ModelParams& params,
                       const AlphaOptions& options = {});

struct CharacterizationReport {
    double u_c = 0.0;
    double r0 = 0.0;
    double k0 = 0.0;
    double u_inf_closed = 0.0;
    double u_inf_sim = 0.0;
    std::optional<double> alpha0;
    std::optional<double> t_v_min;
    std::optional<double> t_i_max;
    std::optional<double> t_c;
    std::optional<double> t_v_max;
    std::optional<double> v_max;
    SpreadClass spread;
    EigenTriple limit_eigenvalues;  ///< at (u_inf_closed, 0, 0)
};

struct CharacterizeOptions {
    bool compute_alpha = false;
    double alpha_tol = 1e-3;
};

/// One row of the characterization table: closed-form quantities, event
/// times from simulation and the spread class.
CharacterizationReport characterize(const InitialCondition& x0, const ModelParams& params,
                                    const IntegratorConfig& cfg = {},
                                    const CharacterizeOptions& options = {});

CharacterizationReport characterize(const InitialCondition& x0, const Trajectory& traj,
                                    const IntegratorConfig& cfg = {},
                                    const CharacterizeOptions& options = {});

}  // namespace tclm
