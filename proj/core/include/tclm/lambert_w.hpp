#pragma once

// Real Lambert W on its two real branches. W(z) solves w e^w = z.
//
//   Principal: z in [-1/e, inf)  ->  w in [-1, inf)
//   Secondary: z in [-1/e, 0)    ->  w in (-inf, -1]
//
// Header-only and templated on the floating type so the same iteration can
// run in extended precision.

#include <tclm/errors.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>

namespace tclm {

enum class Branch { Principal, Secondary };

namespace detail {

// 1/e split into a rounded head and the rounding remainder, so z + 1/e is
// formed without cancellation error near the branch point.
template <std::floating_point T>
struct InvE {
    static constexpr double hi = 0.36787944117144233;
    static constexpr double lo = -1.2428753672788363168e-17;
};

template <>
struct InvE<long double> {
    static constexpr long double hi = 0.36787944117144232158305751L;
    static constexpr long double lo = 1.2466260161460867446e-20L;
};

// Series in p = sqrt(2 (e z + 1)) about the branch point; sign selects the branch.
template <std::floating_point T>
T branch_point_series(T p)
{
    return T(-1) +
           p * (T(1) +
                p * (T(-1) / 3 +
                     p * (T(11) / 72 +
                          p * (T(-43) / 540 +
                               p * (T(769) / 17280 + p * (T(-221) / 8505))))));
}

}  // namespace detail

/// Lambert W on the requested real branch.
///
/// Halley iteration stopped on the residual |w e^w - z|, seeded by the
/// branch-point series for z near -1/e, a Taylor polynomial near 0 and
/// logarithmic asymptotics for large |ln |z||. Arguments within a few ulps
/// of -1/e return exactly -1. Throws DomainError outside the branch domain.
template <std::floating_point T>
T lambert_w(T z, Branch branch = Branch::Principal)
{
    using std::abs;
    using std::exp;
    using std::log;
    using std::log1p;
    using std::sqrt;

    constexpr T eps = std::numeric_limits<T>::epsilon();
    constexpr T e = T(2.718281828459045235360287471352662498L);

    if (!std::isfinite(z)) {
        throw DomainError("lambert_w: argument is not finite");
    }

    // Distance to the branch point, formed from the split constant.
    const T above_branch = (z + T(detail::InvE<T>::hi)) + T(detail::InvE<T>::lo);
    const T snap_window = T(4) * eps * T(detail::InvE<T>::hi);
    if (abs(above_branch) <= snap_window) {
        return T(-1);
    }
    if (above_branch < T(0)) {
        throw DomainError("lambert_w: z = " + std::to_string(static_cast<double>(z)) +
                          " is below -1/e");
    }
    if (branch == Branch::Secondary && !(z < T(0))) {
        throw DomainError("lambert_w: secondary branch requires z < 0");
    }
    if (branch == Branch::Principal && z == T(0)) {
        return T(0);
    }

    const T sign = branch == Branch::Principal ? T(1) : T(-1);
    T w;
    if (above_branch < T(0.12)) {
        w = detail::branch_point_series(sign * sqrt(T(2) * e * above_branch));
    } else if (branch == Branch::Principal) {
        if (abs(z) < T(0.25)) {
            w = z * (T(1) + z * (T(-1) + z * (T(1.5) + z * (T(-8) / 3))));
        } else if (z < T(3)) {
            // Winitzki's global approximation.
            const T l = log1p(z);
            w = l * (T(1) - log1p(l) / (T(2) + l));
        } else {
            const T l1 = log(z);
            const T l2 = log(l1);
            w = l1 - l2 + l2 / l1;
        }
    } else {
        const T l1 = log(-z);
        const T l2 = log(-l1);
        w = l1 - l2 + l2 / l1;
    }

    const T tolerance = T(8) * eps * std::max(abs(z), std::numeric_limits<T>::min());
    for (int iter = 0; iter < 64; ++iter) {
        const T ew = exp(w);
        const T f = w * ew - z;
        if (abs(f) <= tolerance) {
            break;
        }
        const T wp1 = w + T(1);
        if (wp1 == T(0)) {
            break;
        }
        const T step = f / (ew * wp1 - (w + T(2)) * f / (T(2) * wp1));
        const T next = w - step;
        if (next == w) {
            break;
        }
        w = next;
    }

    // Keep the result on its branch when rounding nudges it across -1.
    if (branch == Branch::Principal && w < T(-1)) {
        w = T(-1);
    } else if (branch == Branch::Secondary && w > T(-1)) {
        w = T(-1);
    }
    return w;
}

}  // namespace tclm
