#pragma once

// Scalar bracketed root finding.

#include "cruise/types.hpp"

#include <cmath>

namespace cruise {

/**
 * Root of f in [a, b] given f(a) f(b) <= 0. Illinois-weighted secant steps,
 * with bisection whenever the secant point falls near an end of the bracket
 * or two consecutive steps failed to halve it. Stops when |f| <= f_tol or
 * the bracket is narrower than x_tol.
 */
template <typename Fn>
double bracketed_root(Fn&& f, double a, double b, double fa, double fb, double x_tol, double f_tol,
                      int max_iterations = 200) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw DomainError("bracketed_root: interval does not bracket a sign change");
    double lo = a, hi = b, flo = fa, fhi = fb;
    if (lo > hi) {
        std::swap(lo, hi);
        std::swap(flo, fhi);
    }
    int last = 0;
    int slow = 0;
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < max_iterations; ++it) {
        const double width = hi - lo;
        x = (lo * fhi - hi * flo) / (fhi - flo);
        if (slow >= 2 || !(x > lo + 0.01 * width && x < hi - 0.01 * width)) {
            x = 0.5 * (lo + hi);
            slow = 0;
        }
        const double fx = f(x);
        if (std::abs(fx) <= f_tol) return x;
        if ((fx < 0.0) == (flo < 0.0)) {
            lo = x;
            flo = fx;
            if (last == -1) fhi *= 0.5;
            last = -1;
        } else {
            hi = x;
            fhi = fx;
            if (last == 1) flo *= 0.5;
            last = 1;
        }
        slow = (hi - lo) > 0.5 * width ? slow + 1 : 0;
        if (hi - lo <= x_tol) return std::abs(flo) < std::abs(fhi) ? lo : hi;
    }
    return x;
}

} // namespace cruise
