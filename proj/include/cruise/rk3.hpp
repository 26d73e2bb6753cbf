#pragma once

// Kutta's third-order explicit Runge-Kutta scheme.

#include <Eigen/Core>

namespace cruise {

/// One step y <- y + h/6 (k1 + 4 k2 + k3) of size h for dy/dt = f(y).
template <typename Vector, typename Rhs>
Vector rk3_step(const Rhs& f, const Vector& y, double h) {
    const Vector k1 = f(y);
    const Vector k2 = f(Vector(y + 0.5 * h * k1));
    const Vector k3 = f(Vector(y - h * k1 + 2.0 * h * k2));
    return y + (h / 6.0) * (k1 + 4.0 * k2 + k3);
}

/// Fixed-step integration over `steps` steps of size h; `observe(i, y)` is
/// called for every node i = 0..steps.
template <typename Vector, typename Rhs, typename Observer>
Vector rk3_integrate(const Rhs& f, Vector y, double h, int steps, Observer&& observe) {
    observe(0, y);
    for (int i = 0; i < steps; ++i) {
        y = rk3_step(f, y, h);
        observe(i + 1, y);
    }
    return y;
}

} // namespace cruise
