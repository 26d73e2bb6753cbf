#pragma once

// Small dense Levenberg-Marquardt driver shared by the shooting solver and the
// wind-field calibration.

#include "cruise/types.hpp"

#include <functional>
#include <vector>

namespace cruise {

struct LeastSquaresOptions {
    int max_iterations = 100;
    /// Stop once ||r|| falls below this value.
    double residual_tolerance = 0.0;
    /// Stop once the relative step ||dx|| / (||x|| + eps) falls below this value.
    double step_tolerance = 1e-12;
    /// Relative forward-difference step for the Jacobian.
    double fd_step = 1e-6;
    double initial_damping = 1e-3;
    double max_damping = 1e12;
};

struct LeastSquaresResult {
    VecX x;
    VecX residual;
    double norm = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::vector<double> history;  // ||r|| per accepted iterate, starting with the initial guess
};

using ResidualFunction = std::function<VecX(const VecX&)>;

/// Forward-difference Jacobian; step h_j = fd_step * max(|x_j|, 1).
MatX forward_difference_jacobian(const ResidualFunction& f, const VecX& x, const VecX& fx,
                                 double fd_step);

/**
 * Minimize 0.5 ||f(x)||^2 with Marquardt-scaled damping. Works in whatever
 * coordinates the caller supplies, so callers pre-scale their unknowns.
 * A residual containing non-finite entries is treated as an infinitely bad
 * trial point and only increases the damping.
 */
LeastSquaresResult levenberg_marquardt(const ResidualFunction& f, VecX x0,
                                       const LeastSquaresOptions& options = {});

} // namespace cruise
