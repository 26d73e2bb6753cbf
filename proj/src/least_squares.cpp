#include "cruise/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cruise {

namespace {

bool all_finite(const VecX& v) { return v.allFinite(); }

} // namespace

MatX forward_difference_jacobian(const ResidualFunction& f, const VecX& x, const VecX& fx,
                                 double fd_step) {
    MatX jac(fx.size(), x.size());
    VecX xp = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = fd_step * std::max(std::abs(x[j]), 1.0);
        xp[j] = x[j] + h;
        jac.col(j) = (f(xp) - fx) / h;
        xp[j] = x[j];
    }
    return jac;
}

LeastSquaresResult levenberg_marquardt(const ResidualFunction& f, VecX x0,
                                       const LeastSquaresOptions& options) {
    LeastSquaresResult out;
    out.x = std::move(x0);
    out.residual = f(out.x);
    ++out.evaluations;
    if (!all_finite(out.residual)) {
        out.norm = std::numeric_limits<double>::infinity();
        return out;
    }
    out.norm = out.residual.norm();
    out.history.push_back(out.norm);

    double damping = options.initial_damping;
    for (int it = 0; it < options.max_iterations; ++it) {
        if (out.norm <= options.residual_tolerance) {
            out.converged = true;
            return out;
        }
        const MatX jac = forward_difference_jacobian(f, out.x, out.residual, options.fd_step);
        out.evaluations += static_cast<int>(out.x.size());
        if (!jac.allFinite()) break;

        const MatX jtj = jac.transpose() * jac;
        const VecX jtr = jac.transpose() * out.residual;
        VecX diag = jtj.diagonal().cwiseMax(1e-12 * std::max(1.0, jtj.diagonal().maxCoeff()));

        bool accepted = false;
        while (damping <= options.max_damping) {
            MatX lhs = jtj;
            lhs.diagonal() += damping * diag;
            const VecX step = lhs.ldlt().solve(-jtr);
            if (!step.allFinite()) {
                damping *= 10.0;
                continue;
            }
            const VecX trial = out.x + step;
            const VecX r_trial = f(trial);
            ++out.evaluations;
            const double n_trial = all_finite(r_trial) ? r_trial.norm()
                                                       : std::numeric_limits<double>::infinity();
            if (n_trial < out.norm) {
                const double rel_step = step.norm() / (out.x.norm() + 1e-30);
                out.x = trial;
                out.residual = r_trial;
                out.norm = n_trial;
                out.history.push_back(n_trial);
                damping = std::max(damping / 10.0, 1e-15);
                accepted = true;
                out.iterations = it + 1;
                if (rel_step < options.step_tolerance) {
                    out.converged = out.norm <= options.residual_tolerance ||
                                    options.residual_tolerance == 0.0;
                    return out;
                }
                break;
            }
            damping *= 10.0;
        }
        if (!accepted) {
            out.iterations = it + 1;
            out.converged = options.residual_tolerance == 0.0;
            return out;
        }
    }
    out.converged = out.norm <= options.residual_tolerance;
    return out;
}

} // namespace cruise
