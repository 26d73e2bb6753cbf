#pragma once

// Direct single-shooting transcription of the cruise problem: piecewise-constant
// (v, chi) on N intervals, RK3 state propagation, augmented-Lagrangian outer
// loop around a projected L-BFGS inner loop with discrete-adjoint gradients.

#include "cruise/scenario.hpp"
#include "cruise/surrogate.hpp"

#include <functional>
#include <vector>

namespace cruise {

struct DirectConfig {
    int nodes = 300;
    int max_outer_iterations = 40;
    int max_inner_iterations = 4000;
    int memory = 12;
    /// Feasibility on scaled constraints (terminal position relative to the chord
    /// length, throttle dimensionless).
    double feasibility_tolerance = 1e-8;
    /// Projected-gradient tolerance of the inner problem (scaled variables).
    double optimality_tolerance = 1e-7;
    double initial_penalty = 10.0;
    double time_limit = 0.0;  // wall seconds, 0 = unlimited
};

struct DirectSolution {
    Solution solution;  // costate columns are zero
    std::vector<double> violation_history;  // max scaled violation after each outer iteration
    int outer_iterations = 0;
    int inner_iterations = 0;
    double max_violation = 0.0;
};

/// Box-constrained minimization used by the inner loop.
struct BoxProblem {
    std::function<double(const VecX&, VecX&)> value_and_gradient;
    VecX lower;
    VecX upper;
};

struct LbfgsOptions {
    int max_iterations = 1000;
    int memory = 12;
    double gradient_tolerance = 1e-8;  // infinity norm of the projected gradient
};

struct LbfgsResult {
    VecX x;
    double value = 0.0;
    double projected_gradient = 0.0;
    int iterations = 0;
    bool converged = false;
};

LbfgsResult projected_lbfgs(const BoxProblem& problem, VecX x0, const LbfgsOptions& options);

/// Transcribed problem: propagation, objective and constraints with exact
/// discrete gradients. Exposed for gradient checks.
class DirectTranscription {
public:
    DirectTranscription(const Scenario& scenario, int nodes);

    int nodes() const { return nodes_; }
    int variable_count() const { return 2 * nodes_ + 1; }
    VecX lower_bounds() const;
    VecX upper_bounds() const;

    /// Straight chord at constant cruise speed.
    VecX initial_point() const;

    struct Evaluation {
        double objective;       // scaled, J = c_t tf + c_m m_f + z_f shifted and divided by objective_scale
        VecX equality;          // 2 terminal position residuals / chord length
        VecX inequality;        // 2N throttle constraints, <= 0 when satisfied
        std::vector<Eigen::Vector4d> states;
    };

    Evaluation evaluate(const VecX& w) const;

    /// Augmented Lagrangian value and gradient with respect to w.
    double lagrangian(const VecX& w, const VecX& mu_eq, const VecX& mu_in, double rho, VecX* grad) const;

    double objective_scale() const { return obj_scale_; }
    double speed_scale() const { return v_ref_; }
    double length_scale() const { return length_scale_; }
    double final_time(const VecX& w) const { return w[2 * nodes_] * tf_ref_ / tau_scale_; }

    /// Unscaled objective J.
    double objective(const Evaluation& e, const VecX& w) const;
    Trajectory trajectory(const VecX& w) const;

private:
    Eigen::Vector4d rhs(const Eigen::Vector4d& s, double v, double chi) const;

    const Scenario* scenario_;
    CruisePerformance perf_;
    int nodes_;
    double v_min_, v_max_, v_ref_, tf_ref_, obj_scale_, length_scale_, tau_scale_;
};

DirectSolution solve_direct(const Scenario& scenario, const DirectConfig& config = {});

struct ComparisonReport {
    double relative_objective_error = 0.0;  // |J_s - J_d| / |J_d|
    double relative_variable_error = 0.0;   // same on J - c_m m0
    double speed_rms = 0.0;                 // [m/s] on a common normalized-time grid
    double heading_rms = 0.0;               // [rad]
    double final_time_difference = 0.0;     // t_f,s - t_f,d [s]
    double time_ratio = 0.0;                // wall(direct) / wall(surrogate)
};

ComparisonReport compare(const Solution& surrogate, const Solution& direct, const Scenario& scenario);

} // namespace cruise
