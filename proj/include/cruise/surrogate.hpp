#pragma once

// Indirect (PMP) cruise solver with airspeed as a direct control: augmented
// state/costate dynamics, pointwise Hamiltonian minimization, RK3
// integration and three-parameter shooting.

#include "cruise/performance.hpp"
#include "cruise/scenario.hpp"

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace cruise {

enum class SpeedArc { interior, v_min, v_max, throttle_min, throttle_max };
enum class HeadingArc { interior, chi_min, chi_max };

std::string to_string(SpeedArc arc);
std::string to_string(HeadingArc arc);

using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Indices into the augmented state (x, y, m, z, lambda_x, q).
namespace idx {
inline constexpr int x = 0, y = 1, m = 2, z = 3, lambda_x = 4, q = 5;
}

/// Unknowns of the shooting problem, expressed in the chord frame.
struct ShootingParams {
    double lambda_x0 = -1e-3;
    double chi0 = 0.0;  // [rad], chord frame
    double tf = 1.0;    // [s]
};

struct SpeedChoice {
    double speed = 0.0;
    SpeedArc arc = SpeedArc::interior;
    /// Scaled dPsi/dv at the returned speed, Psi = N / (C_s D).
    double switching = 0.0;
};

/// Every derived quantity at one augmented state (chord frame).
struct NodeEval {
    double chi = 0.0;
    HeadingArc heading_arc = HeadingArc::interior;
    SpeedChoice speed;
    EnvironmentSample env{};
    double fuel_flow = 0.0;  // F_m < 0
    double lambda_y = 0.0;
    double lambda_m = 0.0;
    double hamiltonian = 0.0;
    double throttle = 0.0;
    Vec6 derivative = Vec6::Zero();
};

/**
 * One scenario bound to its performance model and chord frame, optionally
 * with wind and hazard strengths scaled for continuation.
 */
class SurrogateProblem {
public:
    explicit SurrogateProblem(const Scenario& scenario, double wind_scale = 1.0, double hazard_scale = 1.0);

    const Scenario& scenario() const { return *scenario_; }
    const CruisePerformance& performance() const { return perf_; }
    const ChordFrame& frame() const { return env_.frame(); }
    const Environment& environment() const { return env_; }

    double speed_min() const { return v_min_; }
    double speed_max() const { return v_max_; }
    double heading_min() const { return chi_min_; }  // chord frame
    double heading_max() const { return chi_max_; }
    Vec2 target() const { return target_; }          // chord frame
    double wind_scale() const { return wind_scale_; }
    double hazard_scale() const { return hazard_scale_; }

    NodeEval evaluate(const Vec6& s) const;
    Vec6 initial_state(const ShootingParams& p) const;

private:
    const Scenario* scenario_;
    CruisePerformance perf_;
    Environment env_;
    double v_min_, v_max_;
    double chi_min_, chi_max_;
    Vec2 target_;
    double wind_scale_, hazard_scale_;
};

/**
 * Speed minimizing the Hamiltonian at fixed costates, i.e. the minimizer of
 * Psi(v) = N(v) / (C_s(v) D(m, v)) with N = c_t + F_z + lambda . (v u + W),
 * over the speeds satisfying both the Mach and the throttle bounds.
 */
SpeedChoice optimal_speed(const SurrogateProblem& problem, double lambda_x, double lambda_y, double chi,
                          double mass, const Vec2& wind, double penalty_value);

/// Convenience overload on the full state; chi follows from q and the bounds.
SpeedChoice optimal_speed(const SurrogateProblem& problem, const Vec6& state);

Vec6 surrogate_rhs(const SurrogateProblem& problem, const Vec6& state);

struct DerivedCostates {
    double lambda_y;
    double lambda_m;
};

/// lambda_y = q lambda_x; lambda_m from H = -c_t at the given speed.
DerivedCostates derived_costates(const SurrogateProblem& problem, const Vec6& state, double speed);

enum class RootChoice { lowest, highest };

/// Speed in the Mach bracket with D(m, v) / T_max(v) = throttle.
double boundary_arc_speed(const SurrogateProblem& problem, double mass, double throttle,
                          RootChoice which = RootChoice::highest);

struct TrajectoryNode {
    double t = 0.0;
    double x = 0.0, y = 0.0, m = 0.0, z = 0.0;
    double v = 0.0, chi = 0.0, q = 0.0;
    double lambda_x = 0.0, lambda_y = 0.0, lambda_m = 0.0;
    double hamiltonian = 0.0;
    double throttle = 0.0;
    SpeedArc speed_arc = SpeedArc::interior;
    HeadingArc heading_arc = HeadingArc::interior;

    std::string arc_label() const;
};

/// Nodes in the original scenario frame.
struct Trajectory {
    std::vector<TrajectoryNode> nodes;

    std::size_t size() const { return nodes.size(); }
    const TrajectoryNode& back() const { return nodes.back(); }
};

/// Fixed-step RK3 from (x0, y0, m0, 0, lambda_x0, tan chi0) over [0, tf].
/// Throws SolverError on lambda_x >= 0, |chi| >= 89 deg, fuel exhaustion
/// or a non-finite state.
Trajectory integrate_trajectory(const SurrogateProblem& problem, const ShootingParams& p, int steps);

/// Terminal state in the chord frame together with lambda_m(tf).
struct TerminalState {
    Vec6 state;
    double lambda_m;
};

TerminalState integrate_terminal(const SurrogateProblem& problem, const ShootingParams& p, int steps);

/// (x(tf) - xf, y(tf) - yf, lambda_m(tf) - c_m) in the chord frame, unscaled.
Vec3 shoot_residual(const SurrogateProblem& problem, const ShootingParams& p, int steps);

struct SolverConfig {
    int steps = 300;
    int max_iterations = 200;
    double tolerance = 1e-6;  // on the scaled residual norm
    bool continuation = true;
    int continuation_stages = 4;
    std::optional<ShootingParams> initial_guess;
    double time_limit = 0.0;  // wall seconds, 0 = unlimited
};

struct Solution {
    Trajectory trajectory;
    ShootingParams params;
    double initial_heading = 0.0;  // original frame [rad]
    double objective = 0.0;
    double final_time = 0.0;
    double final_mass = 0.0;
    double fuel_burned = 0.0;
    double hamiltonian_drift = 0.0;  // max |H + c_t|
    Vec3 residual = Vec3::Zero();
    double residual_norm = 0.0;     // scaled
    bool converged = false;
    bool timed_out = false;
    int iterations = 0;
    std::vector<double> residual_history;  // scaled norm per accepted iterate
    std::vector<ShootingParams> parameter_trace;
    std::vector<std::string> diagnostics;
    double wall_time = 0.0;
};

/// Residual scaling: positions by the chord length, lambda_m by
/// |c_m| + |c_t| / (typical fuel flow).
Vec3 residual_scale(const SurrogateProblem& problem);

/// Heuristic start: straight chord at the unconstrained optimal speed.
ShootingParams initial_guess(const SurrogateProblem& problem);

Solution solve(const Scenario& scenario, const SolverConfig& config = {});

/// Fill the derived fields of a Solution from converged shooting parameters.
Solution assemble_solution(const SurrogateProblem& problem, const ShootingParams& p, int steps);

struct ConstantWindMinTime {
    double chi0;  // [rad]
    double tf;    // [s]
};

/// Closed-form minimum-time heading and flight time from the origin to
/// (xf, yf) in the constant wind (wx, wy).
ConstantWindMinTime analytic_min_time_constant_wind(double xf, double yf, double wx, double wy, double v_max);

struct ThrottleProfile {
    std::vector<double> throttle;
    std::vector<std::size_t> violations;  // node indices outside [Pi_min, Pi_max] by more than 1e-3
};

/// Pi = (m dv/dt + D) / T_max with dv/dt by central differences.
ThrottleProfile reconstruct_throttle(const Trajectory& trajectory, const Scenario& scenario);

} // namespace cruise
