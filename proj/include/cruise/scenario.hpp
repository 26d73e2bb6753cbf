#pragma once

// Problem instance for a constant-altitude cruise leg and the chord-aligned
// frame the solvers work in.

#include "cruise/hazards.hpp"
#include "cruise/performance.hpp"
#include "cruise/windfield.hpp"

#include <string>
#include <vector>

namespace cruise {

struct ControlBounds {
    double mach_min = 0.5;
    double mach_max = 0.88;
    double heading_min = deg2rad(-85.0);  // [rad]
    double heading_max = deg2rad(85.0);
    double throttle_min = 0.1;
    double throttle_max = 1.0;

    void validate() const;
};

/// Objective J = c_t t_f + c_m m_f + z_f with t_f in s and m_f in kg.
struct CostWeights {
    double time = 1.0;   // c_t
    double mass = -1.0;  // c_m
};

struct Scenario {
    std::string name = "scenario";
    AircraftModel aircraft;
    double altitude = 10000.0;  // [m]
    WindField wind;
    std::vector<EllipseHazard> hazards;
    CostWeights weights;
    Vec2 start = Vec2::Zero();
    Vec2 target = Vec2(1.0e6, 1.0e6);
    double initial_mass = 140000.0;  // [kg]
    ControlBounds bounds;
    double penalty_epsilon = kSoftPenaltyEpsilon;

    /// Throws ValidationError naming the offending field.
    void validate() const;

    /// Two-ellipse reference case on a 1000 km x 1000 km leg at 10 km.
    static Scenario nominal();
};

/**
 * Rigid frame with origin at the start point and +x along the chord.
 * Positions map as p_frame = R^T (p - start); vectors and gradients as R^T v;
 * Jacobians as R^T J R.
 */
class ChordFrame {
public:
    ChordFrame() = default;
    ChordFrame(const Vec2& start, const Vec2& target);

    double angle() const { return angle_; }
    double length() const { return length_; }
    const Mat2& rotation() const { return rot_; }

    Vec2 to_frame(const Vec2& p) const { return rot_.transpose() * (p - origin_); }
    Vec2 from_frame(const Vec2& p) const { return origin_ + rot_ * p; }
    Vec2 vector_to_frame(const Vec2& v) const { return rot_.transpose() * v; }
    Vec2 vector_from_frame(const Vec2& v) const { return rot_ * v; }
    Mat2 jacobian_to_frame(const Mat2& j) const { return rot_.transpose() * j * rot_; }

private:
    Vec2 origin_ = Vec2::Zero();
    Mat2 rot_ = Mat2::Identity();
    double angle_ = 0.0;
    double length_ = 0.0;
};

struct EnvironmentSample {
    Vec2 wind;
    Mat2 wind_jacobian;
    double penalty;
    Vec2 penalty_gradient;
};

/// Wind and penalty fields seen in a given frame, with optional homotopy
/// scaling of both (used by continuation).
class Environment {
public:
    Environment(const Scenario& scenario, ChordFrame frame, double wind_scale = 1.0, double hazard_scale = 1.0);

    EnvironmentSample sample(const Vec2& p_frame) const;
    const ChordFrame& frame() const { return frame_; }

private:
    const Scenario* scenario_;
    ChordFrame frame_;
    double wind_scale_;
    double hazard_scale_;
};

} // namespace cruise
