#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cruise {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Raised when an input lies outside the domain where a model is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a scenario or request violates a documented invariant.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string field, const std::string& message)
        : std::invalid_argument(message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Raised by the numerical solvers when an iterate leaves the region where
/// the extremal equations are well posed (non-finite state, lambda_x sign
/// change, heading beyond the q = tan(chi) chart).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

} // namespace cruise
