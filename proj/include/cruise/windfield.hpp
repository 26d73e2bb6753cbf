#pragma once

// Composite inviscid wind model: uniform flow plus regularized vortices,
// dipoles and sources/sinks.

#include "cruise/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cruise {

struct UniformFlow {
    double u = 0.0;  // U_inf [m/s]
    double v = 0.0;  // V_inf [m/s]
};

struct Vortex {
    double circulation = 0.0;  // Gamma [m^2/s]
    Vec2 center = Vec2::Zero();
    double core_radius = 1.0;  // R0 [m]
};

/// Regularized doublet. Velocity is the perpendicular gradient of
/// psi = (mu_x dy - mu_y dx) / (2 pi (r^2 + R0^2)), which is exactly
/// solenoidal and equals the classical doublet for R0 -> 0.
struct Dipole {
    Vec2 moment = Vec2::Zero();  // (mu_x, mu_y) [m^3/s]
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
};

struct SourceSink {
    double strength = 0.0;  // Q [m^2/s], positive for a source
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
};

using WindPrimitive = std::variant<UniformFlow, Vortex, Dipole, SourceSink>;

/// Number of primitives of each regularized kind.
struct PrimitiveCounts {
    int vortices = 0;
    int dipoles = 0;
    int sources = 0;

    /// 2 + 4 Mv + 5 Md + 4 Ms.
    int parameter_count() const { return 2 + 4 * vortices + 5 * dipoles + 4 * sources; }
};

/// Axis-aligned rectangular region [x_min, x_max] x [y_min, y_max].
struct Domain {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    bool empty() const { return !(x_max > x_min) || !(y_max > y_min); }
    static Domain square(double side) { return {0.0, side, 0.0, side}; }
};

/// Velocity and its spatial Jacobian J(i, j) = dW_i / dx_j.
struct WindSample {
    Vec2 velocity;
    Mat2 jacobian;
};

class WindField {
public:
    WindField() = default;
    explicit WindField(std::vector<WindPrimitive> primitives);

    const std::vector<WindPrimitive>& primitives() const { return primitives_; }
    bool empty() const { return primitives_.empty(); }

    Vec2 velocity(const Vec2& p) const;
    Mat2 jacobian(const Vec2& p) const;
    WindSample sample(const Vec2& p) const;

    PrimitiveCounts counts() const;
    int parameter_count() const;

    /// Field with every strength multiplied by `factor` (geometry unchanged).
    WindField scaled(double factor) const;
    /// Concatenation; evaluation is the sum of both parts.
    WindField operator+(const WindField& other) const;

    /// Flat parameter vector in primitive order; see `from_parameters`.
    VecX parameters() const;
    /// Rebuild a field of identical layout from a flat parameter vector.
    WindField with_parameters(const VecX& theta) const;

    void validate() const;

private:
    std::vector<WindPrimitive> primitives_;
};

WindSample eval_primitive(const WindPrimitive& prim, const Vec2& p);
int parameter_count(const WindPrimitive& prim);

inline Vec2 eval_wind(const WindField& field, double x, double y) { return field.velocity(Vec2(x, y)); }
inline Mat2 eval_wind_jacobian(const WindField& field, double x, double y) {
    return field.jacobian(Vec2(x, y));
}

/// Maximum |dWx/dx + dWy/dy| over a grid_n x grid_n lattice (analytic Jacobian).
double divergence_scan(const WindField& field, const Domain& domain, int grid_n);

/// Maximum |W| over a grid_n x grid_n lattice including the edges.
double grid_sup_norm(const WindField& field, const Domain& domain, int grid_n);

/**
 * Seeded random composite field. Centers are uniform over the domain
 * inflated by 10% on every edge, radii uniform in [5%, 20%] of the domain
 * side, strengths uniform and symmetric. The result is rescaled so that the
 * sup-norm estimated on a 200 x 200 grid equals `max_speed`.
 */
WindField sample_random_field(std::uint64_t seed, double max_speed, const PrimitiveCounts& counts,
                              const Domain& domain);

struct WindSamplePoint {
    Vec2 position;
    Vec2 velocity;
};

struct WindFitOptions {
    int starts = 8;
    int max_iterations = 200;
    double tolerance = 1e-10;
    std::uint64_t seed = 1;
    std::optional<WindField> initial;  // if set, used as the first start
};

struct WindFitResult {
    WindField field;
    double rms_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

/// Damped Gauss-Newton least squares over the flat parameter vector with
/// multi-start (centers seeded on a coarse lattice over the sample hull).
WindFitResult fit_wind_field(std::span<const WindSamplePoint> samples, const PrimitiveCounts& counts,
                             const WindFitOptions& options = {});

} // namespace cruise
