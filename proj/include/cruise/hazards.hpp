#pragma once

// Oblique elliptical flight-sensitive areas, their penalty field and the
// clustering of scattered points into ellipses.

#include "cruise/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cruise {

enum class PenaltyMode { soft, hard };

struct EllipseHazard {
    Vec2 center = Vec2::Zero();
    double semi_major = 1.0;  // a [m]
    double semi_minor = 1.0;  // b [m]
    double orientation = 0.0; // alpha [rad]
    double weight = 1.0;      // c_s
    PenaltyMode mode = PenaltyMode::soft;
    double center_log = 0.0;    // c_i: exp(c_i) at the center (hard mode)
    double perimeter_log = 0.0; // d_i: exp(d_i) on the perimeter (hard mode)

    /// A = R diag(1/a^2, 1/b^2) R^T.
    Mat2 metric() const;
    void validate(const std::string& field = "hazard") const;
};

/// Default regularization of the soft term 1/(eps + ||.||_A).
inline constexpr double kSoftPenaltyEpsilon = 1e-3;

struct PenaltySample {
    double value = 0.0;
    Vec2 gradient = Vec2::Zero();
};

/// ||p - center||_A.
double anisotropic_norm(const EllipseHazard& h, const Vec2& p);

PenaltySample hazard_penalty(const EllipseHazard& h, const Vec2& p, double eps = kSoftPenaltyEpsilon);

/// Weighted sum over all hazards with analytic gradient.
PenaltySample penalty(std::span<const EllipseHazard> hazards, const Vec2& p,
                      double eps = kSoftPenaltyEpsilon);

struct ClusterOptions {
    std::uint64_t seed = 1;
    int max_iterations = 100;
    /// Semi-axis floor as a fraction of the point-cloud bounding-box diagonal.
    double floor_fraction = 0.01;
    double weight = 1.0;
};

struct ClusterResult {
    std::vector<EllipseHazard> hazards;
    std::vector<int> labels;  // cluster index per input point
    std::vector<std::string> warnings;
};

/**
 * k-means (k-means++ seeding) followed by per-cluster covariance
 * eigen-decomposition. Semi-axes are k sqrt(lambda) with k the smallest scale
 * covering every point of the cluster.
 */
ClusterResult cluster_ellipses(std::span<const Vec2> points, int clusters, const ClusterOptions& options = {});

} // namespace cruise
