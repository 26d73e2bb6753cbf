#include "cruise/hazards.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace cruise {

Mat2 EllipseHazard::metric() const {
    const double c = std::cos(orientation);
    const double s = std::sin(orientation);
    Mat2 r;
    r << c, -s, s, c;
    const Vec2 d(1.0 / (semi_major * semi_major), 1.0 / (semi_minor * semi_minor));
    return r * d.asDiagonal() * r.transpose();
}

void EllipseHazard::validate(const std::string& field) const {
    if (!(semi_major > 0.0)) throw ValidationError(field + ".a_m", "semi-axis a must be > 0");
    if (!(semi_minor > 0.0)) throw ValidationError(field + ".b_m", "semi-axis b must be > 0");
    if (!(weight >= 0.0)) throw ValidationError(field + ".weight", "weight c_s must be >= 0");
    if (!center.allFinite() || !std::isfinite(orientation))
        throw ValidationError(field, "center and orientation must be finite");
}

double anisotropic_norm(const EllipseHazard& h, const Vec2& p) {
    const Vec2 d = p - h.center;
    return std::sqrt(std::max(0.0, d.dot(h.metric() * d)));
}

PenaltySample hazard_penalty(const EllipseHazard& h, const Vec2& p, double eps) {
    const Mat2 a = h.metric();
    const Vec2 d = p - h.center;
    const double n = std::sqrt(std::max(0.0, d.dot(a * d)));
    // grad n = A d / n, taken as zero at the center.
    const Vec2 grad_n = n > 0.0 ? Vec2((a * d) / n) : Vec2::Zero();
    PenaltySample out;
    if (h.mode == PenaltyMode::soft) {
        const double inv = 1.0 / (eps + n);
        out.value = h.weight * inv;
        out.gradient = -h.weight * inv * inv * grad_n;
    } else {
        const double k = h.center_log - h.perimeter_log;
        const double g = std::exp(k * (1.0 - n) + h.perimeter_log);
        out.value = h.weight * g;
        out.gradient = -h.weight * k * g * grad_n;
    }
    return out;
}

PenaltySample penalty(std::span<const EllipseHazard> hazards, const Vec2& p, double eps) {
    PenaltySample total;
    for (const auto& h : hazards) {
        const PenaltySample s = hazard_penalty(h, p, eps);
        total.value += s.value;
        total.gradient += s.gradient;
    }
    return total;
}

namespace {

std::vector<Vec2> kmeans_pp_seeds(std::span<const Vec2> pts, int k, std::mt19937_64& rng) {
    std::vector<Vec2> seeds;
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    seeds.push_back(pts[pick(rng)]);
    std::vector<double> dist(pts.size(), std::numeric_limits<double>::infinity());
    while (static_cast<int>(seeds.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            dist[i] = std::min(dist[i], (pts[i] - seeds.back()).squaredNorm());
            total += dist[i];
        }
        if (!(total > 0.0)) {
            seeds.push_back(pts[pick(rng)]);
            continue;
        }
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        std::size_t chosen = pts.size() - 1;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            target -= dist[i];
            if (target <= 0.0) {
                chosen = i;
                break;
            }
        }
        seeds.push_back(pts[chosen]);
    }
    return seeds;
}

} // namespace

ClusterResult cluster_ellipses(std::span<const Vec2> points, int clusters, const ClusterOptions& options) {
    if (clusters < 1) throw DomainError("cluster_ellipses: K must be >= 1");
    if (static_cast<std::size_t>(clusters) > points.size()) {
        std::ostringstream os;
        os << "cluster_ellipses: K = " << clusters << " exceeds the number of points (" << points.size() << ")";
        throw DomainError(os.str());
    }
    ClusterResult out;
    std::mt19937_64 rng(options.seed);
    std::vector<Vec2> centers = kmeans_pp_seeds(points, clusters, rng);
    out.labels.assign(points.size(), 0);

    for (int it = 0; it < options.max_iterations; ++it) {
        bool changed = it == 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < clusters; ++c) {
                const double d = (points[i] - centers[c]).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (out.labels[i] != best) changed = true;
            out.labels[i] = best;
        }
        std::vector<Vec2> sum(clusters, Vec2::Zero());
        std::vector<int> count(clusters, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            sum[out.labels[i]] += points[i];
            ++count[out.labels[i]];
        }
        for (int c = 0; c < clusters; ++c)
            if (count[c] > 0) centers[c] = sum[c] / count[c];
        if (!changed) break;
    }

    Vec2 lo = points.front();
    Vec2 hi = lo;
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double floor_axis = std::max(options.floor_fraction * (hi - lo).norm(), 1e-9);

    for (int c = 0; c < clusters; ++c) {
        std::vector<Vec2> members;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (out.labels[i] == c) members.push_back(points[i]);
        std::ostringstream tag;
        tag << "cluster " << c;
        if (members.size() < 3) out.warnings.push_back(tag.str() + ": fewer than 3 points, covariance degenerate");

        Vec2 mean = Vec2::Zero();
        for (const auto& p : members) mean += p;
        mean /= static_cast<double>(std::max<std::size_t>(members.size(), 1));
        Mat2 cov = Mat2::Zero();
        for (const auto& p : members) cov += (p - mean) * (p - mean).transpose();
        if (members.size() > 1) cov /= static_cast<double>(members.size() - 1);

        Eigen::SelfAdjointEigenSolver<Mat2> eig(cov);
        // Largest eigenvalue first so that a >= b.
        Vec2 lambda(eig.eigenvalues()[1], eig.eigenvalues()[0]);
        Mat2 rot;
        rot.col(0) = eig.eigenvectors().col(1);
        rot.col(1) = eig.eigenvectors().col(0);
        if (rot.determinant() < 0.0) rot.col(1) = -rot.col(1);

        EllipseHazard h;
        h.center = mean;
        h.orientation = std::atan2(rot(1, 0), rot(0, 0));
        h.weight = options.weight;

        Vec2 axes = lambda.cwiseMax(0.0).cwiseSqrt();
        bool floored = false;
        for (int j = 0; j < 2; ++j) {
            if (axes[j] < floor_axis) {
                axes[j] = floor_axis;
                floored = true;
            }
        }
        if (floored) out.warnings.push_back(tag.str() + ": degenerate spread, semi-axis floor applied");

        h.semi_major = axes[0];
        h.semi_minor = axes[1];
        double k = 0.0;
        for (const auto& p : members) k = std::max(k, anisotropic_norm(h, p));
        if (k > 0.0) {
            h.semi_major = std::max(k * axes[0], floor_axis);
            h.semi_minor = std::max(k * axes[1], floor_axis);
            // The floor may only grow the ellipse; re-check and widen against rounding.
            double worst = 0.0;
            for (const auto& p : members) worst = std::max(worst, anisotropic_norm(h, p));
            if (worst > 1.0) {
                h.semi_major *= worst;
                h.semi_minor *= worst;
            }
        } else {
            h.semi_major = floor_axis;
            h.semi_minor = floor_axis;
        }
        out.hazards.push_back(h);
    }
    return out;
}

} // namespace cruise
