#include "cruise/hazards.hpp"

#include <doctest.h>

#include <random>

using namespace cruise;
using doctest::Approx;

namespace {

EllipseHazard tilted(PenaltyMode mode = PenaltyMode::soft) {
    EllipseHazard h;
    h.center = Vec2(4e5, 3e5);
    h.semi_major = 3e5;
    h.semi_minor = 1.5e5;
    h.orientation = kPi / 4;
    h.weight = 2.0;
    h.mode = mode;
    h.center_log = 3.0;
    h.perimeter_log = 1.0;
    return h;
}

Vec2 rotate(const Vec2& p, double a) { return Eigen::Rotation2Dd(a) * p; }

} // namespace

TEST_CASE("metric is symmetric positive definite with the axis eigenvalues") {
    const EllipseHazard h = tilted();
    const Mat2 A = h.metric();
    CHECK((A - A.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Mat2> es(A);
    CHECK(es.eigenvalues()[0] == Approx(1.0 / (h.semi_major * h.semi_major)).epsilon(1e-12));
    CHECK(es.eigenvalues()[1] == Approx(1.0 / (h.semi_minor * h.semi_minor)).epsilon(1e-12));
}

TEST_CASE("anisotropic norm at the center and on the perimeter") {
    const EllipseHazard h = tilted();
    CHECK(anisotropic_norm(h, h.center) == 0.0);
    const Vec2 tip = h.center + h.semi_major * Vec2(std::cos(h.orientation), std::sin(h.orientation));
    CHECK(anisotropic_norm(h, tip) == Approx(1.0).epsilon(1e-14));
    const Vec2 side = h.center + h.semi_minor * Vec2(-std::sin(h.orientation), std::cos(h.orientation));
    CHECK(anisotropic_norm(h, side) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("circle reduces to scaled euclidean distance") {
    EllipseHazard h;
    h.center = Vec2(1.0, 2.0);
    h.semi_major = h.semi_minor = 3.0;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int i = 0; i < 100; ++i) {
        const Vec2 p(u(rng), u(rng));
        CHECK(anisotropic_norm(h, p) == Approx((p - h.center).norm() / 3.0).epsilon(1e-14));
    }
}

TEST_CASE("penalty values") {
    CHECK(penalty({}, Vec2(1.0, 2.0)).value == 0.0);
    CHECK(penalty({}, Vec2(1.0, 2.0)).gradient.isZero(0.0));
    const EllipseHazard s = tilted();
    const Vec2 tip = s.center + s.semi_major * Vec2(std::cos(s.orientation), std::sin(s.orientation));
    CHECK(hazard_penalty(s, tip).value == Approx(s.weight / (1.0 + kSoftPenaltyEpsilon)).epsilon(1e-13));
    const EllipseHazard hard = tilted(PenaltyMode::hard);
    CHECK(hazard_penalty(hard, tip).value == Approx(hard.weight * std::exp(hard.perimeter_log)).epsilon(1e-13));
    CHECK(hazard_penalty(hard, hard.center).value == Approx(hard.weight * std::exp(hard.center_log)).epsilon(1e-15));
}

TEST_CASE("penalty gradient matches central differences") {
    const std::vector<EllipseHazard> hs{tilted(PenaltyMode::soft), tilted(PenaltyMode::hard)};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2e5, 1e6);
    int checked = 0;
    while (checked < 100) {
        const Vec2 p(u(rng), u(rng));
        if ((p - hs[0].center).norm() < 0.1 * hs[0].semi_minor) continue;
        for (const auto& h : hs) {
            const PenaltySample g = hazard_penalty(h, p);
            const double step = 1.0;
            Vec2 fd;
            for (int j = 0; j < 2; ++j) {
                Vec2 e = Vec2::Zero();
                e[j] = step;
                fd[j] = (hazard_penalty(h, p + e).value - hazard_penalty(h, p - e).value) / (2 * step);
            }
            CHECK((g.gradient - fd).norm() <= 1e-6 * std::max(g.gradient.norm(), 1e-300));
        }
        ++checked;
    }
}

TEST_CASE("penalty is invariant under rigid rotation") {
    std::vector<EllipseHazard> hs{tilted(), tilted(PenaltyMode::hard)};
    hs[1].center = Vec2(7e5, 6e5);
    hs[1].orientation = -0.3;
    const double a = 0.7;
    std::vector<EllipseHazard> rot = hs;
    for (auto& h : rot) {
        h.center = rotate(h.center, a);
        h.orientation += a;
    }
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1e6);
    for (int i = 0; i < 100; ++i) {
        const Vec2 p(u(rng), u(rng));
        const PenaltySample g0 = penalty(hs, p);
        const PenaltySample g1 = penalty(rot, rotate(p, a));
        CHECK(g1.value == Approx(g0.value).epsilon(1e-10));
        CHECK((g1.gradient - rotate(g0.gradient, a)).norm() <= 1e-10 * g0.gradient.norm());
    }
}

TEST_CASE("soft penalty decreases along rays from the center") {
    const EllipseHazard h = tilted();
    for (double ang = 0.0; ang < 2 * kPi; ang += 0.3) {
        const Vec2 d(std::cos(ang), std::sin(ang));
        double prev = hazard_penalty(h, h.center).value;
        for (double r = 1e3; r < 2e6; r *= 1.3) {
            const double g = hazard_penalty(h, h.center + r * d).value;
            CHECK(g < prev);
            prev = g;
        }
    }
}

TEST_CASE("hazard validation names the field") {
    EllipseHazard h = tilted();
    h.semi_minor = 0.0;
    try {
        h.validate("hazards[1]");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "hazards[1].b_m");
    }
    h = tilted();
    h.weight = -1.0;
    CHECK_THROWS_AS(h.validate(), ValidationError);
}

TEST_CASE("cluster of a symmetric rectangle") {
    const std::vector<Vec2> pts{Vec2(-2, -1), Vec2(2, -1), Vec2(2, 1), Vec2(-2, 1)};
    const ClusterResult r = cluster_ellipses(pts, 1);
    REQUIRE(r.hazards.size() == 1);
    const EllipseHazard& h = r.hazards[0];
    CHECK(h.center.norm() <= 1e-12);
    const double a = std::remainder(h.orientation, kPi / 2);
    CHECK(std::abs(a) <= 1e-12);
    for (const Vec2& p : pts) CHECK(anisotropic_norm(h, p) <= 1.0 + 1e-12);
}

TEST_CASE("two separated blobs") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 1.0);
    const Vec2 m1(0, 0), m2(50, 20);
    std::vector<Vec2> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(m1 + Vec2(3 * g(rng), 1 * g(rng)));
    for (int i = 0; i < 100; ++i) pts.push_back(m2 + Vec2(1 * g(rng), 2 * g(rng)));
    const ClusterResult r = cluster_ellipses(pts, 2);
    REQUIRE(r.hazards.size() == 2);
    // brute-force assignment: first hundred belong together, as do the rest
    for (int i = 1; i < 100; ++i) CHECK(r.labels[i] == r.labels[0]);
    for (int i = 101; i < 200; ++i) CHECK(r.labels[i] == r.labels[100]);
    CHECK(r.labels[0] != r.labels[100]);
    const EllipseHazard& h1 = r.hazards[r.labels[0]];
    const EllipseHazard& h2 = r.hazards[r.labels[100]];
    CHECK(std::abs(h1.center.x() - m1.x()) <= 3 * 3 / 10.0);
    CHECK(std::abs(h1.center.y() - m1.y()) <= 3 * 1 / 10.0);
    CHECK(std::abs(h2.center.x() - m2.x()) <= 3 * 1 / 10.0);
    CHECK(std::abs(h2.center.y() - m2.y()) <= 3 * 2 / 10.0);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(anisotropic_norm(r.hazards[r.labels[i]], pts[i]) <= 1.0 + 1e-12);
}

TEST_CASE("collinear cluster gets the semi-axis floor") {
    std::vector<Vec2> pts;
    for (int i = 0; i < 10; ++i) pts.emplace_back(i, 2.0 * i);
    const ClusterResult r = cluster_ellipses(pts, 1);
    CHECK_FALSE(r.warnings.empty());
    CHECK(r.hazards[0].semi_minor > 0.0);
    for (const Vec2& p : pts) CHECK(anisotropic_norm(r.hazards[0], p) <= 1.0 + 1e-12);
}

TEST_CASE("cluster preconditions") {
    const std::vector<Vec2> pts{Vec2(0, 0), Vec2(1, 1)};
    CHECK_THROWS_AS(cluster_ellipses(pts, 3), DomainError);
    CHECK_THROWS_AS(cluster_ellipses(pts, 0), DomainError);
}

TEST_CASE("clustering is deterministic under the seed") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 100);
    std::vector<Vec2> pts;
    for (int i = 0; i < 60; ++i) pts.emplace_back(u(rng), u(rng));
    const ClusterResult a = cluster_ellipses(pts, 3);
    const ClusterResult b = cluster_ellipses(pts, 3);
    CHECK(a.labels == b.labels);
    for (int k = 0; k < 3; ++k) CHECK(a.hazards[k].center == b.hazards[k].center);
}
