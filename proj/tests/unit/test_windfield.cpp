#include "cruise/windfield.hpp"

#include <doctest.h>

#include <random>

using namespace cruise;
using doctest::Approx;

namespace {

Mat2 fd_jacobian(const WindField& f, const Vec2& p, double h) {
    Mat2 J;
    for (int j = 0; j < 2; ++j) {
        Vec2 e = Vec2::Zero();
        e[j] = h;
        J.col(j) = (f.velocity(p + e) - f.velocity(p - e)) / (2 * h);
    }
    return J;
}

WindField mixed_field() {
    return WindField({UniformFlow{10.0, -5.0}, Vortex{2.0e7, Vec2(3e5, 4e5), 8e4},
                      Dipole{Vec2(4e12, -2e12), Vec2(7e5, 2e5), 1e5}, SourceSink{5e6, Vec2(5e5, 8e5), 6e4}});
}

} // namespace

TEST_CASE("uniform flow is constant with zero jacobian") {
    const WindField f({UniformFlow{10.0, -5.0}});
    for (const Vec2& p : {Vec2(0, 0), Vec2(1e5, -3e4), Vec2(-7e6, 2e6)}) {
        CHECK(f.velocity(p) == Vec2(10.0, -5.0));
        CHECK(f.jacobian(p).isZero(0.0));
    }
}

TEST_CASE("vortex at its own center is still") {
    const Vec2 c(2e5, 3e5);
    const WindField f({Vortex{1e7, c, 5e4}});
    CHECK(f.velocity(c).isZero(0.0));
}

TEST_CASE("source points away from its center") {
    const Vec2 c(1e5, -2e5);
    const WindField f({SourceSink{3e6, c, 4e4}});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5e5, 5e5);
    for (int i = 0; i < 100; ++i) {
        const Vec2 p = c + Vec2(u(rng), u(rng));
        const Vec2 w = f.velocity(p);
        CHECK(w.dot(p - c) > 0.0);
        CHECK(std::abs(w.x() * (p - c).y() - w.y() * (p - c).x()) <= 1e-12 * w.norm() * (p - c).norm());
    }
}

TEST_CASE("superposition is exact") {
    const WindField a({Vortex{2e7, Vec2(3e5, 4e5), 8e4}});
    const WindField b({Dipole{Vec2(4e12, -2e12), Vec2(7e5, 2e5), 1e5}, UniformFlow{3.0, 1.0}});
    const WindField ab = a + b;
    for (const Vec2& p : {Vec2(1e5, 2e5), Vec2(6e5, 6e5), Vec2(9e5, 1e4)}) {
        CHECK((ab.velocity(p) - (a.velocity(p) + b.velocity(p))).norm() == 0.0);
        CHECK((ab.jacobian(p) - (a.jacobian(p) + b.jacobian(p))).norm() == 0.0);
    }
}

TEST_CASE("parameter count follows the primitive layout") {
    const WindField f = mixed_field();
    CHECK(f.parameter_count() == 2 + 4 + 5 + 4);
    const PrimitiveCounts c = f.counts();
    CHECK(c.vortices == 1);
    CHECK(c.dipoles == 1);
    CHECK(c.sources == 1);
    CHECK(c.parameter_count() == f.parameter_count());
    const WindField g = f.with_parameters(f.parameters());
    CHECK((g.velocity(Vec2(4e5, 4e5)) - f.velocity(Vec2(4e5, 4e5))).norm() == 0.0);
}

TEST_CASE("regularization radii must be positive") {
    CHECK_THROWS_AS(WindField({Vortex{1.0, Vec2::Zero(), 0.0}}).validate(), ValidationError);
    CHECK_THROWS_AS(WindField({SourceSink{1.0, Vec2::Zero(), -1.0}}).validate(), ValidationError);
}

TEST_CASE("analytic jacobian matches central differences") {
    const WindField f = mixed_field();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1e6);
    for (int i = 0; i < 100; ++i) {
        const Vec2 p(u(rng), u(rng));
        const Mat2 J = f.jacobian(p);
        const Mat2 F = fd_jacobian(f, p, 1.0);
        const double scale = std::max(J.cwiseAbs().maxCoeff(), 1e-12);
        CHECK((J - F).cwiseAbs().maxCoeff() <= 1e-6 * scale);
    }
}

TEST_CASE("vortices and dipoles are solenoidal") {
    const WindField f({UniformFlow{4.0, 2.0}, Vortex{-3e7, Vec2(2e5, 6e5), 5e4}, Vortex{1e7, Vec2(8e5, 1e5), 2e5},
                       Dipole{Vec2(-1e12, 6e12), Vec2(5e5, 5e5), 7e4}});
    const Domain d = Domain::square(1e6);
    // scaled: divergence relative to the largest Jacobian entry on the grid
    CHECK(divergence_scan(f, d, 200) <= 1e-12 * 1e-3);
    CHECK(divergence_scan(WindField{}, d, 10) == 0.0);
}

TEST_CASE("source divergence is the regularized point-source density") {
    const double Q = 5e6, R = 6e4;
    const Vec2 c(5e5, 5e5);
    const WindField f({SourceSink{Q, c, R}});
    for (double r : {0.0, 3e4, 6e4, 2e5}) {
        const Mat2 J = f.jacobian(c + Vec2(r, 0.0));
        const double expected = Q / kPi * R * R / std::pow(r * r + R * R, 2);
        CHECK(J.trace() == Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("scan preconditions") {
    const WindField f({UniformFlow{1.0, 0.0}});
    CHECK_THROWS_AS(divergence_scan(f, Domain{0, 0, 0, 1}, 10), DomainError);
    CHECK_THROWS_AS(divergence_scan(f, Domain::square(1.0), 1), DomainError);
}

TEST_CASE("random fields are seeded and rescaled") {
    const Domain d = Domain::square(1e6);
    const PrimitiveCounts counts{3, 1, 2};
    const WindField a = sample_random_field(42, 20.0, counts, d);
    const WindField b = sample_random_field(42, 20.0, counts, d);
    CHECK(a.parameters() == b.parameters());
    CHECK(a.parameters() != sample_random_field(43, 20.0, counts, d).parameters());
    const double sup = grid_sup_norm(a, d, 200);
    CHECK(sup >= 0.99 * 20.0);
    CHECK(sup <= 1.01 * 20.0);

    const WindField u = sample_random_field(5, 12.0, PrimitiveCounts{}, d);
    REQUIRE(u.primitives().size() == 1);
    CHECK(u.velocity(Vec2(1.0, 2.0)).norm() == Approx(12.0).epsilon(1e-12));
    CHECK(u.velocity(Vec2(9e5, 3e5)).norm() == Approx(12.0).epsilon(1e-12));
}

namespace {
std::vector<WindSamplePoint> grid_samples(const WindField& f, int n, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<WindSamplePoint> s;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec2 p(1e6 * i / (n - 1), 1e6 * j / (n - 1));
            s.push_back({p, f.velocity(p) + noise * Vec2(gauss(rng), gauss(rng))});
        }
    return s;
}
} // namespace

TEST_CASE("fit recovers a uniform field exactly") {
    const WindField truth({UniformFlow{10.0, -5.0}});
    const auto s = grid_samples(truth, 6, 0.0, 1);
    const WindFitResult r = fit_wind_field(s, PrimitiveCounts{});
    CHECK(r.rms_residual <= 1e-9);
    CHECK(r.field.velocity(Vec2(3e5, 3e5)).x() == Approx(10.0).epsilon(1e-9));
    CHECK(r.field.velocity(Vec2(3e5, 3e5)).y() == Approx(-5.0).epsilon(1e-9));
}

TEST_CASE("fit started at the truth stays there") {
    const WindField truth = sample_random_field(3, 20.0, PrimitiveCounts{2, 1, 0}, Domain::square(1e6));
    const auto s = grid_samples(truth, 12, 0.0, 2);
    WindFitOptions opts;
    opts.starts = 1;
    opts.initial = truth;
    const WindFitResult r = fit_wind_field(s, PrimitiveCounts{2, 1, 0}, opts);
    CHECK(r.rms_residual <= 1e-8);
}

TEST_CASE("fit of a noisy single vortex") {
    const WindField truth({Vortex{1.2e7, Vec2(4.5e5, 5.5e5), 1.2e5}});
    const double vmax = grid_sup_norm(truth, Domain::square(1e6), 200);
    const auto s = grid_samples(truth, 15, 0.01 * vmax, 9);
    const WindFitResult r = fit_wind_field(s, PrimitiveCounts{1, 0, 0});
    CHECK(r.rms_residual <= 0.02 * vmax);
}

TEST_CASE("fit needs enough samples") {
    const WindField truth({UniformFlow{1.0, 1.0}});
    const auto s = grid_samples(truth, 2, 0.0, 1);  // 4 points, 8 residuals
    CHECK_THROWS(fit_wind_field(s, PrimitiveCounts{2, 0, 0}));
}
