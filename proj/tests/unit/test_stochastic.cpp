#include "cruise/stochastic.hpp"
#include "cruise/surrogate.hpp"

#include <doctest.h>

#include <algorithm>

using namespace cruise;
using doctest::Approx;

TEST_CASE("effective ratio") {
    const Domain d = Domain::square(1e6);
    CHECK(effective_ratio(WindField{}, d, 240.0, 50) == 1.0);
    const WindField u({UniformFlow{6.0, 8.0}});
    CHECK(domain_average(u, d, 37).magnitude == Approx(10.0).epsilon(1e-14));
    CHECK(effective_ratio(u, d, 240.0, 20) == Approx(250.0 / 230.0).epsilon(1e-14));
    CHECK_THROWS_AS(effective_ratio(WindField({UniformFlow{300.0, 0.0}}), d, 240.0, 10), DomainError);

    const WindField f = sample_random_field(17, 20.0, PrimitiveCounts{3, 1, 2}, d);
    const double r100 = effective_ratio(f, d, 240.0, 100);
    const double r400 = effective_ratio(f, d, 240.0, 400);
    CHECK(std::abs(r100 - r400) <= 1e-3 * r400);
}

TEST_CASE("bandwidth from the arc length ratio") {
    CHECK_THROWS_AS(solve_bandwidth(kPi / 2, 1e6), DomainError);
    CHECK_THROWS_AS(solve_bandwidth(1.0, 1e6), DomainError);
    const BandGeometry b = solve_bandwidth(1.2, 1e6);
    // dense scan of G on (0, pi)
    double best = 0.0, best_g = 1e300;
    for (int i = 1; i < 1000000; ++i) {
        const double th = kPi * i / 1e6;
        const double g = std::abs(th / (2 * std::sin(th / 2)) - 1.2);
        if (g < best_g) {
            best_g = g;
            best = th;
        }
    }
    CHECK(std::abs(b.theta - best) <= kPi / 1e6);
    CHECK(b.band_width == 2 * b.half_width);
    CHECK(b.mask_width == Approx(b.band_width / std::cos(kPi / 4)).epsilon(1e-15));
    const double d = std::sqrt(2.0) * 1e6;
    CHECK(b.half_width == Approx(d / (2 * std::sin(b.theta / 2)) * (1 - std::cos(b.theta / 2))).epsilon(1e-14));

    const BandGeometry narrow = solve_bandwidth(1.0 + 1e-8, 1e6);
    CHECK(narrow.theta < 1e-3);
    CHECK(narrow.band_width < 1e3);
    // endpoint of G
    CHECK(kPi / (2 * std::sin(kPi / 2)) == Approx(1.5708).epsilon(1e-4));
}

TEST_CASE("band average") {
    const WindField u({UniformFlow{3.0, -4.0}});
    CHECK(band_average(u, 1e6, 2e5, 100).magnitude == Approx(5.0).epsilon(1e-14));
    const WindField f = sample_random_field(4, 20.0, PrimitiveCounts{3, 1, 2}, Domain::square(1e6));
    CHECK(band_average(f, 1e6, 4e6, 80).magnitude ==
          Approx(domain_average(f, Domain::square(1e6), 80).magnitude).epsilon(1e-14));
    const WindField v({Vortex{2e7, Vec2(9e5, 1e5), 5e4}});
    CHECK(band_average(v, 1e6, 2e5, 200).magnitude < domain_average(v, Domain::square(1e6), 200).magnitude);
    CHECK_THROWS_AS(band_average(f, 1e6, 0.0, 10), DomainError);
}

TEST_CASE("reduced minimum-time problem") {
    const double L = 1e6, v0 = 240.0;
    const ReducedSolution z = solve_min_time_reduced(WindField{}, L, v0);
    REQUIRE(z.converged);
    CHECK(z.tf == Approx(std::sqrt(2.0) * L / v0).epsilon(1e-12));
    for (double chi : z.headings) CHECK(chi == Approx(kPi / 4).epsilon(1e-12));

    const ReducedSolution c = solve_min_time_reduced(WindField({UniformFlow{15.0, -10.0}}), L, v0);
    const ConstantWindMinTime a = analytic_min_time_constant_wind(L, L, 15.0, -10.0, v0);
    REQUIRE(c.converged);
    CHECK(std::abs(c.tf - a.tf) <= 0.1);
    CHECK(std::abs(c.chi0 - a.chi0) <= 1e-6);

    const ReducedSolution t = solve_min_time_reduced(WindField({UniformFlow{10.0, 10.0}}), L, v0);
    CHECK(t.tf < z.tf);
}

TEST_CASE("zero wind study gives unit ratios") {
    StudyConfig c;
    c.wind_index = 0.0;
    c.trials = 5;
    const StudyResult r = run_study(c);
    CHECK(r.excluded == 0);
    for (const auto& s : r.samples) {
        CHECK(s.ratio_avg == 1.0);
        CHECK(s.ratio_band == 1.0);
    }
    CHECK(std::abs(r.control_ratio - 1.0) <= 1e-9);
}

TEST_CASE("study is deterministic and independent of thread count") {
    StudyConfig c;
    c.wind_index = 2.0 / 24.0;
    c.trials = 12;
    c.threads = 1;
    const StudyResult a = run_study(c);
    c.threads = 4;
    const StudyResult b = run_study(c);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].seed == b.samples[i].seed);
        CHECK(a.samples[i].t_rand == b.samples[i].t_rand);
        CHECK(a.samples[i].ratio_band == b.samples[i].ratio_band);
    }
    CHECK(a.avg_stats.stddev == b.avg_stats.stddev);
    // a single trial reproduces its slot of the study
    const TrialSample t = run_trial(c, 7);
    CHECK(t.t_rand == a.samples[7].t_rand);
    for (const auto& s : a.samples)
        if (s.converged) CHECK(s.ratio_avg > 0.0);
}

TEST_CASE("histogram and density") {
    std::vector<double> x;
    for (int i = 0; i < 400; ++i) x.push_back(1.0 + 0.01 * std::sin(0.37 * i));
    const Histogram h = histogram(x);
    double mass = 0.0;
    for (double d : h.density) mass += d * h.bin_width;
    CHECK(mass == Approx(1.0).epsilon(1e-12));
    const Density k = kde(x, 400);
    double area = 0.0;
    for (std::size_t i = 1; i < k.points.size(); ++i)
        area += 0.5 * (k.density[i] + k.density[i - 1]) * (k.points[i] - k.points[i - 1]);
    CHECK(area == Approx(1.0).epsilon(2e-3));
    const SampleStats s = sample_stats({0.9, 1.0, 1.1}, 0.04);
    CHECK(s.stddev == Approx(0.1));
    CHECK(s.tail_mass == Approx(2.0 / 3.0));
}

TEST_CASE("study configuration is validated") {
    StudyConfig c;
    c.wind_index = 1.0;
    CHECK_THROWS_AS(run_study(c), ValidationError);
    c = StudyConfig{};
    c.trials = 0;
    CHECK_THROWS_AS(run_study(c), ValidationError);
}
