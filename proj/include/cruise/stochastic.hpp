#pragma once

// Monte Carlo study of minimum-time flight through random wind fields at a
// fixed airspeed, comparing the random field against its domain-average and
// chord-band-average constant winds.

#include "cruise/windfield.hpp"

#include <cstdint>
#include <vector>

namespace cruise {

struct WindAverage {
    double magnitude = 0.0;    // mean |W|
    Vec2 vector = Vec2::Zero();  // component-wise mean
    int cells = 0;
};

/// Midpoint-rule averages over a grid x grid partition of the domain.
WindAverage domain_average(const WindField& field, const Domain& domain, int grid);

/// r = (1 + Wbar/v0) / (1 - Wbar/v0) with Wbar the mean |W| over the domain.
double effective_ratio(const WindField& field, const Domain& domain, double v0, int grid);

struct BandGeometry {
    double ratio = 1.0;
    double theta = 0.0;       // central angle of the circular arc [rad]
    double half_width = 0.0;  // h [m]
    double band_width = 0.0;  // D = 2h [m]
    double mask_width = 0.0;  // b = D / cos(pi/4) [m], measured along y at fixed x
};

/// Arc whose length is r times the diagonal chord sqrt(2) L of the square [0, L]^2.
BandGeometry solve_bandwidth(double r, double side);

/// Averages over the cells of [0, L]^2 whose centers satisfy |y - x| <= b/2.
WindAverage band_average(const WindField& field, double side, double mask_width, int grid);

struct ReducedSolution {
    double tf = 0.0;
    double chi0 = 0.0;
    std::vector<double> headings;  // chi at every node
    double residual = 0.0;         // |terminal miss| / L
    int iterations = 0;
    bool converged = false;
};

/// Minimum-time shooting from (0, 0) to (L, L) at constant airspeed v0 on the
/// reduced system (x, y, q). Unknowns are (chi0, tf).
ReducedSolution solve_min_time_reduced(const WindField& field, double side, double v0, int steps = 200);

struct StudyConfig {
    int trials = 200;
    std::uint64_t seed = 1;
    double wind_index = 1.0 / 24.0;  // p = max|W| / v0
    double side = 1.0e6;             // L [m]
    double v0 = 240.0;               // [m/s]
    int grid = 100;                  // quadrature resolution for the averages
    int bins = 0;                    // 0 selects Freedman-Diaconis
    PrimitiveCounts counts{3, 1, 2};
    int steps = 200;
    int threads = 0;  // 0 = hardware concurrency
    double tail_threshold = 0.04;

    void validate() const;
};

struct TrialSample {
    int trial = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    double t_rand = 0.0;
    double t_avg = 0.0;
    double t_band = 0.0;
    double ratio_avg = 0.0;   // t_rand / t_avg
    double ratio_band = 0.0;  // t_rand / t_band
    double mean_speed = 0.0;  // domain mean |W|
    double band_speed = 0.0;  // band mean |W|
    BandGeometry band;
};

struct Histogram {
    std::vector<double> centers;
    std::vector<double> density;
    double bin_width = 0.0;
};

struct Density {
    std::vector<double> points;
    std::vector<double> density;
    double bandwidth = 0.0;
};

struct SampleStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample (n - 1) standard deviation
    double min = 0.0;
    double max = 0.0;
    double tail_mass = 0.0;  // fraction with |x - 1| > threshold
};

struct StudyResult {
    StudyConfig config;
    std::vector<TrialSample> samples;
    int excluded = 0;
    double control_ratio = 0.0;  // zero-wind control trial
    SampleStats avg_stats;
    SampleStats band_stats;
    Histogram avg_histogram;
    Histogram band_histogram;
    Density avg_density;
    Density band_density;
};

/// Seed of trial k, independent of execution order.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

TrialSample run_trial(const StudyConfig& config, int trial);
StudyResult run_study(const StudyConfig& config);

/// Freedman-Diaconis bins (2 IQR n^{-1/3}) or a fixed count when bins > 0.
Histogram histogram(const std::vector<double>& x, int bins = 0);
/// Gaussian KDE with Silverman's rule, evaluated on `points` equispaced nodes.
Density kde(const std::vector<double>& x, int points = 200);
SampleStats sample_stats(const std::vector<double>& x, double tail_threshold);

} // namespace cruise
