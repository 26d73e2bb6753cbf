#include "cruise/stochastic.hpp"

#include "cruise/least_squares.hpp"
#include "cruise/rk3.hpp"
#include "cruise/surrogate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace cruise {

namespace {

WindAverage masked_average(const WindField& field, const Domain& domain, int grid, double half_band) {
    WindAverage out;
    const double dx = domain.width() / grid;
    const double dy = domain.height() / grid;
    double mag = 0.0;
    Vec2 vec = Vec2::Zero();
    for (int i = 0; i < grid; ++i) {
        const double x = domain.x_min + (i + 0.5) * dx;
        for (int j = 0; j < grid; ++j) {
            const double y = domain.y_min + (j + 0.5) * dy;
            if (half_band >= 0.0 && std::abs(y - x) > half_band) continue;
            const Vec2 w = field.velocity(Vec2(x, y));
            mag += w.norm();
            vec += w;
            ++out.cells;
        }
    }
    if (out.cells > 0) {
        out.magnitude = mag / out.cells;
        out.vector = vec / out.cells;
    }
    return out;
}

double quantile(std::vector<double> sorted, double q) {
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * (sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

WindAverage domain_average(const WindField& field, const Domain& domain, int grid) {
    if (domain.empty()) throw DomainError("averaging domain is empty");
    if (grid < 1) throw DomainError("averaging grid needs at least one cell");
    return masked_average(field, domain, grid, -1.0);
}

double effective_ratio(const WindField& field, const Domain& domain, double v0, int grid) {
    if (!(v0 > 0.0)) throw DomainError("v0 must be positive");
    const double w = domain_average(field, domain, grid).magnitude;
    if (!(w < v0)) throw DomainError("mean wind speed must stay below v0");
    return (1.0 + w / v0) / (1.0 - w / v0);
}

BandGeometry solve_bandwidth(double r, double side) {
    const double r_max = kPi / 2.0;
    if (!(side > 0.0)) throw DomainError("domain side must be positive");
    if (!(r > 1.0)) throw DomainError("length ratio must exceed 1");
    if (!(r < r_max))
        throw DomainError("length ratio must stay below pi/2: a circular arc over the chord is at most a half circle");
    auto g = [r](double th) { return th / (2.0 * std::sin(th / 2.0)) - r; };
    // G increases from 1 - r at 0+ to pi/2 - r at pi.
    double lo = 0.0, hi = kPi;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (mid > 0.0 && g(mid) < 0.0 ? lo : hi) = mid;
    }
    BandGeometry b;
    b.ratio = r;
    b.theta = 0.5 * (lo + hi);
    const double d = std::sqrt(2.0) * side;
    b.half_width = d / (2.0 * std::sin(b.theta / 2.0)) * (1.0 - std::cos(b.theta / 2.0));
    b.band_width = 2.0 * b.half_width;
    b.mask_width = b.band_width / std::cos(kPi / 4.0);
    return b;
}

WindAverage band_average(const WindField& field, double side, double mask_width, int grid) {
    if (!(side > 0.0)) throw DomainError("domain side must be positive");
    if (!(mask_width > 0.0)) throw DomainError("band width must be positive");
    if (grid < 1) throw DomainError("averaging grid needs at least one cell");
    const WindAverage out = masked_average(field, Domain::square(side), grid, 0.5 * mask_width);
    if (out.cells == 0) {
        std::ostringstream os;
        os << "band of width " << mask_width << " m contains no cell centers on a " << grid << "x" << grid
           << " grid; use a finer grid";
        throw DomainError(os.str());
    }
    return out;
}

ReducedSolution solve_min_time_reduced(const WindField& field, double side, double v0, int steps) {
    if (!(side > 0.0) || !(v0 > 0.0) || steps < 1) throw DomainError("reduced problem needs L > 0, v0 > 0, steps >= 1");

    using Vec = Eigen::Vector3d;
    auto rhs = [&](const Vec& s) {
        const WindSample w = field.sample(Vec2(s[0], s[1]));
        const Mat2& J = w.jacobian;
        const double q = s[2];
        const double c = 1.0 / std::sqrt(1.0 + q * q);
        return Vec(v0 * c + w.velocity.x(), v0 * q * c + w.velocity.y(),
                   -J(0, 1) + (J(0, 0) - J(1, 1)) * q + J(1, 0) * q * q);
    };
    auto propagate = [&](double chi0, double tf, std::vector<double>* headings) {
        Vec s(0.0, 0.0, std::tan(chi0));
        return rk3_integrate(rhs, s, tf / steps, steps, [&](int, const Vec& y) {
            if (headings) headings->push_back(std::atan(y[2]));
        });
    };

    // Start from the closed-form solution in the mean wind along the chord.
    Vec2 mean = Vec2::Zero();
    constexpr int n_chord = 64;
    for (int i = 0; i < n_chord; ++i) mean += field.velocity(Vec2::Constant((i + 0.5) / n_chord * side));
    mean /= n_chord;
    double chi_guess = kPi / 4.0;
    double tf_guess = std::sqrt(2.0) * side / v0;
    if (mean.norm() < v0) {
        try {
            const ConstantWindMinTime c = analytic_min_time_constant_wind(side, side, mean.x(), mean.y(), v0);
            chi_guess = c.chi0;
            tf_guess = c.tf;
        } catch (const DomainError&) {
        }
    }

    auto residual = [&](const VecX& z) {
        const double chi0 = z[0];
        const double tf = z[1] * tf_guess;
        VecX r(2);
        if (!(tf > 0.0) || !(std::abs(chi0) < kPi / 2.0)) {
            r.setConstant(1e6);
            return r;
        }
        const Vec s = propagate(chi0, tf, nullptr);
        r << (s[0] - side) / side, (s[1] - side) / side;
        return r;
    };
    LeastSquaresOptions opts;
    opts.max_iterations = 100;
    opts.residual_tolerance = 1e-10;
    opts.step_tolerance = 1e-15;
    opts.fd_step = 1e-7;
    VecX z0(2);
    z0 << chi_guess, 1.0;
    const LeastSquaresResult lm = levenberg_marquardt(residual, z0, opts);

    ReducedSolution out;
    out.chi0 = lm.x[0];
    out.tf = lm.x[1] * tf_guess;
    out.residual = lm.norm;
    out.iterations = lm.iterations;
    out.converged = std::isfinite(lm.norm) && lm.norm < 1e-6;
    if (out.converged) propagate(out.chi0, out.tf, &out.headings);
    return out;
}

void StudyConfig::validate() const {
    if (trials < 1) throw ValidationError("trials", "N >= 1");
    if (!(wind_index >= 0.0 && wind_index < 1.0)) throw ValidationError("p", "0 <= p < 1");
    if (!(side > 0.0)) throw ValidationError("side_m", "L > 0");
    if (!(v0 > 0.0)) throw ValidationError("v0_mps", "v0 > 0");
    if (grid < 2) throw ValidationError("grid", "grid >= 2");
    if (bins < 0) throw ValidationError("bins", "bins >= 0");
    if (steps < 10) throw ValidationError("steps", "steps >= 10");
    if (counts.vortices < 0 || counts.dipoles < 0 || counts.sources < 0)
        throw ValidationError("counts", "primitive counts must be nonnegative");
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
    return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(trial));
}

TrialSample run_trial(const StudyConfig& config, int trial) {
    TrialSample s;
    s.trial = trial;
    s.seed = trial_seed(config.seed, trial);
    const Domain domain = Domain::square(config.side);
    const WindField field = config.wind_index > 0.0
                                ? sample_random_field(s.seed, config.wind_index * config.v0, config.counts, domain)
                                : WindField{};
    const WindAverage avg = domain_average(field, domain, config.grid);
    s.mean_speed = avg.magnitude;
    WindAverage band = avg;
    if (avg.magnitude > 0.0) {
        s.band = solve_bandwidth(effective_ratio(field, domain, config.v0, config.grid), config.side);
        band = band_average(field, config.side, s.band.mask_width, config.grid);
    }
    s.band_speed = band.magnitude;

    const ReducedSolution rand = solve_min_time_reduced(field, config.side, config.v0, config.steps);
    const ReducedSolution mean = solve_min_time_reduced(
        WindField({UniformFlow{avg.vector.x(), avg.vector.y()}}), config.side, config.v0, config.steps);
    const ReducedSolution banded = solve_min_time_reduced(
        WindField({UniformFlow{band.vector.x(), band.vector.y()}}), config.side, config.v0, config.steps);
    s.converged = rand.converged && mean.converged && banded.converged;
    s.t_rand = rand.tf;
    s.t_avg = mean.tf;
    s.t_band = banded.tf;
    s.ratio_avg = rand.tf / mean.tf;
    s.ratio_band = rand.tf / banded.tf;
    return s;
}

StudyResult run_study(const StudyConfig& config) {
    config.validate();
    StudyResult out;
    out.config = config;
    std::vector<TrialSample> all(config.trials);
    const int threads = std::clamp(config.threads > 0 ? config.threads
                                                      : static_cast<int>(std::thread::hardware_concurrency()),
                                   1, config.trials);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < config.trials; k = next++) {
            try {
                all[k] = run_trial(config, k);
            } catch (const std::exception&) {
                all[k].trial = k;
                all[k].seed = trial_seed(config.seed, k);
                all[k].converged = false;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    const ReducedSolution control = solve_min_time_reduced(WindField{}, config.side, config.v0, config.steps);
    out.control_ratio = control.tf / solve_min_time_reduced(WindField({UniformFlow{0.0, 0.0}}), config.side,
                                                             config.v0, config.steps)
                                          .tf;

    std::vector<double> ra, rb;
    for (const TrialSample& s : all) {
        if (!s.converged) {
            ++out.excluded;
            continue;
        }
        ra.push_back(s.ratio_avg);
        rb.push_back(s.ratio_band);
    }
    out.samples = std::move(all);
    if (!ra.empty()) {
        out.avg_stats = sample_stats(ra, config.tail_threshold);
        out.band_stats = sample_stats(rb, config.tail_threshold);
        out.avg_histogram = histogram(ra, config.bins);
        out.band_histogram = histogram(rb, config.bins);
        out.avg_density = kde(ra);
        out.band_density = kde(rb);
    }
    return out;
}

SampleStats sample_stats(const std::vector<double>& x, double tail_threshold) {
    SampleStats s;
    if (x.empty()) return s;
    const double n = static_cast<double>(x.size());
    s.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    int tail = 0;
    for (double v : x) {
        ss += (v - s.mean) * (v - s.mean);
        if (std::abs(v - 1.0) > tail_threshold) ++tail;
    }
    s.stddev = x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.min = *std::min_element(x.begin(), x.end());
    s.max = *std::max_element(x.begin(), x.end());
    s.tail_mass = tail / n;
    return s;
}

Histogram histogram(const std::vector<double>& x, int bins) {
    Histogram h;
    if (x.empty()) return h;
    const double lo = *std::min_element(x.begin(), x.end());
    const double hi = *std::max_element(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    int count = bins;
    if (count <= 0) {
        const double iqr = quantile(x, 0.75) - quantile(x, 0.25);
        const double width = 2.0 * iqr / std::cbrt(n);
        count = width > 0.0 ? std::clamp(static_cast<int>(std::ceil((hi - lo) / width)), 1, 1000) : 1;
    }
    h.bin_width = hi > lo ? (hi - lo) / count : 1e-9;
    const double base = hi > lo ? lo : lo - 0.5 * h.bin_width;
    std::vector<int> c(count, 0);
    for (double v : x) c[std::min(count - 1, static_cast<int>((v - base) / h.bin_width))]++;
    for (int i = 0; i < count; ++i) {
        h.centers.push_back(base + (i + 0.5) * h.bin_width);
        h.density.push_back(c[i] / (n * h.bin_width));
    }
    return h;
}

Density kde(const std::vector<double>& x, int points) {
    Density d;
    if (x.empty() || points < 2) return d;
    const double n = static_cast<double>(x.size());
    const SampleStats s = sample_stats(x, 0.0);
    const double iqr = quantile(x, 0.75) - quantile(x, 0.25);
    double spread = s.stddev;
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    d.bandwidth = 0.9 * spread * std::pow(n, -0.2);
    if (!(d.bandwidth > 0.0)) d.bandwidth = 1e-9 * std::max(1.0, std::abs(s.mean));
    const double lo = s.min - 3.0 * d.bandwidth;
    const double hi = s.max + 3.0 * d.bandwidth;
    const double norm = 1.0 / (n * d.bandwidth * std::sqrt(2.0 * kPi));
    for (int i = 0; i < points; ++i) {
        const double t = lo + (hi - lo) * i / (points - 1);
        double acc = 0.0;
        for (double v : x) {
            const double u = (t - v) / d.bandwidth;
            acc += std::exp(-0.5 * u * u);
        }
        d.points.push_back(t);
        d.density.push_back(acc * norm);
    }
    return d;
}

} // namespace cruise
