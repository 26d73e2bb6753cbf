#include "cruise/turnpike.hpp"

#include "cruise/rk3.hpp"
#include "cruise/roots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cruise {

SpeedSlope speed_dynamics(const CruisePerformance& perf, double throttle, double mass, double speed) {
    const DragTerms d = perf.drag(mass, speed);
    const SpeedSlope t = perf.thrust_max(speed);
    return {(throttle * t.value - d.drag) / mass, (throttle * t.d_speed - d.d_speed) / mass};
}

TurnpikeScan turnpike_scan(const std::vector<double>& throttles, const std::vector<double>& masses,
                           const CruisePerformance& perf, const ControlBounds& bounds) {
    TurnpikeScan out;
    out.throttles = throttles;
    out.masses = masses;
    const double lo = perf.speed_at_mach(bounds.mach_min);
    const double hi = perf.speed_at_mach(bounds.mach_max);
    constexpr int n = 400;
    out.lambda_min = std::numeric_limits<double>::infinity();
    out.lambda_max = -std::numeric_limits<double>::infinity();
    for (double pi : throttles) {
        for (double m : masses) {
            TurnpikeCell cell;
            cell.throttle = pi;
            cell.mass = m;
            auto f = [&](double v) { return speed_dynamics(perf, pi, m, v).value; };
            double va = lo, fa = f(lo);
            for (int i = 1; i <= n; ++i) {
                const double vb = lo + (hi - lo) * i / n;
                const double fb = f(vb);
                if (fa * fb < 0.0 || fb == 0.0) {
                    ++cell.root_count;
                    cell.speed = bracketed_root(f, va, vb, fa, fb, 1e-12 * hi, 0.0);
                    cell.has_root = true;
                }
                va = vb;
                fa = fb;
            }
            if (cell.has_root) {
                cell.lambda = speed_dynamics(perf, pi, m, cell.speed).d_speed;
                out.lambda_min = std::min(out.lambda_min, cell.lambda);
                out.lambda_max = std::max(out.lambda_max, cell.lambda);
            } else {
                ++out.excluded;
            }
            out.cells.push_back(cell);
        }
    }
    out.all_negative = out.lambda_max < 0.0;
    out.sign_consistent = true;
    const std::size_t rows = throttles.size(), cols = masses.size();
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const TurnpikeCell& c = out.at(i, j);
            if (!c.has_root) continue;
            for (const auto& [di, dj] : {std::pair{1, 0}, std::pair{0, 1}}) {
                if (i + di >= rows || j + dj >= cols) continue;
                const TurnpikeCell& nb = out.at(i + di, j + dj);
                if (nb.has_root && (nb.lambda < 0.0) != (c.lambda < 0.0)) out.sign_consistent = false;
            }
        }
    }
    return out;
}

TurnpikeScan turnpike_scan(const std::vector<double>& throttles, const std::vector<double>& masses,
                           const Scenario& scenario) {
    const CruisePerformance perf(scenario.aircraft, scenario.altitude);
    return turnpike_scan(throttles, masses, perf, scenario.bounds);
}

SpeedDecay speed_decay(const CruisePerformance& perf, double throttle, double mass, double v_star, double lambda,
                       double offset) {
    SpeedDecay out;
    out.offset = offset;
    const double h = 0.05 / std::max(std::abs(lambda), 1e-9);
    const double stop = 1e-4 * std::abs(offset);
    const int max_steps = 20000;
    auto rhs = [&](const Eigen::Matrix<double, 1, 1>& v) {
        return Eigen::Matrix<double, 1, 1>(speed_dynamics(perf, throttle, mass, v[0]).value);
    };
    Eigen::Matrix<double, 1, 1> v(v_star + offset);
    out.times.push_back(0.0);
    out.errors.push_back(offset);
    out.monotone = true;
    for (int i = 1; i <= max_steps; ++i) {
        try {
            v = rk3_step(rhs, v, h);
        } catch (const DomainError&) {
            out.monotone = false;  // left the speed range where the model is defined
            break;
        }
        const double e = v[0] - v_star;
        if (!std::isfinite(e)) break;
        if (std::abs(e) > std::abs(out.errors.back()) || e * offset < 0.0) out.monotone = false;
        out.times.push_back(i * h);
        out.errors.push_back(e);
        if (std::abs(e) < stop) {
            out.settled = true;
            break;
        }
    }
    // Least-squares slope of log|e| over the part where |e| < 10% of the offset.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (std::size_t i = 0; i < out.errors.size(); ++i) {
        const double a = std::abs(out.errors[i]);
        if (a >= 0.1 * std::abs(offset) || a <= 0.0) continue;
        const double y = std::log(a);
        sx += out.times[i];
        sy += y;
        sxx += out.times[i] * out.times[i];
        sxy += out.times[i] * y;
        ++count;
    }
    if (count >= 2) out.fitted_rate = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    return out;
}

} // namespace cruise
