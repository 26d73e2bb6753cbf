#pragma once

// Stability of the quasi-steady cruise speed: dv/dt = F_v(v) with
// F_v = (Pi* T_max(v) - D(m, v)) / m at fixed throttle and mass.

#include "cruise/performance.hpp"
#include "cruise/scenario.hpp"

#include <vector>

namespace cruise {

struct TurnpikeCell {
    double throttle = 0.0;
    double mass = 0.0;
    bool has_root = false;
    int root_count = 0;
    double speed = 0.0;   // v*, the highest root in the Mach bracket
    double lambda = 0.0;  // dF_v/dv at v*
};

struct TurnpikeScan {
    std::vector<double> throttles;
    std::vector<double> masses;
    std::vector<TurnpikeCell> cells;  // row-major, throttle index outer
    int excluded = 0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    bool all_negative = false;
    /// No sign change of lambda between neighbouring cells that both have a root.
    bool sign_consistent = false;

    const TurnpikeCell& at(std::size_t i, std::size_t j) const { return cells[i * masses.size() + j]; }
};

/// F_v and its speed derivative.
SpeedSlope speed_dynamics(const CruisePerformance& perf, double throttle, double mass, double speed);

TurnpikeScan turnpike_scan(const std::vector<double>& throttles, const std::vector<double>& masses,
                           const CruisePerformance& perf, const ControlBounds& bounds);
TurnpikeScan turnpike_scan(const std::vector<double>& throttles, const std::vector<double>& masses,
                           const Scenario& scenario);

struct SpeedDecay {
    double offset = 0.0;        // v(0) - v*
    bool monotone = false;      // |v - v*| never increases and never crosses v*
    bool settled = false;       // |v - v*| fell below the stopping threshold
    double fitted_rate = 0.0;   // slope of log|v - v*| on the linear tail
    std::vector<double> times;
    std::vector<double> errors;  // v - v*
};

/// Integrates dv/dt = F_v from v* + offset with RK3 until |v - v*| < 1e-4 |offset|.
SpeedDecay speed_decay(const CruisePerformance& perf, double throttle, double mass, double v_star,
                       double lambda, double offset);

} // namespace cruise
