#include "cruise/surrogate.hpp"

#include "cruise/least_squares.hpp"
#include "cruise/rk3.hpp"
#include "cruise/roots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace cruise {

namespace {

constexpr double kHeadingLimit = deg2rad(89.0);
constexpr int kSpeedGrid = 32;
constexpr double kFailureResidual = 1e6;

double wrap_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    return a - kPi;
}

} // namespace

std::string to_string(SpeedArc arc) {
    switch (arc) {
    case SpeedArc::interior: return "interior";
    case SpeedArc::v_min: return "v_min";
    case SpeedArc::v_max: return "v_max";
    case SpeedArc::throttle_min: return "Pi_min";
    case SpeedArc::throttle_max: return "Pi_max";
    }
    return "unknown";
}

std::string to_string(HeadingArc arc) {
    switch (arc) {
    case HeadingArc::interior: return "interior";
    case HeadingArc::chi_min: return "chi_min";
    case HeadingArc::chi_max: return "chi_max";
    }
    return "unknown";
}

std::string TrajectoryNode::arc_label() const {
    if (heading_arc == HeadingArc::interior) return to_string(speed_arc);
    if (speed_arc == SpeedArc::interior) return to_string(heading_arc);
    return to_string(speed_arc) + "+" + to_string(heading_arc);
}

SurrogateProblem::SurrogateProblem(const Scenario& scenario, double wind_scale, double hazard_scale)
    : scenario_(&scenario),
      perf_(scenario.aircraft, scenario.altitude),
      env_(scenario, ChordFrame(scenario.start, scenario.target), wind_scale, hazard_scale),
      wind_scale_(wind_scale),
      hazard_scale_(hazard_scale) {
    const ControlBounds& b = scenario.bounds;
    v_min_ = perf_.speed_at_mach(b.mach_min);
    v_max_ = perf_.speed_at_mach(b.mach_max);
    chi_min_ = wrap_angle(b.heading_min - frame().angle());
    chi_max_ = chi_min_ + (b.heading_max - b.heading_min);
    chi_min_ = std::max(chi_min_, -kHeadingLimit);
    chi_max_ = std::min(chi_max_, kHeadingLimit);
    if (!(chi_min_ < chi_max_))
        throw ValidationError("bounds.heading_min_rad", "heading bounds exclude every direction near the chord");
    target_ = Vec2(frame().length(), 0.0);
}

Vec6 SurrogateProblem::initial_state(const ShootingParams& p) const {
    Vec6 s;
    s << 0.0, 0.0, scenario_->initial_mass, 0.0, p.lambda_x0, std::tan(p.chi0);
    return s;
}

SpeedChoice optimal_speed(const SurrogateProblem& problem, double lambda_x, double lambda_y, double chi,
                          double mass, const Vec2& wind, double penalty_value) {
    const CruisePerformance& perf = problem.performance();
    const ControlBounds& bounds = problem.scenario().bounds;
    const double c_t = problem.scenario().weights.time;
    const double slope = lambda_x * std::cos(chi) + lambda_y * std::sin(chi);  // dN/dv
    const double offset = c_t + penalty_value + lambda_x * wind.x() + lambda_y * wind.y();

    struct Probe {
        double v, psi, f, f_scale, throttle;
    };
    auto probe = [&](double v) {
        const DragTerms d = perf.drag(mass, v);
        const SpeedSlope cs = perf.sfc(v);
        const double n = offset + slope * v;
        const double log_slope = cs.d_speed / cs.value + d.d_speed / d.drag;
        Probe p;
        p.v = v;
        p.psi = n / (cs.value * d.drag);
        p.f = slope - n * log_slope;
        p.f_scale = std::abs(slope) + std::abs(n * log_slope);
        p.throttle = d.drag / perf.thrust_max(v).value;
        return p;
    };

    const double v_lo = problem.speed_min();
    const double v_hi = problem.speed_max();
    std::array<Probe, kSpeedGrid> grid;
    for (int i = 0; i < kSpeedGrid; ++i) grid[i] = probe(v_lo + (v_hi - v_lo) * i / (kSpeedGrid - 1));

    struct Candidate {
        Probe p;
        SpeedArc arc;
    };
    std::vector<Candidate> cands;
    cands.push_back({grid.front(), SpeedArc::v_min});
    cands.push_back({grid.back(), SpeedArc::v_max});
    const double x_tol = 1e-12 * v_hi;
    for (int i = 0; i + 1 < kSpeedGrid; ++i) {
        const Probe& a = grid[i];
        const Probe& b = grid[i + 1];
        if (a.f < 0.0 && b.f > 0.0) {
            const double f_tol = 1e-10 * std::max(a.f_scale, b.f_scale);
            const double v = bracketed_root([&](double s) { return probe(s).f; }, a.v, b.v, a.f, b.f, x_tol, f_tol);
            cands.push_back({probe(v), SpeedArc::interior});
        }
        for (const auto& [level, arc] : {std::pair{bounds.throttle_min, SpeedArc::throttle_min},
                                         std::pair{bounds.throttle_max, SpeedArc::throttle_max}}) {
            const double ga = a.throttle - level;
            const double gb = b.throttle - level;
            if (ga * gb < 0.0) {
                const double v = bracketed_root([&](double s) { return probe(s).throttle - level; }, a.v, b.v, ga,
                                                gb, x_tol, 1e-14);
                cands.push_back({probe(v), arc});
            }
        }
    }

    const Candidate* best = nullptr;
    for (const auto& c : cands) {
        const bool boundary = c.arc == SpeedArc::throttle_min || c.arc == SpeedArc::throttle_max;
        const bool feasible =
            boundary || (c.p.throttle >= bounds.throttle_min - 1e-9 && c.p.throttle <= bounds.throttle_max + 1e-9);
        if (feasible && (!best || c.p.psi < best->p.psi)) best = &c;
    }
    if (!best) {
        std::ostringstream os;
        os << "no airspeed in [" << v_lo << ", " << v_hi << "] m/s satisfies Pi in [" << bounds.throttle_min << ", "
           << bounds.throttle_max << "] at m = " << mass << " kg";
        throw SolverError(os.str());
    }
    return {best->p.v, best->arc, best->p.f / std::max(best->p.f_scale, 1e-300)};
}

SpeedChoice optimal_speed(const SurrogateProblem& problem, const Vec6& state) {
    return problem.evaluate(state).speed;
}

NodeEval SurrogateProblem::evaluate(const Vec6& s) const {
    if (!s.allFinite()) throw SolverError("non-finite augmented state");
    const double lx = s[idx::lambda_x];
    const double q = s[idx::q];
    const double m = s[idx::m];
    if (!(lx < 0.0)) {
        std::ostringstream os;
        os << "lambda_x reached " << lx << " (must stay negative) at x = " << s[idx::x] << ", y = " << s[idx::y];
        throw SolverError(os.str());
    }
    const double chi_free = std::atan(q);
    if (std::abs(chi_free) >= kHeadingLimit) throw SolverError("heading left the |chi| < 89 deg chart");
    if (!(m > scenario_->initial_mass - scenario_->aircraft.max_fuel)) throw SolverError("fuel exhausted");

    NodeEval out;
    out.chi = std::clamp(chi_free, chi_min_, chi_max_);
    if (chi_free < chi_min_) out.heading_arc = HeadingArc::chi_min;
    if (chi_free > chi_max_) out.heading_arc = HeadingArc::chi_max;

    out.env = env_.sample(Vec2(s[idx::x], s[idx::y]));
    out.lambda_y = q * lx;
    out.speed = cruise::optimal_speed(*this, lx, out.lambda_y, out.chi, m, out.env.wind, out.env.penalty);

    const double v = out.speed.speed;
    const DragTerms d = perf_.drag(m, v);
    out.fuel_flow = -perf_.sfc(v).value * d.drag;
    out.throttle = d.drag / perf_.thrust_max(v).value;

    const Vec2 ground(v * std::cos(out.chi) + out.env.wind.x(), v * std::sin(out.chi) + out.env.wind.y());
    const double c_t = scenario_->weights.time;
    const double n = c_t + out.env.penalty + lx * ground.x() + out.lambda_y * ground.y();
    out.lambda_m = -n / out.fuel_flow;
    out.hamiltonian = lx * ground.x() + out.lambda_y * ground.y() + out.lambda_m * out.fuel_flow + out.env.penalty;

    const Mat2& j = out.env.wind_jacobian;
    const Vec2& gg = out.env.penalty_gradient;
    out.derivative << ground.x(), ground.y(), out.fuel_flow, out.env.penalty,
        -gg.x() - lx * (j(0, 0) + q * j(1, 0)),
        -j(0, 1) + (j(0, 0) - j(1, 1)) * q + j(1, 0) * q * q + (q * gg.x() - gg.y()) / lx;
    return out;
}

Vec6 surrogate_rhs(const SurrogateProblem& problem, const Vec6& state) { return problem.evaluate(state).derivative; }

DerivedCostates derived_costates(const SurrogateProblem& problem, const Vec6& state, double speed) {
    const double lx = state[idx::lambda_x];
    const double q = state[idx::q];
    const double chi = std::clamp(std::atan(q), problem.heading_min(), problem.heading_max());
    const EnvironmentSample env = problem.environment().sample(Vec2(state[idx::x], state[idx::y]));
    const double fm = problem.performance().fuel_flow(state[idx::m], speed).rate;
    const double ly = q * lx;
    const double n = problem.scenario().weights.time + env.penalty + lx * (speed * std::cos(chi) + env.wind.x()) +
                     ly * (speed * std::sin(chi) + env.wind.y());
    return {ly, -n / fm};
}

double boundary_arc_speed(const SurrogateProblem& problem, double mass, double throttle, RootChoice which) {
    const CruisePerformance& perf = problem.performance();
    auto g = [&](double v) { return perf.throttle(mass, v) - throttle; };
    constexpr int n = 200;
    const double lo = problem.speed_min();
    const double hi = problem.speed_max();
    std::optional<double> found;
    double va = lo, ga = g(lo);
    for (int i = 1; i <= n && !(found && which == RootChoice::lowest); ++i) {
        const double vb = lo + (hi - lo) * i / n;
        const double gb = g(vb);
        if (ga == 0.0 || ga * gb < 0.0) found = bracketed_root(g, va, vb, ga, gb, 1e-12 * hi, 1e-14);
        else if (gb == 0.0) found = vb;
        va = vb;
        ga = gb;
    }
    if (!found) {
        std::ostringstream os;
        os << "throttle bound Pi = " << throttle << " is not attained for any airspeed in [" << lo << ", " << hi
           << "] m/s at m = " << mass << " kg";
        throw SolverError(os.str());
    }
    return *found;
}

namespace {

TrajectoryNode to_node(const SurrogateProblem& problem, double t, const Vec6& s, const NodeEval& e) {
    const ChordFrame& f = problem.frame();
    TrajectoryNode n;
    n.t = t;
    const Vec2 p = f.from_frame(Vec2(s[idx::x], s[idx::y]));
    n.x = p.x();
    n.y = p.y();
    n.m = s[idx::m];
    n.z = s[idx::z];
    n.v = e.speed.speed;
    n.chi = e.chi + f.angle();
    const Vec2 lam = f.vector_from_frame(Vec2(s[idx::lambda_x], e.lambda_y));
    n.lambda_x = lam.x();
    n.lambda_y = lam.y();
    n.q = lam.y() / lam.x();
    n.lambda_m = e.lambda_m;
    n.hamiltonian = e.hamiltonian;
    n.throttle = e.throttle;
    n.speed_arc = e.speed.arc;
    n.heading_arc = e.heading_arc;
    return n;
}

void check_params(const ShootingParams& p, int steps) {
    if (!(p.tf > 0.0) || !std::isfinite(p.tf)) throw SolverError("final time must be positive");
    if (!(std::abs(p.chi0) < kPi / 2.0)) throw SolverError("|chi0| must be below pi/2");
    if (steps < 1) throw DomainError("integration needs at least one step");
}

} // namespace

Trajectory integrate_trajectory(const SurrogateProblem& problem, const ShootingParams& p, int steps) {
    check_params(p, steps);
    const double h = p.tf / steps;
    Trajectory traj;
    traj.nodes.reserve(steps + 1);
    auto rhs = [&](const Vec6& s) { return problem.evaluate(s).derivative; };
    rk3_integrate(rhs, problem.initial_state(p), h, steps, [&](int i, const Vec6& s) {
        traj.nodes.push_back(to_node(problem, i == steps ? p.tf : i * h, s, problem.evaluate(s)));
    });
    return traj;
}

TerminalState integrate_terminal(const SurrogateProblem& problem, const ShootingParams& p, int steps) {
    check_params(p, steps);
    const double h = p.tf / steps;
    Vec6 s = problem.initial_state(p);
    auto rhs = [&](const Vec6& y) { return problem.evaluate(y).derivative; };
    for (int i = 0; i < steps; ++i) s = rk3_step(rhs, s, h);
    return {s, problem.evaluate(s).lambda_m};
}

Vec3 shoot_residual(const SurrogateProblem& problem, const ShootingParams& p, int steps) {
    const TerminalState end = integrate_terminal(problem, p, steps);
    return {end.state[idx::x] - problem.target().x(), end.state[idx::y] - problem.target().y(),
            end.lambda_m - problem.scenario().weights.mass};
}

Vec3 residual_scale(const SurrogateProblem& problem) {
    const Scenario& sc = problem.scenario();
    const double mach = std::clamp(0.78, sc.bounds.mach_min, sc.bounds.mach_max);
    const double ff = -problem.performance().fuel_flow(sc.initial_mass, problem.performance().speed_at_mach(mach)).rate;
    const double lm = std::abs(sc.weights.mass) + std::abs(sc.weights.time) / ff;
    return {problem.frame().length(), problem.frame().length(), lm > 0.0 ? lm : 1.0};
}

ShootingParams initial_guess(const SurrogateProblem& problem) {
    const Scenario& sc = problem.scenario();
    const double length = problem.frame().length();
    const EnvironmentSample end = problem.environment().sample(problem.target());
    double along = 0.0;
    constexpr int probes = 16;
    for (int i = 0; i < probes; ++i)
        along += problem.environment().sample(Vec2(length * (i + 0.5) / probes, 0.0)).wind.x() / probes;

    const double m_end = sc.initial_mass;
    double v = 0.5 * (problem.speed_min() + problem.speed_max());
    double lx = -1e-3;
    for (int it = 0; it < 8; ++it) {
        const double ff = -problem.performance().fuel_flow(m_end, v).rate;
        const double ground = std::max(v + end.wind.x(), 1.0);
        lx = (sc.weights.mass * ff - sc.weights.time - end.penalty) / ground;
        if (!(lx < 0.0)) lx = -1e-6;
        try {
            v = optimal_speed(problem, lx, 0.0, 0.0, m_end, end.wind, end.penalty).speed;
        } catch (const SolverError&) {
            break;
        }
    }
    ShootingParams p;
    p.lambda_x0 = lx;
    p.chi0 = 0.0;
    p.tf = length / std::max(v + along, 0.05 * v);
    return p;
}

ConstantWindMinTime analytic_min_time_constant_wind(double xf, double yf, double wx, double wy, double v_max) {
    if (!(xf > 0.0)) throw DomainError("closed-form minimum time needs xf > 0");
    if (!(std::hypot(wx, wy) < v_max)) throw DomainError("wind speed must stay below v_max");
    const double arg = (xf * wy - yf * wx) / (v_max * std::hypot(xf, yf));
    if (!(arg >= -1.0 && arg <= 1.0)) throw DomainError("arccos argument outside [-1, 1]: wind too strong");
    ConstantWindMinTime out;
    out.chi0 = -std::atan2(xf, yf) + std::acos(arg);
    out.tf = xf / (v_max * std::cos(out.chi0) + wx);
    return out;
}

ThrottleProfile reconstruct_throttle(const Trajectory& traj, const Scenario& scenario) {
    const auto& nodes = traj.nodes;
    if (nodes.size() < 3) throw DomainError("throttle reconstruction needs at least 3 nodes");
    const CruisePerformance perf(scenario.aircraft, scenario.altitude);
    ThrottleProfile out;
    out.throttle.resize(nodes.size());
    const std::size_t last = nodes.size() - 1;
    for (std::size_t i = 0; i <= last; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i == last ? last : i + 1;
        const double dvdt = (nodes[b].v - nodes[a].v) / (nodes[b].t - nodes[a].t);
        const double pi =
            (nodes[i].m * dvdt + perf.drag(nodes[i].m, nodes[i].v).drag) / perf.thrust_max(nodes[i].v).value;
        out.throttle[i] = pi;
        if (pi < scenario.bounds.throttle_min - 1e-3 || pi > scenario.bounds.throttle_max + 1e-3)
            out.violations.push_back(i);
    }
    return out;
}

Solution assemble_solution(const SurrogateProblem& problem, const ShootingParams& p, int steps) {
    const Scenario& sc = problem.scenario();
    Solution sol;
    sol.params = p;
    sol.initial_heading = p.chi0 + problem.frame().angle();
    sol.trajectory = integrate_trajectory(problem, p, steps);
    const TrajectoryNode& end = sol.trajectory.back();
    sol.final_time = p.tf;
    sol.final_mass = end.m;
    sol.fuel_burned = sc.initial_mass - end.m;
    sol.objective = sc.weights.time * p.tf + sc.weights.mass * end.m + end.z;
    for (const auto& n : sol.trajectory.nodes)
        sol.hamiltonian_drift = std::max(sol.hamiltonian_drift, std::abs(n.hamiltonian + sc.weights.time));
    const Vec2 end_frame = problem.frame().to_frame(Vec2(end.x, end.y));
    sol.residual = Vec3(end_frame.x() - problem.target().x(), end_frame.y(), end.lambda_m - sc.weights.mass);
    sol.residual_norm = sol.residual.cwiseQuotient(residual_scale(problem)).norm();
    return sol;
}

namespace {

struct TimeLimitReached {};

struct Attempt {
    ShootingParams params;
    bool converged = false;
    int iterations = 0;
    double norm = std::numeric_limits<double>::infinity();
    std::vector<double> history;
    std::vector<ShootingParams> trace;
    std::string failure;
};

using Clock = std::chrono::steady_clock;

struct BestSeen {
    ShootingParams params;
    double norm = std::numeric_limits<double>::infinity();
};

Attempt shoot(const SurrogateProblem& problem, const ShootingParams& guess, const SolverConfig& config,
              std::optional<Clock::time_point> deadline, BestSeen* best_full) {
    const bool is_full = problem.wind_scale() == 1.0 && problem.hazard_scale() == 1.0;
    const Vec3 scale = residual_scale(problem);
    const double s_lambda = std::abs(guess.lambda_x0) + 1e-3;
    const double s_tf = guess.tf;
    auto unpack = [&](const VecX& z) { return ShootingParams{z[0] * s_lambda, z[1], z[2] * s_tf}; };

    Attempt out;
    out.params = guess;
    std::string last_failure;
    const ResidualFunction fn = [&](const VecX& z) -> VecX {
        if (deadline && Clock::now() > *deadline) throw TimeLimitReached{};
        const ShootingParams p = unpack(z);
        try {
            const VecX r = shoot_residual(problem, p, config.steps).cwiseQuotient(scale);
            if (r.norm() < out.norm) {
                out.norm = r.norm();
                out.params = p;
                out.trace.push_back(p);
                if (is_full && best_full && r.norm() < best_full->norm) *best_full = {p, r.norm()};
            }
            return r;
        } catch (const SolverError& e) {
            last_failure = e.what();
        } catch (const DomainError& e) {
            last_failure = e.what();
        }
        return VecX::Constant(3, kFailureResidual);
    };

    LeastSquaresOptions lm;
    lm.max_iterations = config.max_iterations;
    lm.residual_tolerance = config.tolerance;
    lm.step_tolerance = 1e-15;
    lm.fd_step = 1e-6;
    const VecX z0 = Vec3(guess.lambda_x0 / s_lambda, guess.chi0, 1.0);
    const LeastSquaresResult res = levenberg_marquardt(fn, z0, lm);
    out.params = unpack(res.x);
    out.norm = res.norm;
    out.converged = res.converged && res.norm <= config.tolerance;
    out.iterations = res.iterations;
    out.history = res.history;
    out.failure = last_failure;
    return out;
}

} // namespace

Solution solve(const Scenario& scenario, const SolverConfig& config) {
    scenario.validate();
    const auto t0 = Clock::now();
    std::optional<Clock::time_point> deadline;
    if (config.time_limit > 0.0)
        deadline = t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(config.time_limit));

    const SurrogateProblem full(scenario);
    std::vector<std::string> diagnostics;
    int total_iterations = 0;
    Attempt best;
    BestSeen seen;
    bool timed_out = false;

    auto run = [&](const SurrogateProblem& problem, const ShootingParams& guess) {
        Attempt a = shoot(problem, guess, config, deadline, &seen);
        total_iterations += a.iterations;
        return a;
    };

    try {
        const ShootingParams guess = config.initial_guess ? *config.initial_guess : initial_guess(full);
        best = run(full, guess);
        if (!best.converged && config.continuation) {
            std::ostringstream os;
            os << "direct shooting stalled at |r| = " << best.norm << "; continuing from the wind- and hazard-free problem";
            diagnostics.push_back(os.str());
            double s = 0.0;
            const SurrogateProblem base(scenario, 0.0, 0.0);
            Attempt stage = run(base, initial_guess(base));
            double ds = 1.0 / std::max(1, config.continuation_stages);
            while (stage.converged && s < 1.0) {
                const double next = std::min(1.0, s + ds);
                const SurrogateProblem prob(scenario, next, next);
                Attempt trial = run(prob, stage.params);
                if (trial.converged) {
                    s = next;
                    stage = trial;
                    ds = std::min(2.0 * ds, 1.0);
                } else if (ds > 1.0 / 256.0) {
                    ds *= 0.5;
                } else {
                    std::ostringstream msg;
                    msg << "continuation stalled at scale " << s;
                    diagnostics.push_back(msg.str());
                    break;
                }
            }
            if (stage.converged && s >= 1.0) best = stage;
        }
    } catch (const TimeLimitReached&) {
        timed_out = true;
        best.converged = false;
        if (std::isfinite(seen.norm)) {
            best.params = seen.params;
            best.norm = seen.norm;
        }
        diagnostics.push_back("wall-time limit reached; returning best iterate");
    }

    Solution sol;
    try {
        sol = assemble_solution(full, best.params, config.steps);
    } catch (const SolverError& e) {
        sol.params = best.params;
        diagnostics.push_back(std::string("final trajectory could not be integrated: ") + e.what());
    }
    sol.converged = best.converged && !timed_out;
    sol.timed_out = timed_out;
    sol.iterations = total_iterations;
    sol.residual_history = best.history;
    sol.parameter_trace = best.trace;
    if (!best.failure.empty() && !sol.converged) diagnostics.push_back(best.failure);
    if (!sol.converged && !timed_out) {
        std::ostringstream os;
        os << "shooting did not converge: best scaled residual " << best.norm;
        diagnostics.push_back(os.str());
    }
    sol.diagnostics = std::move(diagnostics);
    sol.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return sol;
}

} // namespace cruise
