#include "cruise/direct.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace cruise {

namespace {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Mat42 = Eigen::Matrix<double, 4, 2>;


VecX project(const VecX& x, const VecX& lo, const VecX& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

VecX projected_gradient(const VecX& x, const VecX& g, const VecX& lo, const VecX& hi) {
    VecX pg = g;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if ((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)) pg[i] = 0.0;
    }
    return pg;
}

} // namespace

LbfgsResult projected_lbfgs(const BoxProblem& problem, VecX x0, const LbfgsOptions& options) {
    const VecX& lo = problem.lower;
    const VecX& hi = problem.upper;
    LbfgsResult out;
    out.x = project(x0, lo, hi);
    VecX g(out.x.size());
    out.value = problem.value_and_gradient(out.x, g);

    std::deque<std::pair<VecX, VecX>> memory;  // (s, y)
    int stalls = 0;
    for (int it = 0; it < options.max_iterations; ++it) {
        const VecX pg = projected_gradient(out.x, g, lo, hi);
        out.projected_gradient = pg.lpNorm<Eigen::Infinity>();
        out.iterations = it;
        if (out.projected_gradient <= options.gradient_tolerance) {
            out.converged = true;
            return out;
        }

        // Two-loop recursion restricted to the free variables.
        VecX d = -pg;
        std::vector<double> alpha(memory.size());
        for (int j = static_cast<int>(memory.size()) - 1; j >= 0; --j) {
            const auto& [s, y] = memory[j];
            alpha[j] = s.dot(d) / y.dot(s);
            d -= alpha[j] * y;
        }
        if (!memory.empty()) {
            const auto& [s, y] = memory.back();
            d *= s.dot(y) / y.dot(y);
        } else {
            d *= 1.0 / std::max(1.0, pg.lpNorm<Eigen::Infinity>());
        }
        for (std::size_t j = 0; j < memory.size(); ++j) {
            const auto& [s, y] = memory[j];
            const double beta = y.dot(d) / y.dot(s);
            d += (alpha[j] - beta) * s;
        }
        for (Eigen::Index i = 0; i < d.size(); ++i)
            if (pg[i] == 0.0) d[i] = 0.0;
        if (!(d.dot(pg) < 0.0)) {
            memory.clear();
            d = -pg / std::max(1.0, pg.lpNorm<Eigen::Infinity>());
        }

        double step = 1.0;
        VecX x_new, g_new(g.size());
        double f_new = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = project(out.x + step * d, lo, hi);
            f_new = problem.value_and_gradient(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= out.value + 1e-4 * g.dot(x_new - out.x)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (memory.empty()) return out;
            memory.clear();
            continue;
        }
        const VecX s = x_new - out.x;
        const VecX y = g_new - g;
        const double decrease = out.value - f_new;
        out.x = x_new;
        g = g_new;
        out.value = f_new;
        if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
            memory.emplace_back(s, y);
            if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
        }
        stalls = decrease <= 1e-15 * std::max(1.0, std::abs(out.value)) ? stalls + 1 : 0;
        if (stalls >= 5) break;
    }
    out.projected_gradient = projected_gradient(out.x, g, lo, hi).lpNorm<Eigen::Infinity>();
    out.converged = out.projected_gradient <= options.gradient_tolerance;
    return out;
}

namespace {

struct StageTerms {
    Vec4 f;
    Mat4 fx;
    Mat42 fu;
};

} // namespace

DirectTranscription::DirectTranscription(const Scenario& scenario, int nodes)
    : scenario_(&scenario), perf_(scenario.aircraft, scenario.altitude), nodes_(nodes) {
    if (nodes < 10) throw DomainError("direct transcription needs at least 10 nodes");
    v_min_ = perf_.speed_at_mach(scenario.bounds.mach_min);
    v_max_ = perf_.speed_at_mach(scenario.bounds.mach_max);
    v_ref_ = v_max_;
    length_scale_ = (scenario.target - scenario.start).norm();
    // tf enters every step; scaling it by sqrt(N) matches its curvature to the per-node controls.
    tau_scale_ = std::sqrt(static_cast<double>(nodes));
    tf_ref_ = 1.0;
    obj_scale_ = 1.0;
    const VecX w0 = initial_point();
    tf_ref_ = final_time(w0);
    const Evaluation e = evaluate(initial_point());
    const Vec4& end = e.states.back();
    obj_scale_ = std::max(1.0, std::abs(scenario.weights.time) * tf_ref_ +
                                   std::abs(scenario.weights.mass) * (scenario.initial_mass - end[2]) +
                                   std::abs(end[3]));
}

VecX DirectTranscription::lower_bounds() const {
    VecX lo(variable_count());
    for (int k = 0; k < nodes_; ++k) {
        lo[2 * k] = v_min_ / v_ref_;
        lo[2 * k + 1] = scenario_->bounds.heading_min;
    }
    lo[2 * nodes_] = 0.2 * tau_scale_;
    return lo;
}

VecX DirectTranscription::upper_bounds() const {
    VecX hi(variable_count());
    for (int k = 0; k < nodes_; ++k) {
        hi[2 * k] = v_max_ / v_ref_;
        hi[2 * k + 1] = scenario_->bounds.heading_max;
    }
    hi[2 * nodes_] = 5.0 * tau_scale_;
    return hi;
}

VecX DirectTranscription::initial_point() const {
    const Scenario& sc = *scenario_;
    const Vec2 chord = sc.target - sc.start;
    const double heading = std::clamp(std::atan2(chord.y(), chord.x()), sc.bounds.heading_min, sc.bounds.heading_max);
    const double v = perf_.speed_at_mach(std::clamp(0.78, sc.bounds.mach_min, sc.bounds.mach_max));
    double along = 0.0;
    constexpr int probes = 16;
    const Vec2 u = chord.normalized();
    for (int i = 0; i < probes; ++i) along += sc.wind.velocity(sc.start + chord * (i + 0.5) / probes).dot(u) / probes;
    VecX w(variable_count());
    for (int k = 0; k < nodes_; ++k) {
        w[2 * k] = v / v_ref_;
        w[2 * k + 1] = heading;
    }
    w[2 * nodes_] = chord.norm() / std::max(v + along, 0.05 * v) / tf_ref_ * tau_scale_;
    return w;
}

Vec4 DirectTranscription::rhs(const Vec4& s, double v, double chi) const {
    const Vec2 p(s[0], s[1]);
    const Vec2 w = scenario_->wind.velocity(p);
    const double g = penalty(scenario_->hazards, p, scenario_->penalty_epsilon).value;
    return {v * std::cos(chi) + w.x(), v * std::sin(chi) + w.y(), perf_.fuel_flow(s[2], v).rate, g};
}

DirectTranscription::Evaluation DirectTranscription::evaluate(const VecX& w) const {
    const Scenario& sc = *scenario_;
    const double tf = final_time(w);
    const double h = tf / nodes_;
    Evaluation e;
    e.states.resize(nodes_ + 1);
    e.states[0] = Vec4(sc.start.x(), sc.start.y(), sc.initial_mass, 0.0);
    e.inequality.resize(2 * nodes_);
    for (int k = 0; k < nodes_; ++k) {
        const double v = w[2 * k] * v_ref_;
        const double chi = w[2 * k + 1];
        const Vec4& x = e.states[k];
        const double pi = perf_.throttle(x[2], v);
        e.inequality[2 * k] = sc.bounds.throttle_min - pi;
        e.inequality[2 * k + 1] = pi - sc.bounds.throttle_max;
        const Vec4 k1 = rhs(x, v, chi);
        const Vec4 k2 = rhs(x + 0.5 * h * k1, v, chi);
        const Vec4 k3 = rhs(x - h * k1 + 2.0 * h * k2, v, chi);
        e.states[k + 1] = x + (h / 6.0) * (k1 + 4.0 * k2 + k3);
    }
    const Vec4& end = e.states.back();
    e.equality = Vec2((end[0] - sc.target.x()) / length_scale_, (end[1] - sc.target.y()) / length_scale_);
    e.objective = (sc.weights.time * tf + sc.weights.mass * (end[2] - sc.initial_mass) + end[3]) / obj_scale_;
    return e;
}

double DirectTranscription::objective(const Evaluation& e, const VecX& w) const {
    const Vec4& end = e.states.back();
    return scenario_->weights.time * final_time(w) + scenario_->weights.mass * end[2] + end[3];
}

double DirectTranscription::lagrangian(const VecX& w, const VecX& mu_eq, const VecX& mu_in, double rho,
                                       VecX* grad) const {
    const Scenario& sc = *scenario_;
    const double tf = final_time(w);
    const double h = tf / nodes_;

    auto stage = [&](const Vec4& s, double v, double chi) {
        const Vec2 p(s[0], s[1]);
        const WindSample ws = sc.wind.sample(p);
        const PenaltySample g = penalty(sc.hazards, p, sc.penalty_epsilon);
        const DragTerms d = perf_.drag(s[2], v);
        const SpeedSlope cs = perf_.sfc(v);
        StageTerms t;
        const double c = std::cos(chi), sn = std::sin(chi);
        t.f << v * c + ws.velocity.x(), v * sn + ws.velocity.y(), -cs.value * d.drag, g.value;
        t.fx.setZero();
        t.fx.block<2, 2>(0, 0) = ws.jacobian;
        t.fx(2, 2) = -cs.value * d.d_mass;
        t.fx(3, 0) = g.gradient.x();
        t.fx(3, 1) = g.gradient.y();
        t.fu.setZero();
        t.fu(0, 0) = c;
        t.fu(0, 1) = -v * sn;
        t.fu(1, 0) = sn;
        t.fu(1, 1) = v * c;
        t.fu(2, 0) = -(cs.d_speed * d.drag + cs.value * d.d_speed);
        return t;
    };

    // Forward sweep keeping stage points.
    std::vector<Vec4> xs(nodes_ + 1);
    std::vector<std::array<Vec4, 3>> ys(nodes_), ks(nodes_);
    xs[0] = Vec4(sc.start.x(), sc.start.y(), sc.initial_mass, 0.0);
    for (int k = 0; k < nodes_; ++k) {
        const double v = w[2 * k] * v_ref_;
        const double chi = w[2 * k + 1];
        auto& y = ys[k];
        auto& kk = ks[k];
        y[0] = xs[k];
        kk[0] = rhs(y[0], v, chi);
        y[1] = xs[k] + 0.5 * h * kk[0];
        kk[1] = rhs(y[1], v, chi);
        y[2] = xs[k] - h * kk[0] + 2.0 * h * kk[1];
        kk[2] = rhs(y[2], v, chi);
        xs[k + 1] = xs[k] + (h / 6.0) * (kk[0] + 4.0 * kk[1] + kk[2]);
    }
    const Vec4& end = xs.back();
    const Vec2 ceq((end[0] - sc.target.x()) / length_scale_, (end[1] - sc.target.y()) / length_scale_);
    double value = (sc.weights.time * tf + sc.weights.mass * (end[2] - sc.initial_mass) + end[3]) / obj_scale_;
    value += mu_eq.dot(ceq) + 0.5 * rho * ceq.squaredNorm();

    std::vector<double> throttle_weight(nodes_);
    for (int k = 0; k < nodes_; ++k) {
        const double v = w[2 * k] * v_ref_;
        const double pi = perf_.throttle(xs[k][2], v);
        const double c_lo = sc.bounds.throttle_min - pi;
        const double c_hi = pi - sc.bounds.throttle_max;
        const double l_lo = std::max(0.0, mu_in[2 * k] + rho * c_lo);
        const double l_hi = std::max(0.0, mu_in[2 * k + 1] + rho * c_hi);
        value += (l_lo * l_lo - mu_in[2 * k] * mu_in[2 * k]) / (2.0 * rho);
        value += (l_hi * l_hi - mu_in[2 * k + 1] * mu_in[2 * k + 1]) / (2.0 * rho);
        throttle_weight[k] = l_hi - l_lo;  // dL/dPi
    }
    if (!grad) return value;

    VecX& gw = *grad;
    gw.setZero(variable_count());
    double h_bar = 0.0;
    Vec4 a;
    a << (mu_eq[0] + rho * ceq[0]) / length_scale_, (mu_eq[1] + rho * ceq[1]) / length_scale_,
        sc.weights.mass / obj_scale_, 1.0 / obj_scale_;
    double tf_bar = sc.weights.time / obj_scale_;

    for (int k = nodes_ - 1; k >= 0; --k) {
        const double v = w[2 * k] * v_ref_;
        const double chi = w[2 * k + 1];
        const auto& y = ys[k];
        const auto& kk = ks[k];
        Eigen::Vector2d u_bar = Eigen::Vector2d::Zero();
        Vec4 x_bar = a;
        Vec4 k1_bar = (h / 6.0) * a;
        Vec4 k2_bar = (2.0 * h / 3.0) * a;
        const Vec4 k3_bar = (h / 6.0) * a;
        h_bar += a.dot(kk[0] + 4.0 * kk[1] + kk[2]) / 6.0;

        const StageTerms t3 = stage(y[2], v, chi);
        const Vec4 y3_bar = t3.fx.transpose() * k3_bar;
        u_bar += t3.fu.transpose() * k3_bar;
        x_bar += y3_bar;
        k1_bar += -h * y3_bar;
        k2_bar += 2.0 * h * y3_bar;
        h_bar += (-kk[0] + 2.0 * kk[1]).dot(y3_bar);

        const StageTerms t2 = stage(y[1], v, chi);
        const Vec4 y2_bar = t2.fx.transpose() * k2_bar;
        u_bar += t2.fu.transpose() * k2_bar;
        x_bar += y2_bar;
        k1_bar += 0.5 * h * y2_bar;
        h_bar += 0.5 * kk[0].dot(y2_bar);

        const StageTerms t1 = stage(y[0], v, chi);
        x_bar += t1.fx.transpose() * k1_bar;
        u_bar += t1.fu.transpose() * k1_bar;

        // Throttle constraint at node k depends on m_k and v_k.
        if (throttle_weight[k] != 0.0) {
            const DragTerms d = perf_.drag(xs[k][2], v);
            const SpeedSlope tm = perf_.thrust_max(v);
            x_bar[2] += throttle_weight[k] * d.d_mass / tm.value;
            u_bar[0] += throttle_weight[k] * (d.d_speed * tm.value - d.drag * tm.d_speed) / (tm.value * tm.value);
        }
        gw[2 * k] = u_bar[0] * v_ref_;
        gw[2 * k + 1] = u_bar[1];
        a = x_bar;
    }
    tf_bar += h_bar / nodes_;
    gw[2 * nodes_] = tf_bar * tf_ref_ / tau_scale_;
    return value;
}

Trajectory DirectTranscription::trajectory(const VecX& w) const {
    const Scenario& sc = *scenario_;
    const Evaluation e = evaluate(w);
    const double h = final_time(w) / nodes_;
    Trajectory traj;
    for (int k = 0; k <= nodes_; ++k) {
        const int c = std::min(k, nodes_ - 1);
        TrajectoryNode n;
        n.t = k * h;
        n.x = e.states[k][0];
        n.y = e.states[k][1];
        n.m = e.states[k][2];
        n.z = e.states[k][3];
        n.v = w[2 * c] * v_ref_;
        n.chi = w[2 * c + 1];
        n.q = std::tan(n.chi);
        n.throttle = perf_.throttle(n.m, n.v);
        const double tol = 1e-9 * v_max_;
        if (n.v <= v_min_ + tol) n.speed_arc = SpeedArc::v_min;
        else if (n.v >= v_max_ - tol) n.speed_arc = SpeedArc::v_max;
        else if (n.throttle >= sc.bounds.throttle_max - 1e-6) n.speed_arc = SpeedArc::throttle_max;
        else if (n.throttle <= sc.bounds.throttle_min + 1e-6) n.speed_arc = SpeedArc::throttle_min;
        if (n.chi <= sc.bounds.heading_min + 1e-12) n.heading_arc = HeadingArc::chi_min;
        if (n.chi >= sc.bounds.heading_max - 1e-12) n.heading_arc = HeadingArc::chi_max;
        traj.nodes.push_back(n);
    }
    return traj;
}

DirectSolution solve_direct(const Scenario& scenario, const DirectConfig& config) {
    scenario.validate();
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const DirectTranscription tr(scenario, config.nodes);
    VecX w = tr.initial_point();
    VecX mu_eq = VecX::Zero(2);
    VecX mu_in = VecX::Zero(2 * config.nodes);
    double rho = config.initial_penalty;

    DirectSolution out;
    double previous = std::numeric_limits<double>::infinity();
    bool inner_ok = false;
    double violation = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < config.max_outer_iterations; ++outer) {
        BoxProblem box;
        box.lower = tr.lower_bounds();
        box.upper = tr.upper_bounds();
        box.value_and_gradient = [&](const VecX& x, VecX& g) { return tr.lagrangian(x, mu_eq, mu_in, rho, &g); };
        LbfgsOptions opt;
        opt.max_iterations = config.max_inner_iterations;
        opt.memory = config.memory;
        opt.gradient_tolerance = config.optimality_tolerance;
        const LbfgsResult inner = projected_lbfgs(box, w, opt);
        w = inner.x;
        inner_ok = inner.converged;
        out.inner_iterations += inner.iterations;
        out.outer_iterations = outer + 1;

        const auto e = tr.evaluate(w);
        violation = e.equality.lpNorm<Eigen::Infinity>();
        violation = std::max(violation, e.inequality.maxCoeff());
        violation = std::max(violation, 0.0);
        out.violation_history.push_back(violation);
        if (violation <= config.feasibility_tolerance && inner_ok) break;
        if (config.time_limit > 0.0 && std::chrono::duration<double>(Clock::now() - t0).count() > config.time_limit)
            break;

        mu_eq += rho * e.equality;
        for (Eigen::Index i = 0; i < mu_in.size(); ++i) mu_in[i] = std::max(0.0, mu_in[i] + rho * e.inequality[i]);
        if (violation > 0.25 * previous) rho = std::min(rho * 10.0, 1e10);
        previous = std::min(previous, violation);
    }

    const auto e = tr.evaluate(w);
    out.max_violation = violation;
    Solution& sol = out.solution;
    sol.trajectory = tr.trajectory(w);
    sol.final_time = tr.final_time(w);
    sol.final_mass = e.states.back()[2];
    sol.fuel_burned = scenario.initial_mass - sol.final_mass;
    sol.objective = tr.objective(e, w);
    sol.initial_heading = w[1];
    sol.converged = violation <= config.feasibility_tolerance && inner_ok;
    sol.residual = Vec3(e.equality[0] * tr.length_scale(), e.equality[1] * tr.length_scale(), 0.0);
    sol.residual_norm = violation;
    sol.residual_history = out.violation_history;
    sol.iterations = out.inner_iterations;
    if (!sol.converged) {
        std::ostringstream os;
        os << "direct solve stopped with max violation " << violation << (inner_ok ? "" : ", inner loop not converged");
        sol.diagnostics.push_back(os.str());
    }
    sol.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return out;
}

namespace {

double sample_normalized(const Trajectory& traj, double tau, double TrajectoryNode::*field) {
    const auto& n = traj.nodes;
    const double tf = n.back().t;
    const double t = tau * tf;
    auto it = std::upper_bound(n.begin(), n.end(), t, [](double value, const TrajectoryNode& node) {
        return value < node.t;
    });
    if (it == n.begin()) return n.front().*field;
    if (it == n.end()) return n.back().*field;
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double s = (t - a.t) / (b.t - a.t);
    return (1.0 - s) * (a.*field) + s * (b.*field);
}

} // namespace

ComparisonReport compare(const Solution& surrogate, const Solution& direct, const Scenario& scenario) {
    ComparisonReport r;
    const double jd = direct.objective;
    const double js = surrogate.objective;
    r.relative_objective_error = std::abs(js - jd) / std::max(std::abs(jd), 1e-300);
    const double shift = scenario.weights.mass * scenario.initial_mass;
    r.relative_variable_error = std::abs(js - jd) / std::max(std::abs(jd - shift), 1e-300);
    r.final_time_difference = surrogate.final_time - direct.final_time;
    r.time_ratio = surrogate.wall_time > 0.0 ? direct.wall_time / surrogate.wall_time : 0.0;
    if (!surrogate.trajectory.nodes.empty() && !direct.trajectory.nodes.empty()) {
        constexpr int samples = 201;
        double sv = 0.0, sc = 0.0;
        for (int i = 0; i < samples; ++i) {
            const double tau = static_cast<double>(i) / (samples - 1);
            const double dv = sample_normalized(surrogate.trajectory, tau, &TrajectoryNode::v) -
                              sample_normalized(direct.trajectory, tau, &TrajectoryNode::v);
            const double dc = sample_normalized(surrogate.trajectory, tau, &TrajectoryNode::chi) -
                              sample_normalized(direct.trajectory, tau, &TrajectoryNode::chi);
            sv += dv * dv;
            sc += dc * dc;
        }
        r.speed_rms = std::sqrt(sv / samples);
        r.heading_rms = std::sqrt(sc / samples);
    }
    return r;
}

} // namespace cruise
