#include "cruise/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace cruise::io {

namespace {

json vec(const Vec2& v) { return json::array({v.x(), v.y()}); }

std::string key(const std::string& parent, const std::string& k) { return parent.empty() ? k : parent + "." + k; }

/// Reader over one JSON object that checks types and remembers which keys it consumed.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_.empty() ? "document" : path_, "expected an object");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    double number(const std::string& k, double fallback) {
        used_.insert(k);
        if (!j_.contains(k)) return fallback;
        const json& v = j_.at(k);
        if (!v.is_number()) throw ValidationError(key(path_, k), "expected a number");
        return v.get<double>();
    }

    double number(const std::string& k) {
        if (!j_.contains(k)) throw ValidationError(key(path_, k), "required field missing");
        return number(k, 0.0);
    }

    Vec2 point(const std::string& k, const Vec2& fallback) {
        used_.insert(k);
        if (!j_.contains(k)) return fallback;
        const json& v = j_.at(k);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ValidationError(key(path_, k), "expected [x, y]");
        return Vec2(v[0].get<double>(), v[1].get<double>());
    }

    Vec2 point(const std::string& k) {
        if (!j_.contains(k)) throw ValidationError(key(path_, k), "required field missing");
        return point(k, Vec2::Zero());
    }

    std::string text(const std::string& k, const std::string& fallback) {
        used_.insert(k);
        if (!j_.contains(k)) return fallback;
        if (!j_.at(k).is_string()) throw ValidationError(key(path_, k), "expected a string");
        return j_.at(k).get<std::string>();
    }

    const json* child(const std::string& k) {
        used_.insert(k);
        return j_.contains(k) ? &j_.at(k) : nullptr;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw ValidationError(key(path_, k), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

std::string indexed(const std::string& base, std::size_t i) {
    std::ostringstream os;
    os << base << "[" << i << "]";
    return os.str();
}

} // namespace

json to_json(const WindPrimitive& p) {
    return std::visit(
        [](const auto& x) -> json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, UniformFlow>) {
                return {{"type", "uniform"}, {"u_mps", x.u}, {"v_mps", x.v}};
            } else if constexpr (std::is_same_v<T, Vortex>) {
                return {{"type", "vortex"}, {"circulation_m2ps", x.circulation}, {"center_m", vec(x.center)},
                        {"radius_m", x.core_radius}};
            } else if constexpr (std::is_same_v<T, Dipole>) {
                return {{"type", "dipole"}, {"moment_m3ps", vec(x.moment)}, {"center_m", vec(x.center)},
                        {"radius_m", x.radius}};
            } else {
                return {{"type", "source"}, {"strength_m2ps", x.strength}, {"center_m", vec(x.center)},
                        {"radius_m", x.radius}};
            }
        },
        p);
}

json to_json(const WindField& field) {
    json prims = json::array();
    for (const auto& p : field.primitives()) prims.push_back(to_json(p));
    return {{"primitives", prims}};
}

json to_json(const EllipseHazard& h) {
    json j = {{"center_m", vec(h.center)},    {"a_m", h.semi_major},
              {"b_m", h.semi_minor},          {"orientation_rad", h.orientation},
              {"weight", h.weight},           {"mode", h.mode == PenaltyMode::soft ? "soft" : "hard"}};
    if (h.mode == PenaltyMode::hard) {
        j["center_log"] = h.center_log;
        j["perimeter_log"] = h.perimeter_log;
    }
    return j;
}

json to_json(const Scenario& s) {
    const AircraftModel& a = s.aircraft;
    json hazards = json::array();
    for (const auto& h : s.hazards) hazards.push_back(to_json(h));
    return {{"schema_version", kSchemaVersion},
            {"name", s.name},
            {"altitude_m", s.altitude},
            {"initial_mass_kg", s.initial_mass},
            {"start_m", vec(s.start)},
            {"target_m", vec(s.target)},
            {"weights", {{"c_t", s.weights.time}, {"c_m", s.weights.mass}}},
            {"bounds",
             {{"mach_min", s.bounds.mach_min},
              {"mach_max", s.bounds.mach_max},
              {"heading_min_rad", s.bounds.heading_min},
              {"heading_max_rad", s.bounds.heading_max},
              {"throttle_min", s.bounds.throttle_min},
              {"throttle_max", s.bounds.throttle_max}}},
            {"penalty_epsilon", s.penalty_epsilon},
            {"aircraft",
             {{"wing_area_m2", a.wing_area},
              {"mtow_kg", a.mtow},
              {"max_fuel_kg", a.max_fuel},
              {"thrust_ref_N", a.thrust_ref},
              {"sfc_ref_kg_per_Ns", a.sfc_ref}}},
            {"wind", to_json(s.wind)},
            {"hazards", hazards}};
}

WindField wind_from_json(const json& j, const std::string& field) {
    ObjectReader r(j, field);
    std::vector<WindPrimitive> prims;
    if (const json* list = r.child("primitives")) {
        if (!list->is_array()) throw ValidationError(field + ".primitives", "expected an array");
        for (std::size_t i = 0; i < list->size(); ++i) {
            const std::string path = indexed(field + ".primitives", i);
            ObjectReader p((*list)[i], path);
            const std::string type = p.text("type", "");
            if (type == "uniform") {
                prims.emplace_back(UniformFlow{p.number("u_mps", 0.0), p.number("v_mps", 0.0)});
            } else if (type == "vortex") {
                prims.emplace_back(Vortex{p.number("circulation_m2ps"), p.point("center_m"), p.number("radius_m")});
            } else if (type == "dipole") {
                prims.emplace_back(Dipole{p.point("moment_m3ps"), p.point("center_m"), p.number("radius_m")});
            } else if (type == "source") {
                prims.emplace_back(SourceSink{p.number("strength_m2ps"), p.point("center_m"), p.number("radius_m")});
            } else {
                throw ValidationError(path + ".type", "expected uniform, vortex, dipole or source");
            }
            p.finish();
        }
    }
    r.finish();
    WindField w(std::move(prims));
    w.validate();
    return w;
}

EllipseHazard hazard_from_json(const json& j, const std::string& field) {
    ObjectReader r(j, field);
    EllipseHazard h;
    h.center = r.point("center_m");
    h.semi_major = r.number("a_m");
    h.semi_minor = r.number("b_m");
    h.orientation = r.number("orientation_rad", 0.0);
    h.weight = r.number("weight", 1.0);
    const std::string mode = r.text("mode", "soft");
    if (mode == "soft") {
        h.mode = PenaltyMode::soft;
    } else if (mode == "hard") {
        h.mode = PenaltyMode::hard;
        h.center_log = r.number("center_log");
        h.perimeter_log = r.number("perimeter_log");
    } else {
        throw ValidationError(field + ".mode", "expected soft or hard");
    }
    r.finish();
    h.validate(field);
    return h;
}

Scenario scenario_from_json(const json& j) {
    ObjectReader r(j, "");
    const double version = r.number("schema_version", kSchemaVersion);
    if (version != kSchemaVersion) throw ValidationError("schema_version", "unsupported schema version");
    Scenario s;
    s.name = r.text("name", s.name);
    s.altitude = r.number("altitude_m", s.altitude);
    s.initial_mass = r.number("initial_mass_kg", s.initial_mass);
    s.start = r.point("start_m", s.start);
    s.target = r.point("target_m", s.target);
    s.penalty_epsilon = r.number("penalty_epsilon", s.penalty_epsilon);
    if (const json* w = r.child("weights")) {
        ObjectReader wr(*w, "weights");
        s.weights.time = wr.number("c_t", s.weights.time);
        s.weights.mass = wr.number("c_m", s.weights.mass);
        wr.finish();
    }
    if (const json* b = r.child("bounds")) {
        ObjectReader br(*b, "bounds");
        ControlBounds& cb = s.bounds;
        cb.mach_min = br.number("mach_min", cb.mach_min);
        cb.mach_max = br.number("mach_max", cb.mach_max);
        cb.heading_min = br.number("heading_min_rad", cb.heading_min);
        cb.heading_max = br.number("heading_max_rad", cb.heading_max);
        cb.throttle_min = br.number("throttle_min", cb.throttle_min);
        cb.throttle_max = br.number("throttle_max", cb.throttle_max);
        br.finish();
    }
    if (const json* a = r.child("aircraft")) {
        ObjectReader ar(*a, "aircraft");
        AircraftModel& m = s.aircraft;
        m.wing_area = ar.number("wing_area_m2", m.wing_area);
        m.mtow = ar.number("mtow_kg", m.mtow);
        m.max_fuel = ar.number("max_fuel_kg", m.max_fuel);
        m.thrust_ref = ar.number("thrust_ref_N", m.thrust_ref);
        m.sfc_ref = ar.number("sfc_ref_kg_per_Ns", m.sfc_ref);
        ar.finish();
    }
    if (const json* w = r.child("wind")) s.wind = wind_from_json(*w, "wind");
    if (const json* hs = r.child("hazards")) {
        if (!hs->is_array()) throw ValidationError("hazards", "expected an array");
        for (std::size_t i = 0; i < hs->size(); ++i) s.hazards.push_back(hazard_from_json((*hs)[i], indexed("hazards", i)));
    }
    r.finish();
    s.validate();
    return s;
}

json parse_document(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + pos, '\n');
        const auto last = text.rfind('\n', pos == 0 ? 0 : pos - 1);
        const auto column = last == std::string::npos ? pos + 1 : pos - last;
        std::ostringstream os;
        os << origin << ":" << line << ":" << column << ": parse error";
        throw ValidationError("document", os.str());
    }
}

Scenario load_scenario(const std::string& name_or_path) {
    if (name_or_path == "nominal") return Scenario::nominal();
    std::ifstream in(name_or_path);
    if (!in) throw ValidationError("scenario", "cannot open " + name_or_path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_json(parse_document(ss.str(), name_or_path));
}

json summary(const Solution& s, const Scenario& scenario) {
    return {{"converged", s.converged},
            {"timed_out", s.timed_out},
            {"objective", s.objective},
            {"final_time_s", s.final_time},
            {"final_mass_kg", s.final_mass},
            {"fuel_burned_kg", s.fuel_burned},
            {"initial_heading_rad", s.initial_heading},
            {"lambda_x0", s.params.lambda_x0},
            {"hamiltonian_drift", s.hamiltonian_drift},
            {"hamiltonian_tolerance", 1e-6 * (1.0 + std::abs(scenario.weights.time))},
            {"residual", {s.residual.x(), s.residual.y(), s.residual.z()}},
            {"residual_norm_scaled", s.residual_norm},
            {"iterations", s.iterations},
            {"wall_time_s", s.wall_time},
            {"diagnostics", s.diagnostics}};
}

json to_json(const SolverConfig& c) {
    json j = {{"steps", c.steps},
              {"max_iterations", c.max_iterations},
              {"tolerance", c.tolerance},
              {"continuation", c.continuation},
              {"continuation_stages", c.continuation_stages},
              {"time_limit_s", c.time_limit}};
    if (c.initial_guess)
        j["initial_guess"] = {{"lambda_x0", c.initial_guess->lambda_x0},
                              {"chi0_rad", c.initial_guess->chi0},
                              {"tf_s", c.initial_guess->tf}};
    return j;
}

json to_json(const DirectConfig& c) {
    return {{"nodes", c.nodes},
            {"max_outer_iterations", c.max_outer_iterations},
            {"max_inner_iterations", c.max_inner_iterations},
            {"memory", c.memory},
            {"feasibility_tolerance", c.feasibility_tolerance},
            {"optimality_tolerance", c.optimality_tolerance},
            {"initial_penalty", c.initial_penalty},
            {"time_limit_s", c.time_limit}};
}

json to_json(const ComparisonReport& r) {
    return {{"relative_objective_error", r.relative_objective_error},
            {"relative_variable_error", r.relative_variable_error},
            {"speed_rms_mps", r.speed_rms},
            {"heading_rms_rad", r.heading_rms},
            {"final_time_difference_s", r.final_time_difference},
            {"time_ratio", r.time_ratio}};
}

json to_json(const StudyConfig& c) {
    return {{"trials", c.trials},
            {"seed", c.seed},
            {"p", c.wind_index},
            {"side_m", c.side},
            {"v0_mps", c.v0},
            {"grid", c.grid},
            {"bins", c.bins},
            {"counts", {{"vortices", c.counts.vortices}, {"dipoles", c.counts.dipoles}, {"sources", c.counts.sources}}},
            {"steps", c.steps},
            {"threads", c.threads},
            {"tail_threshold", c.tail_threshold}};
}

namespace {
json stats_json(const SampleStats& s) {
    return {{"mean", s.mean}, {"std", s.stddev}, {"min", s.min}, {"max", s.max}, {"tail_mass", s.tail_mass}};
}
} // namespace

json to_json(const StudyResult& r) {
    return {{"config", to_json(r.config)},
            {"trials", r.samples.size()},
            {"excluded", r.excluded},
            {"control_ratio", r.control_ratio},
            {"ratio_avg", stats_json(r.avg_stats)},
            {"ratio_band", stats_json(r.band_stats)},
            {"kde_bandwidth_avg", r.avg_density.bandwidth},
            {"kde_bandwidth_band", r.band_density.bandwidth}};
}

json to_json(const TurnpikeScan& s) {
    json cells = json::array();
    for (const auto& c : s.cells)
        cells.push_back({{"throttle", c.throttle},
                         {"mass_kg", c.mass},
                         {"has_root", c.has_root},
                         {"roots", c.root_count},
                         {"speed_mps", c.speed},
                         {"lambda", c.lambda}});
    return {{"excluded", s.excluded},       {"lambda_min", s.lambda_min}, {"lambda_max", s.lambda_max},
            {"all_negative", s.all_negative}, {"sign_consistent", s.sign_consistent}, {"cells", cells}};
}

json to_json(const ClusterResult& r) {
    json hazards = json::array();
    for (const auto& h : r.hazards) hazards.push_back(to_json(h));
    return {{"hazards", hazards}, {"labels", r.labels}, {"warnings", r.warnings}};
}

json trajectory_json(const Trajectory& t, const Scenario& scenario, int max_nodes) {
    const std::size_t n = t.size();
    std::vector<std::size_t> pick;
    if (max_nodes <= 0 || n <= static_cast<std::size_t>(max_nodes)) {
        for (std::size_t i = 0; i < n; ++i) pick.push_back(i);
    } else {
        const int m = std::max(max_nodes, 2);
        for (int k = 0; k < m; ++k)
            pick.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(k) * (n - 1) / (m - 1))));
    }
    const CruisePerformance perf(scenario.aircraft, scenario.altitude);
    json cols = {{"t", json::array()}, {"x", json::array()},   {"y", json::array()},
                 {"v", json::array()}, {"chi", json::array()}, {"Pi", json::array()}};
    for (std::size_t i : pick) {
        const TrajectoryNode& p = t.nodes[i];
        cols["t"].push_back(p.t);
        cols["x"].push_back(p.x);
        cols["y"].push_back(p.y);
        cols["v"].push_back(p.v);
        cols["chi"].push_back(p.chi);
        cols["Pi"].push_back(p.throttle);
    }
    cols["nodes"] = pick.size();
    cols["total_nodes"] = n;
    return cols;
}

namespace {
std::ofstream open_table(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}
} // namespace

void write_trajectory(const std::filesystem::path& path, const Trajectory& t) {
    std::ofstream out = open_table(path);
    out << "t,x,y,m,z,v,chi,q,lambda_x,lambda_y,lambda_m,H,Pi,arc\n";
    for (const TrajectoryNode& p : t.nodes)
        out << p.t << ',' << p.x << ',' << p.y << ',' << p.m << ',' << p.z << ',' << p.v << ',' << p.chi << ','
            << p.q << ',' << p.lambda_x << ',' << p.lambda_y << ',' << p.lambda_m << ',' << p.hamiltonian << ','
            << p.throttle << ',' << p.arc_label() << '\n';
}

void write_history(const std::filesystem::path& path, const std::vector<double>& history, const std::string& column) {
    std::ofstream out = open_table(path);
    out << "iteration," << column << '\n';
    for (std::size_t i = 0; i < history.size(); ++i) out << i << ',' << history[i] << '\n';
}

void write_samples(const std::filesystem::path& path, const StudyResult& r) {
    std::ofstream out = open_table(path);
    out << "trial,seed,converged,t_rand,t_avg,t_band,ratio_avg,ratio_band,mean_wind,band_wind,band_width\n";
    for (const TrialSample& s : r.samples)
        out << s.trial << ',' << s.seed << ',' << s.converged << ',' << s.t_rand << ',' << s.t_avg << ',' << s.t_band
            << ',' << s.ratio_avg << ',' << s.ratio_band << ',' << s.mean_speed << ',' << s.band_speed << ','
            << s.band.band_width << '\n';
}

void write_pdf(const std::filesystem::path& path, const StudyResult& r) {
    std::ofstream out = open_table(path);
    out << "kind,series,x,density\n";
    auto emit = [&](const char* kind, const char* series, const std::vector<double>& x, const std::vector<double>& d) {
        for (std::size_t i = 0; i < x.size(); ++i) out << kind << ',' << series << ',' << x[i] << ',' << d[i] << '\n';
    };
    emit("histogram", "avg", r.avg_histogram.centers, r.avg_histogram.density);
    emit("histogram", "band", r.band_histogram.centers, r.band_histogram.density);
    emit("kde", "avg", r.avg_density.points, r.avg_density.density);
    emit("kde", "band", r.band_density.points, r.band_density.density);
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out = open_table(path);
    out << j.dump(2) << '\n';
}

namespace {
std::vector<std::vector<double>> read_rows(const std::filesystem::path& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw ValidationError("file", "cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (row.empty() && rows.empty()) continue;  // header
        if (row.size() != columns || !ss.eof()) {
            std::ostringstream os;
            os << path.string() << ":" << line_no << ": expected " << columns << " numeric columns";
            throw ValidationError("file", os.str());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}
} // namespace

std::vector<WindSamplePoint> read_wind_samples(const std::filesystem::path& path) {
    std::vector<WindSamplePoint> out;
    for (const auto& r : read_rows(path, 4)) out.push_back({Vec2(r[0], r[1]), Vec2(r[2], r[3])});
    return out;
}

void write_wind_samples(const std::filesystem::path& path, const std::vector<WindSamplePoint>& samples) {
    std::ofstream out = open_table(path);
    out << "x,y,Wx,Wy\n";
    for (const auto& s : samples)
        out << s.position.x() << ',' << s.position.y() << ',' << s.velocity.x() << ',' << s.velocity.y() << '\n';
}

std::vector<Vec2> read_points(const std::filesystem::path& path) {
    std::vector<Vec2> out;
    for (const auto& r : read_rows(path, 2)) out.emplace_back(r[0], r[1]);
    return out;
}

} // namespace cruise::io
