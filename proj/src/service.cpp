#include "cruise/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <thread>

namespace cruise::service {

namespace {

Reply error(int status, const std::string& message, const std::string& field = "") {
    io::json j = {{"error", message}};
    if (!field.empty()) j["field"] = field;
    return {status, j};
}

/// Runs `f`, mapping input problems to 400 and anything else to 500.
template <typename F>
Reply guarded(F&& f) {
    try {
        return f();
    } catch (const ValidationError& e) {
        return error(400, e.what(), e.field());
    } catch (const DomainError& e) {
        return error(400, e.what());
    } catch (const io::json::exception& e) {
        return error(400, e.what());
    } catch (const std::exception& e) {
        return error(500, e.what());
    }
}

io::json body_object(const std::string& body) {
    io::json j = io::parse_document(body, "request");
    if (!j.is_object()) throw ValidationError("request", "expected a JSON object");
    return j;
}

double number_or(const io::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ValidationError(key, "expected a number");
    return j.at(key).get<double>();
}

Vec2 point_of(const io::json& p, const std::string& field) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw ValidationError(field, "expected [x, y]");
    return Vec2(p[0].get<double>(), p[1].get<double>());
}

} // namespace

Reply health() {
    return {200,
            {{"status", "ok"},
             {"service", "cruiseopt"},
             {"version", io::kVersion},
             {"schema_version", io::kSchemaVersion},
             {"build", std::string(__DATE__) + " " + __TIME__},
             {"compiler", __VERSION__}}};
}

Reply solve(const std::string& body, bool full, const Options& options) {
    return guarded([&]() -> Reply {
        const io::json req = body_object(body);
        Scenario scenario;
        SolverConfig config;
        config.time_limit = options.solve_time_cap;
        const bool wrapped = req.contains("scenario");
        if (wrapped && req.at("scenario").is_string()) {
            if (req.at("scenario").get<std::string>() != "nominal")
                throw ValidationError("scenario", "only the built-in 'nominal' scenario may be referenced by name");
            scenario = Scenario::nominal();
        } else {
            scenario = io::scenario_from_json(wrapped ? req.at("scenario") : req);
        }
        if (wrapped && req.contains("solver")) {
            const io::json& s = req.at("solver");
            if (!s.is_object()) throw ValidationError("solver", "expected an object");
            config.steps = static_cast<int>(number_or(s, "steps", config.steps));
            config.max_iterations = static_cast<int>(number_or(s, "max_iterations", config.max_iterations));
            config.tolerance = number_or(s, "tolerance", config.tolerance);
            const double cap = number_or(s, "time_limit_s", config.time_limit);
            config.time_limit = options.solve_time_cap > 0.0 ? std::min(cap, options.solve_time_cap) : cap;
            if (s.contains("continuation")) config.continuation = s.at("continuation").get<bool>();
            if (config.steps < 10) throw ValidationError("solver.steps", "steps >= 10");
        }
        const Solution sol = cruise::solve(scenario, config);
        io::json out = {{"summary", io::summary(sol, scenario)},
                        {"trajectory", io::trajectory_json(sol.trajectory, scenario, full ? 0 : 500)},
                        {"residual_history", sol.residual_history},
                        {"solver", io::to_json(config)}};
        if (sol.converged) return {200, out};
        if (sol.timed_out) {
            out["error"] = "solve exceeded the time cap; best iterate returned";
            return {504, out};
        }
        out["error"] = "solver did not converge; best iterate returned";
        return {422, out};
    });
}

Reply wind_sample(const std::string& body) {
    return guarded([&]() -> Reply {
        const io::json req = body_object(body);
        const auto seed = req.value("seed", std::uint64_t{1});
        const double max_speed = number_or(req, "max_speed_mps", 20.0);
        PrimitiveCounts counts{3, 1, 2};
        if (req.contains("counts")) {
            const io::json& c = req.at("counts");
            counts.vortices = c.value("vortices", counts.vortices);
            counts.dipoles = c.value("dipoles", counts.dipoles);
            counts.sources = c.value("sources", counts.sources);
        }
        Domain domain = Domain::square(1.0e6);
        if (req.contains("domain_m")) {
            const io::json& d = req.at("domain_m");
            if (!d.is_array() || d.size() != 4) throw ValidationError("domain_m", "expected [x_min, x_max, y_min, y_max]");
            domain = {d[0].get<double>(), d[1].get<double>(), d[2].get<double>(), d[3].get<double>()};
        }
        if (!(max_speed > 0.0)) throw ValidationError("max_speed_mps", "max_speed > 0");
        if (counts.vortices < 0 || counts.dipoles < 0 || counts.sources < 0)
            throw ValidationError("counts", "counts must be nonnegative");
        const WindField field = sample_random_field(seed, max_speed, counts, domain);
        io::json out = {{"seed", seed}, {"wind", io::to_json(field)}};
        if (req.contains("probes_m")) {
            io::json probes = io::json::array();
            const io::json& ps = req.at("probes_m");
            if (!ps.is_array()) throw ValidationError("probes_m", "expected an array of points");
            for (std::size_t i = 0; i < ps.size(); ++i) {
                const Vec2 w = field.velocity(point_of(ps[i], "probes_m"));
                probes.push_back({w.x(), w.y()});
            }
            out["probes"] = probes;
        }
        return {200, out};
    });
}

Reply hazards_cluster(const std::string& body) {
    return guarded([&]() -> Reply {
        const io::json req = body_object(body);
        if (!req.contains("points_m") || !req.at("points_m").is_array())
            throw ValidationError("points_m", "expected an array of points");
        std::vector<Vec2> points;
        for (const auto& p : req.at("points_m")) points.push_back(point_of(p, "points_m"));
        if (!req.contains("k") || !req.at("k").is_number_integer()) throw ValidationError("k", "expected an integer");
        const int k = req.at("k").get<int>();
        if (k < 1 || static_cast<std::size_t>(k) > points.size())
            throw ValidationError("k", "need 1 <= K <= number of points");
        ClusterOptions opts;
        opts.seed = req.value("seed", opts.seed);
        opts.weight = number_or(req, "weight", opts.weight);
        return {200, io::to_json(cluster_ellipses(points, k, opts))};
    });
}

std::unique_ptr<httplib::Server> make_server(const Options& options) {
    auto server = std::make_unique<httplib::Server>();
    const int workers = options.workers > 0 ? options.workers
                                            : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    server->new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
    server->set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"}});

    auto send = [](httplib::Response& res, const Reply& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server->Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server->Get("/health", [send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
    server->Post("/solve", [send, options](const httplib::Request& req, httplib::Response& res) {
        const bool full = req.has_param("full") && req.get_param_value("full") == "true";
        send(res, solve(req.body, full, options));
    });
    server->Post("/wind/sample",
                 [send](const httplib::Request& req, httplib::Response& res) { send(res, wind_sample(req.body)); });
    server->Post("/hazards/cluster",
                 [send](const httplib::Request& req, httplib::Response& res) { send(res, hazards_cluster(req.body)); });
    return server;
}

} // namespace cruise::service
