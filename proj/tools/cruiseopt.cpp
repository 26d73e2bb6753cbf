// Command-line front end: one subcommand per process, one run directory per
// invocation holding report.json plus the delimited tables.

#include "cruise/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>

using namespace cruise;
namespace fs = std::filesystem;
using io::json;

namespace {

constexpr int kOk = 0;
constexpr int kNotConverged = 1;
constexpr int kInputError = 2;

std::string default_out_root() {
    const char* env = std::getenv("CRUISEOPT_OUT");
    return env && *env ? env : "runs";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path run_dir(const std::string& root, const std::string& command, const std::string& tag) {
    fs::path dir = fs::path(root) / (tag.empty() ? command : command + "_" + tag);
    fs::create_directories(dir);
    return dir;
}

void finish(const fs::path& dir, json report) {
    report["version"] = io::kVersion;
    report["run_dir"] = dir.string();
    io::write_json(dir / "report.json", report);
    std::cout << "report: " << (dir / "report.json").string() << '\n';
}

struct SolveArgs {
    std::string scenario = "nominal";
    int steps = 300;
    int max_iterations = 200;
    bool no_continuation = false;
    double time_limit = 0.0;
};

SolverConfig solver_config(const SolveArgs& a) {
    SolverConfig c;
    c.steps = a.steps;
    c.max_iterations = a.max_iterations;
    c.continuation = !a.no_continuation;
    c.time_limit = a.time_limit;
    return c;
}

void add_solve_flags(CLI::App* cmd, SolveArgs& a) {
    cmd->add_option("--scenario", a.scenario, "'nominal' or a scenario JSON file")->capture_default_str();
    cmd->add_option("--dt-steps", a.steps, "RK3 steps over [0, tf]")->check(CLI::Range(10, 1000000))->capture_default_str();
    cmd->add_option("--max-iterations", a.max_iterations, "shooting iterations per stage")->capture_default_str();
    cmd->add_flag("--no-continuation", a.no_continuation, "disable wind/hazard homotopy");
    cmd->add_option("--time-limit", a.time_limit, "wall-time cap in seconds (0 = none)");
}

void print_solution(const char* label, const Solution& s) {
    std::cout << label << ": converged=" << (s.converged ? "yes" : "no") << " J=" << s.objective
              << " tf=" << s.final_time << " s fuel=" << s.fuel_burned << " kg |H+c_t|max=" << s.hamiltonian_drift
              << " iterations=" << s.iterations << " wall=" << s.wall_time << " s\n";
}

int cmd_solve(const SolveArgs& a, const std::string& out) {
    const Scenario scenario = io::load_scenario(a.scenario);
    const SolverConfig config = solver_config(a);
    const Solution sol = solve(scenario, config);
    print_solution("surrogate", sol);
    const fs::path dir = run_dir(out, "solve", scenario.name);
    io::write_trajectory(dir / "trajectory.csv", sol.trajectory);
    io::write_history(dir / "residuals.csv", sol.residual_history);
    finish(dir, {{"command", "solve"},
                 {"scenario", io::to_json(scenario)},
                 {"solver", io::to_json(config)},
                 {"summary", io::summary(sol, scenario)},
                 {"files", {{"trajectory", (dir / "trajectory.csv").string()}, {"residuals", (dir / "residuals.csv").string()}}}});
    return sol.converged ? kOk : kNotConverged;
}

int cmd_direct(const std::string& scenario_name, const DirectConfig& config, const std::string& out) {
    const Scenario scenario = io::load_scenario(scenario_name);
    const DirectSolution d = solve_direct(scenario, config);
    print_solution("direct", d.solution);
    std::cout << "max violation " << d.max_violation << " after " << d.outer_iterations << " outer iterations\n";
    const fs::path dir = run_dir(out, "direct", scenario.name);
    io::write_trajectory(dir / "trajectory.csv", d.solution.trajectory);
    io::write_history(dir / "violations.csv", d.violation_history, "max_violation");
    finish(dir, {{"command", "direct"},
                 {"scenario", io::to_json(scenario)},
                 {"solver", io::to_json(config)},
                 {"summary", io::summary(d.solution, scenario)},
                 {"max_violation", d.max_violation},
                 {"outer_iterations", d.outer_iterations},
                 {"inner_iterations", d.inner_iterations},
                 {"files", {{"trajectory", (dir / "trajectory.csv").string()}, {"violations", (dir / "violations.csv").string()}}}});
    return d.solution.converged ? kOk : kNotConverged;
}

int cmd_compare(const SolveArgs& a, const DirectConfig& dconfig, const std::string& out) {
    const Scenario scenario = io::load_scenario(a.scenario);
    const SolverConfig sconfig = solver_config(a);
    const Solution s = solve(scenario, sconfig);
    const DirectSolution d = solve_direct(scenario, dconfig);
    print_solution("surrogate", s);
    print_solution("direct", d.solution);
    const ComparisonReport r = compare(s, d.solution, scenario);
    std::cout << "relative objective error " << 100.0 * r.relative_objective_error << " %, CT ratio (direct/surrogate) "
              << r.time_ratio << '\n';
    const fs::path dir = run_dir(out, "compare", scenario.name);
    io::write_trajectory(dir / "surrogate.csv", s.trajectory);
    io::write_trajectory(dir / "direct.csv", d.solution.trajectory);
    io::write_history(dir / "residuals.csv", s.residual_history);
    io::write_history(dir / "violations.csv", d.violation_history, "max_violation");
    finish(dir, {{"command", "compare"},
                 {"scenario", io::to_json(scenario)},
                 {"surrogate_solver", io::to_json(sconfig)},
                 {"direct_solver", io::to_json(dconfig)},
                 {"surrogate", io::summary(s, scenario)},
                 {"direct", io::summary(d.solution, scenario)},
                 {"comparison", io::to_json(r)}});
    return s.converged && d.solution.converged ? kOk : kNotConverged;
}

int cmd_cluster(const std::string& points_file, int k, std::uint64_t seed, const std::string& out) {
    const std::vector<Vec2> points = io::read_points(points_file);
    ClusterOptions opts;
    opts.seed = seed;
    const ClusterResult r = cluster_ellipses(points, k, opts);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    const fs::path dir = run_dir(out, "cluster", fs::path(points_file).stem().string());
    finish(dir, {{"command", "cluster"}, {"points", points_file}, {"k", k}, {"seed", seed}, {"result", io::to_json(r)}});
    return kOk;
}

int cmd_wind_fit(const std::string& samples_file, const PrimitiveCounts& counts, const WindFitOptions& opts,
                 const std::string& out) {
    const auto samples = io::read_wind_samples(samples_file);
    const WindFitResult r = fit_wind_field(samples, counts, opts);
    std::cout << "rms residual " << r.rms_residual << " m/s after " << r.iterations << " iterations: " << r.message
              << '\n';
    const fs::path dir = run_dir(out, "wind-fit", fs::path(samples_file).stem().string());
    finish(dir, {{"command", "wind-fit"},
                 {"samples", samples_file},
                 {"counts", {{"vortices", counts.vortices}, {"dipoles", counts.dipoles}, {"sources", counts.sources}}},
                 {"starts", opts.starts},
                 {"seed", opts.seed},
                 {"converged", r.converged},
                 {"rms_residual_mps", r.rms_residual},
                 {"message", r.message},
                 {"wind", io::to_json(r.field)}});
    return r.converged ? kOk : kNotConverged;
}

int cmd_wind_sample(std::uint64_t seed, double max_speed, const PrimitiveCounts& counts, double side, int grid,
                    const std::string& out) {
    if (grid < 2) throw ValidationError("grid", "grid >= 2");
    const Domain domain = Domain::square(side);
    const WindField field = sample_random_field(seed, max_speed, counts, domain);
    std::vector<WindSamplePoint> samples;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            const Vec2 p(side * i / (grid - 1), side * j / (grid - 1));
            samples.push_back({p, field.velocity(p)});
        }
    const fs::path dir = run_dir(out, "wind-sample", "seed" + std::to_string(seed));
    io::write_wind_samples(dir / "samples.csv", samples);
    finish(dir, {{"command", "wind-sample"},
                 {"seed", seed},
                 {"max_speed_mps", max_speed},
                 {"side_m", side},
                 {"grid", grid},
                 {"grid_sup_norm_mps", grid_sup_norm(field, domain, 200)},
                 {"wind", io::to_json(field)},
                 {"files", {{"samples", (dir / "samples.csv").string()}}}});
    return kOk;
}

int cmd_turnpike(const std::string& scenario_name, const std::vector<double>& altitudes, int n_throttle, int n_mass,
                 const std::string& out) {
    Scenario scenario = io::load_scenario(scenario_name);
    std::vector<double> throttles, masses;
    for (int i = 0; i < n_throttle; ++i) throttles.push_back(0.3 + 0.7 * i / std::max(1, n_throttle - 1));
    for (int j = 0; j < n_mass; ++j) masses.push_back((0.55 + 0.45 * j / std::max(1, n_mass - 1)) * scenario.aircraft.mtow);
    json scans = json::array();
    bool ok = true;
    for (double h : altitudes) {
        scenario.altitude = h;
        const TurnpikeScan s = turnpike_scan(throttles, masses, scenario);
        std::cout << "h=" << h << " m: lambda in [" << s.lambda_min << ", " << s.lambda_max << "] 1/s, "
                  << s.excluded << " cells without equilibrium\n";
        ok = ok && s.all_negative;
        json j = io::to_json(s);
        j["altitude_m"] = h;
        scans.push_back(j);
    }
    const fs::path dir = run_dir(out, "turnpike", scenario.name);
    finish(dir, {{"command", "turnpike"}, {"scenario", io::to_json(scenario)}, {"scans", scans}});
    return ok ? kOk : kNotConverged;
}

int cmd_mc(const StudyConfig& config, const std::string& out) {
    const StudyResult r = run_study(config);
    std::cout << "ratio t_rand/t_avg: mean " << r.avg_stats.mean << " std " << r.avg_stats.stddev << " tail "
              << r.avg_stats.tail_mass << "\nratio t_rand/t_band: mean " << r.band_stats.mean << " std "
              << r.band_stats.stddev << " tail " << r.band_stats.tail_mass << "\nexcluded " << r.excluded << " of "
              << config.trials << '\n';
    std::ostringstream tag;
    tag << "p" << config.wind_index << "_seed" << config.seed;
    const fs::path dir = run_dir(out, "mc", tag.str());
    io::write_samples(dir / "samples.csv", r);
    io::write_pdf(dir / "pdf.csv", r);
    json report = io::to_json(r);
    report["command"] = "mc";
    report["files"] = {{"samples", (dir / "samples.csv").string()}, {"pdf", (dir / "pdf.csv").string()}};
    finish(dir, report);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cruise trajectory optimization with wind and flight-sensitive areas"};
    app.require_subcommand(1);
    std::string out = default_out_root();
    app.add_option("--out", out, "output root (default $CRUISEOPT_OUT or ./runs)");

    SolveArgs solve_args;
    CLI::App* solve_cmd = app.add_subcommand("solve", "indirect surrogate solve");
    add_solve_flags(solve_cmd, solve_args);
    solve_cmd->add_option("--out", out, "output root");

    std::string direct_scenario = "nominal";
    DirectConfig dconfig;
    CLI::App* direct_cmd = app.add_subcommand("direct", "direct transcription solve");
    direct_cmd->add_option("--scenario", direct_scenario, "'nominal' or a scenario JSON file");
    direct_cmd->add_option("--nodes", dconfig.nodes, "control intervals")->check(CLI::Range(4, 100000))->capture_default_str();
    direct_cmd->add_option("--time-limit", dconfig.time_limit, "wall-time cap in seconds (0 = none)");
    direct_cmd->add_option("--out", out, "output root");

    SolveArgs compare_args;
    DirectConfig compare_direct;
    CLI::App* compare_cmd = app.add_subcommand("compare", "surrogate vs direct on one scenario");
    add_solve_flags(compare_cmd, compare_args);
    compare_cmd->add_option("--nodes", compare_direct.nodes, "direct control intervals")->check(CLI::Range(4, 100000));
    compare_cmd->add_option("--out", out, "output root");

    std::string points_file;
    int k = 1;
    std::uint64_t cluster_seed = 1;
    CLI::App* cluster_cmd = app.add_subcommand("cluster", "fit hazard ellipses to scattered points");
    cluster_cmd->add_option("--points", points_file, "x,y rows")->required()->check(CLI::ExistingFile);
    cluster_cmd->add_option("--k", k, "number of ellipses")->required();
    cluster_cmd->add_option("--seed", cluster_seed);
    cluster_cmd->add_option("--out", out, "output root");

    std::string samples_file;
    PrimitiveCounts fit_counts{1, 0, 0};
    WindFitOptions fit_opts;
    CLI::App* fit_cmd = app.add_subcommand("wind-fit", "calibrate a composite field to wind samples");
    fit_cmd->add_option("--samples", samples_file, "x,y,Wx,Wy rows")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--vortices", fit_counts.vortices)->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--dipoles", fit_counts.dipoles)->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--sources", fit_counts.sources)->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--starts", fit_opts.starts)->check(CLI::PositiveNumber);
    fit_cmd->add_option("--seed", fit_opts.seed);
    fit_cmd->add_option("--out", out, "output root");

    std::uint64_t sample_seed = 1;
    double sample_speed = 20.0, sample_side = 1.0e6;
    int sample_grid = 41;
    PrimitiveCounts sample_counts{3, 1, 2};
    CLI::App* sample_cmd = app.add_subcommand("wind-sample", "seeded random wind field on a grid");
    sample_cmd->add_option("--seed", sample_seed);
    sample_cmd->add_option("--max-speed", sample_speed, "grid sup-norm after rescaling [m/s]");
    sample_cmd->add_option("--side", sample_side, "square domain side [m]");
    sample_cmd->add_option("--grid", sample_grid, "samples per axis");
    sample_cmd->add_option("--vortices", sample_counts.vortices)->check(CLI::NonNegativeNumber);
    sample_cmd->add_option("--dipoles", sample_counts.dipoles)->check(CLI::NonNegativeNumber);
    sample_cmd->add_option("--sources", sample_counts.sources)->check(CLI::NonNegativeNumber);
    sample_cmd->add_option("--out", out, "output root");

    std::string tp_scenario = "nominal";
    std::vector<double> tp_altitudes{9000.0, 10000.0, 11000.0};
    int tp_throttle = 15, tp_mass = 10;
    CLI::App* tp_cmd = app.add_subcommand("turnpike", "speed-equilibrium stability scan");
    tp_cmd->add_option("--scenario", tp_scenario);
    tp_cmd->add_option("--altitudes", tp_altitudes, "[m]")->delimiter(',');
    tp_cmd->add_option("--throttle-points", tp_throttle)->check(CLI::Range(1, 1000));
    tp_cmd->add_option("--mass-points", tp_mass)->check(CLI::Range(1, 1000));
    tp_cmd->add_option("--out", out, "output root");

    StudyConfig study;
    CLI::App* mc_cmd = app.add_subcommand("mc", "Monte Carlo study of minimum-time variability");
    mc_cmd->add_option("--p", study.wind_index, "max|W| / v0")->capture_default_str();
    mc_cmd->add_option("--trials", study.trials)->capture_default_str();
    mc_cmd->add_option("--seed", study.seed);
    mc_cmd->add_option("--v0", study.v0, "[m/s]");
    mc_cmd->add_option("--side", study.side, "[m]");
    mc_cmd->add_option("--grid", study.grid, "averaging grid per axis");
    mc_cmd->add_option("--bins", study.bins, "histogram bins (0 = Freedman-Diaconis)");
    mc_cmd->add_option("--threads", study.threads);
    mc_cmd->add_option("--out", out, "output root");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*solve_cmd) return cmd_solve(solve_args, out);
        if (*direct_cmd) return cmd_direct(direct_scenario, dconfig, out);
        if (*compare_cmd) return cmd_compare(compare_args, compare_direct, out);
        if (*cluster_cmd) return cmd_cluster(points_file, k, cluster_seed, out);
        if (*fit_cmd) return cmd_wind_fit(samples_file, fit_counts, fit_opts, out);
        if (*sample_cmd) return cmd_wind_sample(sample_seed, sample_speed, sample_counts, sample_side, sample_grid, out);
        if (*tp_cmd) return cmd_turnpike(tp_scenario, tp_altitudes, tp_throttle, tp_mass, out);
        if (*mc_cmd) return cmd_mc(study, out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.field() << ": " << e.what() << '\n';
        return kInputError;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kNotConverged;
    }
    return kInputError;
}
