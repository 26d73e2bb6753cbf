#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {
int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" CRUISEOPT_CLI "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct TempDir {
    fs::path path = fs::temp_directory_path() / ("cruiseopt_cli_" + std::to_string(std::rand()));
    TempDir() { fs::create_directories(path); }
    ~TempDir() { fs::remove_all(path); }
};

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}
} // namespace

TEST_CASE("cli solve writes a report and tables") {
    TempDir tmp;
    CHECK(run("solve --scenario nominal --dt-steps 300 --out " + tmp.path.string()) == 0);
    const fs::path dir = tmp.path / "solve_nominal";
    CHECK(fs::exists(dir / "trajectory.csv"));
    CHECK(fs::exists(dir / "residuals.csv"));
    const auto report = read_json(dir / "report.json");
    CHECK(report.at("summary").at("converged") == true);
}

TEST_CASE("cli exit codes") {
    TempDir tmp;
    const std::string out = " --out " + tmp.path.string();
    CHECK(run("bogus") == 2);
    const fs::path bad = tmp.path / "bad.json";
    std::ofstream(bad) << R"({"bounds": {"mach_min": 0.9, "mach_max": 0.8}})";
    CHECK(run("solve --scenario " + bad.string() + out) == 2);
    const fs::path broken = tmp.path / "broken.json";
    std::ofstream(broken) << "{\n \"name\": \n";
    CHECK(run("solve --scenario " + broken.string() + out) == 2);
    // one shooting iteration cannot close the nominal case
    CHECK(run("solve --scenario nominal --max-iterations 1 --no-continuation" + out) == 1);
}

TEST_CASE("cli zero-wind Monte Carlo and output root from the environment") {
    TempDir tmp;
    CHECK(run("mc --p 0 --trials 5", "CRUISEOPT_OUT=" + tmp.path.string()) == 0);
    const fs::path dir = tmp.path / "mc_p0_seed1";
    REQUIRE(fs::exists(dir / "report.json"));
    std::ifstream in(dir / "samples.csv");
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 5);
}

TEST_CASE("cli wind sampling and clustering") {
    TempDir tmp;
    const std::string out = " --out " + tmp.path.string();
    CHECK(run("wind-sample --seed 4 --grid 20" + out) == 0);
    CHECK(fs::exists(tmp.path / "wind-sample_seed4" / "report.json"));
    const fs::path pts = tmp.path / "pts.csv";
    {
        std::ofstream p(pts);
        p << "x,y\n";
        for (int i = 0; i < 30; ++i) p << 1e4 * (i % 5) + (i < 15 ? 0 : 5e5) << ',' << 1e4 * (i % 3) << '\n';
    }
    CHECK(run("cluster --points " + pts.string() + " --k 2" + out) == 0);
    CHECK(run("cluster --points " + pts.string() + " --k 31" + out) == 2);
}
