#pragma once

// JSON scenario documents (SI units in key names) and delimited result tables.

#include "cruise/direct.hpp"
#include "cruise/scenario.hpp"
#include "cruise/stochastic.hpp"
#include "cruise/surrogate.hpp"
#include "cruise/turnpike.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace cruise::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "1.0.0";

json to_json(const WindPrimitive& p);
json to_json(const WindField& field);
json to_json(const EllipseHazard& h);
json to_json(const Scenario& s);

WindField wind_from_json(const json& j, const std::string& field = "wind");
EllipseHazard hazard_from_json(const json& j, const std::string& field = "hazard");

/// Fills defaults for absent keys, rejects unknown ones and validates.
/// Throws ValidationError naming the offending key.
Scenario scenario_from_json(const json& j);

/// Parse with line/column context in the error message.
json parse_document(const std::string& text, const std::string& origin = "<input>");

/// "nominal" resolves to the built-in two-ellipse case; anything else is a path.
Scenario load_scenario(const std::string& name_or_path);

json summary(const Solution& s, const Scenario& scenario);
json to_json(const SolverConfig& c);
json to_json(const DirectConfig& c);
json to_json(const ComparisonReport& r);
json to_json(const StudyConfig& c);
json to_json(const StudyResult& r);
json to_json(const TurnpikeScan& s);
json to_json(const ClusterResult& r);

/// Trajectory as JSON arrays, uniformly downsampled in node index to at most
/// max_nodes (endpoints kept). max_nodes <= 0 keeps every node.
json trajectory_json(const Trajectory& t, const Scenario& scenario, int max_nodes);

/// Columns t, x, y, m, z, v, chi, q, lambda_x, lambda_y, lambda_m, H, Pi, arc.
void write_trajectory(const std::filesystem::path& path, const Trajectory& t);
void write_history(const std::filesystem::path& path, const std::vector<double>& history,
                   const std::string& column = "residual_norm");
void write_samples(const std::filesystem::path& path, const StudyResult& r);
void write_pdf(const std::filesystem::path& path, const StudyResult& r);
void write_json(const std::filesystem::path& path, const json& j);

/// Rows x, y, Wx, Wy; '#' comments and a header row are allowed.
std::vector<WindSamplePoint> read_wind_samples(const std::filesystem::path& path);
void write_wind_samples(const std::filesystem::path& path, const std::vector<WindSamplePoint>& samples);
/// Rows x, y.
std::vector<Vec2> read_points(const std::filesystem::path& path);

} // namespace cruise::io
