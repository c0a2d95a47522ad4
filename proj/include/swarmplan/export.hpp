#pragma once
// File output: trajectory CSV, JSON documents and static SVG plots.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "swarmplan/micro.hpp"
#include "swarmplan/scenario.hpp"

namespace swarmplan {

/// Header `t,robot_id,x,y`, one row per robot per stored time, 6 decimals.
std::string trajectories_csv(const SwarmTrajectories& traj);
/// Parses trajectories_csv output. Throws ParseError on malformed rows and
/// std::invalid_argument when robots do not share one time grid.
SwarmTrajectories parse_trajectories_csv(const std::string& text);

/// Number of instants at which the macro plot draws every active pair's ellipse.
inline constexpr std::size_t kMacroSvgSamples = 6;

/// Workspace, obstacles, roadmap edges and 1-sigma ellipses of every active
/// pair at kMacroSvgSamples evenly spaced times (one <ellipse> each).
std::string macro_svg(const Scenario& scenario, const GaussianRoadmap& roadmap, const GmmTrajectory& traj);
/// Workspace, obstacles, target ellipses and robot paths with start/end markers.
std::string micro_svg(const Scenario& scenario, const SwarmTrajectories& traj, const Gmm& target);

/// Throws IoError when the file cannot be written or read.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
/// Pretty-printed with two-space indent and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);
/// Throws ParseError for malformed JSON.
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace swarmplan
