#pragma once
// Scenario documents (YAML): workspace, obstacles, mixtures, robots and the
// parameters of every planning stage.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "swarmplan/micro.hpp"
#include "swarmplan/risk.hpp"
#include "swarmplan/roadmap.hpp"
#include "swarmplan/transport.hpp"

namespace swarmplan {

/// A named obstacle; non-convex obstacles are unions of convex parts.
struct ObstacleGroup {
  std::string name;
  std::vector<ConvexShape> parts;
};

struct Scenario {
  std::string name;
  Workspace workspace;
  std::vector<ObstacleGroup> obstacles;
  Gmm initial{{Gaussian2D{}}, {1.0}};
  Gmm target{{Gaussian2D{}}, {1.0}};
  std::size_t robot_count = 1;
  double robot_radius = 0.2;
  /// Explicit initial positions; empty means sample from the initial mixture.
  std::vector<Vec2> initial_positions;
  double t0 = 0.0;
  double tf = 120.0;
  RiskParams risk;
  RoadmapParams roadmap;
  MicroParams micro;
  /// Upper bound on each lambda_ij (the density-cap proxy), if any.
  std::optional<double> cell_cap;
  /// Peak density (robots' probability per m^2) reported by the density audit, if any.
  std::optional<double> density_cap;
  std::uint64_t seed = 1;

  /// All convex parts, group by group.
  std::vector<ConvexShape> obstacle_parts() const;
};

/// Throws ParseError (with line/column) for malformed text or wrongly typed or
/// missing fields, ValidationError (with a dotted field path) for invariant
/// violations and IoError when the file cannot be read.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text);

}  // namespace swarmplan
