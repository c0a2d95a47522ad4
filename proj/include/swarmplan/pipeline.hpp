#pragma once
// End-to-end orchestration: roadmap, transport plan, trajectory assembly and
// the microscopic simulation with its metrics report.

#include <json.hpp>

#include "swarmplan/micro.hpp"
#include "swarmplan/scenario.hpp"

namespace swarmplan {

struct PhaseTiming {
  double roadmap_s = 0.0;
  double transport_s = 0.0;
  double assembly_s = 0.0;

  double total() const { return roadmap_s + transport_s + assembly_s; }
};

struct PlanBundle {
  GaussianRoadmap roadmap;
  /// Roadmap indices of the initial and target components (the seeds).
  std::vector<std::size_t> initial_nodes;
  std::vector<std::size_t> target_nodes;
  TransportPlan plan;
  GmmTrajectory trajectory;
  PhaseTiming timing;
};

/// Builds the roadmap seeded with both mixtures' components (initial first),
/// solves the transport LP over shortest-path costs and assembles the GMM
/// trajectory. The roadmap RNG is seeded with `seed`. Throws PlanningFailedError
/// when a seed is unsafe, sampling is exhausted or no feasible plan exists; the
/// message lists any unreachable component pairs.
PlanBundle run_plan(const Scenario& scenario, std::uint64_t seed, unsigned threads = 1);

struct SimBundle {
  std::vector<RobotState> robots;
  SimulationResult sim;
  std::vector<GroupError> groups;
  nlohmann::ordered_json metrics;
  double sim_seconds = 0.0;
};

/// Places the robots (explicit list via assign_robots, or sample_robots with a
/// stream derived from `seed`), simulates and builds the metrics document.
SimBundle run_sim(const Scenario& scenario, const PlanBundle& bundle, std::uint64_t seed, unsigned threads = 1);

/// Sum over pairs of lambda_ij ||mu_j - mu_i||: no trajectory can average less.
double displacement_lower_bound(const Gmm& initial, const Gmm& target, const Matrix& lambda);

/// {"lambda": rows, "costs": rows (null = unreachable), "trajectory": ...}.
nlohmann::ordered_json plan_to_json(const PlanBundle& bundle);
/// Rebuilds a bundle from roadmap.json and plan.json contents (timing is zeroed).
PlanBundle plan_from_json(const nlohmann::json& roadmap_doc, const nlohmann::json& plan_doc);

}  // namespace swarmplan
