#include "swarmplan/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "swarmplan/errors.hpp"

namespace swarmplan {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Robot placement draws from its own stream so it does not perturb the roadmap samples.
constexpr std::uint64_t kRobotStream = 0x9E3779B97F4A7C15ULL;

nlohmann::ordered_json cov_json(const Spd2& c) { return {c.xx(), c.xy(), c.yy()}; }

}  // namespace

PlanBundle run_plan(const Scenario& scenario, std::uint64_t seed, unsigned threads) {
  const std::vector<ConvexShape> obstacles = scenario.obstacle_parts();
  std::vector<Gaussian2D> seeds;
  for (const Gaussian2D& g : scenario.initial.components()) seeds.push_back(g);
  for (const Gaussian2D& g : scenario.target.components()) seeds.push_back(g);

  auto start = Clock::now();
  Rng rng(seed);
  GaussianRoadmap roadmap;
  try {
    roadmap = build_roadmap(scenario.roadmap, obstacles, scenario.risk, seeds, rng, threads);
  } catch (const SeedUnsafeError& e) {
    const std::size_t k = e.seed_index();
    const std::size_t m = scenario.initial.size();
    std::ostringstream msg;
    msg << (k < m ? "initial" : "target") << " component " << (k < m ? k : k - m)
        << " violates the risk constraint";
    throw PlanningFailedError(msg.str());
  } catch (const SamplingExhaustedError& e) {
    std::ostringstream msg;
    msg << "roadmap sampling exhausted (acceptance rate " << e.acceptance_rate() << ")";
    throw PlanningFailedError(msg.str());
  }
  PhaseTiming timing;
  timing.roadmap_s = seconds_since(start);

  std::vector<std::size_t> initial_nodes(scenario.initial.size());
  std::vector<std::size_t> target_nodes(scenario.target.size());
  for (std::size_t i = 0; i < initial_nodes.size(); ++i) initial_nodes[i] = i;
  for (std::size_t j = 0; j < target_nodes.size(); ++j) target_nodes[j] = initial_nodes.size() + j;

  start = Clock::now();
  TransportPlan plan;
  try {
    plan = plan_transport(roadmap, initial_nodes, target_nodes, scenario.initial, scenario.target,
                          scenario.cell_cap, threads);
  } catch (const InfeasibleError& e) {
    std::ostringstream msg;
    msg << "no feasible transport plan: " << e.what();
    // Recompute reachability for the diagnostic.
    std::string sep = "; unreachable pairs (initial, target):";
    for (std::size_t i = 0; i < initial_nodes.size(); ++i) {
      const ShortestPathTree tree = dijkstra(roadmap, initial_nodes[i]);
      for (std::size_t j = 0; j < target_nodes.size(); ++j) {
        if (!tree.reachable(target_nodes[j])) {
          msg << sep << " (" << i << ", " << j << ")";
          sep = ",";
        }
      }
    }
    throw PlanningFailedError(msg.str());
  }
  timing.transport_s = seconds_since(start);

  start = Clock::now();
  GmmTrajectory traj = assemble_trajectory(plan, roadmap, scenario.t0, scenario.tf);
  timing.assembly_s = seconds_since(start);

  return PlanBundle{std::move(roadmap), std::move(initial_nodes), std::move(target_nodes), std::move(plan),
                    std::move(traj), timing};
}

double displacement_lower_bound(const Gmm& initial, const Gmm& target, const Matrix& lambda) {
  double bound = 0.0;
  for (std::size_t i = 0; i < lambda.rows(); ++i)
    for (std::size_t j = 0; j < lambda.cols(); ++j)
      bound += lambda(i, j) * (target.component(j).mean - initial.component(i).mean).norm();
  return bound;
}

SimBundle run_sim(const Scenario& scenario, const PlanBundle& bundle, std::uint64_t seed, unsigned threads) {
  const std::vector<ConvexShape> obstacles = scenario.obstacle_parts();
  const auto start = Clock::now();
  SimBundle out;
  if (scenario.initial_positions.empty()) {
    Rng rng(seed ^ kRobotStream);
    out.robots = sample_robots(scenario.initial, bundle.plan.lambda, scenario.robot_count, scenario.robot_radius,
                               obstacles, scenario.workspace, rng);
  } else {
    out.robots = assign_robots(scenario.initial_positions, scenario.initial, bundle.plan.lambda, scenario.robot_radius);
  }
  out.sim = simulate(out.robots, bundle.trajectory, obstacles, scenario.micro, threads);
  out.sim_seconds = seconds_since(start);

  const SwarmTrajectories& st = out.sim.trajectories;
  out.groups = group_errors(out.robots, st.positions.back(), scenario.target, scenario.workspace);
  const Gmm fitted = empirical_mixture(out.groups);
  const SafetyAudit& safety = out.sim.safety;

  nlohmann::ordered_json m;
  m["scenario"] = scenario.name;
  m["seed"] = seed;
  m["robots"] = out.robots.size();
  m["robot_radius"] = scenario.robot_radius;
  m["steps"] = st.step_count();
  m["dt"] = scenario.micro.dt;
  m["average_trajectory_length"] = average_traj_length(st);
  m["displacement_lower_bound"] = displacement_lower_bound(scenario.initial, scenario.target, bundle.plan.lambda);
  m["min_obstacle_sdf"] = safety.overall_min_sdf();
  m["obstacle_collisions"] = safety.obstacle_collisions;
  m["clamped_barrier_events"] = out.sim.clamped_barrier_events;
  m["min_inter_robot_distance"] = safety.overall_min_pair_distance();
  m["separated_step_fraction"] = safety.separated_fraction(scenario.robot_radius);
  m["robot_overlaps"] = safety.robot_overlaps;
  m["final_distribution_distance"] = gmm_distance(fitted, scenario.target).distance;

  double plan_cost = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < bundle.plan.lambda.rows(); ++i) {
    for (std::size_t j = 0; j < bundle.plan.lambda.cols(); ++j) {
      if (bundle.plan.lambda(i, j) > kActiveMass) {
        plan_cost += bundle.plan.lambda(i, j) * bundle.plan.costs(i, j);
        ++active;
      }
    }
  }
  m["plan"] = {{"roadmap_nodes", bundle.roadmap.node_count()},
               {"roadmap_edges", bundle.roadmap.edge_count()},
               {"active_pairs", active},
               {"transport_cost", plan_cost}};

  nlohmann::ordered_json groups = nlohmann::ordered_json::array();
  for (const GroupError& g : out.groups) {
    groups.push_back({{"initial", g.initial},
                      {"target", g.target},
                      {"count", g.count},
                      {"mean", {g.fit.mean.x, g.fit.mean.y}},
                      {"cov", cov_json(g.fit.cov)},
                      {"mean_error", g.mean_error},
                      {"cov_error", g.cov_error}});
  }
  m["groups"] = std::move(groups);

  if (scenario.density_cap) {
    const DensityAudit audit = audit_density(bundle.trajectory, scenario.workspace, *scenario.density_cap);
    m["density_audit"] = {{"cap", *scenario.density_cap},
                          {"max_density", audit.max_density},
                          {"violations", audit.violations},
                          {"samples", audit.samples}};
  }
  out.metrics = std::move(m);
  return out;
}

nlohmann::ordered_json plan_to_json(const PlanBundle& bundle) {
  nlohmann::ordered_json doc;
  doc["initial_nodes"] = bundle.initial_nodes;
  doc["target_nodes"] = bundle.target_nodes;
  nlohmann::ordered_json lambda = nlohmann::ordered_json::array();
  nlohmann::ordered_json costs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < bundle.plan.lambda.rows(); ++i) {
    nlohmann::ordered_json lrow = nlohmann::ordered_json::array();
    nlohmann::ordered_json crow = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < bundle.plan.lambda.cols(); ++j) {
      lrow.push_back(bundle.plan.lambda(i, j));
      const double c = bundle.plan.costs(i, j);
      crow.push_back(std::isfinite(c) ? nlohmann::ordered_json(c) : nlohmann::ordered_json(nullptr));
    }
    lambda.push_back(std::move(lrow));
    costs.push_back(std::move(crow));
  }
  doc["lambda"] = std::move(lambda);
  doc["costs"] = std::move(costs);
  nlohmann::ordered_json routes = nlohmann::ordered_json::array();
  for (const auto& r : bundle.plan.routes) routes.push_back(r);
  doc["routes"] = std::move(routes);
  doc["trajectory"] = trajectory_to_json(bundle.trajectory);
  return doc;
}

PlanBundle plan_from_json(const nlohmann::json& roadmap_doc, const nlohmann::json& plan_doc) {
  GaussianRoadmap roadmap = roadmap_from_json(roadmap_doc);
  auto initial_nodes = plan_doc.at("initial_nodes").get<std::vector<std::size_t>>();
  auto target_nodes = plan_doc.at("target_nodes").get<std::vector<std::size_t>>();
  const auto& lambda = plan_doc.at("lambda");
  const auto& costs = plan_doc.at("costs");
  TransportPlan plan;
  plan.lambda = Matrix(initial_nodes.size(), target_nodes.size());
  plan.costs = Matrix(initial_nodes.size(), target_nodes.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < initial_nodes.size(); ++i) {
    for (std::size_t j = 0; j < target_nodes.size(); ++j) {
      plan.lambda(i, j) = lambda.at(i).at(j).get<double>();
      if (!costs.at(i).at(j).is_null()) plan.costs(i, j) = costs.at(i).at(j).get<double>();
    }
  }
  for (const auto& r : plan_doc.at("routes")) plan.routes.push_back(r.get<std::vector<std::size_t>>());
  if (plan.routes.size() != initial_nodes.size() * target_nodes.size()) {
    throw std::invalid_argument("plan routes do not match the pair count");
  }
  GmmTrajectory traj = trajectory_from_json(plan_doc.at("trajectory"), roadmap);
  return PlanBundle{std::move(roadmap), std::move(initial_nodes), std::move(target_nodes), std::move(plan),
                    std::move(traj), PhaseTiming{}};
}

}  // namespace swarmplan
