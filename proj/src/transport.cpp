#include "swarmplan/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "swarmplan/parallel.hpp"

namespace swarmplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool close(const Gaussian2D& a, const Gaussian2D& b, double tol) {
  return std::abs(a.mean.x - b.mean.x) <= tol && std::abs(a.mean.y - b.mean.y) <= tol &&
         a.cov.matrix().max_abs_diff(b.cov.matrix()) <= tol;
}

void check_time(double t, double t0, double tf) {
  if (!(t >= t0 && t <= tf)) throw std::invalid_argument("time outside the planning horizon");
}

}  // namespace

Gmm::Gmm(std::vector<Gaussian2D> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty()) throw std::invalid_argument("mixture must have at least one component");
  if (components_.size() != weights_.size()) {
    throw std::invalid_argument("mixture weights and components differ in length");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(std::isfinite(w) && w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mixture weights must sum to 1");
}

double Gmm::density(Vec2 x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += weights_[i] * gaussian_density(components_[i], x);
  return s;
}

Gmm merge_duplicates(const Gmm& g, double tol) {
  std::vector<Gaussian2D> comps;
  std::vector<double> weights;
  for (std::size_t i = 0; i < g.size(); ++i) {
    bool merged = false;
    for (std::size_t k = 0; k < comps.size(); ++k) {
      if (close(comps[k], g.component(i), tol)) {
        weights[k] += g.weight(i);
        merged = true;
        break;
      }
    }
    if (!merged) {
      comps.push_back(g.component(i));
      weights.push_back(g.weight(i));
    }
  }
  return Gmm(std::move(comps), std::move(weights));
}

GmmDistance gmm_distance(const Gmm& a, const Gmm& b) {
  Matrix costs(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) costs(i, j) = w2_distance_squared(a.component(i), b.component(j));
  TransportSolution sol = solve_transport_lp(costs, a.weights(), b.weights());
  return {std::sqrt(std::max(sol.objective, 0.0)), std::move(sol.lambda)};
}

Gmm gmm_geodesic(const Gmm& a, const Gmm& b, const Matrix& coupling, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("geodesic parameter outside [0, 1]");
  if (coupling.rows() != a.size() || coupling.cols() != b.size()) {
    throw std::invalid_argument("coupling shape does not match the mixtures");
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(coupling.row_sum(i) - a.weight(i)) > 1e-9)
      throw std::invalid_argument("coupling row marginal differs from the source weights");
  for (std::size_t j = 0; j < b.size(); ++j)
    if (std::abs(coupling.col_sum(j) - b.weight(j)) > 1e-9)
      throw std::invalid_argument("coupling column marginal differs from the target weights");

  std::vector<Gaussian2D> comps;
  std::vector<double> weights;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!(coupling(i, j) > 0.0)) continue;
      comps.push_back(w2_geodesic(a.component(i), b.component(j), t));
      weights.push_back(coupling(i, j));
      total += coupling(i, j);
    }
  }
  for (double& w : weights) w /= total;
  return Gmm(std::move(comps), std::move(weights));
}

TransportPlan plan_transport(const GaussianRoadmap& graph, std::span<const std::size_t> initial_nodes,
                             std::span<const std::size_t> target_nodes, const Gmm& initial,
                             const Gmm& target, const std::optional<double>& cell_cap,
                             unsigned threads) {
  const std::size_t m = initial_nodes.size();
  const std::size_t n = target_nodes.size();
  if (m != initial.size() || n != target.size()) {
    throw std::invalid_argument("seed node lists do not match the mixtures");
  }
  for (std::size_t v : initial_nodes)
    if (v >= graph.node_count()) throw std::invalid_argument("initial seed index out of range");
  for (std::size_t v : target_nodes)
    if (v >= graph.node_count()) throw std::invalid_argument("target seed index out of range");
  if (cell_cap && !(*cell_cap >= 0.0)) throw std::invalid_argument("cell cap must be >= 0");

  std::vector<ShortestPathTree> trees(m);
  parallel_for(m, threads, [&](std::size_t i) { trees[i] = dijkstra(graph, initial_nodes[i]); });

  TransportPlan plan;
  plan.costs = Matrix(m, n, kInf);
  plan.routes.assign(m * n, {});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (auto path = trees[i].path_to(target_nodes[j])) {
        plan.costs(i, j) = path->cost;
        plan.routes[i * n + j] = std::move(path->nodes);
      }
    }
  }
  std::optional<Matrix> caps;
  if (cell_cap) caps = Matrix(m, n, *cell_cap);
  plan.lambda = solve_transport_lp(plan.costs, initial.weights(), target.weights(), caps).lambda;
  return plan;
}

std::size_t PairTrajectory::segment_at(double t) const {
  if (segments.empty()) return 0;
  // Last segment whose start time is <= t; tf maps to the final segment.
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end() - 1, t);
  const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - breakpoints.begin() - 1, 0));
  return std::min(k, segments.size() - 1);
}

double PairTrajectory::segment_fraction(std::size_t k, double t) const {
  const double a = breakpoints.at(k);
  const double b = breakpoints.at(k + 1);
  if (b <= a) return 1.0;
  return std::clamp((t - a) / (b - a), 0.0, 1.0);
}

Gaussian2D PairTrajectory::at(double t) const {
  if (segments.empty()) return waypoints.front();
  const std::size_t k = segment_at(t);
  return segments[k].at(segment_fraction(k, t));
}

GmmTrajectory::GmmTrajectory(double t0, double tf, std::vector<PairTrajectory> pairs)
    : t0_(t0), tf_(tf), pairs_(std::move(pairs)) {
  if (!(tf_ > t0_)) throw std::invalid_argument("horizon must satisfy tf > t0");
  if (pairs_.empty()) throw std::invalid_argument("trajectory has no active pairs");
}

Gmm GmmTrajectory::at(double t) const {
  check_time(t, t0_, tf_);
  std::vector<Gaussian2D> comps;
  std::vector<double> weights;
  double total = 0.0;
  for (const PairTrajectory& p : pairs_) {
    comps.push_back(p.at(t));
    weights.push_back(p.weight);
    total += p.weight;
  }
  for (double& w : weights) w /= total;
  return Gmm(std::move(comps), std::move(weights));
}

namespace {

PairTrajectory make_pair(std::size_t i, std::size_t j, double weight, std::vector<std::size_t> route,
                         std::vector<double> breakpoints, const GaussianRoadmap& graph) {
  PairTrajectory p;
  p.initial = i;
  p.target = j;
  p.weight = weight;
  p.route = std::move(route);
  p.breakpoints = std::move(breakpoints);
  for (std::size_t v : p.route) p.waypoints.push_back(graph.node(v));
  for (std::size_t k = 0; k + 1 < p.waypoints.size(); ++k) p.segments.emplace_back(p.waypoints[k], p.waypoints[k + 1]);
  return p;
}

}  // namespace

GmmTrajectory assemble_trajectory(const TransportPlan& plan, const GaussianRoadmap& graph, double t0,
                                  double tf) {
  if (!(tf > t0)) throw std::invalid_argument("horizon must satisfy tf > t0");
  std::vector<PairTrajectory> pairs;
  for (std::size_t i = 0; i < plan.lambda.rows(); ++i) {
    for (std::size_t j = 0; j < plan.lambda.cols(); ++j) {
      const double w = plan.lambda(i, j);
      if (!(w > kActiveMass)) continue;
      const auto& route = plan.route(i, j);
      if (route.empty()) throw std::invalid_argument("active pair has no roadmap route");

      std::vector<double> length(route.size(), 0.0);
      for (std::size_t k = 1; k < route.size(); ++k) {
        const auto weight = graph.edge_weight(route[k - 1], route[k]);
        if (!weight) throw std::invalid_argument("route uses an edge missing from the roadmap");
        length[k] = length[k - 1] + *weight;
      }
      std::vector<double> bp(route.size(), t0);
      const double total = length.back();
      for (std::size_t k = 1; k < route.size(); ++k) {
        const double frac = total > 0.0 ? length[k] / total
                                        : static_cast<double>(k) / static_cast<double>(route.size() - 1);
        bp[k] = t0 + frac * (tf - t0);
      }
      bp.back() = route.size() > 1 ? tf : t0;
      pairs.push_back(make_pair(i, j, w, route, std::move(bp), graph));
    }
  }
  return GmmTrajectory(t0, tf, std::move(pairs));
}

double density_at(const GmmTrajectory& traj, double t, Vec2 x) {
  check_time(t, traj.t0(), traj.tf());
  double s = 0.0;
  for (const PairTrajectory& p : traj.pairs()) s += p.weight * gaussian_density(p.at(t), x);
  return s;
}

DensityAudit audit_density(const GmmTrajectory& traj, const Workspace& ws, double cap, std::size_t grid,
                           std::size_t times) {
  if (grid < 2 || times < 2) throw std::invalid_argument("density audit needs grid, times >= 2");
  DensityAudit audit;
  for (std::size_t k = 0; k < times; ++k) {
    const double t = traj.t0() + (traj.tf() - traj.t0()) * static_cast<double>(k) / static_cast<double>(times - 1);
    for (std::size_t a = 0; a < grid; ++a) {
      for (std::size_t b = 0; b < grid; ++b) {
        const Vec2 x{ws.xmin + (ws.xmax - ws.xmin) * static_cast<double>(a) / static_cast<double>(grid - 1),
                     ws.ymin + (ws.ymax - ws.ymin) * static_cast<double>(b) / static_cast<double>(grid - 1)};
        double rho = 0.0;
        for (const PairTrajectory& p : traj.pairs()) rho += p.weight * gaussian_density(p.at(t), x);
        audit.max_density = std::max(audit.max_density, rho);
        if (rho > cap) ++audit.violations;
        ++audit.samples;
      }
    }
  }
  return audit;
}

nlohmann::ordered_json trajectory_to_json(const GmmTrajectory& traj) {
  nlohmann::ordered_json doc;
  doc["t0"] = traj.t0();
  doc["tf"] = traj.tf();
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const PairTrajectory& p : traj.pairs()) {
    nlohmann::ordered_json e;
    e["initial"] = p.initial;
    e["target"] = p.target;
    e["lambda"] = p.weight;
    e["route"] = p.route;
    e["breakpoints"] = p.breakpoints;
    pairs.push_back(std::move(e));
  }
  doc["pairs"] = std::move(pairs);
  return doc;
}

GmmTrajectory trajectory_from_json(const nlohmann::json& doc, const GaussianRoadmap& graph) {
  std::vector<PairTrajectory> pairs;
  for (const auto& e : doc.at("pairs")) {
    auto route = e.at("route").get<std::vector<std::size_t>>();
    auto bp = e.at("breakpoints").get<std::vector<double>>();
    if (route.empty() || route.size() != bp.size()) {
      throw std::invalid_argument("pair route and breakpoints differ in length");
    }
    for (std::size_t v : route)
      if (v >= graph.node_count()) throw std::invalid_argument("route references an unknown node");
    pairs.push_back(make_pair(e.at("initial").get<std::size_t>(), e.at("target").get<std::size_t>(),
                              e.at("lambda").get<double>(), std::move(route), std::move(bp), graph));
  }
  return GmmTrajectory(doc.at("t0").get<double>(), doc.at("tf").get<double>(), std::move(pairs));
}

}  // namespace swarmplan
