#pragma once
// Mixture-level optimal transport: the transportation LP, the GMM metric and
// geodesic built on it, and the time-parameterized GMM trajectory that routes
// each (initial, target) component pair along the roadmap.

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "swarmplan/gaussian.hpp"
#include "swarmplan/roadmap.hpp"

namespace swarmplan {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double row_sum(std::size_t i) const;
  double col_sum(std::size_t j) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TransportSolution {
  Matrix lambda;
  double objective = 0.0;
  /// Dual potentials of the row and column marginal constraints.
  std::vector<double> row_duals;
  std::vector<double> col_duals;
};

/// Minimizes sum lambda_ij c_ij subject to row sums w0, column sums wf and
/// 0 <= lambda <= caps. A cell with c_ij = +inf is excluded (lambda_ij = 0).
/// Solved by the bounded transportation simplex: Vogel start when uncapped,
/// otherwise an artificial-variable phase 1; Bland's rule in (i, j) order.
/// Throws std::invalid_argument for mismatched sizes or marginals that do not
/// sum to the same total within 1e-9, InfeasibleError when no plan exists.
TransportSolution solve_transport_lp(const Matrix& costs, std::span<const double> w0,
                                     std::span<const double> wf,
                                     const std::optional<Matrix>& caps = std::nullopt);

/// Complementary-slackness check of a solution's duals: reduced costs are
/// >= -tol at the lower bound, <= tol at the upper bound and |.| <= tol in between.
bool satisfies_optimality(const Matrix& costs, const TransportSolution& sol,
                          const std::optional<Matrix>& caps, double tol);

/// Weighted mixture of 2-D Gaussians with strictly positive weights summing to 1.
class Gmm {
 public:
  /// Throws std::invalid_argument when empty, lengths differ, a weight is not
  /// positive or the weights do not sum to 1 within 1e-9.
  Gmm(std::vector<Gaussian2D> components, std::vector<double> weights);

  std::size_t size() const { return components_.size(); }
  std::span<const Gaussian2D> components() const { return components_; }
  std::span<const double> weights() const { return weights_; }
  const Gaussian2D& component(std::size_t i) const { return components_.at(i); }
  double weight(std::size_t i) const { return weights_.at(i); }
  double density(Vec2 x) const;

 private:
  std::vector<Gaussian2D> components_;
  std::vector<double> weights_;
};

/// Sums the weights of components whose parameters agree within `tol`; keeps first-seen order.
Gmm merge_duplicates(const Gmm& g, double tol = 1e-9);

struct GmmDistance {
  double distance = 0.0;
  Matrix coupling;
};

/// Square root of the optimal coupling cost with pairwise costs W2(g_a^i, g_b^j)^2.
GmmDistance gmm_distance(const Gmm& a, const Gmm& b);

/// Mixture of w2_geodesic(a_i, b_j, t) weighted by coupling(i, j) over positive entries.
/// Throws std::invalid_argument for a coupling whose marginals differ from the
/// weights by more than 1e-9 or t outside [0, 1].
Gmm gmm_geodesic(const Gmm& a, const Gmm& b, const Matrix& coupling, double t);

/// Pairs with lambda at or below this mass are treated as inactive.
inline constexpr double kActiveMass = 1e-12;

struct TransportPlan {
  Matrix lambda;
  /// Shortest roadmap path cost per pair; +inf when unreachable.
  Matrix costs;
  /// routes[i * cols + j] is the node list from initial seed i to target seed j; empty when unreachable.
  std::vector<std::vector<std::size_t>> routes;

  const std::vector<std::size_t>& route(std::size_t i, std::size_t j) const {
    return routes.at(i * lambda.cols() + j);
  }
};

/// Runs one Dijkstra tree per initial node, builds the pair cost matrix and solves
/// the transport LP. `initial_nodes` / `target_nodes` are roadmap indices of the
/// mixture components. Caps, when given, bound every lambda_ij.
TransportPlan plan_transport(const GaussianRoadmap& graph, std::span<const std::size_t> initial_nodes,
                             std::span<const std::size_t> target_nodes, const Gmm& initial,
                             const Gmm& target, const std::optional<double>& cell_cap = std::nullopt,
                             unsigned threads = 1);

/// One component pair's Gaussian trajectory: piecewise W2 geodesics through the
/// route's nodes, with time allotted in proportion to edge length.
struct PairTrajectory {
  std::size_t initial = 0;
  std::size_t target = 0;
  double weight = 0.0;
  std::vector<std::size_t> route;
  std::vector<Gaussian2D> waypoints;
  /// Time at which each waypoint is reached; front() = t0, back() = tf.
  std::vector<double> breakpoints;
  std::vector<GaussianGeodesic> segments;

  /// Index of the segment active at time t (the last one at tf); 0 for a stationary pair.
  std::size_t segment_at(double t) const;
  /// Normalized position within segment k at time t, in [0, 1].
  double segment_fraction(std::size_t k, double t) const;
  Gaussian2D at(double t) const;
  bool stationary() const { return segments.empty(); }
};

class GmmTrajectory {
 public:
  GmmTrajectory(double t0, double tf, std::vector<PairTrajectory> pairs);

  double t0() const { return t0_; }
  double tf() const { return tf_; }
  std::span<const PairTrajectory> pairs() const { return pairs_; }
  /// Mixture over active pairs at time t (not merged; see merge_duplicates).
  /// Throws std::invalid_argument for t outside [t0, tf].
  Gmm at(double t) const;

 private:
  double t0_;
  double tf_;
  std::vector<PairTrajectory> pairs_;
};

/// Throws std::invalid_argument when a pair with lambda > kActiveMass lacks a
/// route or the horizon is empty.
GmmTrajectory assemble_trajectory(const TransportPlan& plan, const GaussianRoadmap& graph,
                                  double t0, double tf);

/// Sum over active pairs of lambda_ij N(x; mu_ij(t), Sigma_ij(t)).
/// Throws std::invalid_argument for t outside [t0, tf].
double density_at(const GmmTrajectory& traj, double t, Vec2 x);

struct DensityAudit {
  double max_density = 0.0;
  std::size_t violations = 0;
  std::size_t samples = 0;
};

/// Evaluates density_at on a `grid` x `grid` lattice over the workspace at
/// `times` evenly spaced instants and counts values above `cap`.
DensityAudit audit_density(const GmmTrajectory& traj, const Workspace& ws, double cap,
                           std::size_t grid = 50, std::size_t times = 20);

/// Per pair: {"initial", "target", "lambda", "route", "breakpoints"}.
nlohmann::ordered_json trajectory_to_json(const GmmTrajectory& traj);
/// Rebuilds the trajectory from its export and the roadmap it references.
GmmTrajectory trajectory_from_json(const nlohmann::json& doc, const GaussianRoadmap& graph);

}  // namespace swarmplan
