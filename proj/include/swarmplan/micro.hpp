#pragma once
// Microscopic stage: robots follow the planned Gaussian trajectories by
// tracking OT-map reference points under an artificial potential field.

#include <span>
#include <vector>

#include "swarmplan/geom2d.hpp"
#include "swarmplan/roadmap.hpp"
#include "swarmplan/transport.hpp"

namespace swarmplan {

struct MicroParams {
  double w1 = 1.0;
  double w2 = 1.0;
  /// Repulsion cutoff on surface distance (m).
  double d0 = 3.0;
  double k_rep = 0.5;
  double v_max = 5.0;
  double dt = 0.02;

  /// Throws std::invalid_argument unless every field is finite and positive.
  void validate() const;
};

/// Surface distances at or below zero are clamped to this value inside the barrier.
inline constexpr double kBarrierFloor = 1e-3;

struct RobotState {
  std::size_t id = 0;
  Vec2 position;
  double radius = 0.2;
  /// Assigned (initial, target) component pair.
  std::size_t initial = 0;
  std::size_t target = 0;
  /// Position captured at the start of the current route edge.
  Vec2 anchor;
  std::size_t segment = 0;
};

/// Largest-remainder rounding of total * shares / sum(shares). Ties go to the
/// lower index; the result sums to `total`. Throws std::invalid_argument when
/// shares are negative, non-finite or all zero with total > 0.
std::vector<std::size_t> largest_remainder(std::span<const double> shares, std::size_t total);

/// Robot counts per (i, j) pair, row-major: component quotas round(N * w_i),
/// then each quota split by lambda_ij. Pairs at or below kActiveMass get none.
std::vector<std::size_t> pair_counts(const Gmm& initial, const Matrix& lambda, std::size_t n);

/// Mahalanobis-nearest component under per-component quotas (greedy over
/// ascending distance; ties by robot then component index), then robots of a
/// component are split over its pairs in index order. Throws
/// std::invalid_argument for an empty position list or mismatched shapes.
std::vector<RobotState> assign_robots(std::span<const Vec2> positions, const Gmm& initial,
                                      const Matrix& lambda, double radius);

/// Draws the initial robot set from the initial mixture: pair_counts robots per
/// pair, sampled from component i and affinely corrected so each group's
/// sample mean and (1/n) covariance equal the component's exactly (groups of
/// three or more; smaller groups are only re-centred). Draws whose disk meets
/// an obstacle, leaves the workspace or overlaps another robot are redrawn.
/// Throws PlanningFailedError when no valid placement is found.
std::vector<RobotState> sample_robots(const Gmm& initial, const Matrix& lambda, std::size_t n,
                                      double radius, std::span<const ConvexShape> obstacles,
                                      const Workspace& ws, Rng& rng);

/// (1 - tau) * anchor + tau * T(anchor), T = the edge's OT map. Throws
/// std::invalid_argument for tau outside [0, 1] or a non-finite anchor.
Vec2 reference_point(const GaussianGeodesic& edge, Vec2 anchor, double tau);

struct ControlOutput {
  Vec2 velocity;
  /// Some obstacle's surface distance was <= 0 and the barrier was clamped.
  bool collision = false;
};

/// u = w1 (x_ref - x) + w2 k_rep sum (1/d - 1/d0) / d^2 grad d over obstacles and
/// neighbors with d < d0, clamped to v_max. For obstacles d is the disk SDF, for
/// neighbors the center distance minus both radii (neighbors share the robot's radius).
ControlOutput apf_control(const RobotState& robot, Vec2 x_ref, std::span<const ConvexShape> obstacles,
                          std::span<const Vec2> neighbors, const MicroParams& params);

struct SwarmTrajectories {
  std::vector<double> times;
  /// positions[k][r]: robot r at times[k].
  std::vector<std::vector<Vec2>> positions;

  std::size_t robot_count() const { return positions.empty() ? 0 : positions.front().size(); }
  std::size_t step_count() const { return times.size(); }
};

struct SafetyAudit {
  /// Minimum disk-obstacle SDF over all robots, per stored time.
  std::vector<double> min_obstacle_sdf;
  /// Minimum center distance over robot pairs, per stored time (+inf for one robot).
  std::vector<double> min_pair_distance;
  /// (time, robot, obstacle) triples with SDF < 0.
  std::size_t obstacle_collisions = 0;
  /// (time, pair) instances with center distance < 2 radius.
  std::size_t robot_overlaps = 0;

  double overall_min_sdf() const;
  double overall_min_pair_distance() const;
  /// Fraction of stored times whose minimum pair distance is >= 2 radius.
  double separated_fraction(double radius) const;
};

SafetyAudit audit_safety(const SwarmTrajectories& traj, std::span<const ConvexShape> obstacles,
                         double radius, unsigned threads = 1);

struct SimulationResult {
  SwarmTrajectories trajectories;
  SafetyAudit safety;
  std::vector<RobotState> final_states;
  /// Robot steps where apf_control reported a clamped barrier.
  std::size_t clamped_barrier_events = 0;
};

/// Explicit Euler over t_k = t0 + k dt (the last step is shortened to land on
/// tf). Each step computes every robot's control from a frozen snapshot; the
/// reference is taken at t_{k+1}, and a robot's anchor is re-captured when its
/// pair enters a new route edge. Throws std::invalid_argument when a robot's
/// pair is not in the trajectory.
SimulationResult simulate(std::vector<RobotState> robots, const GmmTrajectory& traj,
                          std::span<const ConvexShape> obstacles, const MicroParams& params,
                          unsigned threads = 1);

/// (1/N) sum_i sum_k ||x_i[k+1] - x_i[k]||. Throws std::invalid_argument without robots.
double average_traj_length(const SwarmTrajectories& traj);

/// Sample mean and (1/n) covariance; `regularization` * I is added when n < 3
/// or the sample covariance is singular (collinear points).
Gaussian2D fit_gaussian(std::span<const Vec2> points, double regularization = 1e-6);

struct GroupError {
  std::size_t initial = 0;
  std::size_t target = 0;
  std::size_t count = 0;
  Gaussian2D fit;
  /// ||mean - target mean|| / workspace diagonal.
  double mean_error = 0.0;
  /// ||cov - target cov||_F / ||target cov||_F.
  double cov_error = 0.0;
};

/// Fits each (i, j) robot group's final positions and compares it to target component j.
std::vector<GroupError> group_errors(std::span<const RobotState> robots, std::span<const Vec2> final_positions,
                                     const Gmm& target, const Workspace& ws);

/// Mixture of the group fits weighted by robot count.
Gmm empirical_mixture(std::span<const GroupError> groups);

}  // namespace swarmplan
