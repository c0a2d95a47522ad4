#include "swarmplan/micro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "swarmplan/errors.hpp"
#include "swarmplan/parallel.hpp"

namespace swarmplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower bound on the distance from p to the shape: distance to its bounding box.
double box_distance(const ConvexShape& shape, Vec2 p) {
  const auto [lo, hi] = shape.bounds();
  const double dx = std::max({lo.x - p.x, 0.0, p.x - hi.x});
  const double dy = std::max({lo.y - p.y, 0.0, p.y - hi.y});
  return std::hypot(dx, dy);
}

// Lower-triangular L with L L^T = m.
Mat2 cholesky(const Mat2& m) {
  const double a = std::sqrt(m.xx);
  const double b = m.xy / a;
  return {a, 0.0, b, std::sqrt(std::max(m.yy - b * b, 0.0))};
}

Vec2 sample_mean(std::span<const Vec2> pts) {
  Vec2 m;
  for (Vec2 p : pts) m += p;
  return m / static_cast<double>(pts.size());
}

Mat2 sample_cov(std::span<const Vec2> pts, Vec2 mean) {
  double xx = 0.0, xy = 0.0, yy = 0.0;
  for (Vec2 p : pts) {
    const Vec2 d = p - mean;
    xx += d.x * d.x;
    xy += d.x * d.y;
    yy += d.y * d.y;
  }
  const double n = static_cast<double>(pts.size());
  return Mat2::symmetric(xx / n, xy / n, yy / n);
}

}  // namespace

void MicroParams::validate() const {
  for (double v : {w1, w2, d0, k_rep, v_max, dt}) {
    if (!(std::isfinite(v) && v > 0.0)) throw std::invalid_argument("micro parameters must be positive");
  }
}

std::vector<std::size_t> largest_remainder(std::span<const double> shares, std::size_t total) {
  double sum = 0.0;
  for (double s : shares) {
    if (!(std::isfinite(s) && s >= 0.0)) throw std::invalid_argument("shares must be finite and >= 0");
    sum += s;
  }
  std::vector<std::size_t> out(shares.size(), 0);
  if (total == 0) return out;
  if (!(sum > 0.0)) throw std::invalid_argument("shares must not all be zero");

  std::vector<double> rem(shares.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < shares.size(); ++k) {
    const double exact = static_cast<double>(total) * shares[k] / sum;
    out[k] = static_cast<std::size_t>(std::floor(exact));
    rem[k] = exact - static_cast<double>(out[k]);
    assigned += out[k];
  }
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
    if (shares[order[k]] > 0.0) {
      ++out[order[k]];
      ++assigned;
    }
  }
  while (assigned > total) {  // floating overshoot; take from the smallest remainders
    for (auto it = order.rbegin(); it != order.rend() && assigned > total; ++it) {
      if (out[*it] > 0) {
        --out[*it];
        --assigned;
      }
    }
  }
  return out;
}

std::vector<std::size_t> pair_counts(const Gmm& initial, const Matrix& lambda, std::size_t n) {
  if (lambda.rows() != initial.size()) throw std::invalid_argument("plan rows do not match the initial mixture");
  const std::vector<std::size_t> quota = largest_remainder(initial.weights(), n);
  std::vector<std::size_t> counts(lambda.rows() * lambda.cols(), 0);
  for (std::size_t i = 0; i < lambda.rows(); ++i) {
    if (quota[i] == 0) continue;
    std::vector<double> row(lambda.cols());
    for (std::size_t j = 0; j < lambda.cols(); ++j) row[j] = lambda(i, j) > kActiveMass ? lambda(i, j) : 0.0;
    const auto split = largest_remainder(row, quota[i]);
    for (std::size_t j = 0; j < lambda.cols(); ++j) counts[i * lambda.cols() + j] = split[j];
  }
  return counts;
}

std::vector<RobotState> assign_robots(std::span<const Vec2> positions, const Gmm& initial,
                                      const Matrix& lambda, double radius) {
  if (positions.empty()) throw std::invalid_argument("no robot positions");
  if (!(radius > 0.0)) throw std::invalid_argument("robot radius must be positive");
  const std::size_t n = positions.size();
  const std::size_t m = initial.size();
  const std::size_t cols = lambda.cols();
  const auto counts = pair_counts(initial, lambda, n);
  std::vector<std::size_t> quota(m, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < cols; ++j) quota[i] += counts[i * cols + j];

  std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
  cand.reserve(n * m);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < m; ++i)
      cand.emplace_back(mahalanobis_squared(initial.component(i), positions[r]), r, i);
  std::sort(cand.begin(), cand.end());

  constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> comp(n, kUnassigned);
  for (const auto& [d, r, i] : cand) {
    if (comp[r] != kUnassigned || quota[i] == 0) continue;
    comp[r] = i;
    --quota[i];
  }

  std::vector<RobotState> robots(n);
  std::vector<std::size_t> used(m * cols, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = comp[r];
    std::size_t j = 0;
    while (used[i * cols + j] >= counts[i * cols + j]) ++j;
    ++used[i * cols + j];
    robots[r] = RobotState{r, positions[r], radius, i, j, positions[r], 0};
  }
  return robots;
}

std::vector<RobotState> sample_robots(const Gmm& initial, const Matrix& lambda, std::size_t n, double radius,
                                      std::span<const ConvexShape> obstacles, const Workspace& ws, Rng& rng) {
  if (n == 0) throw std::invalid_argument("robot count must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("robot radius must be positive");
  const auto counts = pair_counts(initial, lambda, n);
  const std::size_t cols = lambda.cols();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<RobotState> robots;
  robots.reserve(n);

  auto valid = [&](Vec2 p, std::span<const Vec2> group, std::size_t self) {
    if (!p.finite()) return false;
    if (p.x - radius < ws.xmin || p.x + radius > ws.xmax || p.y - radius < ws.ymin || p.y + radius > ws.ymax)
      return false;
    const ConvexShape body = ConvexShape::disk(p, radius);
    for (const ConvexShape& o : obstacles) {
      if (box_distance(o, p) > radius + 1.0) continue;
      if (signed_distance(body, o).signed_distance <= 0.0) return false;
    }
    for (const RobotState& other : robots)
      if ((other.position - p).norm() < 2.0 * radius) return false;
    for (std::size_t k = 0; k < self; ++k)
      if ((group[k] - p).norm() < 2.0 * radius) return false;
    return true;
  };

  for (std::size_t i = 0; i < lambda.rows(); ++i) {
    const Gaussian2D& g = initial.component(i);
    const Mat2 lt = cholesky(g.cov.matrix());
    auto draw = [&] { return g.mean + lt * Vec2{normal(rng), normal(rng)}; };
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t count = counts[i * cols + j];
      if (count == 0) continue;
      std::vector<Vec2> raw(count);
      for (Vec2& p : raw) p = draw();

      std::vector<Vec2> placed;
      bool done = false;
      for (int round = 0; round < 500 && !done; ++round) {
        placed = raw;
        if (count >= 3) {
          const Vec2 m = sample_mean(raw);
          const Mat2 s = sample_cov(raw, m);
          if (!(s.det() > 1e-9 * s.trace() * s.trace())) {
            for (Vec2& p : raw) p = draw();
            continue;
          }
          const Mat2 a = lt * cholesky(s).inverse();
          for (Vec2& p : placed) p = g.mean + a * (p - m);
        } else if (count == 2) {
          const Vec2 shift = g.mean - sample_mean(raw);
          for (Vec2& p : placed) p += shift;
        }
        done = true;
        for (std::size_t k = 0; k < count; ++k) {
          if (!valid(placed[k], placed, k)) {
            raw[k] = draw();
            done = false;
          }
        }
      }
      if (!done) throw PlanningFailedError("could not place the robots of an initial component without overlap");
      for (Vec2 p : placed) robots.push_back(RobotState{robots.size(), p, radius, i, j, p, 0});
    }
  }
  return robots;
}

Vec2 reference_point(const GaussianGeodesic& edge, Vec2 anchor, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau outside [0, 1]");
  if (!anchor.finite()) throw std::invalid_argument("anchor must be finite");
  return anchor * (1.0 - tau) + edge.transport_map()(anchor) * tau;
}

ControlOutput apf_control(const RobotState& robot, Vec2 x_ref, std::span<const ConvexShape> obstacles,
                          std::span<const Vec2> neighbors, const MicroParams& params) {
  const Vec2 x = robot.position;
  ControlOutput out;
  Vec2 u = (x_ref - x) * params.w1;
  auto barrier = [&](double d) {
    return params.w2 * params.k_rep * (1.0 / d - 1.0 / params.d0) / (d * d);
  };

  const ConvexShape body = ConvexShape::disk(x, robot.radius);
  for (const ConvexShape& o : obstacles) {
    if (box_distance(o, x) - robot.radius >= params.d0) continue;
    const SdfResult s = signed_distance(body, o);
    double d = s.signed_distance;
    if (d >= params.d0) continue;
    if (d <= 0.0) out.collision = true;
    d = std::max(d, kBarrierFloor);
    // contact_normal is -grad s, so the push away from the obstacle is -contact_normal.
    u -= s.contact_normal * barrier(d);
  }
  for (Vec2 y : neighbors) {
    const Vec2 diff = x - y;
    const double c = diff.norm();
    if (c == 0.0) continue;
    double d = c - 2.0 * robot.radius;
    if (d >= params.d0) continue;
    d = std::max(d, kBarrierFloor);
    u += diff * (barrier(d) / c);
  }
  const double speed = u.norm();
  if (speed > params.v_max) u *= params.v_max / speed;
  out.velocity = u;
  return out;
}

double SafetyAudit::overall_min_sdf() const {
  double m = kInf;
  for (double v : min_obstacle_sdf) m = std::min(m, v);
  return m;
}

double SafetyAudit::overall_min_pair_distance() const {
  double m = kInf;
  for (double v : min_pair_distance) m = std::min(m, v);
  return m;
}

double SafetyAudit::separated_fraction(double radius) const {
  if (min_pair_distance.empty()) return 1.0;
  std::size_t ok = 0;
  for (double v : min_pair_distance)
    if (v >= 2.0 * radius) ++ok;
  return static_cast<double>(ok) / static_cast<double>(min_pair_distance.size());
}

SafetyAudit audit_safety(const SwarmTrajectories& traj, std::span<const ConvexShape> obstacles, double radius,
                         unsigned threads) {
  const std::size_t steps = traj.step_count();
  SafetyAudit audit;
  audit.min_obstacle_sdf.assign(steps, kInf);
  audit.min_pair_distance.assign(steps, kInf);
  std::vector<std::size_t> collisions(steps, 0);
  std::vector<std::size_t> overlaps(steps, 0);

  parallel_for(steps, threads, [&](std::size_t k) {
    const auto& pos = traj.positions[k];
    double min_sdf = kInf;
    for (Vec2 p : pos) {
      const ConvexShape body = ConvexShape::disk(p, radius);
      double robot_min = kInf;
      for (const ConvexShape& o : obstacles) {
        // Skipping is exact: the bound exceeds both the running minimum and zero.
        const double lb = box_distance(o, p) - radius;
        if (lb > robot_min && lb >= 0.0) continue;
        const double s = signed_distance(body, o).signed_distance;
        if (s < 0.0) ++collisions[k];
        robot_min = std::min(robot_min, s);
      }
      min_sdf = std::min(min_sdf, robot_min);
    }
    double min_pair = kInf;
    for (std::size_t a = 0; a < pos.size(); ++a) {
      for (std::size_t b = a + 1; b < pos.size(); ++b) {
        const double d = (pos[a] - pos[b]).norm();
        if (d < 2.0 * radius) ++overlaps[k];
        min_pair = std::min(min_pair, d);
      }
    }
    audit.min_obstacle_sdf[k] = min_sdf;
    audit.min_pair_distance[k] = min_pair;
  });
  audit.obstacle_collisions = std::accumulate(collisions.begin(), collisions.end(), std::size_t{0});
  audit.robot_overlaps = std::accumulate(overlaps.begin(), overlaps.end(), std::size_t{0});
  return audit;
}

SimulationResult simulate(std::vector<RobotState> robots, const GmmTrajectory& traj,
                          std::span<const ConvexShape> obstacles, const MicroParams& params, unsigned threads) {
  params.validate();
  if (robots.empty()) throw std::invalid_argument("simulation needs at least one robot");
  const double radius = robots.front().radius;

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_index;
  for (std::size_t k = 0; k < traj.pairs().size(); ++k)
    pair_index[{traj.pairs()[k].initial, traj.pairs()[k].target}] = k;
  std::vector<const PairTrajectory*> pair_of(robots.size());
  for (std::size_t r = 0; r < robots.size(); ++r) {
    const auto it = pair_index.find({robots[r].initial, robots[r].target});
    if (it == pair_index.end()) throw std::invalid_argument("robot assigned to a pair without a trajectory");
    pair_of[r] = &traj.pairs()[it->second];
    robots[r].anchor = robots[r].position;
    robots[r].segment = pair_of[r]->segment_at(traj.t0());
  }

  SimulationResult result;
  auto& times = result.trajectories.times;
  const double span = traj.tf() - traj.t0();
  const auto steps = static_cast<std::size_t>(std::ceil(span / params.dt - 1e-9));
  times.reserve(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) times.push_back(traj.t0() + static_cast<double>(k) * params.dt);
  times.push_back(traj.tf());

  auto& positions = result.trajectories.positions;
  positions.reserve(times.size());
  positions.emplace_back();
  for (const RobotState& r : robots) positions.back().push_back(r.position);

  const double reach = params.d0 + 2.0 * radius;
  std::vector<std::size_t> clamped(robots.size(), 0);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double t_next = times[k + 1];
    const double h = t_next - times[k];
    const std::vector<Vec2>& snapshot = positions.back();
    std::vector<Vec2> next(robots.size());

    parallel_for(robots.size(), threads, [&](std::size_t r) {
      RobotState& robot = robots[r];
      const PairTrajectory& pair = *pair_of[r];
      robot.position = snapshot[r];
      Vec2 x_ref = robot.anchor;
      if (!pair.stationary()) {
        const std::size_t seg = pair.segment_at(t_next);
        if (seg != robot.segment) {
          // New edge: re-anchor at the current position, pushing it through
          // any edges that were stepped over entirely.
          Vec2 anchor = robot.position;
          for (std::size_t s = robot.segment + 1; s < seg; ++s) anchor = pair.segments[s].transport_map()(anchor);
          robot.anchor = anchor;
          robot.segment = seg;
        }
        x_ref = reference_point(pair.segments[seg], robot.anchor, pair.segment_fraction(seg, t_next));
      }
      std::vector<Vec2> near;
      for (std::size_t o = 0; o < snapshot.size(); ++o) {
        if (o == r) continue;
        const Vec2 d = snapshot[o] - robot.position;
        if (std::abs(d.x) < reach && std::abs(d.y) < reach) near.push_back(snapshot[o]);
      }
      const ControlOutput u = apf_control(robot, x_ref, obstacles, near, params);
      if (u.collision) ++clamped[r];
      next[r] = robot.position + u.velocity * h;
    });
    positions.push_back(std::move(next));
  }
  for (std::size_t r = 0; r < robots.size(); ++r) {
    robots[r].position = positions.back()[r];
    result.clamped_barrier_events += clamped[r];
  }
  result.safety = audit_safety(result.trajectories, obstacles, radius, threads);
  result.final_states = std::move(robots);
  return result;
}

double average_traj_length(const SwarmTrajectories& traj) {
  const std::size_t n = traj.robot_count();
  if (n == 0) throw std::invalid_argument("no robots in the trajectories");
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k + 1 < traj.positions.size(); ++k)
      total += (traj.positions[k + 1][r] - traj.positions[k][r]).norm();
  return total / static_cast<double>(n);
}

Gaussian2D fit_gaussian(std::span<const Vec2> points, double regularization) {
  if (points.empty()) throw std::invalid_argument("cannot fit a Gaussian to no points");
  const Vec2 m = sample_mean(points);
  Mat2 c = sample_cov(points, m);
  // Too few or collinear points leave the sample covariance singular.
  if (points.size() < 3 || !is_spd(c)) c = c + Mat2::identity() * regularization;
  return {m, Spd2(c)};
}

std::vector<GroupError> group_errors(std::span<const RobotState> robots, std::span<const Vec2> final_positions,
                                     const Gmm& target, const Workspace& ws) {
  if (robots.size() != final_positions.size()) throw std::invalid_argument("robot and position counts differ");
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Vec2>> groups;
  for (std::size_t r = 0; r < robots.size(); ++r) groups[{robots[r].initial, robots[r].target}].push_back(final_positions[r]);

  std::vector<GroupError> out;
  for (const auto& [key, pts] : groups) {
    const Gaussian2D& tgt = target.component(key.second);
    GroupError e;
    e.initial = key.first;
    e.target = key.second;
    e.count = pts.size();
    e.fit = fit_gaussian(pts);
    e.mean_error = (e.fit.mean - tgt.mean).norm() / ws.diagonal();
    e.cov_error = (e.fit.cov.matrix() - tgt.cov.matrix()).frobenius() / tgt.cov.matrix().frobenius();
    out.push_back(e);
  }
  return out;
}

Gmm empirical_mixture(std::span<const GroupError> groups) {
  std::size_t total = 0;
  for (const GroupError& g : groups) total += g.count;
  std::vector<Gaussian2D> comps;
  std::vector<double> weights;
  for (const GroupError& g : groups) {
    comps.push_back(g.fit);
    weights.push_back(static_cast<double>(g.count) / static_cast<double>(total));
  }
  return Gmm(std::move(comps), std::move(weights));
}

}  // namespace swarmplan
