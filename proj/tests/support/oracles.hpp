#pragma once
// Independent brute-force reference implementations used by the unit and
// acceptance tests. None of these call into the library's algorithms except
// for plain data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "swarmplan/gaussian.hpp"
#include "swarmplan/geom2d.hpp"
#include "swarmplan/roadmap.hpp"
#include "swarmplan/transport.hpp"

namespace oracle {

using swarmplan::Vec2;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Scalar Gaussian tail expectation

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Upper quantile by bisection: z with P(Z > z) = alpha.
inline double upper_quantile(double alpha) {
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::numbers::sqrt2) > alpha) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// E[X | X >= VaR_alpha] for X ~ N(mu, sigma^2), by composite Simpson
// integration of z phi(z) over the upper alpha tail.
inline double tail_expectation(double mu, double sigma, double alpha) {
  const double a = alpha >= 1.0 ? -40.0 : upper_quantile(alpha);
  const double b = std::max(a, 0.0) + 40.0;
  const int panels = 40000;
  const double h = (b - a) / panels;
  auto f = [](double z) { return z * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); };
  double sum = f(a) + f(b);
  for (int k = 1; k < panels; ++k) sum += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return mu + sigma * (sum * h / 3.0) / alpha;
}

// ---------------------------------------------------------------------------
// Geometry

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squared_norm(), 0.0, 1.0);
  return (a + ab * t - p).norm();
}

inline std::vector<Vec2> vertices_of(const swarmplan::ConvexShape& s) {
  return {s.vertices().begin(), s.vertices().end()};
}

inline bool point_in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    if ((b - a).cross(p - a) < 0.0) return false;
  }
  return true;
}

// Exact signed distance from a point to a convex counter-clockwise polygon.
inline double point_polygon_sdf(Vec2 p, const std::vector<Vec2>& poly) {
  double d = kInf;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    d = std::min(d, point_segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  }
  return point_in_polygon(p, poly) ? -d : d;
}

// Separating-axis penetration of two convex polygons: over all edge normals,
// the smallest translation that separates the projections. Negative when a
// separating axis exists.
inline double sat_min_overlap(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double best = kInf;
  auto axes_of = [&](const std::vector<Vec2>& poly) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2 e = poly[(i + 1) % poly.size()] - poly[i];
      const Vec2 n = Vec2(e.y, -e.x) / e.norm();
      double amin = kInf, amax = -kInf, bmin = kInf, bmax = -kInf;
      for (Vec2 v : a) { amin = std::min(amin, v.dot(n)); amax = std::max(amax, v.dot(n)); }
      for (Vec2 v : b) { bmin = std::min(bmin, v.dot(n)); bmax = std::max(bmax, v.dot(n)); }
      best = std::min(best, std::min(amax - bmin, bmax - amin));
    }
  };
  axes_of(a);
  axes_of(b);
  return best;
}

// Points spaced at most `step` apart along the closed polygon boundary.
inline std::vector<Vec2> dense_boundary(const std::vector<Vec2>& poly, double step) {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
    for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / n));
  }
  return out;
}

// Brute-force signed distance of two convex polygons: dense boundary sampling
// when disjoint, minimum SAT overlap (the exact penetration depth for convex
// polygons) when overlapping.
inline double polygon_sdf(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double step = 1e-3) {
  const double overlap = sat_min_overlap(a, b);
  if (overlap > 0.0) return -overlap;
  double d = kInf;
  for (Vec2 p : dense_boundary(a, step)) d = std::min(d, point_polygon_sdf(p, b));
  for (Vec2 p : dense_boundary(b, step)) d = std::min(d, point_polygon_sdf(p, a));
  return d;
}

// Random convex counter-clockwise polygon: vertices at sorted random angles on
// a rotated ellipse, at least 0.05 rad apart.
inline std::vector<Vec2> random_convex_polygon(std::mt19937_64& rng, Vec2 center, double rmin, double rmax,
                                               int max_vertices = 8) {
  std::uniform_int_distribution<int> nv(3, max_vertices);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> rad(rmin, rmax);
  const int n = nv(rng);
  const double rx = rad(rng), ry = rad(rng), rot = ang(rng);
  std::vector<double> angles(n);
  for (;;) {
    for (double& a : angles) a = ang(rng);
    std::sort(angles.begin(), angles.end());
    bool spread = true;
    for (int i = 0; i < n; ++i) {
      const double next = i + 1 < n ? angles[i + 1] : angles[0] + 2.0 * std::numbers::pi;
      if (next - angles[i] < 0.05) spread = false;
    }
    if (spread) break;
  }
  std::vector<Vec2> out;
  for (double a : angles) {
    const Vec2 local(rx * std::cos(a), ry * std::sin(a));
    out.push_back(center + Vec2(local.x * std::cos(rot) - local.y * std::sin(rot),
                                local.x * std::sin(rot) + local.y * std::cos(rot)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random Gaussians

inline swarmplan::Gaussian2D random_gaussian(std::mt19937_64& rng, double mean_range = 50.0, double smin = 0.5,
                                             double smax = 10.0, double rho_max = 0.9) {
  std::uniform_real_distribution<double> m(-mean_range, mean_range);
  std::uniform_real_distribution<double> s(smin, smax);
  std::uniform_real_distribution<double> r(-rho_max, rho_max);
  const double x = m(rng), y = m(rng), s1 = s(rng), s2 = s(rng), rho = r(rng);
  return {{x, y}, swarmplan::Spd2(swarmplan::Mat2::symmetric(s1 * s1, rho * s1 * s2, s2 * s2))};
}

inline Vec2 draw(const swarmplan::Gaussian2D& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  // Cholesky factor of the covariance.
  const double l11 = std::sqrt(g.cov.xx());
  const double l21 = g.cov.xy() / l11;
  const double l22 = std::sqrt(g.cov.yy() - l21 * l21);
  const double z1 = n01(rng), z2 = n01(rng);
  return {g.mean.x + l11 * z1, g.mean.y + l21 * z1 + l22 * z2};
}

// ---------------------------------------------------------------------------
// Assignment (Hungarian / shortest augmenting path, O(n^3))

// Minimum-cost perfect matching on a square cost matrix (row-major, n x n).
// Returns the optimal total cost.
inline double min_cost_assignment(const std::vector<double>& cost, std::size_t n) {
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      const double* row = &cost[(i0 - 1) * n];
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
        if (minv[j] < delta) { delta = minv[j]; j1 = j; }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) { u[p[j]] += delta; v[j] -= delta; } else { minv[j] -= delta; }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[(p[j] - 1) * n + (j - 1)];
  return total;
}

// Minimum-cost perfect matching by the epsilon-scaling forward auction
// (Gauss-Seidel bidding). The result is within n * eps_final of the optimum.
inline double auction_assignment(const std::vector<double>& cost, std::size_t n, double eps_final) {
  double cmax = 0.0;
  for (double c : cost) cmax = std::max(cmax, c);
  std::vector<double> price(n, 0.0);
  std::vector<std::ptrdiff_t> owner(n), assigned(n);
  double eps = std::max(cmax / 4.0, eps_final);
  for (;;) {
    std::fill(owner.begin(), owner.end(), -1);
    std::fill(assigned.begin(), assigned.end(), -1);
    std::vector<std::size_t> queue(n);
    for (std::size_t i = 0; i < n; ++i) queue[i] = n - 1 - i;
    while (!queue.empty()) {
      const std::size_t i = queue.back();
      queue.pop_back();
      const double* row = &cost[i * n];
      double best = -kInf, second = -kInf;
      std::size_t jbest = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double value = -row[j] - price[j];
        if (value > best) {
          second = best;
          best = value;
          jbest = j;
        } else if (value > second) {
          second = value;
        }
      }
      if (n == 1) second = best;
      price[jbest] += best - second + eps;
      const std::ptrdiff_t prev = owner[jbest];
      owner[jbest] = static_cast<std::ptrdiff_t>(i);
      assigned[i] = static_cast<std::ptrdiff_t>(jbest);
      if (prev >= 0) {
        assigned[prev] = -1;
        queue.push_back(static_cast<std::size_t>(prev));
      }
    }
    if (eps <= eps_final) break;
    eps = std::max(eps / 5.0, eps_final);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i * n + static_cast<std::size_t>(assigned[i])];
  return total;
}

// Empirical W2 between two equally weighted point clouds of the same size.
inline double empirical_w2(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  const std::size_t n = a.size();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = (a[i] - b[j]).squared_norm();
  return std::sqrt(auction_assignment(cost, n, 1e-7) / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Transportation polytope vertex enumeration

// Dense Gaussian elimination with partial pivoting on an m x k system (m >= k)
// restricted to the given columns. Returns the solution when the columns are
// independent and the system is consistent.
inline std::optional<std::vector<double>> solve_columns(const std::vector<std::vector<double>>& A,
                                                        const std::vector<double>& b,
                                                        const std::vector<std::size_t>& cols) {
  const std::size_t m = A.size();
  const std::size_t k = cols.size();
  std::vector<std::vector<double>> M(m, std::vector<double>(k + 1));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < k; ++c) M[r][c] = A[r][cols[c]];
    M[r][k] = b[r];
  }
  std::size_t row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = row;
    for (std::size_t r = row; r < m; ++r)
      if (std::fabs(M[r][c]) > std::fabs(M[piv][c])) piv = r;
    if (row >= m || std::fabs(M[piv][c]) < 1e-12) return std::nullopt;  // dependent columns
    std::swap(M[piv], M[row]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == row) continue;
      const double f = M[r][c] / M[row][c];
      for (std::size_t cc = c; cc <= k; ++cc) M[r][cc] -= f * M[row][cc];
    }
    ++row;
  }
  for (std::size_t r = row; r < m; ++r)
    if (std::fabs(M[r][k]) > 1e-9) return std::nullopt;  // inconsistent
  std::vector<double> x(k);
  for (std::size_t c = 0; c < k; ++c) x[c] = M[c][k] / M[c][c];
  return x;
}

struct LpOptimum {
  double objective = kInf;
  std::vector<double> lambda;  // row-major
};

// Minimum of sum c_ij x_ij over the (optionally capped) transportation polytope,
// found by enumerating every basic solution: each variable is basic, at zero or
// at its cap; basics are solved from the marginal equations. Cells with an
// infinite cost are fixed at zero. Returns nullopt when the polytope is empty.
inline std::optional<LpOptimum> enumerate_transport(const swarmplan::Matrix& costs, const std::vector<double>& w0,
                                                    const std::vector<double>& wf,
                                                    const std::optional<swarmplan::Matrix>& caps = std::nullopt) {
  const std::size_t m = costs.rows(), n = costs.cols(), nv = m * n;
  std::vector<std::vector<double>> A(m + n, std::vector<double>(nv, 0.0));
  std::vector<double> rhs(m + n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      A[i][i * n + j] = 1.0;
      A[m + j][i * n + j] = 1.0;
    }
    rhs[i] = w0[i];
  }
  for (std::size_t j = 0; j < n; ++j) rhs[m + j] = wf[j];

  std::vector<int> state(nv, 0);  // 0 = at zero, 1 = basic, 2 = at cap
  std::optional<LpOptimum> best;
  const int choices = caps ? 3 : 2;
  std::function<void(std::size_t)> rec = [&](std::size_t v) {
    if (v == nv) {
      std::vector<std::size_t> basic;
      std::vector<double> b = rhs;
      std::vector<double> x(nv, 0.0);
      for (std::size_t q = 0; q < nv; ++q) {
        if (state[q] == 1) basic.push_back(q);
        if (state[q] == 2) {
          x[q] = (*caps)(q / n, q % n);
          for (std::size_t r = 0; r < m + n; ++r) b[r] -= A[r][q] * x[q];
        }
      }
      const auto sol = solve_columns(A, b, basic);
      if (!sol) return;
      for (std::size_t c = 0; c < basic.size(); ++c) {
        const double val = (*sol)[c];
        const double ub = caps ? (*caps)(basic[c] / n, basic[c] % n) : kInf;
        if (val < -1e-12 || val > ub + 1e-12) return;
        x[basic[c]] = std::clamp(val, 0.0, ub);
      }
      double obj = 0.0;
      for (std::size_t q = 0; q < nv; ++q)
        if (x[q] > 0.0) obj += x[q] * costs(q / n, q % n);
      if (!best || obj < best->objective) best = LpOptimum{obj, x};
      return;
    }
    const bool excluded = !std::isfinite(costs(v / n, v % n));
    for (int s = 0; s < choices; ++s) {
      if (excluded && s != 0) continue;
      if (s == 2 && (*caps)(v / n, v % n) <= 0.0) continue;
      state[v] = s;
      rec(v + 1);
    }
    state[v] = 0;
  };
  rec(0);
  return best;
}

// ---------------------------------------------------------------------------
// Simple-path enumeration

struct PathOptimum {
  double cost = kInf;
  std::vector<std::size_t> nodes;
  std::size_t ties = 0;  // number of other simple paths with exactly the optimal cost
};

// Exhaustive depth-first enumeration of simple paths src -> dst. The cost is
// accumulated from the source outwards, edge by edge.
inline std::optional<PathOptimum> enumerate_paths(const swarmplan::GaussianRoadmap& g, std::size_t src,
                                                  std::size_t dst) {
  PathOptimum best;
  std::vector<std::size_t> stack{src};
  std::vector<char> on(g.node_count(), 0);
  on[src] = 1;
  std::function<void(double)> rec = [&](double cost) {
    const std::size_t u = stack.back();
    if (u == dst) {
      if (cost < best.cost) {
        best.cost = cost;
        best.nodes = stack;
        best.ties = 0;
      } else if (cost == best.cost) {
        ++best.ties;
      }
      return;
    }
    for (const auto& e : g.neighbors(u)) {
      if (on[e.to]) continue;
      on[e.to] = 1;
      stack.push_back(e.to);
      rec(cost + e.weight);
      stack.pop_back();
      on[e.to] = 0;
    }
  };
  rec(0.0);
  if (best.nodes.empty()) return std::nullopt;
  return best;
}

}  // namespace oracle
