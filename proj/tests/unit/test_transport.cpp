#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "swarmplan/errors.hpp"
#include "swarmplan/transport.hpp"

using namespace swarmplan;

namespace {

Gaussian2D iso(Vec2 m, double var = 1.0) { return {m, Spd2::isotropic(var)}; }

Matrix make(std::size_t r, std::size_t c, std::vector<double> v) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = v[i * c + j];
  return m;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(n);
  double s = 0;
  for (double& x : w) s += (x = u(rng));
  for (double& x : w) x /= s;
  // Make the sum exactly representable as 1 within rounding.
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) rest -= w[i];
  w.back() = rest;
  return w;
}

Gmm random_gmm(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> k(1, 3);
  const std::size_t n = k(rng);
  std::vector<Gaussian2D> comps;
  for (std::size_t i = 0; i < n; ++i) comps.push_back(oracle::random_gaussian(rng, 20, 0.5, 4));
  return Gmm(comps, random_simplex(rng, n));
}

void check_marginals(const Matrix& l, const std::vector<double>& w0, const std::vector<double>& wf) {
  for (std::size_t i = 0; i < l.rows(); ++i) CHECK(std::fabs(l.row_sum(i) - w0[i]) <= 1e-9);
  for (std::size_t j = 0; j < l.cols(); ++j) CHECK(std::fabs(l.col_sum(j) - wf[j]) <= 1e-9);
}

// Line roadmap 0 - 1 - 2 with W2 edge lengths 3 and 1.
GaussianRoadmap line_roadmap() {
  GaussianRoadmap g({iso({0, 0}), iso({3, 0}), iso({4, 0})});
  g.add_edge(0, 1, w2_distance(g.node(0), g.node(1)));
  g.add_edge(1, 2, w2_distance(g.node(1), g.node(2)));
  return g;
}

}  // namespace

TEST_CASE("transport lp examples") {
  const std::vector<double> one{1.0}, half{0.5, 0.5};
  const TransportSolution a = solve_transport_lp(make(1, 1, {7}), one, one);
  CHECK(a.lambda(0, 0) == 1.0);
  CHECK(a.objective == 7.0);

  const TransportSolution b = solve_transport_lp(make(2, 2, {1, 10, 10, 1}), half, half);
  CHECK(b.lambda == make(2, 2, {0.5, 0, 0, 0.5}));
  CHECK(b.objective == doctest::Approx(1.0).epsilon(1e-15));

  const TransportSolution c = solve_transport_lp(make(2, 1, {3, 4}), half, one);
  CHECK(c.lambda == make(2, 1, {0.5, 0.5}));
}

TEST_CASE("transport lp input validation and infeasibility") {
  const std::vector<double> half{0.5, 0.5}, one{1.0};
  CHECK_THROWS_AS(solve_transport_lp(make(2, 2, {1, 1, 1, 1}), half, std::vector{0.5, 0.4}),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_transport_lp(make(2, 1, {1, 1}), one, one), std::invalid_argument);
  // Caps too tight for the marginals.
  CHECK_THROWS_AS(solve_transport_lp(make(2, 2, {1, 1, 1, 1}), half, half, make(2, 2, {0.2, 0.2, 0.2, 0.2})),
                  InfeasibleError);
  // Row 0 can only reach an excluded cell.
  CHECK_THROWS_AS(solve_transport_lp(make(2, 1, {INFINITY, 1}), half, one), InfeasibleError);
  // Exclusions that leave a feasible plan are fine.
  const TransportSolution s = solve_transport_lp(make(2, 2, {INFINITY, 1, 1, 5}), half, half);
  CHECK(s.lambda == make(2, 2, {0, 0.5, 0.5, 0}));
}

TEST_CASE("transport lp matches vertex enumeration") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> cost(0, 10), u(0, 1);
  std::uniform_int_distribution<std::size_t> dim(1, 3);
  std::uniform_int_distribution<int> small(0, 3);
  int solved = 0, infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = dim(rng), n = dim(rng);
    Matrix c(m, n);
    const bool integer = trial % 3 == 0;  // many ties
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        c(i, j) = integer ? small(rng) : cost(rng);
        if (trial % 5 == 1 && u(rng) < 0.2) c(i, j) = INFINITY;
      }
    const auto w0 = random_simplex(rng, m), wf = random_simplex(rng, n);
    std::optional<Matrix> caps;
    if (trial % 4 == 2) {
      caps = Matrix(m, n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*caps)(i, j) = 0.1 + 0.6 * u(rng);
    }
    const auto want = oracle::enumerate_transport(c, w0, wf, caps);
    if (!want) {
      CHECK_THROWS_AS(solve_transport_lp(c, w0, wf, caps), InfeasibleError);
      ++infeasible;
      continue;
    }
    const TransportSolution got = solve_transport_lp(c, w0, wf, caps);
    CHECK(std::fabs(got.objective - want->objective) <= 1e-12 * std::max(1.0, std::fabs(want->objective)));
    check_marginals(got.lambda, w0, wf);
    CHECK(satisfies_optimality(c, got, caps, 1e-9));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(got.lambda(i, j) >= 0.0);
        if (caps) CHECK(got.lambda(i, j) <= (*caps)(i, j) + 1e-12);
        if (!std::isfinite(c(i, j))) CHECK(got.lambda(i, j) == 0.0);
      }
    ++solved;
  }
  CHECK(solved > 200);
  CHECK(infeasible > 0);
}

TEST_CASE("transport lp is deterministic under ties") {
  const Matrix c(3, 3, 1.0);
  const std::vector<double> w{0.2, 0.3, 0.5};
  CHECK(solve_transport_lp(c, w, w).lambda == solve_transport_lp(c, w, w).lambda);
}

TEST_CASE("larger transport problems satisfy the optimality certificate") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> cost(0, 100);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 3 + trial % 8, n = 2 + trial % 11;
    Matrix c(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c(i, j) = cost(rng);
    const auto w0 = random_simplex(rng, m), wf = random_simplex(rng, n);
    const TransportSolution s = solve_transport_lp(c, w0, wf);
    check_marginals(s.lambda, w0, wf);
    CHECK(satisfies_optimality(c, s, std::nullopt, 1e-9));
  }
}

TEST_CASE("gmm validation") {
  CHECK_THROWS_AS(Gmm({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(Gmm({iso({0, 0})}, {0.9}), std::invalid_argument);
  CHECK_THROWS_AS(Gmm({iso({0, 0}), iso({1, 0})}, {1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Gmm({iso({0, 0})}, {0.5, 0.5}), std::invalid_argument);
  CHECK_NOTHROW(Gmm({iso({0, 0}), iso({1, 0})}, {0.25, 0.75}));
}

TEST_CASE("gmm distance examples") {
  const Gmm a({iso({0, 0})}, {1.0});
  CHECK(gmm_distance(a, a).distance == 0.0);
  const Gmm b({iso({3, 4}, 4)}, {1.0});
  CHECK(gmm_distance(a, b).distance == doctest::Approx(w2_distance(a.component(0), b.component(0))));

  const Gmm p({iso({0, 0}), iso({10, 0})}, {0.5, 0.5});
  const Gmm q({iso({1, 0}), iso({11, 0})}, {0.5, 0.5});
  const GmmDistance d = gmm_distance(p, q);
  CHECK(d.distance == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.coupling == make(2, 2, {0.5, 0, 0, 0.5}));
}

TEST_CASE("gmm distance is symmetric and satisfies the triangle inequality") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const Gmm a = random_gmm(rng), b = random_gmm(rng), c = random_gmm(rng);
    const double ab = gmm_distance(a, b).distance;
    CHECK(std::fabs(ab - gmm_distance(b, a).distance) <= 1e-9);
    CHECK(ab <= gmm_distance(a, c).distance + gmm_distance(c, b).distance + 1e-9);
  }
}

TEST_CASE("gmm geodesic") {
  std::mt19937_64 rng(57);
  for (int trial = 0; trial < 50; ++trial) {
    const Gmm a = random_gmm(rng), b = random_gmm(rng);
    const Matrix pi = gmm_distance(a, b).coupling;
    const Gmm start = merge_duplicates(gmm_geodesic(a, b, pi, 0.0));
    REQUIRE(start.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::fabs(start.weight(i) - a.weight(i)) <= 1e-9);
      CHECK((start.component(i).mean - a.component(i).mean).norm() <= 1e-9);
    }
    const Gmm end = merge_duplicates(gmm_geodesic(a, b, pi, 1.0));
    CHECK(end.size() == b.size());
  }
  const Gmm a({iso({0, 0})}, {1.0}), b({{{4, 1}, Spd2(Mat2::symmetric(3, 1, 2))}}, {1.0});
  const Gmm mid = gmm_geodesic(a, b, make(1, 1, {1.0}), 0.3);
  const Gaussian2D g = w2_geodesic(a.component(0), b.component(0), 0.3);
  std::mt19937_64 pts(58);
  for (int k = 0; k < 100; ++k) {
    const Vec2 x = oracle::draw(g, pts);
    CHECK(std::fabs(mid.density(x) - gaussian_density(g, x)) <= 1e-12);
  }
  CHECK_THROWS_AS(gmm_geodesic(a, b, make(1, 1, {0.5}), 0.3), std::invalid_argument);
  CHECK_THROWS_AS(gmm_geodesic(a, b, make(1, 1, {1.0}), 1.3), std::invalid_argument);
}

TEST_CASE("trajectory time allocation is proportional to edge length") {
  const GaussianRoadmap g = line_roadmap();
  TransportPlan plan{make(1, 1, {1.0}), make(1, 1, {4.0}), {{0, 1, 2}}};
  const GmmTrajectory traj = assemble_trajectory(plan, g, 0, 8);
  const PairTrajectory& p = traj.pairs()[0];
  REQUIRE(p.breakpoints.size() == 3);
  CHECK(p.breakpoints[0] == 0.0);
  CHECK(p.breakpoints[1] == doctest::Approx(6.0));
  CHECK(p.breakpoints[2] == 8.0);
  CHECK(p.segment_at(3.0) == 0);
  CHECK(p.segment_at(7.0) == 1);
  CHECK(p.segment_at(8.0) == 1);
  CHECK(p.segment_fraction(0, 3.0) == doctest::Approx(0.5));
  CHECK((p.at(3.0).mean - Vec2(1.5, 0)).norm() < 1e-12);
  CHECK((p.at(7.0).mean - Vec2(3.5, 0)).norm() < 1e-12);

  // Two equal edges over 10 s split at 5 s.
  GaussianRoadmap eq({iso({0, 0}), iso({2, 0}), iso({4, 0})});
  eq.add_edge(0, 1, 2);
  eq.add_edge(1, 2, 2);
  const GmmTrajectory t2 = assemble_trajectory(plan, eq, 0, 10);
  CHECK(t2.pairs()[0].breakpoints[1] == doctest::Approx(5.0));
}

TEST_CASE("stationary pairs and endpoint consistency") {
  GaussianRoadmap g({iso({0, 0}), iso({10, 0}, 4), iso({20, 5})});
  g.add_edge(0, 1, w2_distance(g.node(0), g.node(1)));
  g.add_edge(1, 2, w2_distance(g.node(1), g.node(2)));
  // Initial components are nodes {0, 1}; targets are nodes {1, 2}.
  const Gmm initial({g.node(0), g.node(1)}, {0.4, 0.6});
  const Gmm target({g.node(1), g.node(2)}, {0.5, 0.5});
  const std::vector<std::size_t> in{0, 1}, out{1, 2};
  const TransportPlan plan = plan_transport(g, in, out, initial, target);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      if (plan.lambda(i, j) > kActiveMass) CHECK_FALSE(plan.route(i, j).empty());
  CHECK(plan.route(1, 0) == std::vector<std::size_t>{1});
  CHECK(plan.costs(1, 0) == 0.0);

  const GmmTrajectory traj = assemble_trajectory(plan, g, 2, 12);
  for (const PairTrajectory& p : traj.pairs()) {
    if (p.route.size() == 1) {
      CHECK(p.stationary());
      CHECK(p.at(7.0) == p.at(2.0));
    }
  }
  const Gmm start = merge_duplicates(traj.at(2));
  REQUIRE(start.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::fabs(start.weight(i) - initial.weight(i)) <= 1e-9);
    CHECK((start.component(i).mean - initial.component(i).mean).norm() <= 1e-9);
    CHECK(start.component(i).cov.matrix().max_abs_diff(initial.component(i).cov.matrix()) <= 1e-9);
  }
  const Gmm end = merge_duplicates(traj.at(12));
  CHECK(end.size() == 2);
  for (double t = 2; t <= 12; t += 0.5) {
    double mass = 0;
    const Gmm at = traj.at(t);
    for (double w : at.weights()) mass += w;
    CHECK(std::fabs(mass - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(traj.at(1.9), std::invalid_argument);
}

TEST_CASE("unreachable pairs are excluded from the plan") {
  GaussianRoadmap g({iso({0, 0}), iso({10, 0}), iso({50, 0})});
  g.add_edge(0, 1, 10);
  const Gmm initial({g.node(0)}, {1.0});
  const Gmm target({g.node(1), g.node(2)}, {0.5, 0.5});
  const std::vector<std::size_t> in{0}, out{1, 2};
  CHECK_THROWS_AS(plan_transport(g, in, out, initial, target), InfeasibleError);
  const Gmm reachable({g.node(1)}, {1.0});
  const std::vector<std::size_t> out1{1};
  const TransportPlan plan = plan_transport(g, in, out1, initial, reachable);
  CHECK(plan.lambda(0, 0) == 1.0);
}

TEST_CASE("cell caps spread mass over more pairs") {
  GaussianRoadmap g({iso({0, 0}), iso({0, 10}), iso({10, 0}), iso({10, 10})});
  g.add_edge(0, 2, 10);
  g.add_edge(1, 3, 10);
  g.add_edge(0, 3, w2_distance(g.node(0), g.node(3)));
  g.add_edge(1, 2, w2_distance(g.node(1), g.node(2)));
  const Gmm initial({g.node(0), g.node(1)}, {0.5, 0.5});
  const Gmm target({g.node(2), g.node(3)}, {0.5, 0.5});
  const std::vector<std::size_t> in{0, 1}, out{2, 3};
  const TransportPlan free_plan = plan_transport(g, in, out, initial, target);
  CHECK(free_plan.lambda(0, 0) == doctest::Approx(0.5));
  const TransportPlan capped = plan_transport(g, in, out, initial, target, 0.3);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(capped.lambda(i, j) <= 0.3 + 1e-12);
  CHECK(capped.lambda(0, 1) == doctest::Approx(0.2));
}

TEST_CASE("density evaluation") {
  GaussianRoadmap g({iso({0, 0})});
  TransportPlan one{make(1, 1, {1.0}), make(1, 1, {0.0}), {{0}}};
  const GmmTrajectory t = assemble_trajectory(one, g, 0, 1);
  CHECK(density_at(t, 0.5, {0, 0}) == doctest::Approx(1.0 / (2 * 3.141592653589793)).epsilon(1e-12));
  CHECK_THROWS_AS(density_at(t, 1.5, {0, 0}), std::invalid_argument);

  TransportPlan two{make(2, 1, {0.5, 0.5}), make(2, 1, {0.0, 0.0}), {{0}, {0}}};
  const GmmTrajectory t2 = assemble_trajectory(two, g, 0, 1);
  CHECK(density_at(t2, 0.2, {0.3, -0.4}) == doctest::Approx(density_at(t, 0.2, {0.3, -0.4})).epsilon(1e-14));

  // Midpoint-rule quadrature over +-8 sigma.
  const GaussianRoadmap line = line_roadmap();
  TransportPlan moving{make(1, 1, {1.0}), make(1, 1, {4.0}), {{0, 1, 2}}};
  const GmmTrajectory tm = assemble_trajectory(moving, line, 0, 8);
  const Vec2 c = tm.at(5.0).component(0).mean;
  const double h = 0.05;
  double total = 0;
  for (double x = c.x - 8 + h / 2; x < c.x + 8; x += h)
    for (double y = c.y - 8 + h / 2; y < c.y + 8; y += h) total += density_at(tm, 5.0, {x, y}) * h * h;
  CHECK(std::fabs(total - 1.0) < 1e-3);
}

TEST_CASE("density audit counts cells above the cap") {
  GaussianRoadmap g({iso({50, 40}, 4)});
  TransportPlan one{make(1, 1, {1.0}), make(1, 1, {0.0}), {{0}}};
  const GmmTrajectory t = assemble_trajectory(one, g, 0, 1);
  const Workspace ws{0, 0, 100, 80};
  const double peak = 1.0 / (2 * 3.141592653589793 * 4);
  const DensityAudit loose = audit_density(t, ws, peak * 1.01, 51, 5);
  CHECK(loose.violations == 0);
  CHECK(loose.samples == 51 * 51 * 5);
  CHECK(loose.max_density <= peak);
  const DensityAudit tight = audit_density(t, ws, peak * 0.5, 51, 5);
  CHECK(tight.violations > 0);
}

TEST_CASE("trajectory json round trip") {
  const GaussianRoadmap g = line_roadmap();
  TransportPlan plan{make(1, 1, {1.0}), make(1, 1, {4.0}), {{0, 1, 2}}};
  const GmmTrajectory t = assemble_trajectory(plan, g, 0, 8);
  const GmmTrajectory back = trajectory_from_json(nlohmann::json::parse(trajectory_to_json(t).dump()), g);
  CHECK(back.t0() == 0.0);
  CHECK(back.tf() == 8.0);
  CHECK(back.pairs()[0].breakpoints == t.pairs()[0].breakpoints);
  CHECK(back.pairs()[0].route == t.pairs()[0].route);
  for (double s : {0.0, 1.3, 6.0, 7.7, 8.0}) CHECK(back.pairs()[0].at(s) == t.pairs()[0].at(s));
}
