// Bounded-variable transportation simplex.
//
// The basis is a spanning tree over R row nodes and C column nodes (R + C - 1
// basic cells). Duals come from u_0 = 0 and u_i + v_j = c_ij on basic cells;
// the entering cell closes a unique cycle with the tree along which flow is
// shifted. Nonbasic cells sit at their lower (0) or upper (cap) bound.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "swarmplan/errors.hpp"
#include "swarmplan/transport.hpp"

namespace swarmplan {

double Matrix::row_sum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j);
  return s;
}

double Matrix::col_sum(std::size_t j) const {
  double s = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, j);
  return s;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class CellState : unsigned char { kLower, kUpper, kBasic };

struct Problem {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Matrix cost;
  Matrix upper;
  std::vector<char> eligible;  // rows * cols
  std::vector<double> supply;
  std::vector<double> demand;

  bool ok(std::size_t i, std::size_t j) const { return eligible[i * cols + j] != 0; }
};

class Simplex {
 public:
  Simplex(const Problem& p, Matrix x, const std::vector<std::pair<std::size_t, std::size_t>>& basis)
      : p_(p), x_(std::move(x)), state_(p.rows * p.cols, CellState::kLower) {
    for (auto [i, j] : basis) state_[i * p_.cols + j] = CellState::kBasic;
    for (std::size_t i = 0; i < p_.rows; ++i) {
      for (std::size_t j = 0; j < p_.cols; ++j) {
        if (state(i, j) != CellState::kBasic && x_(i, j) > 0.0) state_[i * p_.cols + j] = CellState::kUpper;
      }
    }
    double scale = 1.0;
    for (std::size_t i = 0; i < p_.rows; ++i)
      for (std::size_t j = 0; j < p_.cols; ++j)
        if (p_.ok(i, j)) scale = std::max(scale, std::abs(p_.cost(i, j)));
    tol_ = 1e-12 * scale;
  }

  void run() {
    const std::size_t limit = 1000 + 100 * p_.rows * p_.cols;
    for (std::size_t it = 0; it < limit; ++it) {
      compute_duals();
      const auto entering = find_entering();
      if (!entering) return;
      pivot(entering->first, entering->second);
    }
    throw Error("transport simplex exceeded its iteration limit");
  }

  // Duals for the current basis (valid after run()).
  void compute_duals() {
    const std::size_t n = p_.rows + p_.cols;
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (std::size_t i = 0; i < p_.rows; ++i) {
      for (std::size_t j = 0; j < p_.cols; ++j) {
        if (state(i, j) != CellState::kBasic) continue;
        adj[i].push_back({p_.rows + j, p_.cost(i, j)});
        adj[p_.rows + j].push_back({i, p_.cost(i, j)});
      }
    }
    std::vector<double> pot(n, kInf);
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    pot[0] = 0.0;
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (auto [b, c] : adj[a]) {
        if (seen[b]) continue;
        seen[b] = 1;
        pot[b] = c - pot[a];
        stack.push_back(b);
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw Error("transport simplex basis is not a spanning tree");
    }
    u_.assign(pot.begin(), pot.begin() + static_cast<std::ptrdiff_t>(p_.rows));
    v_.assign(pot.begin() + static_cast<std::ptrdiff_t>(p_.rows), pot.end());
  }

  const Matrix& x() const { return x_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& v() const { return v_; }
  CellState state(std::size_t i, std::size_t j) const { return state_[i * p_.cols + j]; }

 private:
  std::optional<std::pair<std::size_t, std::size_t>> find_entering() const {
    for (std::size_t i = 0; i < p_.rows; ++i) {
      for (std::size_t j = 0; j < p_.cols; ++j) {
        if (!p_.ok(i, j)) continue;
        const CellState s = state(i, j);
        if (s == CellState::kBasic) continue;
        const double rc = p_.cost(i, j) - u_[i] - v_[j];
        if (s == CellState::kLower && rc < -tol_ && p_.upper(i, j) > 0.0) return std::pair{i, j};
        if (s == CellState::kUpper && rc > tol_) return std::pair{i, j};
      }
    }
    return std::nullopt;
  }

  // Basic cells on the tree path from column node of j back to row i, in order.
  std::vector<std::pair<std::size_t, std::size_t>> tree_path(std::size_t ei, std::size_t ej) const {
    const std::size_t n = p_.rows + p_.cols;
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < p_.rows; ++i) {
      for (std::size_t j = 0; j < p_.cols; ++j) {
        if (state(i, j) != CellState::kBasic) continue;
        adj[i].push_back(p_.rows + j);
        adj[p_.rows + j].push_back(i);
      }
    }
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> parent(n, kNone);
    std::vector<std::size_t> stack{ei};
    parent[ei] = ei;
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b : adj[a]) {
        if (parent[b] != kNone) continue;
        parent[b] = a;
        stack.push_back(b);
      }
    }
    std::vector<std::pair<std::size_t, std::size_t>> path;
    std::size_t node = p_.rows + ej;
    if (parent[node] == kNone) throw Error("transport simplex basis is disconnected");
    while (node != ei) {
      const std::size_t prev = parent[node];
      if (node >= p_.rows) {
        path.push_back({prev, node - p_.rows});
      } else {
        path.push_back({node, prev - p_.rows});
      }
      node = prev;
    }
    return path;
  }

  void pivot(std::size_t ei, std::size_t ej) {
    // dir = +1 raises the entering cell from its lower bound, -1 lowers it from its upper bound.
    const double dir = state(ei, ej) == CellState::kLower ? 1.0 : -1.0;
    const auto path = tree_path(ei, ej);

    double theta = p_.upper(ei, ej);
    bool flip = true;
    std::size_t leave = 0;
    double leave_target = 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const auto [i, j] = path[k];
      // Path cells alternate, starting with a decrease relative to the entering change.
      const double sign = (k % 2 == 0 ? -1.0 : 1.0) * dir;
      const double room = sign < 0.0 ? x_(i, j) : p_.upper(i, j) - x_(i, j);
      const double target = sign < 0.0 ? 0.0 : p_.upper(i, j);
      const bool better = room < theta ||
                          (room == theta && (flip || std::pair{i, j} < path[leave]));
      if (better) {
        theta = std::max(room, 0.0);
        flip = false;
        leave = k;
        leave_target = target;
      }
    }
    if (!std::isfinite(theta)) throw Error("transport simplex found an unbounded direction");

    x_(ei, ej) += dir * theta;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const auto [i, j] = path[k];
      const double sign = (k % 2 == 0 ? -1.0 : 1.0) * dir;
      x_(i, j) += sign * theta;
    }
    if (flip) {
      x_(ei, ej) = dir > 0.0 ? p_.upper(ei, ej) : 0.0;
      state_[ei * p_.cols + ej] = dir > 0.0 ? CellState::kUpper : CellState::kLower;
      return;
    }
    const auto [li, lj] = path[leave];
    x_(li, lj) = leave_target;
    state_[li * p_.cols + lj] = leave_target == 0.0 ? CellState::kLower : CellState::kUpper;
    state_[ei * p_.cols + ej] = CellState::kBasic;
  }

  const Problem& p_;
  Matrix x_;
  std::vector<CellState> state_;
  std::vector<double> u_;
  std::vector<double> v_;
  double tol_ = 1e-12;
};

// Vogel approximation on eligible cells. Returns the basis when it forms a
// spanning tree of eligible cells, std::nullopt otherwise.
std::optional<std::pair<Matrix, std::vector<std::pair<std::size_t, std::size_t>>>> vogel_start(
    const Problem& p) {
  std::vector<double> s = p.supply;
  std::vector<double> d = p.demand;
  std::vector<char> row_alive(p.rows, 1);
  std::vector<char> col_alive(p.cols, 1);
  std::size_t rows_left = p.rows;
  std::size_t cols_left = p.cols;
  Matrix x(p.rows, p.cols);
  std::vector<std::pair<std::size_t, std::size_t>> basis;

  auto line_penalty = [&](bool is_row, std::size_t k) -> std::optional<double> {
    double best = kInf;
    double second = kInf;
    const std::size_t n = is_row ? p.cols : p.rows;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t i = is_row ? k : t;
      const std::size_t j = is_row ? t : k;
      if (!(is_row ? col_alive[j] : row_alive[i]) || !p.ok(i, j)) continue;
      const double c = p.cost(i, j);
      if (c < best) {
        second = best;
        best = c;
      } else if (c < second) {
        second = c;
      }
    }
    if (best == kInf) return std::nullopt;
    return second == kInf ? kInf : second - best;
  };

  while (rows_left > 0 && cols_left > 0) {
    bool pick_row = true;
    std::size_t line = 0;
    double best_pen = -1.0;
    for (std::size_t i = 0; i < p.rows; ++i) {
      if (!row_alive[i]) continue;
      const auto pen = line_penalty(true, i);
      if (!pen) return std::nullopt;
      if (*pen > best_pen) {
        best_pen = *pen;
        pick_row = true;
        line = i;
      }
    }
    for (std::size_t j = 0; j < p.cols; ++j) {
      if (!col_alive[j]) continue;
      const auto pen = line_penalty(false, j);
      if (!pen) return std::nullopt;
      if (*pen > best_pen) {
        best_pen = *pen;
        pick_row = false;
        line = j;
      }
    }
    std::size_t bi = 0;
    std::size_t bj = 0;
    double bc = kInf;
    const std::size_t n = pick_row ? p.cols : p.rows;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t i = pick_row ? line : t;
      const std::size_t j = pick_row ? t : line;
      if (!row_alive[i] || !col_alive[j] || !p.ok(i, j)) continue;
      if (p.cost(i, j) < bc) {
        bc = p.cost(i, j);
        bi = i;
        bj = j;
      }
    }
    const double q = std::min(s[bi], d[bj]);
    x(bi, bj) = q;
    basis.push_back({bi, bj});
    if (rows_left == 1 && cols_left == 1) {
      row_alive[bi] = col_alive[bj] = 0;
      --rows_left;
      --cols_left;
    } else if (s[bi] <= d[bj] && rows_left > 1) {
      row_alive[bi] = 0;
      --rows_left;
      s[bi] = 0.0;
      d[bj] -= q;
    } else if (cols_left > 1) {
      col_alive[bj] = 0;
      --cols_left;
      d[bj] = 0.0;
      s[bi] -= q;
    } else {
      row_alive[bi] = 0;
      --rows_left;
      s[bi] = 0.0;
      d[bj] -= q;
    }
  }
  if (basis.size() != p.rows + p.cols - 1) return std::nullopt;

  // Union-find over row/column nodes confirms the basis is a tree.
  std::vector<std::size_t> uf(p.rows + p.cols);
  std::iota(uf.begin(), uf.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (uf[a] != a) a = uf[a] = uf[uf[a]];
    return a;
  };
  for (auto [i, j] : basis) {
    const std::size_t a = find(i);
    const std::size_t b = find(p.rows + j);
    if (a == b) return std::nullopt;
    uf[a] = b;
  }
  return std::pair{std::move(x), std::move(basis)};
}

}  // namespace

TransportSolution solve_transport_lp(const Matrix& costs, std::span<const double> w0,
                                     std::span<const double> wf, const std::optional<Matrix>& caps) {
  const std::size_t m = costs.rows();
  const std::size_t n = costs.cols();
  if (m == 0 || n == 0) throw std::invalid_argument("transport problem must be non-empty");
  if (w0.size() != m || wf.size() != n) {
    throw std::invalid_argument("marginal lengths do not match the cost matrix");
  }
  if (caps && (caps->rows() != m || caps->cols() != n)) {
    throw std::invalid_argument("cap matrix shape does not match the cost matrix");
  }
  for (double w : w0)
    if (!(std::isfinite(w) && w >= 0.0)) throw std::invalid_argument("marginals must be finite and >= 0");
  for (double w : wf)
    if (!(std::isfinite(w) && w >= 0.0)) throw std::invalid_argument("marginals must be finite and >= 0");
  const double total_s = std::accumulate(w0.begin(), w0.end(), 0.0);
  const double total_d = std::accumulate(wf.begin(), wf.end(), 0.0);
  if (std::abs(total_s - total_d) > 1e-9) {
    throw std::invalid_argument("marginals do not carry the same total mass");
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double c = costs(i, j);
      if (std::isnan(c) || c == -kInf) throw std::invalid_argument("costs must be finite or +inf");
      if (caps) {
        const double u = (*caps)(i, j);
        if (std::isnan(u) || u < 0.0) throw std::invalid_argument("caps must be >= 0");
      }
    }
  }

  Problem orig;
  orig.rows = m;
  orig.cols = n;
  orig.cost = costs;
  orig.upper = caps ? *caps : Matrix(m, n, kInf);
  orig.eligible.assign(m * n, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) orig.eligible[i * n + j] = std::isfinite(costs(i, j)) ? 1 : 0;
  orig.supply.assign(w0.begin(), w0.end());
  orig.demand.assign(wf.begin(), wf.end());

  TransportSolution sol;
  auto finish = [&](const Simplex& sx) {
    sol.lambda = Matrix(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) sol.lambda(i, j) = std::max(sx.x()(i, j), 0.0);
    sol.objective = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (sol.lambda(i, j) > 0.0) sol.objective += sol.lambda(i, j) * costs(i, j);
    sol.row_duals.assign(sx.u().begin(), sx.u().begin() + static_cast<std::ptrdiff_t>(m));
    sol.col_duals.assign(sx.v().begin(), sx.v().begin() + static_cast<std::ptrdiff_t>(n));
  };

  if (!caps) {
    if (auto start = vogel_start(orig)) {
      Simplex sx(orig, std::move(start->first), start->second);
      sx.run();
      sx.compute_duals();
      finish(sx);
      return sol;
    }
  }

  // Phase 1 on the problem augmented with an artificial row m and column n.
  // Every original supply is first routed to the artificial column and every
  // demand drawn from the artificial row; both carry unit cost.
  Problem aug;
  aug.rows = m + 1;
  aug.cols = n + 1;
  aug.cost = Matrix(m + 1, n + 1, 0.0);
  aug.upper = Matrix(m + 1, n + 1, kInf);
  aug.eligible.assign((m + 1) * (n + 1), 1);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      aug.eligible[i * (n + 1) + j] = orig.eligible[i * n + j];
      aug.upper(i, j) = orig.upper(i, j);
    }
    aug.cost(i, n) = 1.0;
  }
  for (std::size_t j = 0; j < n; ++j) aug.cost(m, j) = 1.0;
  aug.supply = orig.supply;
  aug.supply.push_back(total_d);
  aug.demand = orig.demand;
  aug.demand.push_back(total_s);

  Matrix x0(m + 1, n + 1);
  std::vector<std::pair<std::size_t, std::size_t>> basis;
  for (std::size_t i = 0; i < m; ++i) {
    x0(i, n) = orig.supply[i];
    basis.push_back({i, n});
  }
  for (std::size_t j = 0; j < n; ++j) {
    x0(m, j) = orig.demand[j];
    basis.push_back({m, j});
  }
  x0(m, n) = 0.0;
  basis.push_back({m, n});

  Simplex phase1(aug, std::move(x0), basis);
  phase1.run();
  double artificial = 0.0;
  for (std::size_t i = 0; i < m; ++i) artificial += phase1.x()(i, n);
  for (std::size_t j = 0; j < n; ++j) artificial += phase1.x()(m, j);
  if (artificial > 1e-9) {
    // Each unrouted unit of mass sits on one artificial row cell and one artificial column cell.
    throw InfeasibleError("no transport plan satisfies the marginals, caps and reachability (unrouted mass " +
                          std::to_string(0.5 * artificial) + ")");
  }

  // Phase 2: pin artificial cells to zero and switch to the true costs.
  Problem aug2 = aug;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (orig.ok(i, j)) aug2.cost(i, j) = costs(i, j);
  for (std::size_t i = 0; i < m; ++i) {
    aug2.cost(i, n) = 0.0;
    aug2.upper(i, n) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    aug2.cost(m, j) = 0.0;
    aug2.upper(m, j) = 0.0;
  }
  Matrix x1 = phase1.x();
  std::vector<std::pair<std::size_t, std::size_t>> basis2;
  for (std::size_t i = 0; i <= m; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      if ((i == m) != (j == n)) x1(i, j) = 0.0;
      if (phase1.state(i, j) == CellState::kBasic) basis2.push_back({i, j});
    }
  }
  Simplex phase2(aug2, std::move(x1), basis2);
  phase2.run();
  phase2.compute_duals();
  finish(phase2);
  return sol;
}

bool satisfies_optimality(const Matrix& costs, const TransportSolution& sol,
                          const std::optional<Matrix>& caps, double tol) {
  const std::size_t m = costs.rows();
  const std::size_t n = costs.cols();
  if (sol.row_duals.size() != m || sol.col_duals.size() != n) return false;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(costs(i, j))) {
        if (sol.lambda(i, j) != 0.0) return false;
        continue;
      }
      const double rc = costs(i, j) - sol.row_duals[i] - sol.col_duals[j];
      const double x = sol.lambda(i, j);
      const double ub = caps ? (*caps)(i, j) : kInf;
      const bool at_lower = x <= tol;
      const bool at_upper = std::isfinite(ub) && x >= ub - tol;
      if (at_lower && at_upper) continue;  // cap ~ 0: either sign is fine
      if (at_lower && rc < -tol) return false;
      if (at_upper && rc > tol) return false;
      if (!at_lower && !at_upper && std::abs(rc) > tol) return false;
    }
  }
  return true;
}

}  // namespace swarmplan
