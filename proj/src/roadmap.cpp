#include "swarmplan/roadmap.hpp"

#include <algorithm>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "swarmplan/errors.hpp"
#include "swarmplan/parallel.hpp"

namespace swarmplan {

namespace {

constexpr std::size_t kSampleBatch = 256;
constexpr std::size_t kAttemptsPerSample = 1000;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void check_interval(const Interval& iv, const char* name) {
  if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
    throw std::invalid_argument(std::string(name) + " range is empty");
  }
}

// One parameter-vector draw. Returns nullopt when an obstacle-biased mean
// falls outside the workspace; the draw still counts as an attempt.
std::optional<Gaussian2D> draw_candidate(const RoadmapParams& p,
                                         std::span<const ConvexShape> obstacles, Rng& rng) {
  const bool biased = uniform(rng, 0.0, 1.0) < p.sampler_mix && !obstacles.empty();
  Vec2 mean;
  if (biased) {
    const auto idx = std::uniform_int_distribution<std::size_t>(0, obstacles.size() - 1)(rng);
    const Vec2 anchor = obstacles[idx].boundary_point(uniform(rng, 0.0, 1.0));
    std::normal_distribution<double> noise(0.0, 0.5 * p.connection_radius);
    const double dx = noise(rng);
    const double dy = noise(rng);
    mean = anchor + Vec2{dx, dy};
  } else {
    mean = {uniform(rng, p.bounds.xmin, p.bounds.xmax), uniform(rng, p.bounds.ymin, p.bounds.ymax)};
  }
  GaussianParamVector v;
  v.x = mean.x;
  v.y = mean.y;
  v.sigma1 = uniform(rng, p.sigma1.lo, p.sigma1.hi);
  v.sigma2 = uniform(rng, p.sigma2.lo, p.sigma2.hi);
  v.rho = uniform(rng, p.rho.lo, p.rho.hi);
  if (!p.bounds.contains(mean)) return std::nullopt;
  return from_param_vector(v);
}

}  // namespace

void RoadmapParams::validate() const {
  if (!(connection_radius > 0.0)) throw std::invalid_argument("connection radius must be > 0");
  if (resolution < 2) throw std::invalid_argument("edge resolution must be >= 2");
  if (!(sampler_mix >= 0.0 && sampler_mix <= 1.0)) {
    throw std::invalid_argument("sampler_mix must lie in [0, 1]");
  }
  if (!(bounds.xmin < bounds.xmax && bounds.ymin < bounds.ymax)) {
    throw std::invalid_argument("workspace bounds are empty");
  }
  check_interval(sigma1, "sigma1");
  check_interval(sigma2, "sigma2");
  check_interval(rho, "rho");
  if (!(sigma1.lo > 0.0 && sigma2.lo > 0.0)) throw std::invalid_argument("sigma ranges must be positive");
  if (!(rho.lo > -1.0 && rho.hi < 1.0)) throw std::invalid_argument("rho range must lie in (-1, 1)");
}

void GaussianRoadmap::add_edge(std::size_t i, std::size_t j, double weight) {
  if (i >= nodes_.size() || j >= nodes_.size()) throw std::invalid_argument("edge index out of range");
  if (i == j) throw std::invalid_argument("self-loop");
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw std::invalid_argument("bad edge weight");
  if (edge_weight(i, j)) throw std::invalid_argument("duplicate edge");
  auto insert = [](std::vector<RoadmapEdge>& list, RoadmapEdge e) {
    auto pos = std::lower_bound(list.begin(), list.end(), e.to,
                                [](const RoadmapEdge& x, std::size_t to) { return x.to < to; });
    list.insert(pos, e);
  };
  insert(adjacency_[i], {j, weight});
  insert(adjacency_[j], {i, weight});
  ++edge_count_;
}

std::optional<double> GaussianRoadmap::edge_weight(std::size_t i, std::size_t j) const {
  const auto& list = adjacency_.at(i);
  auto pos = std::lower_bound(list.begin(), list.end(), j,
                              [](const RoadmapEdge& x, std::size_t to) { return x.to < to; });
  if (pos == list.end() || pos->to != j) return std::nullopt;
  return pos->weight;
}

bool GaussianRoadmap::operator==(const GaussianRoadmap& o) const {
  if (nodes_ != o.nodes_ || edge_count_ != o.edge_count_) return false;
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    const auto& a = adjacency_[i];
    const auto& b = o.adjacency_[i];
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].to != b[k].to || a[k].weight != b[k].weight) return false;
    }
  }
  return true;
}

SampleFreeResult sample_free(std::size_t n, std::span<const ConvexShape> obstacles,
                             const RiskParams& rp, const RoadmapParams& params, Rng& rng,
                             unsigned threads) {
  params.validate();
  rp.validate();
  SampleFreeResult out;
  const std::size_t limit = kAttemptsPerSample * n;
  std::vector<std::optional<Gaussian2D>> batch;
  std::vector<char> free;
  while (out.samples.size() < n) {
    if (out.attempts >= limit) {
      std::ostringstream msg;
      msg << "sampling exhausted: " << out.samples.size() << " of " << n << " free samples after "
          << out.attempts << " attempts (acceptance rate " << out.acceptance_rate() << ")";
      throw SamplingExhaustedError(msg.str(), out.acceptance_rate());
    }
    const std::size_t count = std::min(kSampleBatch, limit - out.attempts);
    batch.clear();
    for (std::size_t k = 0; k < count; ++k) batch.push_back(draw_candidate(params, obstacles, rng));
    free.assign(count, 0);
    parallel_for(count, threads, [&](std::size_t k) {
      free[k] = batch[k] && in_free(*batch[k], obstacles, rp);
    });
    for (std::size_t k = 0; k < count && out.samples.size() < n; ++k) {
      ++out.attempts;
      if (free[k]) out.samples.push_back(*batch[k]);
    }
  }
  return out;
}

std::vector<std::size_t> neighbours(std::span<const Gaussian2D> candidates, const Gaussian2D& g,
                                    double r) {
  if (!(r > 0.0)) throw std::invalid_argument("connection radius must be > 0");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == g) continue;
    if (w2_distance(candidates[i], g) <= r) out.push_back(i);
  }
  return out;
}

GaussianRoadmap build_roadmap(const RoadmapParams& params, std::span<const ConvexShape> obstacles,
                              const RiskParams& rp, std::span<const Gaussian2D> seeds, Rng& rng,
                              unsigned threads) {
  params.validate();
  rp.validate();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!in_free(seeds[i], obstacles, rp)) {
      const GaussianParamVector v = to_param_vector(seeds[i]);
      std::ostringstream msg;
      msg << "seed " << i << " (mean " << v.x << ", " << v.y << ") violates the risk constraint";
      throw SeedUnsafeError(msg.str(), i);
    }
  }
  std::vector<Gaussian2D> nodes(seeds.begin(), seeds.end());
  SampleFreeResult sampled = sample_free(params.n, obstacles, rp, params, rng, threads);
  nodes.insert(nodes.end(), sampled.samples.begin(), sampled.samples.end());

  const double r = params.connection_radius;
  // Each node owns the edges to higher-indexed neighbours; assembly is by index.
  std::vector<std::vector<RoadmapEdge>> forward(nodes.size());
  parallel_for(nodes.size(), threads, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if ((nodes[i].mean - nodes[j].mean).norm() > r) continue;  // W2 >= mean distance
      const double w = w2_distance(nodes[i], nodes[j]);
      if (w > r) continue;
      if (edge_collision_free(nodes[i], nodes[j], obstacles, rp, params.resolution)) {
        forward[i].push_back({j, w});
      }
    }
  });
  GaussianRoadmap graph(std::move(nodes));
  for (std::size_t i = 0; i < forward.size(); ++i) {
    for (const RoadmapEdge& e : forward[i]) graph.add_edge(i, e.to, e.weight);
  }
  return graph;
}

RoadmapAudit audit_roadmap(const GaussianRoadmap& graph, std::span<const ConvexShape> obstacles,
                           const RiskParams& rp, const RoadmapParams& params) {
  RoadmapAudit audit;
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    if (!in_free(graph.node(i), obstacles, rp)) ++audit.unsafe_nodes;
    for (const RoadmapEdge& e : graph.neighbors(i)) {
      const auto back = graph.edge_weight(e.to, i);
      if (!back || *back != e.weight) ++audit.asymmetric_edges;
      if (e.to < i) continue;
      const double w = w2_distance(graph.node(i), graph.node(e.to));
      if (std::fabs(w - e.weight) > 1e-9 || e.weight > params.connection_radius) ++audit.bad_weights;
      if (!edge_collision_free(graph.node(i), graph.node(e.to), obstacles, rp, params.resolution)) {
        ++audit.unsafe_edges;
      }
    }
  }
  return audit;
}

std::optional<GraphPath> ShortestPathTree::path_to(std::size_t v) const {
  if (!reachable(v)) return std::nullopt;
  GraphPath path;
  path.cost = dist[v];
  for (std::size_t cur = v; cur != kNoParent; cur = parent[cur]) path.nodes.push_back(cur);
  std::reverse(path.nodes.begin(), path.nodes.end());
  return path;
}

ShortestPathTree dijkstra(const GaussianRoadmap& graph, std::size_t src) {
  if (src >= graph.node_count()) throw std::invalid_argument("source index out of range");
  ShortestPathTree tree;
  tree.source = src;
  tree.dist.assign(graph.node_count(), std::numeric_limits<double>::infinity());
  tree.parent.assign(graph.node_count(), ShortestPathTree::kNoParent);
  std::vector<char> settled(graph.node_count(), 0);

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  tree.dist[src] = 0.0;
  frontier.push({0.0, src});
  while (!frontier.empty()) {
    const auto [d, u] = frontier.top();
    frontier.pop();
    if (settled[u]) continue;
    settled[u] = 1;
    for (const RoadmapEdge& e : graph.neighbors(u)) {
      const double nd = d + e.weight;
      if (nd < tree.dist[e.to]) {
        tree.dist[e.to] = nd;
        tree.parent[e.to] = u;
        frontier.push({nd, e.to});
      }
    }
  }
  return tree;
}

std::optional<GraphPath> shortest_path(const GaussianRoadmap& graph, std::size_t src, std::size_t dst) {
  if (src >= graph.node_count() || dst >= graph.node_count()) {
    throw std::invalid_argument("node index out of range");
  }
  return dijkstra(graph, src).path_to(dst);
}

nlohmann::ordered_json roadmap_to_json(const GaussianRoadmap& graph) {
  nlohmann::ordered_json doc;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const Gaussian2D& g : graph.nodes()) {
    const GaussianParamVector v = to_param_vector(g);
    doc["nodes"].push_back({{"params", {v.x, v.y, v.sigma1, v.sigma2, v.rho}},
                            {"cov", {g.cov.xx(), g.cov.xy(), g.cov.yy()}}});
  }
  doc["edges"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    for (const RoadmapEdge& e : graph.neighbors(i)) {
      if (e.to > i) doc["edges"].push_back({i, e.to, e.weight});
    }
  }
  return doc;
}

GaussianRoadmap roadmap_from_json(const nlohmann::json& doc) {
  std::vector<Gaussian2D> nodes;
  for (const auto& n : doc.at("nodes")) {
    const auto& p = n.at("params");
    if (n.contains("cov")) {
      const auto& c = n.at("cov");
      nodes.push_back({{p.at(0).get<double>(), p.at(1).get<double>()},
                       Spd2(Mat2::symmetric(c.at(0).get<double>(), c.at(1).get<double>(),
                                            c.at(2).get<double>()))});
    } else {
      nodes.push_back(from_param_vector({p.at(0).get<double>(), p.at(1).get<double>(),
                                         p.at(2).get<double>(), p.at(3).get<double>(),
                                         p.at(4).get<double>()}));
    }
  }
  GaussianRoadmap graph(std::move(nodes));
  for (const auto& e : doc.at("edges")) {
    graph.add_edge(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>());
  }
  return graph;
}

}  // namespace swarmplan
