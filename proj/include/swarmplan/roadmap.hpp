#pragma once
// Risk-aware probabilistic roadmap whose nodes are 2-D Gaussians and whose
// edges are W2 geodesics that pass the CVaR collision check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "swarmplan/gaussian.hpp"
#include "swarmplan/geom2d.hpp"
#include "swarmplan/risk.hpp"

namespace swarmplan {

using Rng = std::mt19937_64;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Axis-aligned workspace rectangle (meters).
struct Workspace {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 200.0;
  double ymax = 160.0;

  bool contains(Vec2 p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
  double diagonal() const { return std::hypot(xmax - xmin, ymax - ymin); }
};

struct RoadmapParams {
  std::size_t n = 500;
  double connection_radius = 20.0;
  int resolution = kDefaultEdgeResolution;
  /// Probability of drawing an obstacle-adjacent mean instead of a uniform one.
  double sampler_mix = 0.3;
  Workspace bounds;
  Interval sigma1{2.0, 15.0};
  Interval sigma2{2.0, 15.0};
  Interval rho{-0.8, 0.8};

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct RoadmapEdge {
  std::size_t to = 0;
  double weight = 0.0;
};

/// Undirected weighted graph over Gaussian nodes, stored as symmetric adjacency
/// lists sorted by neighbor index.
class GaussianRoadmap {
 public:
  GaussianRoadmap() = default;
  explicit GaussianRoadmap(std::vector<Gaussian2D> nodes)
      : nodes_(std::move(nodes)), adjacency_(nodes_.size()) {}

  /// Adds (i, j) and (j, i). Throws std::invalid_argument for a bad index, a
  /// self-loop, a duplicate edge or a negative/non-finite weight.
  void add_edge(std::size_t i, std::size_t j, double weight);

  std::size_t node_count() const { return nodes_.size(); }
  /// Number of undirected edges.
  std::size_t edge_count() const { return edge_count_; }
  const Gaussian2D& node(std::size_t i) const { return nodes_.at(i); }
  std::span<const Gaussian2D> nodes() const { return nodes_; }
  std::span<const RoadmapEdge> neighbors(std::size_t i) const { return adjacency_.at(i); }
  /// Weight of edge (i, j), if present.
  std::optional<double> edge_weight(std::size_t i, std::size_t j) const;

  bool operator==(const GaussianRoadmap&) const;

 private:
  std::vector<Gaussian2D> nodes_;
  std::vector<std::vector<RoadmapEdge>> adjacency_;
  std::size_t edge_count_ = 0;
};

struct SampleFreeResult {
  std::vector<Gaussian2D> samples;
  std::size_t attempts = 0;

  double acceptance_rate() const {
    return attempts == 0 ? 1.0 : static_cast<double>(samples.size()) / static_cast<double>(attempts);
  }
};

/// Draws parameter vectors until `n` Gaussians pass in_free. Candidates are
/// consumed from `rng` in a fixed order and checked in parallel batches, so the
/// result depends only on the seed. Throws SamplingExhaustedError after 1000 * n attempts.
SampleFreeResult sample_free(std::size_t n, std::span<const ConvexShape> obstacles,
                             const RiskParams& rp, const RoadmapParams& params, Rng& rng,
                             unsigned threads = 1);

/// Indices of candidates with w2_distance(candidate, g) <= r; candidates equal to g are skipped.
std::vector<std::size_t> neighbours(std::span<const Gaussian2D> candidates, const Gaussian2D& g,
                                    double r);

/// Node set = seeds followed by params.n free samples; edges join every pair
/// within W2 radius r whose geodesic passes edge_collision_free. Throws
/// SeedUnsafeError for a seed that fails in_free.
GaussianRoadmap build_roadmap(const RoadmapParams& params, std::span<const ConvexShape> obstacles,
                              const RiskParams& rp, std::span<const Gaussian2D> seeds, Rng& rng,
                              unsigned threads = 1);

struct RoadmapAudit {
  std::size_t unsafe_nodes = 0;
  std::size_t unsafe_edges = 0;
  std::size_t bad_weights = 0;
  std::size_t asymmetric_edges = 0;

  bool clean() const { return unsafe_nodes + unsafe_edges + bad_weights + asymmetric_edges == 0; }
};

/// Re-checks every construction invariant of a built roadmap.
RoadmapAudit audit_roadmap(const GaussianRoadmap& graph, std::span<const ConvexShape> obstacles,
                           const RiskParams& rp, const RoadmapParams& params);

struct GraphPath {
  std::vector<std::size_t> nodes;
  double cost = 0.0;
};

/// Single-source Dijkstra tree. Equal-cost frontier entries are settled in
/// increasing node index order.
struct ShortestPathTree {
  static constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

  std::size_t source = 0;
  std::vector<double> dist;
  std::vector<std::size_t> parent;

  bool reachable(std::size_t v) const { return dist.at(v) < std::numeric_limits<double>::infinity(); }
  /// Path from the source to v; std::nullopt when unreachable.
  std::optional<GraphPath> path_to(std::size_t v) const;
};

ShortestPathTree dijkstra(const GaussianRoadmap& graph, std::size_t src);

/// Minimum-weight path; std::nullopt when dst is unreachable. Throws
/// std::invalid_argument for an out-of-range index.
std::optional<GraphPath> shortest_path(const GaussianRoadmap& graph, std::size_t src, std::size_t dst);

/// {"nodes": [{"params": [x, y, s1, s2, rho], "cov": [xx, xy, yy]}, ...],
///  "edges": [[i, j, w], ...]} with i < j.
nlohmann::ordered_json roadmap_to_json(const GaussianRoadmap& graph);
/// Inverse of roadmap_to_json. Prefers "cov" for exact covariances, falling back to "params".
GaussianRoadmap roadmap_from_json(const nlohmann::json& doc);

}  // namespace swarmplan
