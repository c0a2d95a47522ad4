#include "swarmplan/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

#include "swarmplan/errors.hpp"

namespace swarmplan {

std::vector<ConvexShape> Scenario::obstacle_parts() const {
  std::vector<ConvexShape> out;
  for (const ObstacleGroup& g : obstacles) out.insert(out.end(), g.parts.begin(), g.parts.end());
  return out;
}

namespace {

[[noreturn]] void parse_fail(const YAML::Node& node, const std::string& path, const std::string& what) {
  const YAML::Mark m = node.Mark();
  const bool known = m.line >= 0;
  throw ParseError(path + ": " + what, known ? m.line + 1 : 0, known ? m.column + 1 : 0);
}

void expect_map(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) parse_fail(node, path, "expected a mapping");
}

void expect_seq(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) parse_fail(node, path, "expected a list");
}

// Rejects keys outside `allowed` so that typos do not silently fall back to defaults.
void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key)) parse_fail(kv.first, path.empty() ? key : path + "." + key, "unknown key");
  }
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

YAML::Node require(const YAML::Node& node, const std::string& path, const std::string& key) {
  const YAML::Node child = node[key];
  if (!child) parse_fail(node, join(path, key), "missing required field");
  return child;
}

double to_double(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) parse_fail(node, path, "expected a number");
  try {
    return node.as<double>();
  } catch (const YAML::BadConversion&) {
    parse_fail(node, path, "expected a number");
  }
}

std::int64_t to_int(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) parse_fail(node, path, "expected an integer");
  try {
    return node.as<std::int64_t>();
  } catch (const YAML::BadConversion&) {
    parse_fail(node, path, "expected an integer");
  }
}

bool to_bool(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) parse_fail(node, path, "expected true or false");
  try {
    return node.as<bool>();
  } catch (const YAML::BadConversion&) {
    parse_fail(node, path, "expected true or false");
  }
}

double opt_double(const YAML::Node& node, const std::string& path, const std::string& key, double fallback) {
  const YAML::Node child = node[key];
  return child ? to_double(child, join(path, key)) : fallback;
}

Vec2 to_vec2(const YAML::Node& node, const std::string& path) {
  expect_seq(node, path);
  if (node.size() != 2) parse_fail(node, path, "expected [x, y]");
  return {to_double(node[0], path + "[0]"), to_double(node[1], path + "[1]")};
}

Interval to_interval(const YAML::Node& node, const std::string& path) {
  const Vec2 v = to_vec2(node, path);
  return {v.x, v.y};
}

Mat2 to_mat2(const YAML::Node& node, const std::string& path) {
  expect_seq(node, path);
  if (node.size() != 2) parse_fail(node, path, "expected [[a, b], [c, d]]");
  const Vec2 r0 = to_vec2(node[0], path + "[0]");
  const Vec2 r1 = to_vec2(node[1], path + "[1]");
  return {r0.x, r0.y, r1.x, r1.y};
}

Gmm to_gmm(const YAML::Node& node, const std::string& path) {
  expect_seq(node, path);
  if (node.size() == 0) throw ValidationError(path, "mixture needs at least one component");
  std::vector<Gaussian2D> comps;
  std::vector<double> weights;
  double total = 0.0;
  for (std::size_t k = 0; k < node.size(); ++k) {
    const std::string p = path + "[" + std::to_string(k) + "]";
    const YAML::Node c = node[k];
    expect_map(c, p);
    check_keys(c, p, {"weight", "mean", "cov"});
    const double w = to_double(require(c, p, "weight"), p + ".weight");
    const Vec2 mean = to_vec2(require(c, p, "mean"), p + ".mean");
    const Mat2 cov = to_mat2(require(c, p, "cov"), p + ".cov");
    if (!(std::isfinite(w) && w > 0.0)) throw ValidationError(p + ".weight", "must be positive");
    if (!mean.finite()) throw ValidationError(p + ".mean", "must be finite");
    try {
      comps.push_back({mean, Spd2(cov)});
    } catch (const std::invalid_argument& e) {
      throw ValidationError(p + ".cov", e.what());
    }
    weights.push_back(w);
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ValidationError(path, "weights sum to " + std::to_string(total) + ", expected 1");
  }
  for (double& w : weights) w /= total;
  return Gmm(std::move(comps), std::move(weights));
}

ConvexShape to_part(const YAML::Node& node, const std::string& path) {
  expect_map(node, path);
  if (node.size() != 1) parse_fail(node, path, "expected exactly one of polygon, box, disk");
  const auto key = node.begin()->first.as<std::string>();
  const YAML::Node body = node.begin()->second;
  const std::string p = join(path, key);
  try {
    if (key == "polygon") {
      if (!body || body.IsNull()) parse_fail(node, p, "missing vertex list");
      expect_seq(body, p);
      std::vector<Vec2> verts;
      for (std::size_t k = 0; k < body.size(); ++k) verts.push_back(to_vec2(body[k], p + "[" + std::to_string(k) + "]"));
      return ConvexShape::polygon(std::move(verts));
    }
    if (key == "box") {
      expect_seq(body, p);
      if (body.size() != 4) parse_fail(body, p, "expected [xmin, ymin, xmax, ymax]");
      const double x0 = to_double(body[0], p + "[0]");
      const double y0 = to_double(body[1], p + "[1]");
      const double x1 = to_double(body[2], p + "[2]");
      const double y1 = to_double(body[3], p + "[3]");
      return ConvexShape::box(x0, y0, x1, y1);
    }
    if (key == "disk") {
      expect_map(body, p);
      check_keys(body, p, {"center", "radius"});
      return ConvexShape::disk(to_vec2(require(body, p, "center"), p + ".center"),
                               to_double(require(body, p, "radius"), p + ".radius"));
    }
  } catch (const std::invalid_argument& e) {
    throw ValidationError(p, e.what());
  }
  parse_fail(node, p, "unknown obstacle part kind");
}

Scenario from_yaml(const YAML::Node& root) {
  expect_map(root, "<root>");
  check_keys(root, "", {"name", "seed", "workspace", "robots", "horizon", "risk", "roadmap", "micro",
                        "density_cap", "initial_gmm", "target_gmm", "obstacles"});
  Scenario s;
  if (root["name"]) s.name = root["name"].as<std::string>();
  if (root["seed"]) {
    const std::int64_t seed = to_int(root["seed"], "seed");
    if (seed < 0) throw ValidationError("seed", "must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);
  }

  const YAML::Node ws = require(root, "", "workspace");
  expect_map(ws, "workspace");
  check_keys(ws, "workspace", {"width", "height"});
  s.workspace = Workspace{0.0, 0.0, to_double(require(ws, "workspace", "width"), "workspace.width"),
                          to_double(require(ws, "workspace", "height"), "workspace.height")};
  if (!(s.workspace.xmax > 0.0 && std::isfinite(s.workspace.xmax))) throw ValidationError("workspace.width", "must be positive");
  if (!(s.workspace.ymax > 0.0 && std::isfinite(s.workspace.ymax))) throw ValidationError("workspace.height", "must be positive");

  const YAML::Node robots = require(root, "", "robots");
  expect_map(robots, "robots");
  check_keys(robots, "robots", {"count", "radius", "sample_from_initial_gmm", "initial_positions"});
  const std::int64_t count = to_int(require(robots, "robots", "count"), "robots.count");
  if (count < 1) throw ValidationError("robots.count", "must be >= 1");
  s.robot_count = static_cast<std::size_t>(count);
  s.robot_radius = opt_double(robots, "robots", "radius", 0.2);
  if (!(s.robot_radius > 0.0 && std::isfinite(s.robot_radius))) throw ValidationError("robots.radius", "must be positive");
  const bool sample = robots["sample_from_initial_gmm"] && to_bool(robots["sample_from_initial_gmm"], "robots.sample_from_initial_gmm");
  if (const YAML::Node list = robots["initial_positions"]) {
    if (sample) throw ValidationError("robots", "give either initial_positions or sample_from_initial_gmm, not both");
    expect_seq(list, "robots.initial_positions");
    for (std::size_t k = 0; k < list.size(); ++k)
      s.initial_positions.push_back(to_vec2(list[k], "robots.initial_positions[" + std::to_string(k) + "]"));
    if (s.initial_positions.size() != s.robot_count) {
      throw ValidationError("robots.initial_positions", "length differs from robots.count");
    }
  } else if (!sample) {
    throw ValidationError("robots", "needs initial_positions or sample_from_initial_gmm: true");
  }

  if (const YAML::Node h = root["horizon"]) {
    expect_map(h, "horizon");
    check_keys(h, "horizon", {"t0", "tf"});
    s.t0 = opt_double(h, "horizon", "t0", s.t0);
    s.tf = opt_double(h, "horizon", "tf", s.tf);
  }
  if (!(std::isfinite(s.t0) && std::isfinite(s.tf) && s.tf > s.t0)) throw ValidationError("horizon", "requires tf > t0");

  if (const YAML::Node r = root["risk"]) {
    expect_map(r, "risk");
    check_keys(r, "risk", {"alpha", "delta"});
    s.risk.alpha = opt_double(r, "risk", "alpha", s.risk.alpha);
    s.risk.delta = opt_double(r, "risk", "delta", s.risk.delta);
  }
  try {
    s.risk.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("risk", e.what());
  }

  s.roadmap.bounds = s.workspace;
  if (const YAML::Node r = root["roadmap"]) {
    expect_map(r, "roadmap");
    check_keys(r, "roadmap", {"samples", "connection_radius", "edge_resolution", "sampler_mix", "sigma1", "sigma2", "rho"});
    if (r["samples"]) {
      const std::int64_t n = to_int(r["samples"], "roadmap.samples");
      if (n < 0) throw ValidationError("roadmap.samples", "must be >= 0");
      s.roadmap.n = static_cast<std::size_t>(n);
    }
    s.roadmap.connection_radius = opt_double(r, "roadmap", "connection_radius", s.roadmap.connection_radius);
    if (r["edge_resolution"]) s.roadmap.resolution = static_cast<int>(to_int(r["edge_resolution"], "roadmap.edge_resolution"));
    s.roadmap.sampler_mix = opt_double(r, "roadmap", "sampler_mix", s.roadmap.sampler_mix);
    if (r["sigma1"]) s.roadmap.sigma1 = to_interval(r["sigma1"], "roadmap.sigma1");
    if (r["sigma2"]) s.roadmap.sigma2 = to_interval(r["sigma2"], "roadmap.sigma2");
    if (r["rho"]) s.roadmap.rho = to_interval(r["rho"], "roadmap.rho");
  }
  try {
    s.roadmap.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("roadmap", e.what());
  }

  if (const YAML::Node m = root["micro"]) {
    expect_map(m, "micro");
    check_keys(m, "micro", {"w1", "w2", "d0", "k_rep", "v_max", "dt"});
    s.micro.w1 = opt_double(m, "micro", "w1", s.micro.w1);
    s.micro.w2 = opt_double(m, "micro", "w2", s.micro.w2);
    s.micro.d0 = opt_double(m, "micro", "d0", s.micro.d0);
    s.micro.k_rep = opt_double(m, "micro", "k_rep", s.micro.k_rep);
    s.micro.v_max = opt_double(m, "micro", "v_max", s.micro.v_max);
    s.micro.dt = opt_double(m, "micro", "dt", s.micro.dt);
  }
  try {
    s.micro.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("micro", e.what());
  }

  if (const YAML::Node d = root["density_cap"]) {
    expect_map(d, "density_cap");
    check_keys(d, "density_cap", {"cell_cap", "peak_density"});
    if (d["cell_cap"]) {
      s.cell_cap = to_double(d["cell_cap"], "density_cap.cell_cap");
      if (!(*s.cell_cap > 0.0 && *s.cell_cap <= 1.0)) throw ValidationError("density_cap.cell_cap", "must lie in (0, 1]");
    }
    if (d["peak_density"]) {
      s.density_cap = to_double(d["peak_density"], "density_cap.peak_density");
      if (!(*s.density_cap > 0.0 && std::isfinite(*s.density_cap))) {
        throw ValidationError("density_cap.peak_density", "must be positive");
      }
    }
  }

  s.initial = to_gmm(require(root, "", "initial_gmm"), "initial_gmm");
  s.target = to_gmm(require(root, "", "target_gmm"), "target_gmm");
  for (const auto* g : {&s.initial, &s.target}) {
    const std::string path = g == &s.initial ? "initial_gmm" : "target_gmm";
    for (std::size_t k = 0; k < g->size(); ++k) {
      if (!s.workspace.contains(g->component(k).mean)) {
        throw ValidationError(path + "[" + std::to_string(k) + "].mean", "lies outside the workspace");
      }
    }
  }

  if (const YAML::Node obs = root["obstacles"]) {
    expect_seq(obs, "obstacles");
    for (std::size_t k = 0; k < obs.size(); ++k) {
      const std::string p = "obstacles[" + std::to_string(k) + "]";
      const YAML::Node o = obs[k];
      expect_map(o, p);
      check_keys(o, p, {"name", "parts"});
      ObstacleGroup group;
      group.name = o["name"] ? o["name"].as<std::string>() : "obstacle" + std::to_string(k);
      const YAML::Node parts = require(o, p, "parts");
      expect_seq(parts, p + ".parts");
      if (parts.size() == 0) throw ValidationError(p + ".parts", "needs at least one part");
      for (std::size_t q = 0; q < parts.size(); ++q) {
        const std::string pp = p + ".parts[" + std::to_string(q) + "]";
        ConvexShape part = to_part(parts[q], pp);
        const auto [lo, hi] = part.bounds();
        if (!s.workspace.contains(lo) || !s.workspace.contains(hi)) throw ValidationError(pp, "extends outside the workspace");
        group.parts.push_back(std::move(part));
      }
      s.obstacles.push_back(std::move(group));
    }
  }
  for (std::size_t k = 0; k < s.initial_positions.size(); ++k) {
    if (!s.workspace.contains(s.initial_positions[k])) {
      throw ValidationError("robots.initial_positions[" + std::to_string(k) + "]", "lies outside the workspace");
    }
  }
  return s;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  try {
    return from_yaml(root);
  } catch (const YAML::Exception& e) {
    const bool known = e.mark.line >= 0;
    throw ParseError(e.msg, known ? e.mark.line + 1 : 0, known ? e.mark.column + 1 : 0);
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace swarmplan
