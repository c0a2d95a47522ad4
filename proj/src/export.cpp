#include "swarmplan/export.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "swarmplan/errors.hpp"

namespace swarmplan {

namespace {

void append_fixed(std::string& out, double v, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  out.append(buf, res.ptr);
}

void append_uint(std::string& out, std::size_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

// SVG user units are pixels; the y axis is flipped so that +y points up.
constexpr double kScale = 4.0;

struct SvgWriter {
  std::string out;
  double height = 0.0;

  double sx(double x) const { return x * kScale; }
  double sy(double y) const { return (height - y) * kScale; }

  void num(double v) { append_fixed(out, v, 2); }
  void attr(const char* name, double v) {
    out += ' ';
    out += name;
    out += "=\"";
    num(v);
    out += '"';
  }
};

void svg_begin(SvgWriter& w, const Workspace& ws) {
  w.height = ws.ymax;
  w.out += "<svg xmlns=\"http://www.w3.org/2000/svg\"";
  w.attr("width", (ws.xmax - ws.xmin) * kScale);
  w.attr("height", (ws.ymax - ws.ymin) * kScale);
  w.out += ">\n<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\" stroke=\"black\"/>\n";
}

void svg_obstacles(SvgWriter& w, const Scenario& s) {
  w.out += "<g id=\"obstacles\" fill=\"#555\" stroke=\"none\">\n";
  for (const ObstacleGroup& g : s.obstacles) {
    for (const ConvexShape& part : g.parts) {
      if (part.kind() == ShapeKind::kDisk) {
        w.out += "<circle";
        w.attr("cx", w.sx(part.center().x));
        w.attr("cy", w.sy(part.center().y));
        w.attr("r", part.radius() * kScale);
        w.out += "/>\n";
      } else if (part.kind() == ShapeKind::kPolygon) {
        w.out += "<polygon points=\"";
        for (Vec2 v : part.vertices()) {
          w.num(w.sx(v.x));
          w.out += ',';
          w.num(w.sy(v.y));
          w.out += ' ';
        }
        w.out += "\"/>\n";
      }
    }
  }
  w.out += "</g>\n";
}

// 1-sigma ellipse of a covariance: principal axes from its eigen-decomposition.
void svg_ellipse(SvgWriter& w, const Gaussian2D& g, const char* stroke) {
  const double a = g.cov.xx();
  const double b = g.cov.xy();
  const double d = g.cov.yy();
  const double mid = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), b);
  const double l1 = mid + rad;
  const double l2 = std::max(mid - rad, 0.0);
  const double angle = 0.5 * std::atan2(2.0 * b, a - d) * 180.0 / std::numbers::pi;
  const double cx = w.sx(g.mean.x);
  const double cy = w.sy(g.mean.y);
  w.out += "<ellipse";
  w.attr("cx", cx);
  w.attr("cy", cy);
  w.attr("rx", std::sqrt(l1) * kScale);
  w.attr("ry", std::sqrt(l2) * kScale);
  // The flipped y axis turns a counter-clockwise angle into a clockwise one.
  w.out += " transform=\"rotate(";
  w.num(-angle);
  w.out += ' ';
  w.num(cx);
  w.out += ' ';
  w.num(cy);
  w.out += ")\" fill=\"none\" stroke=\"";
  w.out += stroke;
  w.out += "\"/>\n";
}

}  // namespace

std::string trajectories_csv(const SwarmTrajectories& traj) {
  std::string out = "t,robot_id,x,y\n";
  out.reserve(out.size() + traj.step_count() * traj.robot_count() * 36);
  for (std::size_t k = 0; k < traj.step_count(); ++k) {
    for (std::size_t r = 0; r < traj.positions[k].size(); ++r) {
      append_fixed(out, traj.times[k], 6);
      out += ',';
      append_uint(out, r);
      out += ',';
      append_fixed(out, traj.positions[k][r].x, 6);
      out += ',';
      append_fixed(out, traj.positions[k][r].y, 6);
      out += '\n';
    }
  }
  return out;
}

SwarmTrajectories parse_trajectories_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t,robot_id,x,y") throw ParseError("missing trajectory header", 1, 1);
  SwarmTrajectories traj;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    double vals[4];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int f = 0; f < 4; ++f) {
      const auto res = std::from_chars(p, end, vals[f]);
      if (res.ec != std::errc{}) throw ParseError("malformed trajectory row", line_no, static_cast<int>(p - line.data()) + 1);
      p = res.ptr;
      if (f < 3) {
        if (p == end || *p != ',') throw ParseError("expected ','", line_no, static_cast<int>(p - line.data()) + 1);
        ++p;
      }
    }
    if (p != end) throw ParseError("trailing characters", line_no, static_cast<int>(p - line.data()) + 1);
    const auto id = static_cast<std::size_t>(vals[1]);
    if (id == 0) {
      traj.times.push_back(vals[0]);
      traj.positions.emplace_back();
    }
    if (traj.positions.empty() || traj.positions.back().size() != id || traj.times.back() != vals[0]) {
      throw std::invalid_argument("trajectory rows are not grouped by time with consecutive robot ids");
    }
    traj.positions.back().push_back({vals[2], vals[3]});
  }
  for (const auto& step : traj.positions) {
    if (step.size() != traj.positions.front().size()) throw std::invalid_argument("robots do not share one time grid");
  }
  return traj;
}

std::string macro_svg(const Scenario& scenario, const GaussianRoadmap& roadmap, const GmmTrajectory& traj) {
  SvgWriter w;
  svg_begin(w, scenario.workspace);
  svg_obstacles(w, scenario);
  w.out += "<g id=\"roadmap\" stroke=\"#bbb\" stroke-width=\"0.5\">\n";
  for (std::size_t i = 0; i < roadmap.node_count(); ++i) {
    for (const RoadmapEdge& e : roadmap.neighbors(i)) {
      if (e.to < i) continue;
      w.out += "<line";
      w.attr("x1", w.sx(roadmap.node(i).mean.x));
      w.attr("y1", w.sy(roadmap.node(i).mean.y));
      w.attr("x2", w.sx(roadmap.node(e.to).mean.x));
      w.attr("y2", w.sy(roadmap.node(e.to).mean.y));
      w.out += "/>\n";
    }
  }
  w.out += "</g>\n<g id=\"gmm\">\n";
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  for (std::size_t k = 0; k < kMacroSvgSamples; ++k) {
    const double t = traj.t0() + (traj.tf() - traj.t0()) * static_cast<double>(k) /
                                     static_cast<double>(kMacroSvgSamples - 1);
    for (std::size_t p = 0; p < traj.pairs().size(); ++p) {
      svg_ellipse(w, traj.pairs()[p].at(t), kColors[p % std::size(kColors)]);
    }
  }
  w.out += "</g>\n</svg>\n";
  return w.out;
}

std::string micro_svg(const Scenario& scenario, const SwarmTrajectories& traj, const Gmm& target) {
  SvgWriter w;
  svg_begin(w, scenario.workspace);
  svg_obstacles(w, scenario);
  w.out += "<g id=\"targets\">\n";
  for (const Gaussian2D& g : target.components()) svg_ellipse(w, g, "#d62728");
  w.out += "</g>\n<g id=\"paths\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"0.5\">\n";
  const std::size_t stride = std::max<std::size_t>(1, traj.step_count() / 200);
  for (std::size_t r = 0; r < traj.robot_count(); ++r) {
    w.out += "<polyline points=\"";
    for (std::size_t k = 0; k < traj.step_count(); k += stride) {
      w.num(w.sx(traj.positions[k][r].x));
      w.out += ',';
      w.num(w.sy(traj.positions[k][r].y));
      w.out += ' ';
    }
    const Vec2 last = traj.positions.back()[r];
    w.num(w.sx(last.x));
    w.out += ',';
    w.num(w.sy(last.y));
    w.out += "\"/>\n";
  }
  w.out += "</g>\n<g id=\"robots\">\n";
  for (std::size_t r = 0; r < traj.robot_count(); ++r) {
    for (const auto* pos : {&traj.positions.front()[r], &traj.positions.back()[r]}) {
      w.out += "<circle";
      w.attr("cx", w.sx(pos->x));
      w.attr("cy", w.sy(pos->y));
      w.attr("r", scenario.robot_radius * kScale);
      w.out += pos == &traj.positions.front()[r] ? " fill=\"#2ca02c\"/>\n" : " fill=\"#000\"/>\n";
    }
  }
  w.out += "</g>\n</svg>\n";
  return w.out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0, 0);
  }
}

}  // namespace swarmplan
