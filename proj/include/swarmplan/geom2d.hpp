#pragma once
// Convex geometry kernel: support maps, GJK distance and EPA penetration depth
// for convex polygons, disks and points in the plane.

#include <span>
#include <string>
#include <vector>

#include "swarmplan/linalg.hpp"

namespace swarmplan {

enum class ShapeKind { kPolygon, kDisk, kPoint };

/// Immutable convex set. Construct through the named factories, which validate
/// the geometry; a polygon is counter-clockwise, strictly convex in area and
/// may contain collinear vertices.
class ConvexShape {
 public:
  /// Throws std::invalid_argument for fewer than 3 vertices, clockwise or
  /// non-convex order, repeated vertices, zero area or non-finite input.
  static ConvexShape polygon(std::vector<Vec2> vertices);
  static ConvexShape disk(Vec2 center, double radius);
  static ConvexShape point(Vec2 position);
  /// Axis-aligned rectangle [xmin, xmax] x [ymin, ymax].
  static ConvexShape box(double xmin, double ymin, double xmax, double ymax);

  ShapeKind kind() const { return kind_; }
  /// Polygon vertices; a single vertex (the center/position) for disks and points.
  std::span<const Vec2> vertices() const { return vertices_; }
  /// Zero except for disks.
  double radius() const { return radius_; }
  /// Disk center, point position, or polygon vertex average.
  Vec2 center() const;

  ConvexShape translated(Vec2 offset) const;

  /// Smallest axis-aligned box containing the shape: {min, max}.
  std::pair<Vec2, Vec2> bounds() const;
  double perimeter() const;
  /// Point on the boundary at arc-length fraction s in [0, 1), starting at the
  /// first vertex (polygons) or at angle 0 (disks). Points return themselves.
  Vec2 boundary_point(double s) const;

 private:
  ConvexShape(ShapeKind kind, std::vector<Vec2> vertices, double radius)
      : kind_(kind), vertices_(std::move(vertices)), radius_(radius) {}

  ShapeKind kind_;
  std::vector<Vec2> vertices_;
  double radius_ = 0.0;
};

/// Point of the shape maximizing dot(p, direction). Ties between polygon
/// vertices go to the lowest vertex index. Throws std::invalid_argument for a
/// zero or non-finite direction; the direction need not be normalized.
Vec2 support(const ConvexShape& shape, Vec2 direction);

struct SdfResult {
  /// Positive separation or negative penetration depth (meters).
  double signed_distance = 0.0;
  /// Closest point of the obstacle (second argument) to the query shape.
  Vec2 closest_point_on_obstacle;
  /// Matching witness point on the query shape (first argument).
  Vec2 closest_point_on_query;
  /// Unit vector sgn(d) (p_O - p) / |p_O - p| for a point query p. This points
  /// towards the obstacle outside it and away from the obstacle boundary inside,
  /// i.e. it is the negated gradient of signed_distance with respect to the
  /// query position. When p_O == p the face normal of the contact is used.
  Vec2 contact_normal;
};

/// Signed distance s(query, obstacle): the minimal translation length that
/// makes the sets touch (positive) or separates them (negative). Uses GJK for
/// disjoint cores and EPA for overlapping ones; disk radii are folded into the
/// distance rather than sampled.
SdfResult signed_distance(const ConvexShape& query, const ConvexShape& obstacle);

}  // namespace swarmplan
