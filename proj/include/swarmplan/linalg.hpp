#pragma once
// Fixed-size 2-D vector and 2x2 matrix types used throughout the planner.

#include <cmath>

namespace swarmplan {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  friend constexpr Vec2 operator*(double s, const Vec2& v) { return {v.x * s, v.y * s}; }

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  /// z-component of the 3-D cross product.
  constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  constexpr double squared_norm() const { return x * x + y * y; }
  double norm() const { return std::hypot(x, y); }
  /// Counter-clockwise perpendicular.
  constexpr Vec2 perp() const { return {-y, x}; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

/// Row-major 2x2 matrix [[xx, xy], [yx, yy]].
struct Mat2 {
  double xx{0.0}, xy{0.0}, yx{0.0}, yy{0.0};

  constexpr Mat2() = default;
  constexpr Mat2(double a, double b, double c, double d) : xx(a), xy(b), yx(c), yy(d) {}

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 diagonal(double a, double d) { return {a, 0.0, 0.0, d}; }
  static constexpr Mat2 symmetric(double a, double b, double d) { return {a, b, b, d}; }

  constexpr Mat2 operator+(const Mat2& o) const { return {xx + o.xx, xy + o.xy, yx + o.yx, yy + o.yy}; }
  constexpr Mat2 operator-(const Mat2& o) const { return {xx - o.xx, xy - o.xy, yx - o.yx, yy - o.yy}; }
  constexpr Mat2 operator*(double s) const { return {xx * s, xy * s, yx * s, yy * s}; }
  friend constexpr Mat2 operator*(double s, const Mat2& m) { return m * s; }

  constexpr Mat2 operator*(const Mat2& o) const {
    return {xx * o.xx + xy * o.yx, xx * o.xy + xy * o.yy,
            yx * o.xx + yy * o.yx, yx * o.xy + yy * o.yy};
  }
  constexpr Vec2 operator*(const Vec2& v) const { return {xx * v.x + xy * v.y, yx * v.x + yy * v.y}; }

  constexpr bool operator==(const Mat2&) const = default;

  constexpr double trace() const { return xx + yy; }
  constexpr double det() const { return xx * yy - xy * yx; }
  constexpr Mat2 transpose() const { return {xx, yx, xy, yy}; }
  /// Caller guarantees det() != 0.
  constexpr Mat2 inverse() const {
    const double d = det();
    return {yy / d, -xy / d, -yx / d, xx / d};
  }
  /// Average with the transpose; removes rounding asymmetry.
  constexpr Mat2 symmetrized() const {
    const double off = 0.5 * (xy + yx);
    return {xx, off, off, yy};
  }
  /// Quadratic form v^T M v.
  constexpr double quad(const Vec2& v) const { return v.dot(*this * v); }
  double max_abs_diff(const Mat2& o) const {
    return std::fmax(std::fmax(std::fabs(xx - o.xx), std::fabs(xy - o.xy)),
                     std::fmax(std::fabs(yx - o.yx), std::fabs(yy - o.yy)));
  }
  double frobenius() const { return std::sqrt(xx * xx + xy * xy + yx * yx + yy * yy); }
};

}  // namespace swarmplan
