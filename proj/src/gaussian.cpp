#include "swarmplan/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace swarmplan {

namespace {

double min_eig(const Mat2& m) {
  const double half_tr = 0.5 * (m.xx + m.yy);
  const double half_diff = 0.5 * (m.xx - m.yy);
  return half_tr - std::hypot(half_diff, m.xy);
}

double max_eig(const Mat2& m) {
  const double half_tr = 0.5 * (m.xx + m.yy);
  const double half_diff = 0.5 * (m.xx - m.yy);
  return half_tr + std::hypot(half_diff, m.xy);
}

bool symmetric_enough(const Mat2& m) {
  const double scale = std::max({std::fabs(m.xx), std::fabs(m.yy), std::fabs(m.xy), 1.0});
  return std::fabs(m.xy - m.yx) <= 1e-12 * scale;
}

bool finite(const Mat2& m) {
  return std::isfinite(m.xx) && std::isfinite(m.xy) && std::isfinite(m.yx) && std::isfinite(m.yy);
}

}  // namespace

bool is_spd(const Mat2& m) {
  return finite(m) && symmetric_enough(m) && min_eig(m.symmetrized()) > kMinSpdEigenvalue;
}

Spd2::Spd2(const Mat2& m) {
  if (!finite(m)) throw std::invalid_argument("covariance is not finite");
  if (!symmetric_enough(m)) throw std::invalid_argument("covariance is not symmetric");
  m_ = m.symmetrized();
  if (!(min_eig(m_) > kMinSpdEigenvalue)) {
    throw std::invalid_argument("covariance is not positive definite");
  }
}

double Spd2::min_eigenvalue() const { return min_eig(m_); }
double Spd2::max_eigenvalue() const { return max_eig(m_); }

Spd2 spd_sqrt(const Spd2& m) {
  const double s = std::sqrt(m.det());
  const double t = std::sqrt(m.trace() + 2.0 * s);
  const Mat2& a = m.matrix();
  return Spd2(Mat2::symmetric((a.xx + s) / t, a.xy / t, (a.yy + s) / t));
}

double gaussian_density(const Gaussian2D& g, Vec2 x) {
  const double norm = 2.0 * std::numbers::pi * std::sqrt(g.cov.det());
  return std::exp(-0.5 * mahalanobis_squared(g, x)) / norm;
}

double mahalanobis_squared(const Gaussian2D& g, Vec2 x) {
  const Vec2 d = x - g.mean;
  const Mat2& c = g.cov.matrix();
  // Solve with the adjugate to avoid forming the inverse explicitly.
  return (c.yy * d.x * d.x - 2.0 * c.xy * d.x * d.y + c.xx * d.y * d.y) / g.cov.det();
}

Gaussian2D from_param_vector(const GaussianParamVector& v) {
  if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw std::invalid_argument("mean is not finite");
  if (!(v.sigma1 > 0.0) || !(v.sigma2 > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (!(std::fabs(v.rho) < 1.0)) throw std::invalid_argument("|rho| must be < 1");
  const double cross = v.rho * v.sigma1 * v.sigma2;
  return {{v.x, v.y}, Spd2(Mat2::symmetric(v.sigma1 * v.sigma1, cross, v.sigma2 * v.sigma2))};
}

GaussianParamVector to_param_vector(const Gaussian2D& g) {
  const double s1 = std::sqrt(g.cov.xx());
  const double s2 = std::sqrt(g.cov.yy());
  return {g.mean.x, g.mean.y, s1, s2, g.cov.xy() / (s1 * s2)};
}

double w2_distance_squared(const Gaussian2D& g1, const Gaussian2D& g2) {
  if (g1 == g2) return 0.0;
  const Mat2& a = g1.cov.matrix();
  const Mat2& b = g2.cov.matrix();
  // tr((A^{1/2} B A^{1/2})^{1/2}) = sqrt(tr(AB) + 2 sqrt(det A det B)) for 2x2 SPD;
  // every product below is written symmetrically in (A, B).
  const double tr_ab = a.xx * b.xx + 2.0 * (a.xy * b.xy) + a.yy * b.yy;
  const double fidelity = std::sqrt(tr_ab + 2.0 * std::sqrt(a.det() * b.det()));
  const double cov_term = a.trace() + b.trace() - 2.0 * fidelity;
  return std::max(0.0, (g1.mean - g2.mean).squared_norm() + cov_term);
}

double w2_distance(const Gaussian2D& g1, const Gaussian2D& g2) {
  return std::sqrt(w2_distance_squared(g1, g2));
}

AffineMap ot_map(const Gaussian2D& g1, const Gaussian2D& g2) {
  const Spd2 root = spd_sqrt(g1.cov);
  const Mat2 root_inv = root.matrix().inverse().symmetrized();
  const Mat2 inner = (root.matrix() * g2.cov.matrix() * root.matrix()).symmetrized();
  const Mat2 middle = spd_sqrt(Spd2(inner)).matrix();
  const Mat2 linear = (root_inv * middle * root_inv).symmetrized();
  return {linear, g2.mean - linear * g1.mean};
}

GaussianGeodesic::GaussianGeodesic(const Gaussian2D& from, const Gaussian2D& to)
    : from_(from), to_(to), map_(ot_map(from, to)) {}

Gaussian2D GaussianGeodesic::at(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("geodesic parameter outside [0, 1]");
  // Sigma(t) = M S1 M with M = (1 - t) I + t A, the square-root form of the
  // interpolated covariance that keeps the result symmetric.
  const Mat2 m = Mat2::identity() * (1.0 - t) + map_.linear * t;
  const Mat2 cov = (m * from_.cov.matrix() * m).symmetrized();
  const Vec2 mean = from_.mean * (1.0 - t) + to_.mean * t;
  return {mean, Spd2(cov)};
}

Gaussian2D w2_geodesic(const Gaussian2D& g1, const Gaussian2D& g2, double t) {
  return GaussianGeodesic(g1, g2).at(t);
}

}  // namespace swarmplan
