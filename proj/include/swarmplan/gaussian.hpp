#pragma once
// Wasserstein-2 geometry of 2-D Gaussians: closed-form distance, geodesics
// (displacement interpolation) and the affine optimal-transport map.

#include "swarmplan/linalg.hpp"

namespace swarmplan {

/// Eigenvalue floor for covariance validation (m^2).
inline constexpr double kMinSpdEigenvalue = 1e-12;

/// Symmetric positive-definite 2x2 matrix. Construction validates.
class Spd2 {
 public:
  /// Throws std::invalid_argument if asymmetric beyond 1e-12 (relative), non-finite,
  /// or with an eigenvalue <= kMinSpdEigenvalue. The stored matrix is exactly symmetric.
  explicit Spd2(const Mat2& m);
  static Spd2 identity() { return Spd2(Mat2::identity()); }
  static Spd2 diagonal(double a, double d) { return Spd2(Mat2::diagonal(a, d)); }
  static Spd2 isotropic(double variance) { return diagonal(variance, variance); }

  const Mat2& matrix() const { return m_; }
  double xx() const { return m_.xx; }
  double xy() const { return m_.xy; }
  double yy() const { return m_.yy; }
  double trace() const { return m_.trace(); }
  double det() const { return m_.det(); }
  double min_eigenvalue() const;
  double max_eigenvalue() const;
  Spd2 inverse() const { return Spd2(m_.inverse().symmetrized()); }

  bool operator==(const Spd2&) const = default;

 private:
  Mat2 m_;
};

/// Principal square root, closed form (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M)).
Spd2 spd_sqrt(const Spd2& m);

/// Checks the Spd2 conditions without throwing.
bool is_spd(const Mat2& m);

struct Gaussian2D {
  Vec2 mean;
  Spd2 cov = Spd2::identity();

  bool operator==(const Gaussian2D&) const = default;
};

/// Density of N(mean, cov) at x (1/m^2).
double gaussian_density(const Gaussian2D& g, Vec2 x);
/// Squared Mahalanobis distance (x - mean)^T cov^{-1} (x - mean).
double mahalanobis_squared(const Gaussian2D& g, Vec2 x);

/// [x, y, sigma1, sigma2, rho]: mean plus standard deviations and correlation.
struct GaussianParamVector {
  double x = 0.0;
  double y = 0.0;
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double rho = 0.0;
};

/// Throws std::invalid_argument unless sigma1, sigma2 > 0, |rho| < 1 and the
/// resulting covariance passes Spd2 validation.
Gaussian2D from_param_vector(const GaussianParamVector& v);
GaussianParamVector to_param_vector(const Gaussian2D& g);

/// x -> linear * x + offset.
struct AffineMap {
  Mat2 linear = Mat2::identity();
  Vec2 offset;

  Vec2 operator()(Vec2 x) const { return linear * x + offset; }
};

/// Squared W2 distance; exactly symmetric in its arguments and 0 for equal inputs.
double w2_distance_squared(const Gaussian2D& g1, const Gaussian2D& g2);
double w2_distance(const Gaussian2D& g1, const Gaussian2D& g2);

/// Constant-speed W2 geodesic between two Gaussians. Precomputes the transport
/// factor once so repeated evaluation (edge collision checks) stays cheap.
class GaussianGeodesic {
 public:
  GaussianGeodesic(const Gaussian2D& from, const Gaussian2D& to);

  /// Throws std::invalid_argument for t outside [0, 1].
  Gaussian2D at(double t) const;
  /// Optimal transport map from `from` to `to`.
  const AffineMap& transport_map() const { return map_; }
  const Gaussian2D& from() const { return from_; }
  const Gaussian2D& to() const { return to_; }

 private:
  Gaussian2D from_;
  Gaussian2D to_;
  AffineMap map_;
};

Gaussian2D w2_geodesic(const Gaussian2D& g1, const Gaussian2D& g2, double t);

/// T(x) = mu2 + A (x - mu1), A = S1^{-1/2} (S1^{1/2} S2 S1^{1/2})^{1/2} S1^{-1/2}.
/// The pushforward of g1 under T is g2 and A is symmetric positive definite.
AffineMap ot_map(const Gaussian2D& g1, const Gaussian2D& g2);

}  // namespace swarmplan
