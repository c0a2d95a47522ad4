#pragma once
// CVaR collision checking of Gaussian swarm states against convex obstacles.

#include <span>

#include "swarmplan/gaussian.hpp"
#include "swarmplan/geom2d.hpp"

namespace swarmplan {

struct ScalarGaussian {
  double mean = 0.0;
  double std = 0.0;
};

/// alpha in (0, 1] is the tail mass; delta <= 0 (meters) is the safe threshold
/// on the negated signed distance.
struct RiskParams {
  double alpha = 0.05;
  double delta = -1.0;

  /// Throws std::invalid_argument when out of range.
  void validate() const;
};

/// Standard normal density and quantile. The quantile uses Acklam's rational
/// approximation refined by one Halley step (absolute error well below 1e-9).
double normal_pdf(double z);
double normal_cdf(double z);
double normal_quantile(double p);

/// CVaR_alpha(v) = mean + phi(Phi^{-1}(1 - alpha)) / alpha * std; alpha == 1 gives
/// the mean. Throws std::invalid_argument for alpha outside (0, 1].
double cvar_gaussian(const ScalarGaussian& v, double alpha);

/// Distribution of eta = -s(p, O) for p ~ g after linearizing the signed
/// distance at the mean: N(-s(mu, O), n^T Sigma n). Throws
/// DegenerateContactError when the mean lies on the obstacle boundary.
ScalarGaussian sdf_distribution(const Gaussian2D& g, const ConvexShape& obstacle);

/// True iff CVaR_alpha(eta') <= delta for every obstacle. Degenerate contacts count as unsafe.
bool in_free(const Gaussian2D& g, std::span<const ConvexShape> obstacles, const RiskParams& rp);

inline constexpr int kDefaultEdgeResolution = 10;

/// in_free at `resolution` evenly spaced geodesic points t = k / (resolution - 1).
/// Throws std::invalid_argument for resolution < 2.
bool edge_collision_free(const Gaussian2D& g1, const Gaussian2D& g2,
                         std::span<const ConvexShape> obstacles, const RiskParams& rp,
                         int resolution = kDefaultEdgeResolution);

}  // namespace swarmplan
