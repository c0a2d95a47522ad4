#include "swarmplan/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "swarmplan/errors.hpp"

namespace swarmplan {

void RiskParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(delta <= 0.0)) throw std::invalid_argument("delta must be <= 0");
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("quantile probability outside [0, 1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement; the raw approximation is good to ~1e-9 relative.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double cvar_gaussian(const ScalarGaussian& v, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (alpha == 1.0) return v.mean;
  // Phi^{-1}(1 - alpha) = -Phi^{-1}(alpha); phi is even. Avoids cancellation in 1 - alpha.
  const double z = normal_quantile(alpha);
  return v.mean + normal_pdf(z) / alpha * v.std;
}

ScalarGaussian sdf_distribution(const Gaussian2D& g, const ConvexShape& obstacle) {
  const SdfResult sdf = signed_distance(ConvexShape::point(g.mean), obstacle);
  if ((sdf.closest_point_on_obstacle - g.mean).norm() < 1e-9) {
    throw DegenerateContactError("Gaussian mean lies on the obstacle boundary");
  }
  const double variance = g.cov.matrix().quad(sdf.contact_normal);
  return {-sdf.signed_distance, std::sqrt(std::max(variance, 0.0))};
}

bool in_free(const Gaussian2D& g, std::span<const ConvexShape> obstacles, const RiskParams& rp) {
  rp.validate();
  for (const ConvexShape& obstacle : obstacles) {
    try {
      if (cvar_gaussian(sdf_distribution(g, obstacle), rp.alpha) > rp.delta) return false;
    } catch (const DegenerateContactError&) {
      return false;
    }
  }
  return true;
}

bool edge_collision_free(const Gaussian2D& g1, const Gaussian2D& g2,
                         std::span<const ConvexShape> obstacles, const RiskParams& rp,
                         int resolution) {
  if (resolution < 2) throw std::invalid_argument("edge resolution must be >= 2");
  if (obstacles.empty()) return true;
  const GaussianGeodesic path(g1, g2);
  for (int k = 0; k < resolution; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(resolution - 1);
    if (!in_free(path.at(t), obstacles, rp)) return false;
  }
  return true;
}

}  // namespace swarmplan
