#include "dbhdist/gamma_family.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "dbhdist/error.hpp"

namespace dbhdist {

namespace {

void require_positive_y(double y) {
  if (!(y > 0.0) || std::isnan(y)) {
    throw DomainError("gamma: observation must be > 0, got " +
                      std::to_string(y));
  }
}

}  // namespace

GammaParams::GammaParams(double mu, double sigma) : mu_(mu), sigma_(sigma) {
  if (!(mu > 0.0) || !std::isfinite(mu) || !(sigma > 0.0) ||
      !std::isfinite(sigma)) {
    throw DomainError("gamma: requires mu > 0 and sigma > 0 (mu=" +
                      std::to_string(mu) + ", sigma=" + std::to_string(sigma) +
                      ")");
  }
  const double s2 = sigma * sigma;
  shape_ = 1.0 / s2;
  scale_ = s2 * mu;
  if (!std::isfinite(shape_) || !(shape_ > 0.0) || !std::isfinite(scale_) ||
      !(scale_ > 0.0)) {
    throw DomainError("gamma: implied shape/scale not finite and positive");
  }
}

double log_pdf(double y, const GammaParams& p) {
  require_positive_y(y);
  if (std::isinf(y)) return -std::numeric_limits<double>::infinity();
  const double k = p.shape();
  return (k - 1.0) * std::log(y) - y / p.scale() - k * std::log(p.scale()) -
         boost::math::lgamma(k);
}

double pdf(double y, const GammaParams& p) { return std::exp(log_pdf(y, p)); }

double cdf(double y, const GammaParams& p) {
  require_positive_y(y);
  if (std::isinf(y)) return 1.0;
  return boost::math::gamma_p(p.shape(), y / p.scale());
}

double survival(double y, const GammaParams& p) {
  require_positive_y(y);
  if (std::isinf(y)) return 0.0;
  return boost::math::gamma_q(p.shape(), y / p.scale());
}

double quantile(double u, const GammaParams& p) {
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError("gamma quantile: u must lie in (0,1), got " +
                      std::to_string(u));
  }
  return boost::math::gamma_p_inv(p.shape(), u) * p.scale();
}

double sample_one(const GammaParams& p, Rng& rng) {
  for (;;) {
    const double y = rng.gamma(p.shape()) * p.scale();
    // Tiny shapes can underflow to zero; the support is (0, inf).
    if (y > 0.0) return y;
  }
}

std::vector<double> sample(const GammaParams& p, Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = sample_one(p, rng);
  return out;
}

double normal_cdf(double x) {
  return 0.5 * boost::math::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError("normal quantile: u must lie in (0,1)");
  }
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

double quantile_residual(double y, const GammaParams& p) {
  const double lower = cdf(y, p);
  double r;
  if (lower <= 0.5) {
    r = lower > 0.0 ? -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * lower)
                    : -kResidualClamp;
  } else {
    const double upper = survival(y, p);
    r = upper > 0.0 ? std::sqrt(2.0) * boost::math::erfc_inv(2.0 * upper)
                    : kResidualClamp;
  }
  if (r > kResidualClamp) r = kResidualClamp;
  if (r < -kResidualClamp) r = -kResidualClamp;
  return r;
}

std::vector<double> quantile_residuals(
    std::span<const std::vector<double>> observations,
    std::span<const GammaParams> fitted) {
  if (observations.size() != fitted.size()) {
    throw ValidationError("quantile_residuals: " +
                          std::to_string(observations.size()) + " plots but " +
                          std::to_string(fitted.size()) + " parameter pairs");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    for (double y : observations[i]) out.push_back(quantile_residual(y, fitted[i]));
  }
  return out;
}

}  // namespace dbhdist
