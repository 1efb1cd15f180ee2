#ifndef DBHDIST_GAMMA_FAMILY_HPP
#define DBHDIST_GAMMA_FAMILY_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "dbhdist/random.hpp"

namespace dbhdist {

/// Gamma distribution in the mean/relative-dispersion parameterization:
/// E(Y) = mu, Var(Y) = sigma^2 mu^2, shape = 1/sigma^2, scale = sigma^2 mu.
class GammaParams {
 public:
  /// Throws DomainError unless mu > 0, sigma > 0 and the implied shape and
  /// scale are finite and positive.
  GammaParams(double mu, double sigma);

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  double shape() const { return shape_; }
  double scale() const { return scale_; }

 private:
  double mu_;
  double sigma_;
  double shape_;
  double scale_;
};

double log_pdf(double y, const GammaParams& p);
double pdf(double y, const GammaParams& p);

/// Regularized lower incomplete gamma P(shape, y/scale). Accepts y = +inf.
double cdf(double y, const GammaParams& p);

/// Upper tail 1 - cdf, computed without cancellation.
double survival(double y, const GammaParams& p);

/// Inverse of cdf for u in (0, 1).
double quantile(double u, const GammaParams& p);

double sample_one(const GammaParams& p, Rng& rng);
std::vector<double> sample(const GammaParams& p, Rng& rng, std::size_t n);

/// Residuals are clamped to this magnitude when the fitted cdf rounds to
/// 0 or 1.
inline constexpr double kResidualClamp = 8.2;

/// Phi^-1(F(y)), clamped to +-kResidualClamp. Upper-tail values are computed
/// from the survival function to keep precision.
double quantile_residual(double y, const GammaParams& p);

/// Pooled quantile residuals, one per tree, in plot order. `observations[i]`
/// are the trees of plot i and `fitted[i]` its parameter pair.
std::vector<double> quantile_residuals(
    std::span<const std::vector<double>> observations,
    std::span<const GammaParams> fitted);

double normal_cdf(double x);
double normal_quantile(double u);

}  // namespace dbhdist

#endif  // DBHDIST_GAMMA_FAMILY_HPP
