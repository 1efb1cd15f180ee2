#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "dbhdist/error.hpp"
#include "dbhdist/gamma_family.hpp"
#include "doctest.h"

using namespace dbhdist;

namespace {

// Direct evaluation of the mu/sigma density, independent of log_pdf.
double reference_pdf(double y, double mu, double sigma) {
  const double s2 = sigma * sigma;
  return std::pow(y, 1.0 / s2 - 1.0) * std::exp(-y / (s2 * mu)) /
         (std::pow(s2 * mu, 1.0 / s2) * std::tgamma(1.0 / s2));
}

double high_precision_log_pdf(double y_in, double mu_in, double sigma_in) {
  using big = boost::multiprecision::cpp_bin_float_50;
  const big y(y_in), mu(mu_in), sigma(sigma_in);
  const big s2 = sigma * sigma;
  const big k = 1 / s2;
  return static_cast<double>((k - 1) * log(y) - y / (s2 * mu) - k * log(s2 * mu) -
                             boost::math::lgamma(k));
}

// Integral of f over (0, inf), split at `split` so endpoint singularities stay
// at a finite boundary.
template <class F>
double integrate_half_line(F f, double split) {
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  return ts.integrate(f, 0.0, split) + es.integrate(f, split, INFINITY);
}

double ks_statistic_normal(std::vector<double> r) {
  std::sort(r.begin(), r.end());
  const double n = static_cast<double>(r.size());
  double d = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double f = 0.5 * std::erfc(-r[i] / std::sqrt(2.0));
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace

TEST_CASE("GammaParams rejects invalid parameters") {
  CHECK_THROWS_AS(GammaParams(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(GammaParams(1.0, -0.5), DomainError);
  CHECK_THROWS_AS(GammaParams(NAN, 1.0), DomainError);
  CHECK_THROWS_AS(GammaParams(1.0, INFINITY), DomainError);
  const GammaParams p(20.0, 0.5);
  CHECK(p.shape() == doctest::Approx(4.0));
  CHECK(p.scale() == doctest::Approx(5.0));
}

TEST_CASE("log_pdf special cases") {
  CHECK(log_pdf(1.0, GammaParams(1.0, 1.0)) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(log_pdf(0.0, GammaParams(1.0, 1.0)), DomainError);
  CHECK_THROWS_AS(log_pdf(-2.0, GammaParams(1.0, 1.0)), DomainError);

  for (double sigma : {0.2, 0.7, 1.0, 2.5}) {
    const double mu = 12.0;
    const double k = 1.0 / (sigma * sigma);
    boost::math::gamma_distribution<double> ref(k, mu / k);
    CHECK(log_pdf(mu, GammaParams(mu, sigma)) ==
          doctest::Approx(std::log(boost::math::pdf(ref, mu))).epsilon(1e-12));
  }
}

TEST_CASE("log_pdf matches a 50-digit evaluation") {
  const double oracle = high_precision_log_pdf(14.6, 14.6, 0.7);
  // Frozen from the multiprecision oracle.
  CHECK(oracle == doctest::Approx(-3.2838109586396076).epsilon(1e-14));
  CHECK(log_pdf(14.6, GammaParams(14.6, 0.7)) == doctest::Approx(oracle).epsilon(1e-13));
}

TEST_CASE("cdf limits, exponential median, quadrature oracle") {
  const GammaParams expo(1.0, 1.0);
  CHECK(cdf(INFINITY, expo) == 1.0);
  CHECK(cdf(1e300, expo) == 1.0);
  CHECK(cdf(1e-300, expo) < 1e-299);
  CHECK(cdf(std::log(2.0), expo) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(cdf(0.0, expo), DomainError);

  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  const double oracle = gk.integrate([](double y) { return y > 0 ? reference_pdf(y, 20.0, 0.8) : 0.0; },
                                     0.0, 20.0, 15, 1e-12);
  CHECK(oracle == doctest::Approx(0.6062146300090921).epsilon(1e-10));
  CHECK(cdf(20.0, GammaParams(20.0, 0.8)) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("quantile inverts cdf") {
  CHECK(quantile(0.5, GammaParams(1.0, 1.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  const GammaParams p(15.0, 0.6);
  for (double y : {1.0, 5.0, 25.0, 80.0}) {
    CHECK(std::abs(quantile(cdf(y, p), p) - y) < 1e-8 * std::max(1.0, y));
  }
  // Bracketed bisection on the cdf.
  double lo = 0.0, hi = 1000.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (mid > 0 && cdf(mid, p) < 0.975 ? lo : hi) = mid;
  }
  CHECK(lo == doctest::Approx(37.0933415460).epsilon(1e-9));
  CHECK(quantile(0.975, p) == doctest::Approx(lo).epsilon(1e-10));
  CHECK(std::abs(cdf(quantile(0.975, p), p) - 0.975) < 1e-8);
  CHECK_THROWS_AS(quantile(0.0, p), DomainError);
  CHECK_THROWS_AS(quantile(1.0, p), DomainError);
}

TEST_CASE("sampling: law of large numbers, determinism, KS") {
  const GammaParams p(10.0, 0.5);
  Rng rng(7);
  const auto big = sample(p, rng, 1'000'000);
  double mean = 0.0;
  for (double v : big) mean += v;
  mean /= static_cast<double>(big.size());
  CHECK(std::abs(mean - 10.0) < 3.0 * 0.5 * 10.0 / 1000.0);

  Rng a(99), b(99);
  CHECK(sample(p, a, 100) == sample(p, b, 100));

  for (double sigma : {0.3, 0.8, 1.5, 3.0}) {  // both sampler branches
    const GammaParams q(12.0, sigma);
    Rng r(2024);
    auto xs = sample(q, r, 10'000);
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double f = cdf(xs[i], q);
      d = std::max({d, f - i / 1e4, (i + 1) / 1e4 - f});
    }
    CHECK_MESSAGE(d < 1.63 / 100.0, "sigma=" << sigma << " KS=" << d);
  }
}

TEST_CASE("quantile residuals") {
  const GammaParams p(15.0, 0.7);
  CHECK(std::abs(quantile_residual(quantile(0.5, p), p)) < 1e-12);
  CHECK(quantile_residual(quantile(0.975, p), p) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(quantile_residual(1e-200, GammaParams(15.0, 0.1)) == -kResidualClamp);
  CHECK(quantile_residual(1e6, p) == kResidualClamp);

  std::vector<std::vector<double>> obs{{10.0, 20.0}, {5.0}};
  std::vector<GammaParams> fitted{p, GammaParams(8.0, 0.4)};
  CHECK(quantile_residuals(obs, fitted).size() == 3);
  CHECK_THROWS(quantile_residuals(obs, std::vector<GammaParams>{p}));

  // Monte Carlo replication: correctly specified residuals look standard normal.
  int passes = 0;
  Rng rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<std::vector<double>> trees;
    std::vector<GammaParams> params;
    for (int plot = 0; plot < 20; ++plot) {
      const GammaParams q(5.0 + plot, 0.3 + 0.05 * plot);
      params.push_back(q);
      trees.push_back(sample(q, rng, 25));
    }
    const double d = ks_statistic_normal(quantile_residuals(trees, params));
    if (d < 1.358 / std::sqrt(500.0)) ++passes;
  }
  CHECK(passes >= 90);
}

TEST_CASE("density integrates to one and reproduces its moments") {
  for (double mu : {0.5, 5.0, 15.0, 35.0}) {
    for (double sigma : {0.3, 1.0, 3.0}) {
      const GammaParams p(mu, sigma);
      auto f = [&](double y) { return y > 0.0 ? std::exp(log_pdf(y, p)) : 0.0; };
      CHECK_MESSAGE(std::abs(integrate_half_line(f, mu) - 1.0) < 1e-6, "mu=" << mu << " sigma=" << sigma);
      const double m1 = integrate_half_line([&](double y) { return y * f(y); }, mu);
      const double m2 = integrate_half_line([&](double y) { return y * y * f(y); }, mu);
      const double var = m2 - m1 * m1;
      CHECK(std::abs(m1 / mu - 1.0) < 1e-4);
      CHECK(std::abs(var / (sigma * sigma * mu * mu) - 1.0) < 1e-4);
    }
  }
}

TEST_CASE("exp(log_pdf) equals the shape/scale density") {
  for (double mu : {0.5, 5.0, 15.0, 35.0}) {
    for (double sigma : {0.3, 1.0, 3.0}) {
      const GammaParams p(mu, sigma);
      boost::math::gamma_distribution<double> ref(p.shape(), p.scale());
      for (double y : {0.05 * mu, 0.5 * mu, mu, 2.0 * mu, 4.0 * mu}) {
        const double want = boost::math::pdf(ref, y);
        CHECK(std::abs(pdf(y, p) - want) <= 1e-12 * want);
      }
    }
  }
}

TEST_CASE("cdf is monotone") {
  Rng rng(3);
  const GammaParams p(14.6, 0.73);
  for (int i = 0; i < 10'000; ++i) {
    double a = 100.0 * rng.uniform();
    double b = 100.0 * rng.uniform();
    if (a > b) std::swap(a, b);
    REQUIRE(cdf(a, p) <= cdf(b, p));
  }
}
