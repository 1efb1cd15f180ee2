#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dbhdist/error.hpp"
#include "dbhdist/gamma_family.hpp"
#include "dbhdist/mcmc.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace dbhdist;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ModelSpec spec_of(const std::string& mu, const std::string& sigma) {
  ModelSpec s;
  s.mu_terms = parse_formula(mu);
  s.sigma_terms = parse_formula(sigma);
  return s;
}

std::vector<PlotObservation> constant_plots(int n_plots, int trees, double mu, double sigma,
                                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PlotObservation> plots(static_cast<std::size_t>(n_plots));
  for (int i = 0; i < n_plots; ++i) {
    auto& p = plots[static_cast<std::size_t>(i)];
    p.id = std::to_string(i);
    p.x = i;
    p.dbh = sample(GammaParams(mu, sigma), rng, static_cast<std::size_t>(trees));
  }
  return plots;
}

SamplerSchedule small_schedule(int chains, int iterations, int burn_in, int thin) {
  SamplerSchedule s;
  s.chains = chains;
  s.iterations = iterations;
  s.burn_in = burn_in;
  s.thin = thin;
  return s;
}

double ks_against(std::vector<double> xs, const std::function<double(double)>& cdf_fn) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf_fn(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double column_mean_exp(const PosteriorDraws& d, Eigen::Index col) {
  return d.coefficients.col(col).array().exp().mean();
}

}  // namespace

TEST_CASE("schedule arithmetic and validation") {
  SamplerSchedule s;
  CHECK(s.retained_per_chain() == 300);
  CHECK(s.retained_total() == 2100);
  CHECK(small_schedule(1, 1500, 500, 7).retained_per_chain() == 142);
  CHECK_THROWS_AS(small_schedule(1, 100, 100, 1).validate(), ValidationError);
  CHECK_THROWS_AS(small_schedule(1, 100, 10, 0).validate(), ValidationError);
  CHECK_THROWS_AS(small_schedule(0, 100, 10, 1).validate(), ValidationError);
  CHECK_THROWS_AS(small_schedule(1, 100, 95, 10).validate(), ValidationError);
}

TEST_CASE("IWLS step on a conjugate normal surrogate reproduces the analytic posterior") {
  // y ~ N(X beta, 1), prior beta ~ N(0, P^-1).
  Rng data_rng(4);
  const int n = 40;
  MatrixXd x(n, 2);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = data_rng.normal();
    y(i) = 0.5 - 1.5 * x(i, 1) + data_rng.normal();
  }
  BlockTarget target;
  target.design = &x;
  target.prior_precision = MatrixXd::Identity(2, 2) * 0.5;
  target.log_likelihood = [&](const VectorXd& eta) { return -0.5 * (y - eta).squaredNorm(); };
  target.derivatives = [&](const VectorXd& eta, VectorXd& score, VectorXd& weight) {
    score = y - eta;
    weight = VectorXd::Ones(n);
  };
  const MatrixXd post_prec = x.transpose() * x + target.prior_precision;
  const MatrixXd post_cov = post_prec.inverse();
  const VectorXd post_mean = post_cov * x.transpose() * y;

  Rng rng(10);
  RandomWalkTuning tuning;
  VectorXd beta = VectorXd::Zero(2);
  VectorXd eta = x * beta;
  double ll = target.log_likelihood(eta);
  std::vector<double> b0, b1;
  int accepted = 0;
  for (int t = 0; t < 4000; ++t) {
    const auto r = iwls_step(target, beta, eta, ll, rng, tuning);
    CHECK_FALSE(r.fallback);
    accepted += r.accepted;
    if (t >= 100) {
      b0.push_back(beta(0));
      b1.push_back(beta(1));
    }
  }
  CHECK(accepted > 3900);
  const double crit = 1.358 / std::sqrt(static_cast<double>(b0.size()));
  for (int j = 0; j < 2; ++j) {
    const double m = post_mean(j), sd = std::sqrt(post_cov(j, j));
    const double d = ks_against(j == 0 ? b0 : b1, [&](double v) { return normal_cdf((v - m) / sd); });
    CHECK_MESSAGE(d < crit, "coefficient " << j << " KS " << d);
  }
}

TEST_CASE("IWLS step falls back to a random walk when the curvature cannot be factored") {
  const int n = 10;
  MatrixXd x = MatrixXd::Ones(n, 1);
  BlockTarget target;
  target.design = &x;
  target.prior_precision = MatrixXd::Zero(1, 1);
  target.log_likelihood = [](const VectorXd& eta) { return -0.5 * eta.squaredNorm(); };
  target.derivatives = [&](const VectorXd& eta, VectorXd& score, VectorXd& weight) {
    score = -eta;
    weight = VectorXd::Constant(n, -1.0);
  };
  Rng rng(2);
  RandomWalkTuning tuning;
  VectorXd beta = VectorXd::Constant(1, 1.0);
  VectorXd eta = x * beta;
  double ll = target.log_likelihood(eta);
  int fallbacks = 0;
  for (int t = 0; t < 1000; ++t) fallbacks += iwls_step(target, beta, eta, ll, rng, tuning).fallback;
  CHECK(fallbacks == 1000);
  CHECK(tuning.proposals == 1000);
  CHECK(tuning.accepted > 0);
  CHECK(std::isfinite(beta(0)));
}

TEST_CASE("smoothing variance update") {
  const auto plots = testing_fixtures::synthetic_plots(40, 5, 6);
  const auto data = ResponseData::from_plots(plots);
  const AdditiveModel m(spec_of("s(MVH)", "1"), CovariateTable::from_plots(plots));
  const int block = 1;
  REQUIRE(m.blocks()[block].tau2.size() == 1);
  const auto rank = static_cast<double>(m.penalty_components()[0].rank);
  CHECK(rank == 8.0);

  ChainState st = initial_state(m, data);
  Rng rng(77);
  const double a = 0.001, b = 0.001;
  double sum = 0.0;
  const int draws = 100'000;
  std::vector<double> zero_draws;
  for (int i = 0; i < draws; ++i) {
    update_tau2(m, block, st, rng, a, b);
    REQUIRE(st.tau2(0) > 0.0);
    sum += st.tau2(0);
    if (i < 10'000) zero_draws.push_back(st.tau2(0));
  }
  const double analytic = b / (a + rank / 2.0 - 1.0);
  CHECK(std::abs(sum / draws / analytic - 1.0) < 0.02);

  // A rougher coefficient vector shifts the draws upwards (Mann-Whitney).
  st.coefficients.segment(m.blocks()[block].offset, m.blocks()[block].size).setConstant(0.01);
  std::vector<double> rough_draws;
  for (int i = 0; i < 10'000; ++i) {
    update_tau2(m, block, st, rng, a, b);
    rough_draws.push_back(st.tau2(0));
  }
  std::vector<std::pair<double, int>> pooled;
  for (double v : zero_draws) pooled.emplace_back(v, 0);
  for (double v : rough_draws) pooled.emplace_back(v, 1);
  std::sort(pooled.begin(), pooled.end());
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (pooled[i].second == 1) rank_sum += static_cast<double>(i + 1);
  }
  const double n1 = 10'000, n2 = 10'000;
  const double u = rank_sum - n1 * (n1 + 1) / 2.0;
  const double z = (u - n1 * n2 / 2.0) / std::sqrt(n1 * n2 * (n1 + n2 + 1) / 12.0);
  CHECK(z > 2.326);
}

TEST_CASE("tensor product smoothing variances stay positive under the corrected update") {
  const auto plots = testing_fixtures::synthetic_plots(60, 5, 9);
  const auto data = ResponseData::from_plots(plots);
  const AdditiveModel m(spec_of("te(X,Y,k=4)", "1"), CovariateTable::from_plots(plots));
  ChainState st = initial_state(m, data);
  Rng rng(5);
  for (Eigen::Index j = 0; j < m.blocks()[1].size; ++j) st.coefficients(m.blocks()[1].offset + j) = 0.05 * rng.normal();
  for (int i = 0; i < 2000; ++i) {
    update_tau2(m, 1, st, rng, 0.001, 0.001);
    REQUIRE((st.tau2.array() > 0.0).all());
  }
}

TEST_CASE("intercept-only fit recovers mu and sigma and is deterministic") {
  const auto plots = constant_plots(100, 1000, 15.0, 0.8, 31);
  const auto spec = spec_of("1", "1");
  const auto sched = small_schedule(2, 600, 200, 2);
  const FittedModel fm = fit(spec, plots, sched);
  const auto& d = fm.draws;
  CHECK(d.size() == 400);
  CHECK(d.coefficients.cols() == 2);
  CHECK(d.coefficient_labels == std::vector<std::string>{"mu.(Intercept).1", "sigma.(Intercept).1"});
  CHECK(std::abs(column_mean_exp(d, 0) / 15.0 - 1.0) < 0.01);
  CHECK(std::abs(column_mean_exp(d, 1) / 0.8 - 1.0) < 0.01);
  CHECK(d.loglik.cols() == 100);
  CHECK(d.loglik.allFinite());

  const auto report = convergence_diagnostics(d);
  for (const auto& b : report.blocks) CHECK_MESSAGE(b.max_rhat < 1.05, b.label);
  for (const auto& b : report.blocks) CHECK(b.min_ess <= static_cast<double>(d.size()));
  for (const auto& a : d.acceptance) CHECK_MESSAGE((a.rate > 0.1 && a.rate <= 1.0), a.label);

  const FittedModel again = fit(spec, plots, sched);
  CHECK(again.draws.coefficients == d.coefficients);
  CHECK(again.draws.loglik == d.loglik);
  CHECK(again.draws.chain == d.chain);

  auto other = sched;
  other.base_seed = 2;
  CHECK(fit(spec, plots, other).draws.coefficients != d.coefficients);
}

TEST_CASE("retained draws, tau2 positivity and per-tree pointwise output on a smooth model") {
  const auto plots = testing_fixtures::synthetic_plots(80, 30, 13);
  auto sched = small_schedule(2, 400, 100, 3);
  sched.pointwise = PointwiseUnit::tree;
  const FittedModel fm = fit(spec_of("s(MVH) + s_cc(ASP)", "p(SLO)"), plots, sched);
  const auto& d = fm.draws;
  CHECK(d.size() == 200);
  CHECK(d.loglik.cols() == 80 * 30);
  CHECK((d.tau2.array() > 0.0).all());
  CHECK(d.coefficients.allFinite());
  CHECK(d.iteration.front() == 103);
  CHECK(d.iteration[99] == 400);
  CHECK(d.chain[100] == 1);
  for (Eigen::Index m = 0; m < d.size(); ++m) {
    ChainState cs;
    cs.coefficients = d.coefficients.row(m).transpose();
    cs.tau2 = d.tau2.row(m).transpose();
    CHECK(std::isfinite(log_likelihood(fm.model, cs.predictor(), fm.data)));
  }
  // Chain order only permutes rows; summaries over all draws agree.
  MatrixXd permuted(d.size(), d.coefficients.cols());
  permuted << d.coefficients.bottomRows(100), d.coefficients.topRows(100);
  CHECK((permuted.colwise().mean() - d.coefficients.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("posterior contraction with more data") {
  std::vector<double> sds;
  for (int n : {50, 200, 800}) {
    const auto plots = constant_plots(n, 30, 15.0, 0.7, 100 + n);
    const auto fm = fit(spec_of("1", "1"), plots, small_schedule(1, 1200, 200, 2));
    const VectorXd c = fm.draws.coefficients.col(0);
    const double mean = c.mean();
    sds.push_back(std::sqrt((c.array() - mean).square().sum() / (c.size() - 1.0)));
  }
  CHECK(sds[0] / sds[1] >= 1.5);
  CHECK(sds[1] / sds[2] >= 1.5);
}

TEST_CASE("convergence diagnostics") {
  SUBCASE("independent normal chains") {
    Rng rng(1);
    std::vector<VectorXd> chains(4, VectorXd(500));
    for (auto& c : chains) {
      for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = rng.normal();
    }
    CHECK(split_rhat(chains) < 1.02);
    const double ess = effective_sample_size(chains);
    CHECK(ess <= 2000.0);
    CHECK(ess > 1200.0);
  }
  SUBCASE("shifted chains are flagged") {
    Rng rng(1);
    std::vector<VectorXd> chains(3, VectorXd(200));
    for (std::size_t k = 0; k < chains.size(); ++k) {
      for (Eigen::Index i = 0; i < 200; ++i) chains[k](i) = rng.normal() + 3.0 * static_cast<double>(k);
    }
    CHECK(split_rhat(chains) > 1.1);
  }
  SUBCASE("identical chains are undefined, not a crash") {
    std::vector<VectorXd> chains(2, VectorXd::Constant(50, 1.0));
    CHECK(std::isnan(split_rhat(chains)));
    CHECK(std::isnan(effective_sample_size(chains)));
    PosteriorDraws d;
    d.chains = 2;
    d.coefficients = MatrixXd::Constant(100, 1, 2.0);
    d.tau2 = MatrixXd(100, 0);
    d.coefficient_labels = {"mu.(Intercept).1"};
    d.blocks = {{"mu.(Intercept)", 0, 1}};
    for (int i = 0; i < 100; ++i) d.chain.push_back(i / 50);
    const auto report = convergence_diagnostics(d);
    REQUIRE(report.blocks.size() == 1);
    CHECK(report.blocks[0].undefined);
    CHECK(report.blocks[0].flagged);
    CHECK(report.any_flagged());
  }
  SUBCASE("a single chain is rejected") {
    PosteriorDraws d;
    d.chains = 1;
    CHECK_THROWS(convergence_diagnostics(d));
  }
}
