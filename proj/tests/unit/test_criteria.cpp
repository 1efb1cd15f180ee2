#include <cmath>
#include <string>
#include <vector>

#include "dbhdist/criteria.hpp"
#include "dbhdist/csv.hpp"
#include "dbhdist/error.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace dbhdist;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_loglik(Rng& rng, int m, int n, double spread) {
  MatrixXd ll(m, n);
  for (int j = 0; j < n; ++j) {
    const double centre = -3.0 - 2.0 * rng.uniform();
    for (int i = 0; i < m; ++i) ll(i, j) = centre + spread * rng.normal();
  }
  return ll;
}

CriteriaReport report(const std::string& name, double dic, double waic1) {
  CriteriaReport r;
  r.model = name;
  r.dic = dic;
  r.waic1 = waic1;
  r.waic2 = waic1 + 0.1;
  return r;
}

}  // namespace

TEST_CASE("DIC with a degenerate posterior") {
  MatrixXd ll(10, 3);
  ll.rowwise() = Eigen::RowVector3d(-1.5, -2.0, -0.25);
  const double d_bar = -2.0 * ll.row(0).sum();
  const auto r = compute_dic(ll, d_bar);
  CHECK(r.edf == doctest::Approx(0.0).scale(1.0));
  CHECK(r.dic == doctest::Approx(d_bar));
  CHECK_THROWS_AS(compute_dic(MatrixXd(1, 3), 0.0), ValidationError);
}

TEST_CASE("DIC effective parameters in a conjugate normal model") {
  // Five group means, 20 unit-variance observations each, flat prior.
  const int k = 5, per = 20, m = 2100;
  Rng rng(3);
  std::vector<double> y(k * per);
  VectorXd ybar = VectorXd::Zero(k);
  for (int g = 0; g < k; ++g) {
    for (int i = 0; i < per; ++i) {
      y[g * per + i] = g + rng.normal();
      ybar(g) += y[g * per + i] / per;
    }
  }
  MatrixXd theta(m, k);
  for (int s = 0; s < m; ++s) {
    for (int g = 0; g < k; ++g) theta(s, g) = ybar(g) + rng.normal() / std::sqrt(double(per));
  }
  auto loglik_at = [&](const Eigen::RowVectorXd& th) {
    Eigen::RowVectorXd out(k * per);
    for (int g = 0; g < k; ++g) {
      for (int i = 0; i < per; ++i) {
        const double r = y[g * per + i] - th(g);
        out(g * per + i) = -0.5 * r * r - 0.5 * std::log(2.0 * M_PI);
      }
    }
    return out;
  };
  MatrixXd ll(m, k * per);
  for (int s = 0; s < m; ++s) ll.row(s) = loglik_at(theta.row(s));
  const double d_hat = -2.0 * loglik_at(theta.colwise().mean()).sum();
  const auto r = compute_dic(ll, d_hat);
  CHECK(std::abs(r.edf / k - 1.0) < 0.1);
}

TEST_CASE("WAIC oracles and invariants") {
  SUBCASE("identical draws") {
    MatrixXd ll(7, 4);
    ll.rowwise() = Eigen::RowVector4d(-1.0, -2.0, -3.0, -4.5);
    const auto w = compute_waic(ll);
    CHECK(w.p1 == 0.0);
    CHECK(w.p2 == 0.0);
    CHECK(w.lppd == doctest::Approx(-10.5));
    CHECK(w.waic1 == doctest::Approx(21.0));
    CHECK(w.waic2 == doctest::Approx(21.0));
  }
  SUBCASE("brute force") {
    Rng rng(8);
    const MatrixXd ll = random_loglik(rng, 300, 25, 0.3);
    const auto w = compute_waic(ll);
    double p2 = 0.0, lppd = 0.0, p1 = 0.0;
    for (Eigen::Index j = 0; j < ll.cols(); ++j) {
      double mean = 0.0, mean_exp = 0.0;
      for (Eigen::Index i = 0; i < ll.rows(); ++i) {
        mean += ll(i, j) / ll.rows();
        mean_exp += std::exp(ll(i, j)) / ll.rows();
      }
      double ss = 0.0;
      for (Eigen::Index i = 0; i < ll.rows(); ++i) ss += (ll(i, j) - mean) * (ll(i, j) - mean);
      p2 += ss / (ll.rows() - 1.0);
      lppd += std::log(mean_exp);
      p1 += 2.0 * (std::log(mean_exp) - mean);
    }
    CHECK(std::abs(w.p2 - p2) < 1e-10);
    CHECK(std::abs(w.lppd - lppd) < 1e-10);
    CHECK(std::abs(w.p1 - p1) < 1e-10);
    CHECK(w.waic1 == doctest::Approx(-2.0 * (lppd - p1)));
    CHECK(w.waic2 == doctest::Approx(-2.0 * (lppd - p2)));
    CHECK(w.p1 >= 0.0);
    CHECK(w.negative_p1_terms == 0);
    CHECK(w.unstable_terms == 0);
  }
  SUBCASE("shift by a constant") {
    Rng rng(9);
    const MatrixXd ll = random_loglik(rng, 200, 50, 0.5);
    const double c = 1000.0;
    const auto a = compute_waic(ll);
    const auto b = compute_waic((ll.array() + c).matrix());
    CHECK(std::abs(b.lppd - (a.lppd + 50 * c)) < 1e-8);
    const auto huge = compute_waic((ll.array() - 5000.0).matrix());
    CHECK(std::isfinite(huge.lppd));
    CHECK(std::abs(huge.lppd - (a.lppd - 50 * 5000.0)) < 1e-7);
  }
  SUBCASE("duplicating every plot doubles lppd and penalties") {
    Rng rng(10);
    const MatrixXd ll = random_loglik(rng, 150, 30, 0.4);
    MatrixXd twice(150, 60);
    twice << ll, ll;
    const auto a = compute_waic(ll);
    const auto b = compute_waic(twice);
    CHECK(std::abs(b.lppd - 2.0 * a.lppd) < 1e-8);
    CHECK(std::abs(b.p1 - 2.0 * a.p1) < 1e-8);
    CHECK(std::abs(b.p2 - 2.0 * a.p2) < 1e-8);
  }
  SUBCASE("instability warning") {
    Rng rng(11);
    const auto w = compute_waic(random_loglik(rng, 500, 10, 1.0));
    CHECK(w.unstable_terms == 10);
    CHECK(w.p2 >= 0.0);
  }
}

TEST_CASE("comparison ranking") {
  SUBCASE("lower DIC wins") {
    const auto rows = compare({report("m1", 228.0, 230.0), report("m2", 226.5, 231.0)});
    CHECK(rows[0].report.model == "m2");
    CHECK(rows[0].best_dic);
    CHECK_FALSE(rows[1].best_dic);
    CHECK(rows[0].rank == 1);
    CHECK(rows[1].best_waic1);
  }
  SUBCASE("DIC tie broken by WAIC1 and documented") {
    const auto rows = compare({report("a", 300.0, 305.0), report("b", 300.0 + 1e-8, 302.0),
                               report("c", 310.0, 301.0)});
    CHECK(rows[0].report.model == "b");
    CHECK(rows[0].best_dic);
    CHECK_FALSE(rows[1].best_dic);
    CHECK(rows[0].note.find("WAIC1") != std::string::npos);
    CHECK(rows[1].note.find("WAIC1") != std::string::npos);
    CHECK(rows[2].note.empty());
  }
  SUBCASE("failed fits are kept as NA rows at the end") {
    const auto rows = compare({failed_report("broken", "boom"), report("x", 10.0, 11.0),
                               report("y", 9.0, 12.0)});
    CHECK(rows.back().report.model == "broken");
    CHECK(rows.back().rank == 0);
    CHECK(rows.back().note.find("boom") != std::string::npos);
    const auto csv = CsvTable::parse(ranking_csv(rows), "ranking");
    CHECK(csv.rows().back()[csv.column("DIC")] == "NA");
    CHECK(csv.rows().front()[csv.column("model")] == "y");
  }
  SUBCASE("fewer than two models is rejected") {
    CHECK_THROWS_AS(compare({report("x", 1.0, 1.0)}), ValidationError);
  }
  SUBCASE("table layout") {
    const auto csv = CsvTable::parse(
        comparison_table_csv({report("m1", 228.0, 230.0), report("m2", 226.5, 231.0)}), "table");
    CHECK(csv.header() == std::vector<std::string>{"criterion", "m1", "m2"});
    REQUIRE(csv.rows().size() == 7);
    CHECK(csv.rows()[0][0] == "DIC");
    CHECK(csv.rows()[5][0] == "p2");
    CHECK(csv.rows()[6] == std::vector<std::string>{"best", "", "*"});
    CHECK(parse_double(csv.rows()[0][1], "DIC") == 228.0);
  }
}

TEST_CASE("DIC and WAIC prefer the model with the true covariate") {
  const auto plots = testing_fixtures::synthetic_plots(120, 40, 55);
  SamplerSchedule s;
  s.chains = 2;
  s.iterations = 700;
  s.burn_in = 200;
  s.thin = 5;
  std::vector<CriteriaReport> reps;
  for (const char* mu : {"1", "p(MVH)"}) {
    ModelSpec spec;
    spec.name = mu;
    spec.mu_terms = parse_formula(mu);
    const auto fm = fit(spec, plots, s);
    reps.push_back(criteria_report(spec.name, fm.model, fm.data, fm.draws));
    CHECK(reps.back().ok());
    CHECK(reps.back().edf > 0.0);
  }
  CHECK(reps[1].dic < reps[0].dic);
  CHECK(reps[1].waic1 < reps[0].waic1);
  CHECK(reps[1].waic2 < reps[0].waic2);
  CHECK(compare(reps)[0].report.model == "p(MVH)");
}
