#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "dbhdist/basis.hpp"
#include "dbhdist/error.hpp"
#include "dbhdist/random.hpp"
#include "doctest.h"

using namespace dbhdist;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd linspace(int n, double lo, double hi) { return VectorXd::LinSpaced(n, lo, hi); }

VectorXd uniform_vector(Rng& rng, int n, double lo, double hi) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = lo + (hi - lo) * rng.uniform();
  return v;
}

// Least squares with an explicit intercept column; returns the term coefficients.
VectorXd lsq_with_intercept(const MatrixXd& design, const VectorXd& target, VectorXd* fitted = nullptr) {
  MatrixXd x(design.rows(), design.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(design.cols()) = design;
  const VectorXd beta = x.colPivHouseholderQr().solve(target);
  if (fitted) *fitted = x * beta;
  return beta.tail(design.cols());
}

void check_penalty_psd(const MatrixXd& s) {
  CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff()));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  const double top = es.eigenvalues().maxCoeff();
  CHECK(es.eigenvalues().minCoeff() >= -1e-8 * std::max(top, 1e-300));
}

void check_term_invariants(const TermBasis& b, std::span<const VectorXd> cols) {
  const auto n = static_cast<double>(b.design().rows());
  for (const auto& s : b.penalties()) check_penalty_psd(s);
  const VectorXd sums = b.design().colwise().sum().transpose();
  CHECK(sums.cwiseAbs().maxCoeff() < 1e-8 * n);
  const MatrixXd again = b.evaluate(cols);
  CHECK((again - b.design()).cwiseAbs().maxCoeff() <= 1e-10);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(b.design());
  CHECK(qr.rank() == b.columns());
}

Eigen::Index small_eigenvalues(const MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  const double top = es.eigenvalues().maxCoeff();
  return (es.eigenvalues().array().abs() < 1e-9 * top).count();
}

}  // namespace

TEST_CASE("term specs parse, label and validate") {
  CHECK(parse_term("s(MVH)") == TermSpec::smooth("MVH"));
  CHECK(parse_term("p(ESL)") == TermSpec::linear("ESL"));
  CHECK(parse_term("s_cc(ASP)") == TermSpec::cyclic("ASP"));
  CHECK(parse_term("te(X,Y)") == TermSpec::tensor("X", "Y"));
  CHECK(parse_term("s_gp(X, Y, k=30)") == TermSpec::gp("X", "Y", 30));
  CHECK(parse_term("s(MVH,k=12)").basis_dim == 12);
  CHECK(TermSpec::smooth("MVH", 12).label() == "s(MVH,k=12)");
  CHECK(TermSpec::tensor("X", "Y").label() == "te(X,Y)");
  CHECK_THROWS_AS(parse_term("q(MVH)"), ValidationError);
  CHECK_THROWS_AS(parse_term("te(X)"), ValidationError);
  CHECK_THROWS_AS(parse_term("s_cc(ASP,period=0)"), ValidationError);
  CHECK_THROWS_AS(parse_term("s(MVH"), ValidationError);
  CHECK_FALSE(TermSpec::linear("MVH").penalized());
}

TEST_CASE("linear term is the centred covariate") {
  const VectorXd v = linspace(20, 1.0, 20.0);
  const auto b = build_linear(v);
  CHECK(b.columns() == 1);
  CHECK(b.penalties().empty());
  CHECK((b.design().col(0) - (v.array() - v.mean()).matrix()).cwiseAbs().maxCoeff() < 1e-14);
  std::array<VectorXd, 1> cols{v};
  CHECK((b.evaluate(cols) - b.design()).cwiseAbs().maxCoeff() == 0.0);
  VectorXd outside(2);
  outside << 0.0, 50.0;
  std::array<VectorXd, 1> out{outside};
  const auto ev = evaluate_at(b, out);
  CHECK(ev.extrapolation.any());
  CHECK(ev.extrapolation.fraction_outside[0] == doctest::Approx(1.0));
  CHECK(ev.rows(1, 0) == doctest::Approx(50.0 - v.mean()));
}

TEST_CASE("thin plate smooth") {
  const VectorXd v = linspace(100, 0.0, 30.0);
  const auto b = build_smooth(v, 10);
  CHECK(b.columns() == 9);
  CHECK(b.null_space_dim() == 1);
  CHECK(small_eigenvalues(b.penalty()) == 1);
  std::array<VectorXd, 1> cols{v};
  check_term_invariants(b, cols);

  // Noiseless straight line: the fitted coefficients sit in the penalty null space.
  const VectorXd beta = lsq_with_intercept(b.design(), (2.0 + 0.7 * v.array()).matrix());
  const MatrixXd& s = b.penalty();
  const double s_norm = Eigen::SelfAdjointEigenSolver<MatrixXd>(s).eigenvalues().cwiseAbs().maxCoeff();
  CHECK(beta.dot(s * beta) < 1e-6 * beta.squaredNorm() * s_norm);

  CHECK_THROWS_AS(build_smooth(VectorXd::Constant(30, 1.0), 10), ValidationError);
  CHECK_THROWS_AS(build_smooth(linspace(8, 0.0, 1.0), 10), ValidationError);
}

TEST_CASE("cyclic smooth") {
  const VectorXd a = linspace(721, 0.0, 359.5);
  const auto b = build_cyclic(a, 12, 360.0);
  CHECK(b.null_space_dim() == 0);
  std::array<VectorXd, 1> cols{a};
  check_term_invariants(b, cols);

  VectorXd ends(2);
  ends << 0.0, 360.0;
  std::array<VectorXd, 1> e{ends};
  const MatrixXd rows = b.evaluate(e);
  CHECK((rows.row(0) - rows.row(1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_FALSE(evaluate_at(b, e).extrapolation.any());

  VectorXd fitted;
  const VectorXd truth = (2.0 * M_PI * a.array() / 360.0).sin().matrix();
  lsq_with_intercept(b.design(), truth, &fitted);
  CHECK((fitted - truth).cwiseAbs().maxCoeff() < 1e-3);

  CHECK_THROWS_AS(build_cyclic(a, 3, 360.0), ValidationError);
}

TEST_CASE("tensor product smooth") {
  VectorXd x(400), y(400);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      x(i * 20 + j) = 100.0 * i;
      y(i * 20 + j) = 80.0 * j;
    }
  }
  const auto b = build_tensor_product(x, y, 5);
  CHECK(b.columns() == 24);
  CHECK(b.penalties().size() == 2);
  CHECK(b.null_space_dim() == 3);
  std::array<VectorXd, 2> cols{x, y};
  check_term_invariants(b, cols);

  // Additive in x only: the y-direction penalty sees (almost) nothing.
  const VectorXd fx = (x.array() / 400.0).sin().matrix();
  const VectorXd beta = lsq_with_intercept(b.design(), fx);
  const double qy = beta.dot(b.penalties()[1] * beta);
  const double qx = beta.dot(b.penalties()[0] * beta);
  CHECK(qx > 0.0);
  CHECK(qy < 1e-8 * qx);

  // Translating all coordinates leaves the fit unchanged.
  const VectorXd f = ((x.array() / 500.0).sin() * (y.array() / 300.0).cos()).matrix();
  VectorXd fit_a, fit_b;
  lsq_with_intercept(b.design(), f, &fit_a);
  const VectorXd xs = x.array() + 12345.0, ys = y.array() - 6789.0;
  const auto shifted = build_tensor_product(xs, ys, 5);
  lsq_with_intercept(shifted.design(), f, &fit_b);
  CHECK((fit_a - fit_b).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("simplified Matern covariance") {
  CHECK(matern_simplified(0.0, 250.0) == 1.0);
  Rng rng(5);
  std::vector<double> d(100);
  for (auto& v : d) v = 1000.0 * rng.uniform();
  std::sort(d.begin(), d.end());
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] > d[i - 1]) CHECK(matern_simplified(d[i], 250.0) < matern_simplified(d[i - 1], 250.0));
  }
}

TEST_CASE("Gaussian process basis") {
  Rng rng(17);
  for (int layout = 0; layout < 50; ++layout) {
    const VectorXd x = uniform_vector(rng, 80, 0.0, 3000.0);
    const VectorXd y = uniform_vector(rng, 80, 0.0, 3000.0);
    const auto b = build_gp(x, y, 50);
    const MatrixXd& s = b.penalty();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
    CHECK(Eigen::LLT<MatrixXd>(s).info() == Eigen::Success);
    if (layout == 0) {
      std::array<VectorXd, 2> cols{x, y};
      check_term_invariants(b, cols);
      CHECK(b.columns() == 49);
      CHECK(b.knots_or_anchors().rows() == 50);
    }
  }

  // An anchor is a training location, so its row is reproduced.
  const VectorXd x = uniform_vector(rng, 60, 0.0, 1000.0);
  const VectorXd y = uniform_vector(rng, 60, 0.0, 1000.0);
  const auto b = build_gp(x, y, 20);
  const MatrixXd& anchors = b.knots_or_anchors();
  for (int j = 0; j < 3; ++j) {
    Eigen::Index row = -1;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x(i) == anchors(j, 0) && y(i) == anchors(j, 1)) row = i;
    }
    REQUIRE(row >= 0);
    VectorXd ax(1), ay(1);
    ax << anchors(j, 0);
    ay << anchors(j, 1);
    std::array<VectorXd, 2> at{ax, ay};
    CHECK((b.evaluate(at).row(0) - b.design().row(row)).cwiseAbs().maxCoeff() < 1e-10);
  }

  CHECK_THROWS_AS(build_gp(VectorXd::Constant(10, 5.0), VectorXd::Constant(10, 5.0), 2), ValidationError);
  CHECK_THROWS_AS(build_gp(x.head(10), y.head(10), 20), ValidationError);
}

TEST_CASE("maximin subset is space filling and deterministic") {
  MatrixXd pts(5, 2);
  pts << 0, 0, 10, 10, 5, 5, 0, 10, 10, 0;
  const auto idx = maximin_subset(pts, 3);
  REQUIRE(idx.size() == 3);
  CHECK(idx[0] == 2);  // nearest the centroid
  CHECK(maximin_subset(pts, 3) == idx);
}

TEST_CASE("build_term dispatches on kind") {
  const VectorXd v = linspace(50, 0.0, 10.0);
  std::array<VectorXd, 1> one{v};
  CHECK(build_term(TermSpec::smooth("A", 6), one).columns() == 5);
  CHECK(build_term(TermSpec::cyclic("A", 8, 10.0), one).columns() == 7);
  CHECK(build_term(TermSpec::linear("A"), one).columns() == 1);
}
