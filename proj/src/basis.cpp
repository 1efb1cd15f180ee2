#include "dbhdist/basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "dbhdist/error.hpp"

namespace dbhdist {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Sorted distinct values.
std::vector<double> unique_sorted(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw ValidationError(std::string(what) + ": covariate values must be finite");
  }
}

// Orthogonal complement of the span of `c` (k x m), as k x (k - m) columns.
Eigen::MatrixXd null_space_of_transpose(const Eigen::MatrixXd& c) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(c.rows(), c.rows());
  return q.rightCols(c.rows() - c.cols());
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& s) { return 0.5 * (s + s.transpose()); }

// Clamps negative eigenvalues (numerical noise) to zero.
Eigen::MatrixXd psd_projection(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(s));
  Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
  return symmetrize(es.eigenvectors() * lambda.asDiagonal() *
                    es.eigenvectors().transpose());
}

// Rescales a penalty to the magnitude of the design, as mgcv does.
Eigen::MatrixXd scale_penalty(const Eigen::MatrixXd& s, const Eigen::MatrixXd& x) {
  const double x_norm = x.cwiseAbs().rowwise().sum().maxCoeff();
  const double s_norm = s.cwiseAbs().colwise().sum().maxCoeff();
  if (!(s_norm > 0.0)) return s;
  return s * (x_norm * x_norm / s_norm);
}

struct Constrained {
  Eigen::MatrixXd design;
  std::vector<Eigen::MatrixXd> penalties;
  Eigen::MatrixXd z;
};

// Absorbs 1'X beta = 0 through a QR-based reparameterization beta = Z gamma.
Constrained absorb_sum_to_zero(const Eigen::MatrixXd& x,
                               const std::vector<Eigen::MatrixXd>& penalties) {
  Eigen::MatrixXd c = x.colwise().sum().transpose();
  Constrained out;
  out.z = null_space_of_transpose(c);
  out.design = x * out.z;
  for (const auto& s : penalties) {
    out.penalties.push_back(
        scale_penalty(symmetrize(out.z.transpose() * s * out.z), out.design));
  }
  return out;
}

Eigen::MatrixXd range_of(std::span<const Eigen::VectorXd> columns) {
  Eigen::MatrixXd r(static_cast<Eigen::Index>(columns.size()), 2);
  for (std::size_t j = 0; j < columns.size(); ++j) {
    r(static_cast<Eigen::Index>(j), 0) = columns[j].minCoeff();
    r(static_cast<Eigen::Index>(j), 1) = columns[j].maxCoeff();
  }
  return r;
}

// ---------------------------------------------------------------- linear

class LinearMap final : public detail::BasisMap {
 public:
  explicit LinearMap(double center) : center_(center) {}
  Eigen::MatrixXd raw(std::span<const Eigen::VectorXd> columns) const override {
    Eigen::MatrixXd out(columns[0].size(), 1);
    out.col(0) = columns[0].array() - center_;
    return out;
  }

 private:
  double center_;
};

// ---------------------------------------------------------------- thin plate

double tprs_eta(double r) {
  const double a = std::abs(r);
  return a * a * a / 12.0;
}

class TprsMap final : public detail::BasisMap {
 public:
  TprsMap(double center, double scale, Eigen::VectorXd knots, Eigen::MatrixXd w)
      : center_(center), scale_(scale), knots_(std::move(knots)), w_(std::move(w)) {}

  Eigen::MatrixXd raw(std::span<const Eigen::VectorXd> columns) const override {
    const auto& x = columns[0];
    const Eigen::Index n = x.size();
    const Eigen::Index nk = knots_.size();
    const Eigen::Index kr = w_.cols();
    Eigen::MatrixXd e(n, nk);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = (x(i) - center_) / scale_;
      for (Eigen::Index j = 0; j < nk; ++j) e(i, j) = tprs_eta(u - knots_(j));
    }
    Eigen::MatrixXd out(n, kr + 2);
    out.leftCols(kr) = e * w_;
    out.col(kr).setOnes();
    out.col(kr + 1) = (x.array() - center_) / scale_;
    return out;
  }

 private:
  double center_;
  double scale_;
  Eigen::VectorXd knots_;
  Eigen::MatrixXd w_;
};

constexpr Eigen::Index kMaxTprsKnots = 2000;

// ---------------------------------------------------------------- cubic splines

// Natural cubic regression spline parameterized by its values at the knots.
class CrMargin {
 public:
  explicit CrMargin(Eigen::VectorXd knots) : knots_(std::move(knots)) {
    const Eigen::Index k = knots_.size();
    Eigen::VectorXd h = knots_.tail(k - 1) - knots_.head(k - 1);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k - 2, k);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k - 2, k - 2);
    for (Eigen::Index i = 0; i < k - 2; ++i) {
      d(i, i) = 1.0 / h(i);
      d(i, i + 1) = -1.0 / h(i) - 1.0 / h(i + 1);
      d(i, i + 2) = 1.0 / h(i + 1);
      b(i, i) = (h(i) + h(i + 1)) / 3.0;
      if (i + 1 < k - 2) {
        b(i, i + 1) = h(i + 1) / 6.0;
        b(i + 1, i) = h(i + 1) / 6.0;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    f_ = Eigen::MatrixXd::Zero(k, k);
    f_.middleRows(1, k - 2) = llt.solve(d);
    penalty_ = symmetrize(d.transpose() * llt.solve(d));
  }

  Eigen::Index size() const { return knots_.size(); }
  const Eigen::MatrixXd& penalty() const { return penalty_; }
  const Eigen::VectorXd& knots() const { return knots_; }

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const {
    const Eigen::Index k = knots_.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.size(), k);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double v = x(i);
      if (v < knots_(0)) {
        const double h = knots_(1) - knots_(0);
        Eigen::RowVectorXd slope = (f_.row(0) * 2.0 + f_.row(1)) * (-h / 6.0);
        slope(0) -= 1.0 / h;
        slope(1) += 1.0 / h;
        out.row(i) = slope * (v - knots_(0));
        out(i, 0) += 1.0;
      } else if (v > knots_(k - 1)) {
        const double h = knots_(k - 1) - knots_(k - 2);
        Eigen::RowVectorXd slope = (f_.row(k - 2) + f_.row(k - 1) * 2.0) * (h / 6.0);
        slope(k - 2) -= 1.0 / h;
        slope(k - 1) += 1.0 / h;
        out.row(i) = slope * (v - knots_(k - 1));
        out(i, k - 1) += 1.0;
      } else {
        auto it = std::upper_bound(knots_.data(), knots_.data() + k, v);
        Eigen::Index j = std::clamp<Eigen::Index>(it - knots_.data() - 1, 0, k - 2);
        const double h = knots_(j + 1) - knots_(j);
        const double dl = v - knots_(j);
        const double dr = knots_(j + 1) - v;
        const double cm = (dr * dr * dr / h - h * dr) / 6.0;
        const double cp = (dl * dl * dl / h - h * dl) / 6.0;
        out.row(i) = cm * f_.row(j) + cp * f_.row(j + 1);
        out(i, j) += dr / h;
        out(i, j + 1) += dl / h;
      }
    }
    return out;
  }

 private:
  Eigen::VectorXd knots_;
  Eigen::MatrixXd f_;  // maps knot values to second derivatives
  Eigen::MatrixXd penalty_;
};

Eigen::VectorXd place_knots(const std::vector<double>& unique, int k) {
  Eigen::VectorXd knots(k);
  const double last = static_cast<double>(unique.size() - 1);
  for (int j = 0; j < k; ++j) {
    const double pos = last * j / (k - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, unique.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    knots(j) = unique[lo] + frac * (unique[hi] - unique[lo]);
  }
  return knots;
}

class CyclicMap final : public detail::BasisMap {
 public:
  CyclicMap(int dim, double period) : k_(dim), period_(period), h_(period / dim) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k_, k_);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k_, k_);
    for (int i = 0; i < k_; ++i) {
      const int prev = (i + k_ - 1) % k_;
      const int next = (i + 1) % k_;
      b(i, i) = 2.0 * h_ / 3.0;
      b(i, prev) += h_ / 6.0;
      b(i, next) += h_ / 6.0;
      d(i, i) = -2.0 / h_;
      d(i, prev) += 1.0 / h_;
      d(i, next) += 1.0 / h_;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    f_ = llt.solve(d);
    penalty_ = symmetrize(d.transpose() * f_);
  }

  const Eigen::MatrixXd& penalty() const { return penalty_; }

  double wrap(double v) const {
    double w = std::fmod(v, period_);
    if (w < 0.0) w += period_;
    if (w >= period_) w = 0.0;
    return w;
  }

  Eigen::MatrixXd raw(std::span<const Eigen::VectorXd> columns) const override {
    const auto& x = columns[0];
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.size(), k_);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double v = wrap(x(i));
      const int j = std::min(static_cast<int>(std::floor(v / h_)), k_ - 1);
      const int j1 = (j + 1) % k_;
      const double dl = v - j * h_;
      const double dr = h_ - dl;
      const double cm = (dr * dr * dr / h_ - h_ * dr) / 6.0;
      const double cp = (dl * dl * dl / h_ - h_ * dl) / 6.0;
      out.row(i) = cm * f_.row(j) + cp * f_.row(j1);
      out(i, j) += dr / h_;
      out(i, j1) += dl / h_;
    }
    return out;
  }

 private:
  int k_;
  double period_;
  double h_;
  Eigen::MatrixXd f_;
  Eigen::MatrixXd penalty_;
};

class TensorMap final : public detail::BasisMap {
 public:
  TensorMap(CrMargin mx, CrMargin my) : mx_(std::move(mx)), my_(std::move(my)) {}

  const CrMargin& x_margin() const { return mx_; }
  const CrMargin& y_margin() const { return my_; }

  Eigen::MatrixXd raw(std::span<const Eigen::VectorXd> columns) const override {
    const Eigen::MatrixXd bx = mx_.evaluate(columns[0]);
    const Eigen::MatrixXd by = my_.evaluate(columns[1]);
    const Eigen::Index kx = bx.cols();
    const Eigen::Index ky = by.cols();
    Eigen::MatrixXd out(bx.rows(), kx * ky);
    for (Eigen::Index a = 0; a < kx; ++a) {
      for (Eigen::Index b = 0; b < ky; ++b) {
        out.col(a * ky + b) = bx.col(a).cwiseProduct(by.col(b));
      }
    }
    return out;
  }

 private:
  CrMargin mx_;
  CrMargin my_;
};

class GpMap final : public detail::BasisMap {
 public:
  GpMap(Eigen::MatrixXd anchors, double range)
      : anchors_(std::move(anchors)), range_(range) {}

  Eigen::MatrixXd raw(std::span<const Eigen::VectorXd> columns) const override {
    const auto& x = columns[0];
    const auto& y = columns[1];
    Eigen::MatrixXd out(x.size(), anchors_.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      for (Eigen::Index j = 0; j < anchors_.rows(); ++j) {
        out(i, j) = matern_simplified(std::hypot(x(i) - anchors_(j, 0), y(i) - anchors_(j, 1)),
                                      range_);
      }
    }
    return out;
  }

 private:
  Eigen::MatrixXd anchors_;
  double range_;
};

}  // namespace

// ---------------------------------------------------------------- TermSpec

TermSpec TermSpec::linear(std::string name) {
  return {{std::move(name)}, TermKind::linear, 1, kDefaultCyclicPeriod};
}
TermSpec TermSpec::smooth(std::string name, int dim) {
  return {{std::move(name)}, TermKind::smooth, dim, kDefaultCyclicPeriod};
}
TermSpec TermSpec::cyclic(std::string name, int dim, double period) {
  return {{std::move(name)}, TermKind::cyclic_smooth, dim, period};
}
TermSpec TermSpec::tensor(std::string x, std::string y, int dim_per_margin) {
  return {{std::move(x), std::move(y)}, TermKind::tensor_product, dim_per_margin,
          kDefaultCyclicPeriod};
}
TermSpec TermSpec::gp(std::string x, std::string y, int knots) {
  return {{std::move(x), std::move(y)}, TermKind::gaussian_process, knots,
          kDefaultCyclicPeriod};
}

std::string TermSpec::label() const {
  std::string prefix;
  int default_dim = 0;
  switch (kind) {
    case TermKind::linear: prefix = "p"; default_dim = 1; break;
    case TermKind::smooth: prefix = "s"; default_dim = kDefaultSmoothDim; break;
    case TermKind::cyclic_smooth: prefix = "s_cc"; default_dim = kDefaultSmoothDim; break;
    case TermKind::tensor_product: prefix = "te"; default_dim = kDefaultTensorMarginDim; break;
    case TermKind::gaussian_process: prefix = "s_gp"; default_dim = kDefaultGpKnots; break;
  }
  std::string out = prefix + "(";
  for (std::size_t i = 0; i < covariates.size(); ++i) {
    if (i) out += ",";
    out += covariates[i];
  }
  if (basis_dim != default_dim) out += ",k=" + std::to_string(basis_dim);
  if (kind == TermKind::cyclic_smooth && cyclic_period != kDefaultCyclicPeriod) {
    out += ",period=" + format_number(cyclic_period);
  }
  return out + ")";
}

void TermSpec::validate() const {
  const std::string what = "term " + label();
  switch (kind) {
    case TermKind::linear:
      if (covariates.size() != 1 || basis_dim != 1) {
        throw ValidationError(what + ": linear terms take one covariate and k=1");
      }
      break;
    case TermKind::smooth:
      if (covariates.size() != 1) throw ValidationError(what + ": expects one covariate");
      if (basis_dim < 3) throw ValidationError(what + ": basis dimension must be >= 3");
      break;
    case TermKind::cyclic_smooth:
      if (covariates.size() != 1) throw ValidationError(what + ": expects one covariate");
      if (basis_dim < 4) throw ValidationError(what + ": cyclic basis dimension must be >= 4");
      if (!std::isfinite(cyclic_period) || !(cyclic_period > 0.0)) {
        throw ValidationError(what + ": cyclic period must be finite and > 0");
      }
      break;
    case TermKind::tensor_product:
    case TermKind::gaussian_process:
      if (covariates.size() != 2) {
        throw ValidationError(what + ": expects exactly two coordinates");
      }
      if (kind == TermKind::tensor_product && basis_dim < 3) {
        throw ValidationError(what + ": margin dimension must be >= 3");
      }
      if (kind == TermKind::gaussian_process && basis_dim < 2) {
        throw ValidationError(what + ": needs at least two anchors");
      }
      break;
  }
  for (const auto& c : covariates) {
    if (c.empty()) throw ValidationError(what + ": empty covariate name");
  }
}

TermSpec parse_term(const std::string& text) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  if (open == std::string::npos || t.back() != ')') {
    throw ValidationError("cannot parse term '" + t + "'");
  }
  const std::string head = trim(t.substr(0, open));
  TermSpec spec;
  if (head == "p") {
    spec.kind = TermKind::linear;
    spec.basis_dim = 1;
  } else if (head == "s") {
    spec.kind = TermKind::smooth;
    spec.basis_dim = kDefaultSmoothDim;
  } else if (head == "s_cc") {
    spec.kind = TermKind::cyclic_smooth;
    spec.basis_dim = kDefaultSmoothDim;
  } else if (head == "te") {
    spec.kind = TermKind::tensor_product;
    spec.basis_dim = kDefaultTensorMarginDim;
  } else if (head == "s_gp") {
    spec.kind = TermKind::gaussian_process;
    spec.basis_dim = kDefaultGpKnots;
  } else {
    throw ValidationError("unknown term type '" + head + "' in '" + t + "'");
  }
  std::stringstream args(t.substr(open + 1, t.size() - open - 2));
  std::string item;
  while (std::getline(args, item, ',')) {
    item = trim(item);
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      spec.covariates.push_back(item);
      continue;
    }
    const std::string key = trim(item.substr(0, eq));
    const std::string value = trim(item.substr(eq + 1));
    try {
      if (key == "k") {
        spec.basis_dim = std::stoi(value);
      } else if (key == "period") {
        spec.cyclic_period = std::stod(value);
      } else {
        throw ValidationError("unknown term option '" + key + "' in '" + t + "'");
      }
    } catch (const std::logic_error&) {
      throw ValidationError("bad value for option '" + key + "' in '" + t + "'");
    }
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------- TermBasis

bool ExtrapolationReport::any() const {
  return std::any_of(fraction_outside.begin(), fraction_outside.end(),
                     [](double f) { return f > 0.0; });
}

TermBasis::TermBasis(Eigen::MatrixXd design, std::vector<Eigen::MatrixXd> penalties,
                     int null_space_dim, Eigen::MatrixXd knots_or_anchors,
                     std::shared_ptr<const detail::BasisMap> map,
                     Eigen::MatrixXd constraint, Eigen::MatrixXd training_range,
                     bool range_checked)
    : design_(std::move(design)),
      penalties_(std::move(penalties)),
      null_space_dim_(null_space_dim),
      knots_(std::move(knots_or_anchors)),
      map_(std::move(map)),
      constraint_(std::move(constraint)),
      range_(std::move(training_range)),
      range_checked_(range_checked) {}

Eigen::MatrixXd TermBasis::penalty() const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(columns(), columns());
  for (const auto& p : penalties_) s += p;
  return s;
}

Eigen::MatrixXd TermBasis::evaluate(std::span<const Eigen::VectorXd> columns) const {
  if (static_cast<Eigen::Index>(columns.size()) != range_.rows()) {
    throw std::invalid_argument("TermBasis::evaluate: wrong number of covariate columns");
  }
  return map_->raw(columns) * constraint_;
}

ExtrapolationReport TermBasis::extrapolation(std::span<const Eigen::VectorXd> columns) const {
  ExtrapolationReport r;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto& c = columns[j];
    if (!range_checked_ || c.size() == 0) {
      r.fraction_outside.push_back(0.0);
      continue;
    }
    const double lo = range_(static_cast<Eigen::Index>(j), 0);
    const double hi = range_(static_cast<Eigen::Index>(j), 1);
    const auto outside = (c.array() < lo || c.array() > hi).count();
    r.fraction_outside.push_back(static_cast<double>(outside) / static_cast<double>(c.size()));
  }
  return r;
}

Evaluation evaluate_at(const TermBasis& basis, std::span<const Eigen::VectorXd> columns) {
  return {basis.evaluate(columns), basis.extrapolation(columns)};
}

// ---------------------------------------------------------------- builders

double matern_simplified(double distance, double range) {
  const double u = distance / range;
  return (1.0 + u) * std::exp(-u);
}

TermBasis build_linear(const Eigen::VectorXd& values) {
  require_finite(values, "p()");
  if (values.size() == 0) throw ValidationError("p(): no observations");
  auto map = std::make_shared<LinearMap>(values.mean());
  std::array<Eigen::VectorXd, 1> cols{values};
  Eigen::MatrixXd design = map->raw(cols);
  Eigen::MatrixXd knots(0, 1);
  return TermBasis(std::move(design), {}, 1, std::move(knots), std::move(map),
                   Eigen::MatrixXd::Identity(1, 1), range_of(cols), true);
}

TermBasis build_smooth(const Eigen::VectorXd& values, int dim) {
  require_finite(values, "s()");
  if (dim < 3) throw ValidationError("s(): basis dimension must be >= 3");
  std::vector<double> uniq = unique_sorted(values);
  if (static_cast<int>(uniq.size()) < dim) {
    throw ValidationError("s(): need at least " + std::to_string(dim) +
                          " distinct covariate values, got " + std::to_string(uniq.size()));
  }
  const double center = values.mean();
  const double scale = std::sqrt((values.array() - center).square().mean());

  // Knot set: the distinct values, thinned evenly when there are many.
  const auto n_unique = static_cast<Eigen::Index>(uniq.size());
  const Eigen::Index nk = std::min(n_unique, kMaxTprsKnots);
  Eigen::VectorXd knots(nk);
  for (Eigen::Index j = 0; j < nk; ++j) {
    const Eigen::Index src = nk == n_unique ? j : (j * (n_unique - 1)) / (nk - 1);
    knots(j) = (uniq[static_cast<std::size_t>(src)] - center) / scale;
  }

  Eigen::MatrixXd e(nk, nk);
  for (Eigen::Index i = 0; i < nk; ++i)
    for (Eigen::Index j = 0; j < nk; ++j) e(i, j) = tprs_eta(knots(i) - knots(j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e);

  // Truncate to the dim eigenvalues of largest magnitude.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(nk));
  for (Eigen::Index j = 0; j < nk; ++j) order[static_cast<std::size_t>(j)] = j;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
  });
  Eigen::MatrixXd uk(nk, dim);
  Eigen::VectorXd dk(dim);
  for (int j = 0; j < dim; ++j) {
    uk.col(j) = es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    dk(j) = es.eigenvalues()(order[static_cast<std::size_t>(j)]);
  }

  // Radial coefficients must be orthogonal to the {1, x} null space.
  Eigen::MatrixXd t(nk, 2);
  t.col(0).setOnes();
  t.col(1) = knots;
  Eigen::MatrixXd zt = null_space_of_transpose((t.transpose() * uk).transpose());
  Eigen::MatrixXd w = uk * zt;
  Eigen::MatrixXd s_radial = psd_projection(zt.transpose() * dk.asDiagonal() * zt);

  auto map = std::make_shared<TprsMap>(center, scale, knots, w);
  std::array<Eigen::VectorXd, 1> cols{values};
  Eigen::MatrixXd raw = map->raw(cols);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
  s.topLeftCorner(dim - 2, dim - 2) = s_radial;
  Constrained c = absorb_sum_to_zero(raw, {s});
  Eigen::MatrixXd knot_values = (knots.array() * scale + center).matrix();
  return TermBasis(std::move(c.design), std::move(c.penalties), 1, std::move(knot_values),
                   std::move(map), std::move(c.z), range_of(cols), true);
}

TermBasis build_cyclic(const Eigen::VectorXd& values, int dim, double period) {
  require_finite(values, "s_cc()");
  if (dim < 4) throw ValidationError("s_cc(): basis dimension must be >= 4");
  if (!std::isfinite(period) || !(period > 0.0)) {
    throw ValidationError("s_cc(): period must be finite and > 0");
  }
  auto map = std::make_shared<CyclicMap>(dim, period);
  std::array<Eigen::VectorXd, 1> cols{values};
  Eigen::MatrixXd raw = map->raw(cols);
  Constrained c = absorb_sum_to_zero(raw, {map->penalty()});
  Eigen::MatrixXd knots(dim, 1);
  for (int j = 0; j < dim; ++j) knots(j, 0) = period * j / dim;
  return TermBasis(std::move(c.design), std::move(c.penalties), 0, std::move(knots),
                   std::move(map), std::move(c.z), range_of(cols), false);
}

namespace {

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

TermBasis build_tensor_product(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                               int dim_per_margin) {
  require_finite(x, "te()");
  require_finite(y, "te()");
  if (x.size() != y.size()) throw ValidationError("te(): coordinate vectors differ in length");
  if (dim_per_margin < 3) throw ValidationError("te(): margin dimension must be >= 3");
  const auto ux = unique_sorted(x);
  const auto uy = unique_sorted(y);
  if (static_cast<int>(ux.size()) < dim_per_margin ||
      static_cast<int>(uy.size()) < dim_per_margin) {
    throw ValidationError("te(): each margin needs at least " +
                          std::to_string(dim_per_margin) + " distinct values");
  }
  CrMargin mx(place_knots(ux, dim_per_margin));
  CrMargin my(place_knots(uy, dim_per_margin));
  const auto k = static_cast<Eigen::Index>(dim_per_margin);
  const Eigen::MatrixXd ik = Eigen::MatrixXd::Identity(k, k);
  std::vector<Eigen::MatrixXd> penalties{kronecker(mx.penalty(), ik),
                                         kronecker(ik, my.penalty())};
  Eigen::MatrixXd knots(k, 2);
  knots.col(0) = mx.knots();
  knots.col(1) = my.knots();
  auto map = std::make_shared<TensorMap>(std::move(mx), std::move(my));
  std::array<Eigen::VectorXd, 2> cols{x, y};
  Constrained c = absorb_sum_to_zero(map->raw(cols), penalties);
  // {1, x, y, xy} is unpenalized; the constant is removed by the constraint.
  return TermBasis(std::move(c.design), std::move(c.penalties), 3, std::move(knots),
                   std::move(map), std::move(c.z), range_of(cols), true);
}

std::vector<Eigen::Index> maximin_subset(const Eigen::MatrixXd& points, int count) {
  const Eigen::Index n = points.rows();
  std::vector<Eigen::Index> chosen;
  if (count <= 0 || n == 0) return chosen;
  const Eigen::RowVectorXd centroid = points.colwise().mean();
  Eigen::Index first = 0;
  (points.rowwise() - centroid).rowwise().squaredNorm().minCoeff(&first);
  chosen.push_back(first);
  Eigen::VectorXd nearest = (points.rowwise() - points.row(first)).rowwise().squaredNorm();
  while (static_cast<Eigen::Index>(chosen.size()) < std::min<Eigen::Index>(count, n)) {
    Eigen::Index next = 0;
    nearest.maxCoeff(&next);
    chosen.push_back(next);
    nearest = nearest.cwiseMin((points.rowwise() - points.row(next)).rowwise().squaredNorm());
  }
  return chosen;
}

TermBasis build_gp(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int knot_count) {
  require_finite(x, "s_gp()");
  require_finite(y, "s_gp()");
  if (x.size() != y.size()) throw ValidationError("s_gp(): coordinate vectors differ in length");
  if (knot_count < 2) throw ValidationError("s_gp(): needs at least two anchors");

  std::vector<std::pair<double, double>> locs;
  for (Eigen::Index i = 0; i < x.size(); ++i) locs.emplace_back(x(i), y(i));
  std::sort(locs.begin(), locs.end());
  locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
  if (locs.size() < 2) throw ValidationError("s_gp(): all sample locations coincide");
  if (static_cast<int>(locs.size()) < knot_count) {
    throw ValidationError("s_gp(): " + std::to_string(knot_count) + " anchors requested but only " +
                          std::to_string(locs.size()) + " distinct locations");
  }
  Eigen::MatrixXd points(static_cast<Eigen::Index>(locs.size()), 2);
  for (std::size_t i = 0; i < locs.size(); ++i) {
    points(static_cast<Eigen::Index>(i), 0) = locs[i].first;
    points(static_cast<Eigen::Index>(i), 1) = locs[i].second;
  }
  double range = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    range = std::max(range, (points.bottomRows(points.rows() - i).rowwise() - points.row(i))
                                .rowwise()
                                .norm()
                                .maxCoeff());
  }

  const auto idx = maximin_subset(points, knot_count);
  Eigen::MatrixXd anchors(knot_count, 2);
  for (int j = 0; j < knot_count; ++j) anchors.row(j) = points.row(idx[static_cast<std::size_t>(j)]);

  auto map = std::make_shared<GpMap>(anchors, range);
  std::array<Eigen::VectorXd, 2> anchor_cols{anchors.col(0), anchors.col(1)};
  Eigen::MatrixXd omega = map->raw(anchor_cols);
  omega = symmetrize(omega);
  omega.diagonal().array() += 1e-8 * omega.trace() / knot_count;

  std::array<Eigen::VectorXd, 2> cols{x, y};
  Eigen::MatrixXd raw = map->raw(cols);
  Eigen::MatrixXd c = raw.colwise().sum().transpose();
  Eigen::MatrixXd z = null_space_of_transpose(c);
  std::vector<Eigen::MatrixXd> penalties{symmetrize(z.transpose() * omega * z)};
  Eigen::MatrixXd design = raw * z;
  return TermBasis(std::move(design), std::move(penalties), 0, std::move(anchors), std::move(map),
                   std::move(z), range_of(cols), true);
}

TermBasis build_term(const TermSpec& spec, std::span<const Eigen::VectorXd> columns) {
  spec.validate();
  if (columns.size() != spec.covariates.size()) {
    throw std::invalid_argument("build_term: covariate column count mismatch");
  }
  switch (spec.kind) {
    case TermKind::linear: return build_linear(columns[0]);
    case TermKind::smooth: return build_smooth(columns[0], spec.basis_dim);
    case TermKind::cyclic_smooth:
      return build_cyclic(columns[0], spec.basis_dim, spec.cyclic_period);
    case TermKind::tensor_product:
      return build_tensor_product(columns[0], columns[1], spec.basis_dim);
    case TermKind::gaussian_process: return build_gp(columns[0], columns[1], spec.basis_dim);
  }
  throw std::logic_error("build_term: unknown kind");
}

}  // namespace dbhdist
