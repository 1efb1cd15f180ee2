#ifndef DBHDIST_BASIS_HPP
#define DBHDIST_BASIS_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dbhdist {

enum class TermKind { linear, smooth, cyclic_smooth, tensor_product, gaussian_process };

inline constexpr int kDefaultSmoothDim = 10;
inline constexpr int kDefaultTensorMarginDim = 5;
inline constexpr int kDefaultGpKnots = 50;
inline constexpr double kDefaultCyclicPeriod = 360.0;

/// One additive term: which covariates it reads and how they are expanded.
/// Written in model formulas as p(X), s(X), s_cc(X), te(X,Y) or s_gp(X,Y),
/// with an optional basis dimension, e.g. s(MVH,k=12).
struct TermSpec {
  std::vector<std::string> covariates;
  TermKind kind = TermKind::linear;
  int basis_dim = 1;
  double cyclic_period = kDefaultCyclicPeriod;

  static TermSpec linear(std::string name);
  static TermSpec smooth(std::string name, int dim = kDefaultSmoothDim);
  static TermSpec cyclic(std::string name, int dim = kDefaultSmoothDim,
                         double period = kDefaultCyclicPeriod);
  static TermSpec tensor(std::string x, std::string y,
                         int dim_per_margin = kDefaultTensorMarginDim);
  static TermSpec gp(std::string x, std::string y, int knots = kDefaultGpKnots);

  /// Formula notation, e.g. "s(MVH)"; non-default dimensions are included.
  std::string label() const;
  bool penalized() const { return kind != TermKind::linear; }
  /// Throws ValidationError when the invariants of the kind are violated.
  void validate() const;

  friend bool operator==(const TermSpec&, const TermSpec&) = default;
};

/// Parses a single term such as "s_cc(ASP)" or "te(X,Y,k=6)".
TermSpec parse_term(const std::string& text);

namespace detail {

// Maps raw covariate columns to unconstrained basis evaluations.
class BasisMap {
 public:
  virtual ~BasisMap() = default;
  virtual Eigen::MatrixXd raw(std::span<const Eigen::VectorXd> columns) const = 0;
};

}  // namespace detail

struct ExtrapolationReport {
  /// Per covariate, share of rows outside the training range.
  std::vector<double> fraction_outside;
  bool any() const;
};

/// Design and penalty of one term, plus everything needed to re-evaluate the
/// basis at new covariate values. Immutable after construction.
class TermBasis {
 public:
  TermBasis(Eigen::MatrixXd design, std::vector<Eigen::MatrixXd> penalties,
            int null_space_dim, Eigen::MatrixXd knots_or_anchors,
            std::shared_ptr<const detail::BasisMap> map,
            Eigen::MatrixXd constraint, Eigen::MatrixXd training_range,
            bool range_checked);

  const Eigen::MatrixXd& design() const { return design_; }
  /// One matrix per smoothing variance; tensor products carry two.
  const std::vector<Eigen::MatrixXd>& penalties() const { return penalties_; }
  /// Sum of the penalty components (zero matrix for linear terms).
  Eigen::MatrixXd penalty() const;
  int null_space_dim() const { return null_space_dim_; }
  /// Knots (rows) for univariate smooths, anchor coordinates for the GP.
  const Eigen::MatrixXd& knots_or_anchors() const { return knots_; }
  /// Reparameterization absorbing the sum-to-zero constraint.
  const Eigen::MatrixXd& constraint() const { return constraint_; }
  Eigen::Index columns() const { return design_.cols(); }

  /// Design rows at new covariate values (one vector per covariate, in the
  /// order of the term's covariate list).
  Eigen::MatrixXd evaluate(std::span<const Eigen::VectorXd> columns) const;
  ExtrapolationReport extrapolation(std::span<const Eigen::VectorXd> columns) const;

 private:
  Eigen::MatrixXd design_;
  std::vector<Eigen::MatrixXd> penalties_;
  int null_space_dim_;
  Eigen::MatrixXd knots_;
  std::shared_ptr<const detail::BasisMap> map_;
  Eigen::MatrixXd constraint_;
  Eigen::MatrixXd range_;  // rows: covariates; cols: min, max
  bool range_checked_;
};

struct Evaluation {
  Eigen::MatrixXd rows;
  ExtrapolationReport extrapolation;
};

/// Prediction-time design rows; extrapolation is reported, never rejected.
Evaluation evaluate_at(const TermBasis& basis,
                       std::span<const Eigen::VectorXd> columns);

TermBasis build_linear(const Eigen::VectorXd& values);

/// Low-rank thin-plate regression spline (second-order penalty) with the
/// constant removed by a sum-to-zero constraint. `dim` counts the
/// unconstrained basis including the {1, x} null space.
TermBasis build_smooth(const Eigen::VectorXd& values, int dim = kDefaultSmoothDim);

/// Cyclic cubic regression spline with `dim` evenly spaced knots on
/// [0, period); values are wrapped into that interval.
TermBasis build_cyclic(const Eigen::VectorXd& values, int dim = kDefaultSmoothDim,
                       double period = kDefaultCyclicPeriod);

/// Row-wise Kronecker product of two cubic regression spline margins with
/// one penalty per margin direction.
TermBasis build_tensor_product(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                               int dim_per_margin = kDefaultTensorMarginDim);

/// Low-rank kriging with C(d) = (1 + d/rho) exp(-d/rho), rho the largest
/// distance between sample locations, and maximin-selected anchors.
TermBasis build_gp(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                   int knot_count = kDefaultGpKnots);

TermBasis build_term(const TermSpec& spec, std::span<const Eigen::VectorXd> columns);

double matern_simplified(double distance, double range);

/// Greedy farthest-point subset of `points` (rows), starting from the point
/// nearest the centroid. Returns row indices.
std::vector<Eigen::Index> maximin_subset(const Eigen::MatrixXd& points, int count);

}  // namespace dbhdist

#endif  // DBHDIST_BASIS_HPP
