#ifndef DBHDIST_PREDICTOR_HPP
#define DBHDIST_PREDICTOR_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dbhdist/basis.hpp"
#include "dbhdist/data.hpp"

namespace dbhdist {

enum class Parameter { mu = 0, sigma = 1 };
inline constexpr std::array<Parameter, 2> kParameters = {Parameter::mu, Parameter::sigma};
std::string parameter_name(Parameter p);

/// Gamma distributional regression: one structured additive predictor per
/// parameter, each with an implicit intercept.
struct ModelSpec {
  std::string name = "model";
  std::vector<TermSpec> mu_terms;
  std::vector<TermSpec> sigma_terms;
  std::string family = "gamma";
  std::string mu_link = "log";
  std::string sigma_link = "log";

  const std::vector<TermSpec>& terms(Parameter p) const {
    return p == Parameter::mu ? mu_terms : sigma_terms;
  }
  /// Throws ValidationError for unknown covariates, families, links, or
  /// duplicate terms.
  void validate(const std::vector<std::string>& schema = covariate_schema()) const;
};

/// "s(MVH) + p(ESL) + s_gp(X,Y)"; "1" or "" means intercept only.
std::vector<TermSpec> parse_formula(const std::string& formula);
std::string format_formula(const std::vector<TermSpec>& terms);

// ---------------------------------------------------------------- links

inline constexpr double kEtaClamp = 30.0;

/// Counts how often a predictor had to be clamped before exponentiation.
struct LinkDiagnostics {
  std::size_t clamped = 0;
};

/// Log link g(theta) = ln theta. Throws DomainError for theta <= 0.
double link_apply(double theta);
/// Response function h(eta) = exp(eta), with eta clamped to [-30, 30].
double link_invert(double eta, LinkDiagnostics* diagnostics = nullptr);

// ---------------------------------------------------------------- response

/// Plot-level sufficient statistics of the gamma likelihood.
struct PlotStats {
  double n = 0.0;
  double sum_y = 0.0;
  double sum_log_y = 0.0;
};

/// Tree DBH grouped by plot. Every plot must hold at least one tree > 0.
class ResponseData {
 public:
  explicit ResponseData(std::vector<std::vector<double>> trees);
  static ResponseData from_plots(const std::vector<PlotObservation>& plots);

  std::size_t plots() const { return trees_.size(); }
  std::size_t trees_total() const { return total_; }
  const std::vector<std::vector<double>>& trees() const { return trees_; }
  const std::vector<PlotStats>& stats() const { return stats_; }

 private:
  std::vector<std::vector<double>> trees_;
  std::vector<PlotStats> stats_;
  std::size_t total_ = 0;
};

// ---------------------------------------------------------------- model

struct Term {
  TermSpec spec;
  TermBasis basis;
};

/// A contiguous slice of the coefficient vector updated together: the
/// intercept of one parameter, or one term.
struct Block {
  Parameter parameter;
  std::string label;       // "(Intercept)" or the term label
  int term = -1;           // index into terms(parameter); -1 for intercept
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
  std::vector<int> tau2;   // indices of this block's smoothing variances
};

/// A penalty component with its own smoothing variance.
struct PenaltyComponent {
  int block = 0;
  int component = 0;   // index into the term's penalties()
  Eigen::Index rank = 0;
  std::string label;
};

class AdditiveModel {
 public:
  AdditiveModel(ModelSpec spec, const CovariateTable& training);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<Term>& terms(Parameter p) const { return terms_[static_cast<int>(p)]; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<PenaltyComponent>& penalty_components() const { return penalties_; }
  const Block& intercept_block(Parameter p) const;

  Eigen::Index coefficient_count() const { return n_coef_; }
  Eigen::Index tau2_count() const { return static_cast<Eigen::Index>(penalties_.size()); }
  Eigen::Index training_rows() const { return n_rows_; }

  /// Training design of one block (a column of ones for intercepts).
  const Eigen::MatrixXd& block_design(int block) const { return designs_[static_cast<std::size_t>(block)]; }
  /// Penalty matrix of a component (block-sized).
  const Eigen::MatrixXd& penalty(int component) const;
  /// Precision of the block prior: sum over its components of S / tau2.
  Eigen::MatrixXd prior_precision(int block, const Eigen::VectorXd& tau2) const;

  /// Labels "<param>.<term>.<index>" and "tau2.<param>.<term>[.<component>]".
  std::vector<std::string> coefficient_labels() const;
  std::vector<std::string> tau2_labels() const;

  /// Full design (intercept column first) of one parameter at new
  /// covariates, columns matching that parameter's coefficient slice.
  Eigen::MatrixXd design_at(Parameter p, const CovariateTable& covariates) const;
  /// Per term, per covariate extrapolation fractions at new covariates.
  std::vector<std::pair<std::string, double>> extrapolation(const CovariateTable& covariates) const;
  /// Offset and length of one parameter's slice of the coefficient vector.
  std::pair<Eigen::Index, Eigen::Index> parameter_slice(Parameter p) const;

  /// Columns of a term's covariates pulled from a table.
  static std::vector<Eigen::VectorXd> term_columns(const TermSpec& spec,
                                                   const CovariateTable& covariates);

 private:
  ModelSpec spec_;
  std::array<std::vector<Term>, 2> terms_;
  std::vector<Block> blocks_;
  std::vector<Eigen::MatrixXd> designs_;
  std::vector<PenaltyComponent> penalties_;
  Eigen::Index n_coef_ = 0;
  Eigen::Index n_rows_ = 0;
};

/// Coefficients (intercepts embedded at their block offsets) and smoothing
/// variances.
struct PredictorState {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd tau2;

  static PredictorState zeros(const AdditiveModel& model);
  double intercept(const AdditiveModel& model, Parameter p) const;
  Eigen::VectorXd term_coefficients(const AdditiveModel& model, Parameter p, int term) const;
  /// Throws std::invalid_argument on dimension mismatch or tau2 <= 0.
  void check(const AdditiveModel& model) const;
};

/// eta = intercept + sum over terms of design * beta, at the training rows.
Eigen::VectorXd assemble_eta(const AdditiveModel& model, const PredictorState& state, Parameter p);

/// Per-plot log-likelihood given both predictors.
Eigen::VectorXd plot_log_likelihood(const Eigen::VectorXd& eta_mu, const Eigen::VectorXd& eta_sigma,
                                    const ResponseData& data,
                                    LinkDiagnostics* diagnostics = nullptr);

/// Per-tree log-likelihood, trees pooled in plot order.
Eigen::VectorXd tree_log_likelihood(const Eigen::VectorXd& eta_mu, const Eigen::VectorXd& eta_sigma,
                                    const ResponseData& data);

/// Sum of log-densities over every tree; -inf if any term is non-finite.
double log_likelihood(const AdditiveModel& model, const PredictorState& state,
                      const ResponseData& data);

/// Derivatives of the per-plot log-likelihood with respect to one predictor
/// (score) and its expected negative second derivative (Fisher weight).
void predictor_score(Parameter p, const Eigen::VectorXd& eta_mu, const Eigen::VectorXd& eta_sigma,
                     const ResponseData& data, Eigen::VectorXd& score, Eigen::VectorXd& weight);

/// Analytic gradient of log_likelihood with respect to all coefficients.
Eigen::VectorXd log_likelihood_gradient(const AdditiveModel& model, const PredictorState& state,
                                        const ResponseData& data);

}  // namespace dbhdist

#endif  // DBHDIST_PREDICTOR_HPP
