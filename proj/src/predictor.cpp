#include "dbhdist/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "dbhdist/error.hpp"

namespace dbhdist {

std::string parameter_name(Parameter p) { return p == Parameter::mu ? "mu" : "sigma"; }

// ---------------------------------------------------------------- ModelSpec

void ModelSpec::validate(const std::vector<std::string>& schema) const {
  if (family != "gamma") throw ValidationError("model " + name + ": unsupported family '" + family + "'");
  if (mu_link != "log" || sigma_link != "log") {
    throw ValidationError("model " + name + ": only log links are supported");
  }
  for (Parameter p : kParameters) {
    std::set<std::string> seen;
    for (const auto& t : terms(p)) {
      t.validate();
      for (const auto& c : t.covariates) {
        if (std::find(schema.begin(), schema.end(), c) == schema.end()) {
          throw ValidationError("model " + name + ": term " + t.label() +
                                " references unknown covariate '" + c + "'");
        }
      }
      if (!seen.insert(t.label()).second) {
        throw ValidationError("model " + name + ": duplicate term " + t.label() + " in " +
                              parameter_name(p) + " predictor");
      }
    }
  }
}

std::vector<TermSpec> parse_formula(const std::string& formula) {
  std::vector<TermSpec> out;
  std::string current;
  int depth = 0;
  auto flush = [&] {
    const auto b = current.find_first_not_of(" \t");
    if (b == std::string::npos) {
      current.clear();
      return;
    }
    const auto e = current.find_last_not_of(" \t");
    const std::string item = current.substr(b, e - b + 1);
    if (item != "1") out.push_back(parse_term(item));
    current.clear();
  };
  for (char ch : formula) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (depth < 0) throw ValidationError("unbalanced parentheses in '" + formula + "'");
    if (ch == '+' && depth == 0) {
      flush();
    } else {
      current += ch;
    }
  }
  if (depth != 0) throw ValidationError("unbalanced parentheses in '" + formula + "'");
  flush();
  return out;
}

std::string format_formula(const std::vector<TermSpec>& terms) {
  if (terms.empty()) return "1";
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += " + ";
    out += terms[i].label();
  }
  return out;
}

// ---------------------------------------------------------------- links

double link_apply(double theta) {
  if (!(theta > 0.0)) throw DomainError("log link: parameter must be > 0");
  return std::log(theta);
}

namespace {

double clamp_eta(double eta, LinkDiagnostics* diagnostics) {
  if (eta > kEtaClamp || eta < -kEtaClamp || std::isnan(eta)) {
    if (diagnostics) ++diagnostics->clamped;
    if (std::isnan(eta)) return eta;
    return std::clamp(eta, -kEtaClamp, kEtaClamp);
  }
  return eta;
}

}  // namespace

double link_invert(double eta, LinkDiagnostics* diagnostics) {
  return std::exp(clamp_eta(eta, diagnostics));
}

// ---------------------------------------------------------------- response

ResponseData::ResponseData(std::vector<std::vector<double>> trees) : trees_(std::move(trees)) {
  stats_.reserve(trees_.size());
  for (std::size_t i = 0; i < trees_.size(); ++i) {
    if (trees_[i].empty()) {
      throw ValidationError("plot #" + std::to_string(i) + " has no trees");
    }
    PlotStats s;
    for (double y : trees_[i]) {
      if (!(y > 0.0) || !std::isfinite(y)) {
        throw ValidationError("plot #" + std::to_string(i) + ": DBH must be finite and > 0");
      }
      s.n += 1.0;
      s.sum_y += y;
      s.sum_log_y += std::log(y);
    }
    total_ += trees_[i].size();
    stats_.push_back(s);
  }
}

ResponseData ResponseData::from_plots(const std::vector<PlotObservation>& plots) {
  std::vector<std::vector<double>> trees;
  trees.reserve(plots.size());
  for (const auto& p : plots) trees.push_back(p.dbh);
  return ResponseData(std::move(trees));
}

// ---------------------------------------------------------------- model

std::vector<Eigen::VectorXd> AdditiveModel::term_columns(const TermSpec& spec,
                                                         const CovariateTable& covariates) {
  std::vector<Eigen::VectorXd> cols;
  for (const auto& c : spec.covariates) cols.push_back(covariates.column(c));
  return cols;
}

namespace {

Eigen::Index numerical_rank(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(top > 0.0)) return 0;
  return (es.eigenvalues().array() > 1e-8 * top).count();
}

}  // namespace

AdditiveModel::AdditiveModel(ModelSpec spec, const CovariateTable& training)
    : spec_(std::move(spec)), n_rows_(training.rows()) {
  spec_.validate(training.names());
  if (n_rows_ == 0) throw ValidationError("model " + spec_.name + ": no training rows");
  for (Parameter p : kParameters) {
    Block intercept{p, "(Intercept)", -1, n_coef_, 1, {}};
    blocks_.push_back(intercept);
    designs_.push_back(Eigen::MatrixXd::Ones(n_rows_, 1));
    n_coef_ += 1;
    const auto& specs = spec_.terms(p);
    for (std::size_t t = 0; t < specs.size(); ++t) {
      const auto cols = term_columns(specs[t], training);
      TermBasis basis = build_term(specs[t], cols);
      Block b{p, specs[t].label(), static_cast<int>(t), n_coef_, basis.columns(), {}};
      const int block_index = static_cast<int>(blocks_.size());
      for (std::size_t c = 0; c < basis.penalties().size(); ++c) {
        b.tau2.push_back(static_cast<int>(penalties_.size()));
        std::string label = "tau2." + parameter_name(p) + "." + specs[t].label();
        if (basis.penalties().size() > 1) label += "." + std::to_string(c + 1);
        penalties_.push_back({block_index, static_cast<int>(c),
                              numerical_rank(basis.penalties()[c]), label});
      }
      n_coef_ += basis.columns();
      designs_.push_back(basis.design());
      blocks_.push_back(std::move(b));
      terms_[static_cast<int>(p)].push_back({specs[t], std::move(basis)});
    }
  }
}

const Block& AdditiveModel::intercept_block(Parameter p) const {
  for (const auto& b : blocks_) {
    if (b.parameter == p && b.term < 0) return b;
  }
  throw std::logic_error("intercept block missing");
}

const Eigen::MatrixXd& AdditiveModel::penalty(int component) const {
  const auto& pc = penalties_[static_cast<std::size_t>(component)];
  const Block& b = blocks_[static_cast<std::size_t>(pc.block)];
  return terms(b.parameter)[static_cast<std::size_t>(b.term)]
      .basis.penalties()[static_cast<std::size_t>(pc.component)];
}

Eigen::MatrixXd AdditiveModel::prior_precision(int block, const Eigen::VectorXd& tau2) const {
  const Block& b = blocks_[static_cast<std::size_t>(block)];
  Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(b.size, b.size);
  for (int c : b.tau2) prec += penalty(c) / tau2(c);
  return prec;
}

std::vector<std::string> AdditiveModel::coefficient_labels() const {
  std::vector<std::string> out;
  for (const auto& b : blocks_) {
    for (Eigen::Index j = 0; j < b.size; ++j) {
      out.push_back(parameter_name(b.parameter) + "." + b.label + "." + std::to_string(j + 1));
    }
  }
  return out;
}

std::vector<std::string> AdditiveModel::tau2_labels() const {
  std::vector<std::string> out;
  for (const auto& p : penalties_) out.push_back(p.label);
  return out;
}

std::pair<Eigen::Index, Eigen::Index> AdditiveModel::parameter_slice(Parameter p) const {
  Eigen::Index begin = -1, end = 0;
  for (const auto& b : blocks_) {
    if (b.parameter != p) continue;
    if (begin < 0) begin = b.offset;
    end = b.offset + b.size;
  }
  return {begin, end - begin};
}

Eigen::MatrixXd AdditiveModel::design_at(Parameter p, const CovariateTable& covariates) const {
  const auto [offset, length] = parameter_slice(p);
  Eigen::MatrixXd x(covariates.rows(), length);
  x.col(0).setOnes();
  Eigen::Index col = 1;
  for (const auto& t : terms(p)) {
    const auto cols = term_columns(t.spec, covariates);
    x.middleCols(col, t.basis.columns()) = t.basis.evaluate(cols);
    col += t.basis.columns();
  }
  return x;
}

std::vector<std::pair<std::string, double>> AdditiveModel::extrapolation(
    const CovariateTable& covariates) const {
  std::vector<std::pair<std::string, double>> out;
  for (Parameter p : kParameters) {
    for (const auto& t : terms(p)) {
      const auto cols = term_columns(t.spec, covariates);
      const auto rep = t.basis.extrapolation(cols);
      for (std::size_t c = 0; c < cols.size(); ++c) {
        out.emplace_back(parameter_name(p) + "." + t.spec.label() + "." + t.spec.covariates[c],
                         rep.fraction_outside[c]);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- state

PredictorState PredictorState::zeros(const AdditiveModel& model) {
  return {Eigen::VectorXd::Zero(model.coefficient_count()), Eigen::VectorXd::Ones(model.tau2_count())};
}

double PredictorState::intercept(const AdditiveModel& model, Parameter p) const {
  return coefficients(model.intercept_block(p).offset);
}

Eigen::VectorXd PredictorState::term_coefficients(const AdditiveModel& model, Parameter p,
                                                  int term) const {
  for (const auto& b : model.blocks()) {
    if (b.parameter == p && b.term == term) return coefficients.segment(b.offset, b.size);
  }
  throw std::out_of_range("term_coefficients: no such term");
}

void PredictorState::check(const AdditiveModel& model) const {
  if (coefficients.size() != model.coefficient_count()) {
    throw std::invalid_argument("PredictorState: coefficient vector has " +
                                std::to_string(coefficients.size()) + " entries, model needs " +
                                std::to_string(model.coefficient_count()));
  }
  if (tau2.size() != model.tau2_count()) {
    throw std::invalid_argument("PredictorState: wrong number of smoothing variances");
  }
  if ((tau2.array() <= 0.0).any()) {
    throw std::invalid_argument("PredictorState: smoothing variances must be > 0");
  }
}

Eigen::VectorXd assemble_eta(const AdditiveModel& model, const PredictorState& state, Parameter p) {
  state.check(model);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(model.training_rows());
  for (std::size_t i = 0; i < model.blocks().size(); ++i) {
    const Block& b = model.blocks()[i];
    if (b.parameter != p) continue;
    eta.noalias() += model.block_design(static_cast<int>(i)) * state.coefficients.segment(b.offset, b.size);
  }
  return eta;
}

// ---------------------------------------------------------------- likelihood

Eigen::VectorXd plot_log_likelihood(const Eigen::VectorXd& eta_mu, const Eigen::VectorXd& eta_sigma,
                                    const ResponseData& data, LinkDiagnostics* diagnostics) {
  const auto n = static_cast<Eigen::Index>(data.plots());
  if (eta_mu.size() != n || eta_sigma.size() != n) {
    throw std::invalid_argument("plot_log_likelihood: predictor length mismatch");
  }
  Eigen::VectorXd ll(n);
  const auto& stats = data.stats();
  for (Eigen::Index i = 0; i < n; ++i) {
    const PlotStats& s = stats[static_cast<std::size_t>(i)];
    const double em = clamp_eta(eta_mu(i), diagnostics);
    const double es = clamp_eta(eta_sigma(i), diagnostics);
    const double phi = std::exp(-2.0 * es);
    ll(i) = (phi - 1.0) * s.sum_log_y - phi * s.sum_y * std::exp(-em) -
            s.n * phi * (em + 2.0 * es) - s.n * boost::math::lgamma(phi);
  }
  return ll;
}

Eigen::VectorXd tree_log_likelihood(const Eigen::VectorXd& eta_mu, const Eigen::VectorXd& eta_sigma,
                                    const ResponseData& data) {
  Eigen::VectorXd ll(static_cast<Eigen::Index>(data.trees_total()));
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < data.plots(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double em = clamp_eta(eta_mu(ii), nullptr);
    const double es = clamp_eta(eta_sigma(ii), nullptr);
    const double phi = std::exp(-2.0 * es);
    const double norm = -phi * (em + 2.0 * es) - boost::math::lgamma(phi);
    const double inv_mu = std::exp(-em);
    for (double y : data.trees()[i]) ll(k++) = (phi - 1.0) * std::log(y) - phi * y * inv_mu + norm;
  }
  return ll;
}

double log_likelihood(const AdditiveModel& model, const PredictorState& state,
                      const ResponseData& data) {
  if (static_cast<Eigen::Index>(data.plots()) != model.training_rows()) {
    throw std::invalid_argument("log_likelihood: data and model row counts differ");
  }
  const double total = plot_log_likelihood(assemble_eta(model, state, Parameter::mu),
                                           assemble_eta(model, state, Parameter::sigma), data)
                           .sum();
  return std::isfinite(total) ? total : -std::numeric_limits<double>::infinity();
}

void predictor_score(Parameter p, const Eigen::VectorXd& eta_mu, const Eigen::VectorXd& eta_sigma,
                     const ResponseData& data, Eigen::VectorXd& score, Eigen::VectorXd& weight) {
  const auto n = static_cast<Eigen::Index>(data.plots());
  score.resize(n);
  weight.resize(n);
  const auto& stats = data.stats();
  for (Eigen::Index i = 0; i < n; ++i) {
    const PlotStats& s = stats[static_cast<std::size_t>(i)];
    const double em = clamp_eta(eta_mu(i), nullptr);
    const double es = clamp_eta(eta_sigma(i), nullptr);
    const double phi = std::exp(-2.0 * es);
    const double ratio = s.sum_y * std::exp(-em);
    if (p == Parameter::mu) {
      score(i) = phi * (ratio - s.n);
      weight(i) = s.n * phi;
    } else {
      score(i) = -2.0 * phi *
                 (s.sum_log_y - s.n * em + s.n * std::log(phi) - ratio + s.n -
                  s.n * boost::math::digamma(phi));
      // trigamma(phi) - 1/phi cancels badly for large phi; use its expansion.
      const double excess = phi > 1e4 ? 0.5 / (phi * phi) + 1.0 / (6.0 * phi * phi * phi)
                                      : boost::math::trigamma(phi) - 1.0 / phi;
      weight(i) = 4.0 * s.n * phi * phi * excess;
    }
  }
}

Eigen::VectorXd log_likelihood_gradient(const AdditiveModel& model, const PredictorState& state,
                                        const ResponseData& data) {
  const Eigen::VectorXd eta_mu = assemble_eta(model, state, Parameter::mu);
  const Eigen::VectorXd eta_sigma = assemble_eta(model, state, Parameter::sigma);
  Eigen::VectorXd grad(model.coefficient_count());
  for (Parameter p : kParameters) {
    Eigen::VectorXd score, weight;
    predictor_score(p, eta_mu, eta_sigma, data, score, weight);
    for (std::size_t i = 0; i < model.blocks().size(); ++i) {
      const Block& b = model.blocks()[i];
      if (b.parameter != p) continue;
      grad.segment(b.offset, b.size) = model.block_design(static_cast<int>(i)).transpose() * score;
    }
  }
  return grad;
}

}  // namespace dbhdist
