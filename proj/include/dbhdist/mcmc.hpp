#ifndef DBHDIST_MCMC_HPP
#define DBHDIST_MCMC_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dbhdist/predictor.hpp"
#include "dbhdist/random.hpp"

namespace dbhdist {

/// Unit over which pointwise log-likelihoods (and hence WAIC) are formed.
enum class PointwiseUnit { plot, tree };

struct SamplerSchedule {
  int chains = 7;
  int iterations = 5000;
  int burn_in = 2000;
  int thin = 10;
  std::uint64_t base_seed = 1;
  bool random_scan = false;
  // Inverse-gamma hyperprior on every smoothing variance.
  double tau2_a = 0.001;
  double tau2_b = 0.001;
  PointwiseUnit pointwise = PointwiseUnit::plot;

  void validate() const;
  /// floor((iterations - burn_in) / thin)
  int retained_per_chain() const;
  int retained_total() const { return chains * retained_per_chain(); }
};

struct BlockAcceptance {
  std::string label;            // "<param>.<term>"
  double rate = 0.0;            // pooled over chains, post burn-in
  std::vector<double> per_chain;
  std::size_t fallback_steps = 0;
};

/// A labelled slice of the coefficient columns.
struct DrawBlock {
  std::string label;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

/// Retained draws of all chains, concatenated in chain order.
struct PosteriorDraws {
  std::vector<std::string> coefficient_labels;
  std::vector<std::string> tau2_labels;
  std::vector<DrawBlock> blocks;
  Eigen::MatrixXd coefficients;  // M x P
  Eigen::MatrixXd tau2;          // M x Q
  Eigen::MatrixXd loglik;        // M x (plots or trees)
  std::vector<int> chain;
  std::vector<int> iteration;
  int chains = 0;
  PointwiseUnit pointwise = PointwiseUnit::plot;
  std::vector<BlockAcceptance> acceptance;

  Eigen::Index size() const { return coefficients.rows(); }
};

/// Sampler state of one chain with cached predictors.
struct ChainState {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd tau2;
  Eigen::VectorXd eta_mu;
  Eigen::VectorXd eta_sigma;
  double loglik = 0.0;

  PredictorState predictor() const { return {coefficients, tau2}; }
};

/// Intercepts from pooled moments (log mean, log sd/mean), all other
/// coefficients zero, every smoothing variance one.
ChainState initial_state(const AdditiveModel& model, const ResponseData& data);

/// Log-likelihood plus log-priors of coefficients and smoothing variances
/// (up to a constant).
double log_posterior(const AdditiveModel& model, const ChainState& state,
                     const SamplerSchedule& schedule);

/// Full conditional of one coefficient block of a model whose likelihood
/// depends on the block only through a linear predictor eta = X beta + offset.
struct BlockTarget {
  const Eigen::MatrixXd* design = nullptr;
  Eigen::MatrixXd prior_precision;  // zero for flat priors
  std::function<double(const Eigen::VectorXd& eta)> log_likelihood;
  /// Score d loglik / d eta and expected curvature (Fisher weight) per row.
  std::function<void(const Eigen::VectorXd& eta, Eigen::VectorXd& score,
                     Eigen::VectorXd& weight)>
      derivatives;
};

/// Random-walk proposal used when the curvature matrix cannot be factored.
struct RandomWalkTuning {
  double scale = 0.1;
  bool adapt = true;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
};

struct StepResult {
  bool accepted = false;
  bool fallback = false;
};

/// One Metropolis-Hastings step whose Gaussian proposal is a Newton step from
/// the current value with covariance (X'WX + prior precision)^-1, i.e. the
/// local quadratic approximation of the full conditional. `eta` and `loglik`
/// must describe the current value and are updated on acceptance.
StepResult iwls_step(const BlockTarget& target, Eigen::Ref<Eigen::VectorXd> beta,
                     Eigen::VectorXd& eta, double& loglik, Rng& rng, RandomWalkTuning& tuning);

/// Deterministic damped Newton move of a block towards its conditional mode:
/// the IWLS step, halved until the log-posterior increases. Returns false
/// when no improving step was found.
bool mode_step(const BlockTarget& target, Eigen::Ref<Eigen::VectorXd> beta, Eigen::VectorXd& eta,
               double& loglik);

/// Gamma-model block update; `block` indexes model.blocks().
StepResult update_block(const AdditiveModel& model, const ResponseData& data, int block,
                        ChainState& state, Rng& rng, RandomWalkTuning& tuning);

bool seek_block_mode(const AdditiveModel& model, const ResponseData& data, int block,
                     ChainState& state);

/// Burn-in opens with up to this many mode-seeking sweeps (at most half the
/// burn-in) with the smoothing variances held at their starting values.
inline constexpr int kModeSweeps = 20;

/// Smoothing-variance update of one penalized block. Single-penalty blocks
/// get the conjugate draw IG(a + rank/2, b + beta'S beta/2); multi-penalty
/// blocks use that draw as a proposal with a Metropolis correction for the
/// prior normalizing determinant.
void update_tau2(const AdditiveModel& model, int block, ChainState& state, Rng& rng, double a,
                 double b);

/// Labels and blocks of a model's draws, with no rows.
PosteriorDraws draw_layout(const AdditiveModel& model);

/// Runs all chains (concurrently, one seed each: base_seed + chain index).
/// Throws NumericalError if the starting log-posterior is not finite.
PosteriorDraws sample_posterior(const AdditiveModel& model, const ResponseData& data,
                                 const SamplerSchedule& schedule);

struct FittedModel {
  AdditiveModel model;
  ResponseData data;
  PosteriorDraws draws;
};

/// Builds the bases from the plots' covariates and samples the posterior.
FittedModel fit(const ModelSpec& spec, const std::vector<PlotObservation>& plots,
                const SamplerSchedule& schedule);

/// Split potential scale reduction factor; NaN when within-chain variance is 0.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);
/// Effective sample size over split chains (Geyer initial positive sequence),
/// capped at the number of draws. NaN when all draws are identical.
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

struct BlockDiagnostics {
  std::string label;
  double max_rhat = 0.0;
  double min_ess = 0.0;
  bool undefined = false;  // zero within-chain variance somewhere
  bool flagged = false;    // undefined or max_rhat > 1.1
};

struct ConvergenceReport {
  std::vector<BlockDiagnostics> blocks;
  bool any_flagged() const;
};

inline constexpr double kRhatThreshold = 1.1;

/// Per block (coefficient blocks and smoothing variances). Requires >= 2 chains.
ConvergenceReport convergence_diagnostics(const PosteriorDraws& draws);

}  // namespace dbhdist

#endif  // DBHDIST_MCMC_HPP
