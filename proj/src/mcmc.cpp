#include "dbhdist/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "dbhdist/error.hpp"

namespace dbhdist {

void SamplerSchedule::validate() const {
  if (chains < 1) throw ValidationError("schedule: chains must be >= 1");
  if (iterations < 1) throw ValidationError("schedule: iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations) {
    throw ValidationError("schedule: burn_in must satisfy 0 <= burn_in < iterations");
  }
  if (thin < 1) throw ValidationError("schedule: thin must be >= 1");
  if (!(tau2_a > 0.0) || !(tau2_b > 0.0)) {
    throw ValidationError("schedule: inverse-gamma hyperparameters must be > 0");
  }
  if (retained_per_chain() < 1) throw ValidationError("schedule: no draws would be retained");
}

int SamplerSchedule::retained_per_chain() const { return (iterations - burn_in) / thin; }

// ---------------------------------------------------------------- state

ChainState initial_state(const AdditiveModel& model, const ResponseData& data) {
  double sum = 0.0, sum_sq = 0.0, n = 0.0;
  for (const auto& plot : data.trees()) {
    for (double y : plot) {
      sum += y;
      sum_sq += y * y;
      n += 1.0;
    }
  }
  const double mean = sum / n;
  const double var = n > 1.0 ? (sum_sq - n * mean * mean) / (n - 1.0) : 0.0;
  // A single tree (or identical trees) has no spread; fall back to sigma = 1.
  const double sigma = var > 0.0 ? std::sqrt(var) / mean : 1.0;

  ChainState s;
  PredictorState p = PredictorState::zeros(model);
  p.coefficients(model.intercept_block(Parameter::mu).offset) = std::log(mean);
  p.coefficients(model.intercept_block(Parameter::sigma).offset) = std::log(sigma);
  s.coefficients = p.coefficients;
  s.tau2 = p.tau2;
  s.eta_mu = assemble_eta(model, p, Parameter::mu);
  s.eta_sigma = assemble_eta(model, p, Parameter::sigma);
  s.loglik = plot_log_likelihood(s.eta_mu, s.eta_sigma, data).sum();
  return s;
}

namespace {

// log of the pseudo-determinant over the `rank` largest eigenvalues.
double log_pdet(const Eigen::MatrixXd& m, Eigen::Index rank) {
  if (rank == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  return ev.tail(rank).array().log().sum();
}

Eigen::Index block_rank(const AdditiveModel& model, const Block& b) {
  if (b.tau2.size() == 1) return model.penalty_components()[static_cast<std::size_t>(b.tau2[0])].rank;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(b.size, b.size);
  for (int c : b.tau2) sum += model.penalty(c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sum, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  return (es.eigenvalues().array() > 1e-8 * top).count();
}

}  // namespace

double log_posterior(const AdditiveModel& model, const ChainState& state,
                     const SamplerSchedule& schedule) {
  double lp = state.loglik;
  for (std::size_t i = 0; i < model.blocks().size(); ++i) {
    const Block& b = model.blocks()[i];
    if (b.tau2.empty()) continue;
    const Eigen::VectorXd beta = state.coefficients.segment(b.offset, b.size);
    const Eigen::MatrixXd prec = model.prior_precision(static_cast<int>(i), state.tau2);
    lp += -0.5 * beta.dot(prec * beta) + 0.5 * log_pdet(prec, block_rank(model, b));
  }
  for (Eigen::Index j = 0; j < state.tau2.size(); ++j) {
    const double t = state.tau2(j);
    lp += -(schedule.tau2_a + 1.0) * std::log(t) - schedule.tau2_b / t;
  }
  return lp;
}

// ---------------------------------------------------------------- block step

namespace {

struct Quadratic {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd mean;
  bool ok = false;
};

Quadratic local_quadratic(const BlockTarget& t, const Eigen::VectorXd& beta,
                          const Eigen::VectorXd& eta) {
  Eigen::VectorXd score, weight;
  t.derivatives(eta, score, weight);
  const Eigen::MatrixXd& x = *t.design;
  Quadratic q;
  if (!score.allFinite() || !weight.allFinite() || (weight.array() < 0.0).any()) return q;
  Eigen::MatrixXd h = x.transpose() * weight.asDiagonal() * x + t.prior_precision;
  Eigen::VectorXd g = x.transpose() * score - t.prior_precision * beta;
  q.llt.compute(h);
  if (q.llt.info() != Eigen::Success) return q;
  const Eigen::VectorXd diag = q.llt.matrixLLT().diagonal();
  if (!diag.allFinite() || (diag.array() <= 0.0).any()) return q;
  q.mean = beta + q.llt.solve(g);
  q.ok = q.mean.allFinite();
  return q;
}

// log N(v | mean, H^-1) up to the shared 2*pi constant.
double log_proposal_density(const Quadratic& q, const Eigen::VectorXd& v) {
  const Eigen::VectorXd d = v - q.mean;
  const Eigen::VectorXd ld = q.llt.matrixU() * d;
  return q.llt.matrixLLT().diagonal().array().log().sum() - 0.5 * ld.squaredNorm();
}

double log_prior(const BlockTarget& t, const Eigen::VectorXd& beta) {
  return -0.5 * beta.dot(t.prior_precision * beta);
}

StepResult random_walk_step(const BlockTarget& t, Eigen::Ref<Eigen::VectorXd> beta,
                            Eigen::VectorXd& eta, double& loglik, Rng& rng,
                            RandomWalkTuning& tuning) {
  StepResult r{false, true};
  const Eigen::MatrixXd& x = *t.design;
  Eigen::VectorXd step(beta.size());
  for (Eigen::Index j = 0; j < step.size(); ++j) {
    const double col = x.col(j).norm();
    step(j) = tuning.scale * rng.normal() / (col > 0.0 ? col : 1.0);
  }
  const Eigen::VectorXd current = beta;
  const Eigen::VectorXd proposed = current + step;
  const Eigen::VectorXd eta_new = eta + x * step;
  const double ll_new = t.log_likelihood(eta_new);
  ++tuning.proposals;
  if (std::isfinite(ll_new)) {
    const double log_alpha = ll_new + log_prior(t, proposed) - loglik - log_prior(t, current);
    if (std::log(rng.uniform()) < log_alpha) {
      beta = proposed;
      eta = eta_new;
      loglik = ll_new;
      r.accepted = true;
      ++tuning.accepted;
    }
  }
  if (tuning.adapt) {
    // Robbins-Monro towards 0.234 acceptance.
    const double gain = 1.0 / std::sqrt(static_cast<double>(tuning.proposals) + 1.0);
    tuning.scale *= std::exp(gain * ((r.accepted ? 1.0 : 0.0) - 0.234));
  }
  return r;
}

}  // namespace

StepResult iwls_step(const BlockTarget& target, Eigen::Ref<Eigen::VectorXd> beta,
                     Eigen::VectorXd& eta, double& loglik, Rng& rng, RandomWalkTuning& tuning) {
  const Eigen::VectorXd current = beta;
  const Quadratic fwd = local_quadratic(target, current, eta);
  if (!fwd.ok) return random_walk_step(target, beta, eta, loglik, rng, tuning);

  Eigen::VectorXd z(current.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
  const Eigen::VectorXd proposed = fwd.mean + fwd.llt.matrixU().solve(z);
  const Eigen::VectorXd eta_new = eta + *target.design * (proposed - current);
  const double ll_new = target.log_likelihood(eta_new);
  const double log_u = std::log(rng.uniform());
  if (!std::isfinite(ll_new)) return {false, false};

  const Quadratic back = local_quadratic(target, proposed, eta_new);
  if (!back.ok) return {false, false};
  const double log_alpha = ll_new + log_prior(target, proposed) - loglik -
                           log_prior(target, current) + log_proposal_density(back, current) -
                           log_proposal_density(fwd, proposed);
  if (log_u < log_alpha) {
    beta = proposed;
    eta = eta_new;
    loglik = ll_new;
    return {true, false};
  }
  return {false, false};
}

namespace {

BlockTarget block_target(const AdditiveModel& model, const ResponseData& data, int block,
                         const ChainState& state) {
  const Block& b = model.blocks()[static_cast<std::size_t>(block)];
  const bool is_mu = b.parameter == Parameter::mu;
  BlockTarget target;
  target.design = &model.block_design(block);
  target.prior_precision = model.prior_precision(block, state.tau2);
  const Eigen::VectorXd& other = is_mu ? state.eta_sigma : state.eta_mu;
  target.log_likelihood = [&data, &other, is_mu](const Eigen::VectorXd& eta) {
    const double ll = is_mu ? plot_log_likelihood(eta, other, data).sum()
                            : plot_log_likelihood(other, eta, data).sum();
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
  };
  target.derivatives = [&data, &other, is_mu](const Eigen::VectorXd& eta, Eigen::VectorXd& score,
                                              Eigen::VectorXd& weight) {
    if (is_mu) {
      predictor_score(Parameter::mu, eta, other, data, score, weight);
    } else {
      predictor_score(Parameter::sigma, other, eta, data, score, weight);
    }
  };
  return target;
}

}  // namespace

bool mode_step(const BlockTarget& target, Eigen::Ref<Eigen::VectorXd> beta, Eigen::VectorXd& eta,
               double& loglik) {
  const Eigen::VectorXd current = beta;
  const Quadratic q = local_quadratic(target, current, eta);
  if (!q.ok) return false;
  const Eigen::VectorXd step = q.mean - current;
  const Eigen::VectorXd eta_step = *target.design * step;
  const double before = loglik + log_prior(target, current);
  for (double lambda = 1.0; lambda >= 1.0 / 64.0; lambda *= 0.5) {
    const Eigen::VectorXd candidate = current + lambda * step;
    const Eigen::VectorXd eta_new = eta + lambda * eta_step;
    const double ll_new = target.log_likelihood(eta_new);
    if (std::isfinite(ll_new) && ll_new + log_prior(target, candidate) > before) {
      beta = candidate;
      eta = eta_new;
      loglik = ll_new;
      return true;
    }
  }
  return false;
}

StepResult update_block(const AdditiveModel& model, const ResponseData& data, int block,
                        ChainState& state, Rng& rng, RandomWalkTuning& tuning) {
  const Block& b = model.blocks()[static_cast<std::size_t>(block)];
  const BlockTarget target = block_target(model, data, block, state);
  Eigen::VectorXd& eta = b.parameter == Parameter::mu ? state.eta_mu : state.eta_sigma;
  return iwls_step(target, state.coefficients.segment(b.offset, b.size), eta, state.loglik, rng,
                   tuning);
}

bool seek_block_mode(const AdditiveModel& model, const ResponseData& data, int block,
                     ChainState& state) {
  const Block& b = model.blocks()[static_cast<std::size_t>(block)];
  const BlockTarget target = block_target(model, data, block, state);
  Eigen::VectorXd& eta = b.parameter == Parameter::mu ? state.eta_mu : state.eta_sigma;
  return mode_step(target, state.coefficients.segment(b.offset, b.size), eta, state.loglik);
}

void update_tau2(const AdditiveModel& model, int block, ChainState& state, Rng& rng, double a,
                 double b_hyper) {
  const Block& b = model.blocks()[static_cast<std::size_t>(block)];
  if (b.tau2.empty()) return;
  const Eigen::VectorXd beta = state.coefficients.segment(b.offset, b.size);
  auto conjugate_draw = [&](int c) {
    const auto& pc = model.penalty_components()[static_cast<std::size_t>(c)];
    const double quad = std::max(0.0, beta.dot(model.penalty(c) * beta));
    const double shape = a + 0.5 * static_cast<double>(pc.rank);
    const double rate = b_hyper + 0.5 * quad;
    return rate / rng.gamma(shape);
  };
  if (b.tau2.size() == 1) {
    state.tau2(b.tau2[0]) = conjugate_draw(b.tau2[0]);
    return;
  }
  const Eigen::Index rank = block_rank(model, b);
  for (int c : b.tau2) {
    const auto& pc = model.penalty_components()[static_cast<std::size_t>(c)];
    const double half_rank = 0.5 * static_cast<double>(pc.rank);
    const double old_value = state.tau2(c);
    const double log_g_old =
        0.5 * log_pdet(model.prior_precision(block, state.tau2), rank) + half_rank * std::log(old_value);
    const double candidate = conjugate_draw(c);
    state.tau2(c) = candidate;
    const double log_g_new =
        0.5 * log_pdet(model.prior_precision(block, state.tau2), rank) + half_rank * std::log(candidate);
    if (!(std::log(rng.uniform()) < log_g_new - log_g_old) || !std::isfinite(log_g_new)) {
      state.tau2(c) = old_value;
    }
  }
}

// ---------------------------------------------------------------- chains

namespace {

struct ChainOutput {
  Eigen::MatrixXd coefficients;
  Eigen::MatrixXd tau2;
  Eigen::MatrixXd loglik;
  std::vector<int> iteration;
  std::vector<std::size_t> accepted;
  std::vector<std::size_t> attempted;
  std::vector<std::size_t> fallback;
};

ChainOutput run_chain(const AdditiveModel& model, const ResponseData& data,
                      const SamplerSchedule& schedule, const ChainState& start, int chain) {
  Rng rng(schedule.base_seed + static_cast<std::uint64_t>(chain));
  ChainState state = start;
  const auto n_blocks = model.blocks().size();
  const int kept = schedule.retained_per_chain();
  const Eigen::Index units = schedule.pointwise == PointwiseUnit::plot
                                 ? static_cast<Eigen::Index>(data.plots())
                                 : static_cast<Eigen::Index>(data.trees_total());
  ChainOutput out;
  out.coefficients.resize(kept, model.coefficient_count());
  out.tau2.resize(kept, model.tau2_count());
  out.loglik.resize(kept, units);
  out.accepted.assign(n_blocks, 0);
  out.attempted.assign(n_blocks, 0);
  out.fallback.assign(n_blocks, 0);
  std::vector<RandomWalkTuning> tuning(n_blocks);
  std::vector<int> order(n_blocks);
  std::iota(order.begin(), order.end(), 0);

  int row = 0;
  const int seeking = std::min(schedule.burn_in / 2, kModeSweeps);
  for (int it = 1; it <= seeking; ++it) {
    for (std::size_t blk = 0; blk < n_blocks; ++blk) {
      seek_block_mode(model, data, static_cast<int>(blk), state);
    }
  }
  for (int it = seeking + 1; it <= schedule.iterations; ++it) {
    const bool warm = it > schedule.burn_in;
    if (schedule.random_scan) {
      for (std::size_t i = n_blocks; i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
      }
    }
    for (int blk : order) {
      auto& tune = tuning[static_cast<std::size_t>(blk)];
      tune.adapt = !warm;
      const StepResult r = update_block(model, data, blk, state, rng, tune);
      if (warm) {
        ++out.attempted[static_cast<std::size_t>(blk)];
        if (r.accepted) ++out.accepted[static_cast<std::size_t>(blk)];
      }
      if (r.fallback) ++out.fallback[static_cast<std::size_t>(blk)];
    }
    for (std::size_t blk = 0; blk < n_blocks; ++blk) {
      update_tau2(model, static_cast<int>(blk), state, rng, schedule.tau2_a, schedule.tau2_b);
    }
    if (warm && (it - schedule.burn_in) % schedule.thin == 0 && row < kept) {
      out.coefficients.row(row) = state.coefficients.transpose();
      out.tau2.row(row) = state.tau2.transpose();
      if (schedule.pointwise == PointwiseUnit::plot) {
        out.loglik.row(row) = plot_log_likelihood(state.eta_mu, state.eta_sigma, data).transpose();
      } else {
        out.loglik.row(row) = tree_log_likelihood(state.eta_mu, state.eta_sigma, data).transpose();
      }
      out.iteration.push_back(it);
      ++row;
    }
  }
  return out;
}

}  // namespace

PosteriorDraws draw_layout(const AdditiveModel& model) {
  PosteriorDraws d;
  d.coefficient_labels = model.coefficient_labels();
  d.tau2_labels = model.tau2_labels();
  for (const auto& b : model.blocks()) {
    d.blocks.push_back({parameter_name(b.parameter) + "." + b.label, b.offset, b.size});
  }
  return d;
}

PosteriorDraws sample_posterior(const AdditiveModel& model, const ResponseData& data,
                                 const SamplerSchedule& schedule) {
  schedule.validate();
  if (data.plots() == 0) throw ValidationError("fit: no plots");
  if (static_cast<Eigen::Index>(data.plots()) != model.training_rows()) {
    throw std::invalid_argument("sample_posterior: data and model row counts differ");
  }
  const ChainState start = initial_state(model, data);
  if (!std::isfinite(log_posterior(model, start, schedule))) {
    throw NumericalError("fit: log-posterior at the starting values is not finite");
  }

  std::vector<ChainOutput> outputs(static_cast<std::size_t>(schedule.chains));
  std::vector<std::exception_ptr> errors(outputs.size());
  {
    std::vector<std::jthread> workers;
    for (int c = 0; c < schedule.chains; ++c) {
      workers.emplace_back([&, c] {
        try {
          outputs[static_cast<std::size_t>(c)] = run_chain(model, data, schedule, start, c);
        } catch (...) {
          errors[static_cast<std::size_t>(c)] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  PosteriorDraws d = draw_layout(model);
  d.chains = schedule.chains;
  d.pointwise = schedule.pointwise;
  const Eigen::Index m = schedule.retained_total();
  const Eigen::Index per = schedule.retained_per_chain();
  d.coefficients.resize(m, model.coefficient_count());
  d.tau2.resize(m, model.tau2_count());
  d.loglik.resize(m, outputs[0].loglik.cols());
  for (int c = 0; c < schedule.chains; ++c) {
    const auto& o = outputs[static_cast<std::size_t>(c)];
    d.coefficients.middleRows(c * per, per) = o.coefficients;
    d.tau2.middleRows(c * per, per) = o.tau2;
    d.loglik.middleRows(c * per, per) = o.loglik;
    for (int it : o.iteration) {
      d.chain.push_back(c);
      d.iteration.push_back(it);
    }
  }
  for (std::size_t blk = 0; blk < model.blocks().size(); ++blk) {
    BlockAcceptance a;
    a.label = d.blocks[blk].label;
    std::size_t acc = 0, att = 0;
    for (const auto& o : outputs) {
      acc += o.accepted[blk];
      att += o.attempted[blk];
      a.fallback_steps += o.fallback[blk];
      a.per_chain.push_back(o.attempted[blk] ? static_cast<double>(o.accepted[blk]) /
                                                   static_cast<double>(o.attempted[blk])
                                             : 0.0);
    }
    a.rate = att ? static_cast<double>(acc) / static_cast<double>(att) : 0.0;
    d.acceptance.push_back(std::move(a));
  }
  return d;
}

FittedModel fit(const ModelSpec& spec, const std::vector<PlotObservation>& plots,
                const SamplerSchedule& schedule) {
  if (plots.empty()) throw ValidationError("fit: no plots");
  AdditiveModel model(spec, CovariateTable::from_plots(plots));
  ResponseData data = ResponseData::from_plots(plots);
  PosteriorDraws draws = sample_posterior(model, data, schedule);
  return {std::move(model), std::move(data), std::move(draws)};
}

// ---------------------------------------------------------------- diagnostics

namespace {

std::vector<Eigen::VectorXd> split_halves(const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& c : chains) {
    const Eigen::Index half = c.size() / 2;
    out.push_back(c.head(half));
    out.push_back(c.tail(half));
  }
  return out;
}

struct Variances {
  double within = 0.0;
  double plus = 0.0;
  Eigen::Index n = 0;
};

Variances variances(const std::vector<Eigen::VectorXd>& chains) {
  Variances v;
  const auto m = static_cast<double>(chains.size());
  v.n = chains.front().size();
  const auto n = static_cast<double>(v.n);
  Eigen::VectorXd means(static_cast<Eigen::Index>(chains.size()));
  for (std::size_t j = 0; j < chains.size(); ++j) {
    means(static_cast<Eigen::Index>(j)) = chains[j].mean();
    v.within += (chains[j].array() - chains[j].mean()).square().sum() / (n - 1.0);
  }
  v.within /= m;
  const double between = n * (means.array() - means.mean()).square().sum() / (m - 1.0);
  v.plus = (n - 1.0) / n * v.within + between / n;
  return v;
}

}  // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  const auto halves = split_halves(chains);
  if (halves.size() < 2 || halves.front().size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const Variances v = variances(halves);
  if (!(v.within > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(v.plus / v.within);
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
  const auto halves = split_halves(chains);
  double total = 0.0;
  for (const auto& c : chains) total += static_cast<double>(c.size());
  if (halves.size() < 2 || halves.front().size() < 4) return std::numeric_limits<double>::quiet_NaN();
  const Variances v = variances(halves);
  if (!(v.plus > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::Index n = v.n;
  const auto m = static_cast<double>(halves.size());
  auto rho = [&](Eigen::Index t) {
    double vt = 0.0;
    for (const auto& c : halves) {
      vt += (c.tail(n - t) - c.head(n - t)).squaredNorm();
    }
    vt /= m * static_cast<double>(n - t);
    return 1.0 - vt / (2.0 * v.plus);
  };
  double sum = 0.0;
  for (Eigen::Index t = 1; t + 1 < n; t += 2) {
    const double pair = rho(t) + rho(t + 1);
    if (pair < 0.0) break;
    sum += pair;
  }
  const double ess = m * static_cast<double>(n) / (1.0 + 2.0 * sum);
  return std::min(ess, total);
}

bool ConvergenceReport::any_flagged() const {
  return std::any_of(blocks.begin(), blocks.end(), [](const auto& b) { return b.flagged; });
}

ConvergenceReport convergence_diagnostics(const PosteriorDraws& draws) {
  if (draws.chains < 2) throw ValidationError("convergence diagnostics need at least 2 chains");
  const Eigen::Index per = draws.size() / draws.chains;
  auto column_chains = [&](const Eigen::MatrixXd& m, Eigen::Index col) {
    std::vector<Eigen::VectorXd> chains;
    for (int c = 0; c < draws.chains; ++c) chains.push_back(m.block(c * per, col, per, 1));
    return chains;
  };
  auto summarize = [&](const std::string& label, const Eigen::MatrixXd& m, Eigen::Index offset,
                       Eigen::Index size) {
    BlockDiagnostics b;
    b.label = label;
    b.min_ess = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = offset; j < offset + size; ++j) {
      const auto chains = column_chains(m, j);
      const double r = split_rhat(chains);
      const double e = effective_sample_size(chains);
      if (std::isnan(r) || std::isnan(e)) {
        b.undefined = true;
        continue;
      }
      b.max_rhat = std::max(b.max_rhat, r);
      b.min_ess = std::min(b.min_ess, e);
    }
    if (b.undefined) {
      b.max_rhat = std::numeric_limits<double>::quiet_NaN();
      b.min_ess = std::numeric_limits<double>::quiet_NaN();
    }
    b.flagged = b.undefined || b.max_rhat > kRhatThreshold;
    return b;
  };
  ConvergenceReport report;
  for (const auto& blk : draws.blocks) {
    report.blocks.push_back(summarize(blk.label, draws.coefficients, blk.offset, blk.size));
  }
  for (Eigen::Index j = 0; j < draws.tau2.cols(); ++j) {
    report.blocks.push_back(summarize(draws.tau2_labels[static_cast<std::size_t>(j)], draws.tau2, j, 1));
  }
  return report;
}

}  // namespace dbhdist
