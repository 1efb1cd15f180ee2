#ifndef DBHDIST_WORKFLOW_HPP
#define DBHDIST_WORKFLOW_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dbhdist/config.hpp"
#include "dbhdist/criteria.hpp"
#include "dbhdist/ingest.hpp"
#include "dbhdist/mcmc.hpp"
#include "dbhdist/prediction.hpp"

namespace dbhdist {

// ---------------------------------------------------------------- settings

SamplerSchedule schedule_from_config(const Config& config);
/// Keys name, mu, sigma and optionally family, mu_link, sigma_link.
ModelSpec model_from_config(const Config& config);
/// One spec per `model.<name>.mu` / `model.<name>.sigma` pair, in file order.
std::vector<ModelSpec> models_from_config(const Config& config);
IngestOptions ingest_options_from_config(const Config& config);
/// Reads the tree, plot and raster files named by the config.
IngestResult load_training_data(const Config& config);

// ---------------------------------------------------------------- archives

/// chain, iteration, coefficient labels, smoothing-variance labels.
std::string draws_csv(const PosteriorDraws& draws);
/// Reads draws written by draws_csv; the header must match the model's layout.
PosteriorDraws read_draws(const std::filesystem::path& path, const AdditiveModel& model);

/// Per-plot posterior means and 95% intervals of mu and sigma.
struct FittedPlot {
  std::string id;
  double mu_mean = 0.0, mu_lo = 0.0, mu_hi = 0.0;
  double sigma_mean = 0.0, sigma_lo = 0.0, sigma_hi = 0.0;
  double mu_hat = 0.0, sigma_hat = 0.0;  // at the posterior-mean coefficients
};

std::vector<FittedPlot> fitted_plots(const AdditiveModel& model, const PosteriorDraws& draws,
                                     const std::vector<PlotObservation>& plots);
/// Quantile residuals at the posterior-mean coefficients, one per tree.
std::vector<double> fitted_residuals(const std::vector<FittedPlot>& fitted,
                                     const std::vector<PlotObservation>& plots);

/// Kolmogorov-Smirnov distance to the standard normal.
double ks_statistic_normal(std::vector<double> values);
/// Asymptotic 5% critical value for n observations.
double ks_critical_5pct(std::size_t n);

struct LoadedFit {
  ModelSpec spec;
  SamplerSchedule schedule;
  std::vector<PlotObservation> plots;
  AdditiveModel model;
  ResponseData data;
  PosteriorDraws draws;
};

/// Writes model.cfg, plots.csv, trees.csv, draws.csv, fitted.csv,
/// residuals.csv, criteria.csv, acceptance.csv and convergence.csv.
std::vector<std::filesystem::path> write_fit(const std::filesystem::path& dir, const FittedModel& fit,
                                             const SamplerSchedule& schedule,
                                             const std::vector<PlotObservation>& plots,
                                             const CriteriaReport& criteria);
LoadedFit read_fit(const std::filesystem::path& dir);

/// Per-draw pointwise log-likelihood recomputed from stored coefficients.
Eigen::MatrixXd pointwise_loglik(const AdditiveModel& model, const ResponseData& data,
                                 const PosteriorDraws& draws, PointwiseUnit unit);

// ---------------------------------------------------------------- effects

struct EffectTables {
  std::string effects_csv;  // parameter, term, value, mean, lo, hi
  std::string density_csv;  // value, dbh_cm, density
};

/// Sweeps one covariate over its observed range (0 to the period for cyclic
/// terms) with every other covariate at its training median.
EffectTables compute_effects(const AdditiveModel& model, const PosteriorDraws& draws,
                             const std::vector<PlotObservation>& plots, const std::string& covariate,
                             int grid = 50, int density_points = 4001);

// ---------------------------------------------------------------- runs

struct RunResult {
  std::filesystem::path output;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
  std::string summary;
};

/// Reproducibility record: command, canonical settings and their hash,
/// seed, library versions, and SHA-256 of every input and output file.
std::string manifest_text(const std::string& command, const Config& config,
                          const std::vector<std::pair<std::string, std::filesystem::path>>& inputs,
                          const std::filesystem::path& output_dir,
                          const std::vector<std::filesystem::path>& outputs);

RunResult run_simulate(const Config& config);
RunResult run_fit(const Config& config);
RunResult run_compare(const Config& config);
RunResult run_predict(const Config& config);
RunResult run_effects(const Config& config);
RunResult run_diagnostics(const Config& config);

/// Accepted keys per subcommand, with their defaults and meaning, for --help.
struct SettingDoc {
  std::string key;
  std::string fallback;
  std::string help;
};
std::vector<SettingDoc> setting_docs(const std::string& command);

}  // namespace dbhdist

#endif  // DBHDIST_WORKFLOW_HPP
