#ifndef DBHDIST_PREDICTION_HPP
#define DBHDIST_PREDICTION_HPP

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dbhdist/gamma_family.hpp"
#include "dbhdist/mcmc.hpp"
#include "dbhdist/raster.hpp"

namespace dbhdist {

/// DBH classes cut at ascending breakpoints (cm); k breakpoints, k+1 classes.
struct SizeClassScheme {
  std::vector<double> breakpoints;
  std::vector<std::string> labels;

  /// "narrative_25_50" or "formula_20_45".
  static SizeClassScheme preset(const std::string& name);
  /// Labels "<b1", "b1-b2", ..., ">=bk".
  static SizeClassScheme from_breakpoints(std::vector<double> breakpoints);
  /// A preset name or a comma-separated breakpoint list such as "20,45".
  static SizeClassScheme parse(const std::string& text);
  std::size_t classes() const { return breakpoints.size() + 1; }
  void validate() const;
};

/// Class probabilities under Gamma(mu, sigma): F(b1), F(b2) - F(b1), ...,
/// 1 - F(bk).
std::vector<double> size_class_probs(const GammaParams& p, const SizeClassScheme& scheme);

/// Prediction pixel with its covariates and raster coverage.
struct PixelRecord {
  long id = 0;
  double x = 0.0;
  double y = 0.0;
  CovariateRecord covariates;
  std::size_t cells = 0;
  std::size_t missing = 0;
};

struct PixelCoverage {
  std::vector<PixelRecord> pixels;    // usable pixels, ascending id
  std::vector<PixelRecord> excluded;  // more than half the cells missing
};

/// Zonal covariates of every pixel of the grid.
PixelCoverage derive_pixel_covariates(const Raster& dtm, const Raster& dsm, const PixelGrid& grid);

CovariateTable pixel_table(const std::vector<PixelRecord>& pixels);

/// Area of a pixel inside a stand.
struct Membership {
  long pixel = 0;
  std::string stand;
  double area = 0.0;
};

std::vector<Membership> read_memberships(const std::filesystem::path& path);
std::string format_memberships(const std::vector<Membership>& memberships);

/// Posterior (mu, sigma) draws at new covariates: rows are locations,
/// columns are retained draws.
struct ParameterDraws {
  Eigen::MatrixXd mu;
  Eigen::MatrixXd sigma;
  std::size_t clamped = 0;
};

ParameterDraws predict_parameters(const AdditiveModel& model, const PosteriorDraws& draws,
                                  const CovariateTable& covariates);

struct ClassSummary {
  double mean = 0.0;
  double sd = 0.0;
  double mse = 0.0;  // mean squared deviation from the posterior mean
  double lo = 0.0;   // 2.5% quantile
  double hi = 0.0;   // 97.5% quantile
};

struct StandSummary {
  std::string stand;
  std::size_t pixels = 0;
  double area = 0.0;
  std::vector<ClassSummary> classes;
  Eigen::MatrixXd per_draw;  // draws x classes
  bool empty() const { return !(area > 0.0); }
};

/// Running area-weighted sums of per-draw class probabilities for one stand.
class StandAccumulator {
 public:
  StandAccumulator(std::string stand, Eigen::Index draws, Eigen::Index classes);
  /// `probs` is draws x classes for one pixel.
  void add(const Eigen::MatrixXd& probs, double area);
  StandSummary finish() const;

 private:
  std::string stand_;
  Eigen::MatrixXd weighted_;
  double area_ = 0.0;
  std::size_t pixels_ = 0;
};

/// Area-weighted stand composition per draw and its posterior summaries.
StandSummary aggregate_stand(const std::string& stand, std::span<const Eigen::MatrixXd> pixel_probs,
                             std::span<const double> areas);

/// Summary statistics of a sample (mean, sd, mse, 95% interval).
ClassSummary summarize_draws(const Eigen::VectorXd& values);

struct PredictionResult {
  std::vector<long> pixel_ids;
  Eigen::MatrixXd pixel_mean;  // pixels x classes, posterior means
  std::vector<StandSummary> stands;
  std::vector<long> dropped;   // pixels with a non-finite parameter draw
  std::vector<std::pair<std::string, double>> extrapolation;
  std::vector<std::string> warnings;
};

/// Composition sampling for every pixel followed by stand aggregation.
/// Pixels are processed in blocks so memory stays proportional to the
/// block size times the number of draws.
PredictionResult predict(const AdditiveModel& model, const PosteriorDraws& draws,
                         const std::vector<PixelRecord>& pixels,
                         const std::vector<Membership>& memberships, const SizeClassScheme& scheme);

std::string stand_summary_csv(const std::vector<StandSummary>& stands, const SizeClassScheme& scheme);
std::string pixel_mean_csv(const PredictionResult& result, const std::vector<PixelRecord>& pixels,
                           const SizeClassScheme& scheme);
/// Empirical distribution of stand MSEs per class; `mse_pp2` is in squared
/// percentage points.
std::string mse_ecdf_csv(const std::vector<StandSummary>& stands, const SizeClassScheme& scheme);

}  // namespace dbhdist

#endif  // DBHDIST_PREDICTION_HPP
