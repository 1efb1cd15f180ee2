#ifndef DBHDIST_SIMULATE_HPP
#define DBHDIST_SIMULATE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dbhdist/config.hpp"
#include "dbhdist/data.hpp"
#include "dbhdist/prediction.hpp"
#include "dbhdist/raster.hpp"

namespace dbhdist {

/// Synthetic landscape and the true distributional regression behind it.
///
/// eta_mu = mu_intercept + mu_amplitude * shape(u) + field(x, y), where
/// u = (v - lo) / (hi - lo) for the covariate v and shape is "none", "linear"
/// (2u - 1) or "sin" (sin 2 pi u); the field is a Matern 3/2 Gaussian field
/// drawn by random Fourier features. eta_sigma = sigma_intercept +
/// sigma_slope * (2u - 1) on its own covariate.
struct Scenario {
  double width = 3000.0;
  double height = 3000.0;
  double x0 = 0.0;
  double y0 = 0.0;
  double cellsize = 0.5;

  int plots = 200;
  int trees_per_plot = 120;
  double plot_radius = 20.0;

  double mu_intercept = 2.3;
  std::string mu_shape = "sin";
  double mu_amplitude = 0.4;
  std::string mu_covariate = "MVH";
  double mu_lo = 0.0;
  double mu_hi = 35.0;
  double field_sd = 0.15;
  double field_range = 1000.0;
  int field_features = 500;

  double sigma_intercept = -0.2;
  double sigma_slope = 0.15;
  std::string sigma_covariate = "MVH";
  double sigma_lo = 0.0;
  double sigma_hi = 35.0;

  double base_elevation = 800.0;
  double relief = 150.0;
  double canopy_mean = 17.5;
  double canopy_amplitude = 12.5;
  double canopy_range = 250.0;
  double canopy_noise = 2.0;

  // Pixels, stands and their truth are produced only when requested.
  bool landscape = true;
  int stands = 40;
  double pixel_size = 35.5;
  SizeClassScheme scheme = SizeClassScheme::preset("narrative_25_50");

  static Scenario from_config(const Config& config);
  static std::vector<std::string> config_keys();
  void validate() const;
};

struct TruePlot {
  PlotObservation plot;
  double field = 0.0;
  double eta_mu = 0.0;
  double eta_sigma = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
};

struct TruePixel {
  PixelRecord pixel;
  double field = 0.0;
  double eta_mu = 0.0;
  double eta_sigma = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
};

struct TrueStand {
  std::string stand;
  double area = 0.0;
  std::vector<double> proportions;
};

struct SimulatedData {
  Scenario scenario;
  std::uint64_t seed = 0;
  Raster dtm;
  Raster dsm;
  std::vector<TruePlot> plots;
  std::vector<TruePixel> pixels;
  std::vector<Membership> memberships;
  std::vector<TrueStand> stands;

  std::vector<PlotObservation> observations() const;
  /// Mean true eta_mu over plots: the intercept of a model whose terms are
  /// centred over the training plots.
  double identifiable_mu_intercept() const;
  double identifiable_sigma_intercept() const;
};

/// Deterministic for a given scenario and seed.
SimulatedData simulate(const Scenario& scenario, std::uint64_t seed);

/// Writes trees.csv, plots.csv, dtm.asc, dsm.asc, stands.csv (memberships)
/// and the truth_* files. Returns the written paths.
std::vector<std::filesystem::path> write_simulation(const SimulatedData& data,
                                                    const std::filesystem::path& dir);

std::string truth_plots_csv(const SimulatedData& data);
std::string truth_pixels_csv(const SimulatedData& data);
std::string truth_stands_csv(const SimulatedData& data);
std::string truth_summary(const SimulatedData& data);

/// Reads stand_id,class_label,proportion rows.
std::vector<TrueStand> read_truth_stands(const std::filesystem::path& path,
                                         const SizeClassScheme& scheme);

}  // namespace dbhdist

#endif  // DBHDIST_SIMULATE_HPP
