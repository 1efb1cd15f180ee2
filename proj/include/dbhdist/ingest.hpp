#ifndef DBHDIST_INGEST_HPP
#define DBHDIST_INGEST_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "dbhdist/csv.hpp"
#include "dbhdist/data.hpp"
#include "dbhdist/raster.hpp"

namespace dbhdist {

inline constexpr double kDefaultDbhThreshold = 5.0;
inline constexpr double kPlotRadius = 20.0;

struct IngestOptions {
  double dbh_threshold = kDefaultDbhThreshold;
  double plot_radius = kPlotRadius;
  double max_missing = 0.5;
  // Take covariates from the plot CSV instead of the rasters.
  bool covariates_from_table = false;
};

struct IngestReport {
  std::size_t trees_read = 0;
  std::size_t trees_dropped = 0;  // below the DBH threshold
  std::size_t trees_unmatched = 0;
  std::size_t plots_read = 0;
  std::vector<std::string> empty_plots;
  std::vector<std::string> uncovered_plots;
  double mean_dbh = 0.0;  // retained trees
  std::size_t trees_retained = 0;
  std::vector<std::string> warnings;

  std::string text() const;
};

struct IngestResult {
  std::vector<PlotObservation> plots;  // in plot CSV order
  IngestReport report;
};

/// Joins trees (`plot_id,dbh_cm`) to plots (`plot_id,x,y`) and derives each
/// plot's covariates over its disc. Rasters may be null only when
/// `covariates_from_table` is set, in which case the plot table must carry
/// every covariate column.
IngestResult ingest(const CsvTable& trees, const CsvTable& plots, const Raster* dtm,
                    const Raster* dsm, const IngestOptions& options = {});

IngestResult ingest_files(const std::filesystem::path& trees, const std::filesystem::path& plots,
                          const std::filesystem::path& dtm, const std::filesystem::path& dsm,
                          const IngestOptions& options = {});

/// `plot_id,x,y,<covariates>,n_trees` at full precision.
std::string plot_table_csv(const std::vector<PlotObservation>& plots);
/// `plot_id,dbh_cm` at full precision.
std::string tree_table_csv(const std::vector<PlotObservation>& plots);

}  // namespace dbhdist

#endif  // DBHDIST_INGEST_HPP
