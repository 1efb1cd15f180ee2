#include "dbhdist/ingest.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "dbhdist/error.hpp"

namespace dbhdist {

std::string IngestReport::text() const {
  std::ostringstream os;
  os << "plots_read " << plots_read << "\n";
  os << "trees_read " << trees_read << "\n";
  os << "trees_dropped_below_threshold " << trees_dropped << "\n";
  os << "trees_unmatched " << trees_unmatched << "\n";
  os << "trees_retained " << trees_retained << "\n";
  os << "mean_dbh_retained " << format_double(mean_dbh) << "\n";
  os << "plots_empty " << empty_plots.size() << "\n";
  os << "plots_uncovered " << uncovered_plots.size() << "\n";
  for (const auto& w : warnings) os << "warning " << w << "\n";
  return os.str();
}

IngestResult ingest(const CsvTable& trees, const CsvTable& plots, const Raster* dtm,
                    const Raster* dsm, const IngestOptions& options) {
  if (!(options.dbh_threshold >= 0.0)) throw ValidationError("DBH threshold must be non-negative");
  if (!options.covariates_from_table && (dtm == nullptr || dsm == nullptr)) {
    throw ValidationError("rasters are required unless covariates come from the plot table");
  }
  if (dtm && dsm && !dtm->aligned_with(*dsm)) throw ValidationError("DTM and DSM grids are not aligned");

  IngestResult out;
  IngestReport& rep = out.report;

  const std::size_t pid = plots.column("plot_id"), px = plots.column("x"), py = plots.column("y");
  std::vector<std::size_t> cov_cols;
  if (options.covariates_from_table) {
    for (const auto& name : kCovariateNames) cov_cols.push_back(plots.column(name));
  }
  std::vector<PlotObservation> all;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < plots.rows().size(); ++r) {
    const auto& row = plots.rows()[r];
    PlotObservation p;
    p.id = row[pid];
    if (p.id.empty()) throw ValidationError(plots.where(r) + ": empty plot_id");
    p.x = parse_double(row[px], plots.where(r) + " column x");
    p.y = parse_double(row[py], plots.where(r) + " column y");
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ValidationError(plots.where(r) + ": non-finite coordinates for plot '" + p.id + "'");
    }
    for (std::size_t k = 0; k < cov_cols.size(); ++k) {
      const double v = parse_double(row[cov_cols[k]], plots.where(r) + " column " + kCovariateNames[k]);
      if (!std::isfinite(v)) {
        throw ValidationError(plots.where(r) + ": non-finite " + kCovariateNames[k] + " for plot '" + p.id + "'");
      }
      p.covariates.set(kCovariateNames[k], v);
    }
    if (!index.emplace(p.id, all.size()).second) {
      throw ValidationError(plots.where(r) + ": duplicate plot_id '" + p.id + "'");
    }
    all.push_back(std::move(p));
  }
  rep.plots_read = all.size();

  const std::size_t tid = trees.column("plot_id"), tdbh = trees.column("dbh_cm");
  std::unordered_map<std::string, std::size_t> unmatched;
  for (std::size_t r = 0; r < trees.rows().size(); ++r) {
    const auto& row = trees.rows()[r];
    const double d = parse_double(row[tdbh], trees.where(r) + " column dbh_cm");
    if (std::isnan(d) || !std::isfinite(d)) throw ValidationError(trees.where(r) + ": DBH is not a finite number");
    if (d < 0.0) throw ValidationError(trees.where(r) + ": negative DBH " + row[tdbh]);
    ++rep.trees_read;
    const auto it = index.find(row[tid]);
    if (it == index.end()) {
      ++rep.trees_unmatched;
      ++unmatched[row[tid]];
      continue;
    }
    if (d < options.dbh_threshold || d <= 0.0) {
      ++rep.trees_dropped;
      continue;
    }
    all[it->second].dbh.push_back(d);
  }
  if (!unmatched.empty()) {
    rep.warnings.push_back(std::to_string(rep.trees_unmatched) + " trees reference " +
                           std::to_string(unmatched.size()) + " unknown plot ids");
  }
  if (rep.trees_dropped > 0) {
    rep.warnings.push_back(std::to_string(rep.trees_dropped) + " trees below the " +
                           format_double(options.dbh_threshold) + " cm threshold dropped");
  }

  double sum = 0.0;
  for (auto& p : all) {
    if (p.dbh.empty()) {
      rep.empty_plots.push_back(p.id);
      rep.warnings.push_back("plot '" + p.id + "' has no retained trees and is excluded");
      continue;
    }
    if (!options.covariates_from_table) {
      const auto cells = cells_in_disc(*dtm, p.x, p.y, options.plot_radius);
      const ZoneSummary z = zonal_summary(*dtm, *dsm, cells);
      const double expected = std::numbers::pi * options.plot_radius * options.plot_radius /
                              (dtm->cellsize * dtm->cellsize);
      const double valid = static_cast<double>(z.cells - z.missing);
      if (valid < (1.0 - options.max_missing) * expected || z.cells == z.missing) {
        rep.uncovered_plots.push_back(p.id);
        rep.warnings.push_back("plot '" + p.id + "' has insufficient raster coverage (" +
                               format_fixed(100.0 * valid / expected, 1) + "% of cells) and is excluded");
        continue;
      }
      p.covariates = z.covariates;
    }
    for (double d : p.dbh) sum += d;
    rep.trees_retained += p.dbh.size();
    out.plots.push_back(std::move(p));
  }
  rep.mean_dbh = rep.trees_retained ? sum / static_cast<double>(rep.trees_retained) : NAN;
  if (out.plots.empty()) throw ValidationError("no plot has both retained trees and raster coverage");
  return out;
}

IngestResult ingest_files(const std::filesystem::path& trees, const std::filesystem::path& plots,
                          const std::filesystem::path& dtm, const std::filesystem::path& dsm,
                          const IngestOptions& options) {
  const CsvTable t = CsvTable::read(trees);
  const CsvTable p = CsvTable::read(plots);
  if (options.covariates_from_table) return ingest(t, p, nullptr, nullptr, options);
  const Raster a = read_ascii_grid(dtm);
  const Raster b = read_ascii_grid(dsm);
  return ingest(t, p, &a, &b, options);
}

std::string plot_table_csv(const std::vector<PlotObservation>& plots) {
  std::ostringstream os;
  CsvWriter w(os);
  std::vector<std::string> header{"plot_id", "x", "y"};
  header.insert(header.end(), kCovariateNames.begin(), kCovariateNames.end());
  header.push_back("n_trees");
  w.row(header);
  for (const auto& p : plots) {
    std::vector<std::string> row{p.id, format_double(p.x), format_double(p.y)};
    for (const auto& name : kCovariateNames) row.push_back(format_double(p.covariates.get(name)));
    row.push_back(std::to_string(p.dbh.size()));
    w.row(row);
  }
  return os.str();
}

std::string tree_table_csv(const std::vector<PlotObservation>& plots) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"plot_id", "dbh_cm"});
  for (const auto& p : plots) {
    for (double d : p.dbh) w.row({p.id, format_double(d)});
  }
  return os.str();
}

}  // namespace dbhdist
