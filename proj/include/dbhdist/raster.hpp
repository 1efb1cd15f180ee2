#ifndef DBHDIST_RASTER_HPP
#define DBHDIST_RASTER_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dbhdist/data.hpp"

namespace dbhdist {

/// Regular grid, rows stored north to south. Missing cells hold NaN.
struct Raster {
  int ncols = 0;
  int nrows = 0;
  double xllcorner = 0.0;
  double yllcorner = 0.0;
  double cellsize = 1.0;
  double nodata = -9999.0;  // written in place of NaN
  std::vector<double> values;

  Raster() = default;
  Raster(int cols, int rows, double xll, double yll, double cell, double fill = 0.0);

  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * ncols + col]; }
  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * ncols + col]; }
  double x_center(int col) const { return xllcorner + (col + 0.5) * cellsize; }
  double y_center(int row) const { return yllcorner + (nrows - row - 0.5) * cellsize; }
  double x_max() const { return xllcorner + ncols * cellsize; }
  double y_max() const { return yllcorner + nrows * cellsize; }
  /// Same geometry (origin, size, cell size).
  bool aligned_with(const Raster& other) const;
};

/// ESRI ASCII grid. Header keys are case-insensitive; xllcenter/yllcenter
/// are accepted. Throws ValidationError naming the offending line or cell.
Raster parse_ascii_grid(std::string_view text, const std::string& source);
Raster read_ascii_grid(const std::filesystem::path& path);
/// Values are written with shortest round-trip precision.
std::string format_ascii_grid(const Raster& r);
void write_ascii_grid(const std::filesystem::path& path, const Raster& r);

using CellIndex = std::pair<int, int>;  // row, col

/// Cells whose centres lie inside the disc.
std::vector<CellIndex> cells_in_disc(const Raster& r, double x, double y, double radius);
/// Cells whose centres lie in [x0, x1) x [y0, y1).
std::vector<CellIndex> cells_in_box(const Raster& r, double x0, double y0, double x1, double y1);

struct ZoneSummary {
  CovariateRecord covariates;
  std::size_t cells = 0;    // cells in the zone
  std::size_t missing = 0;  // cells without both DTM and DSM values
  double missing_fraction() const { return cells ? static_cast<double>(missing) / cells : 1.0; }
};

/// Canopy and terrain statistics of one zone. DVHM = max(DSM - DTM, 0);
/// percentiles interpolate linearly between order statistics; slope and
/// aspect come from per-cell central-difference gradients of the DTM,
/// averaged as vectors. Aspect is the downslope bearing, clockwise from
/// north, 0 on flat ground. Covariates are NaN when every cell is missing.
ZoneSummary zonal_summary(const Raster& dtm, const Raster& dsm, const std::vector<CellIndex>& cells);

/// Linear-interpolation percentile (p in [0, 1]) of sorted values.
double sorted_percentile(const std::vector<double>& sorted, double p);

/// Square prediction pixels tiling the raster extent from its north-west
/// corner; partial pixels at the east and south edges are dropped. Ids are
/// row-major from the north.
struct PixelGrid {
  double west = 0.0;
  double north = 0.0;
  double size = 35.5;
  int ncols = 0;
  int nrows = 0;

  static PixelGrid covering(const Raster& r, double pixel_size);
  long count() const { return static_cast<long>(ncols) * nrows; }
  double center_x(long id) const { return west + (id % ncols + 0.5) * size; }
  double center_y(long id) const { return north - (id / ncols + 0.5) * size; }
  /// Pixel containing a point, or -1 outside the grid.
  long locate(double x, double y) const;
};

}  // namespace dbhdist

#endif  // DBHDIST_RASTER_HPP
