#include "dbhdist/raster.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include "dbhdist/csv.hpp"
#include "dbhdist/error.hpp"

namespace dbhdist {

Raster::Raster(int cols, int rows, double xll, double yll, double cell, double fill)
    : ncols(cols), nrows(rows), xllcorner(xll), yllcorner(yll), cellsize(cell),
      values(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows), fill) {
  if (cols <= 0 || rows <= 0 || !(cell > 0.0)) throw ValidationError("raster: bad dimensions");
}

bool Raster::aligned_with(const Raster& o) const {
  auto close = [&](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); };
  return ncols == o.ncols && nrows == o.nrows && close(xllcorner, o.xllcorner) &&
         close(yllcorner, o.yllcorner) && close(cellsize, o.cellsize);
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

}  // namespace

Raster parse_ascii_grid(std::string_view text, const std::string& source) {
  std::size_t pos = 0;
  int line = 1;
  auto next_line = [&]() -> std::string_view {
    const std::size_t end = text.find('\n', pos);
    std::string_view l = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    return l;
  };
  auto where = [&](int l) { return source + " line " + std::to_string(l); };

  double ncols = -1, nrows = -1, cellsize = -1, nodata = -9999.0;
  double xll = NAN, yll = NAN;
  bool x_center = false, y_center = false;
  while (pos < text.size()) {
    const std::size_t save = pos;
    std::string_view l = next_line();
    std::size_t i = 0;
    while (i < l.size() && is_space(l[i])) ++i;
    if (i == l.size() || !(std::isalpha(static_cast<unsigned char>(l[i])))) {
      pos = save;
      break;
    }
    std::size_t j = i;
    while (j < l.size() && !is_space(l[j])) ++j;
    const std::string key = lower(l.substr(i, j - i));
    const double v = parse_double(l.substr(j), where(line) + " (" + key + ")");
    if (key == "ncols") ncols = v;
    else if (key == "nrows") nrows = v;
    else if (key == "xllcorner") xll = v;
    else if (key == "yllcorner") yll = v;
    else if (key == "xllcenter") { xll = v; x_center = true; }
    else if (key == "yllcenter") { yll = v; y_center = true; }
    else if (key == "cellsize") cellsize = v;
    else if (key == "nodata_value") nodata = v;
    else throw ValidationError(where(line) + ": unknown raster header key '" + key + "'");
    ++line;
  }
  if (!(ncols >= 1) || !(nrows >= 1) || ncols != std::floor(ncols) || nrows != std::floor(nrows)) {
    throw ValidationError(source + ": raster header needs positive integer ncols and nrows");
  }
  if (!(cellsize > 0.0) || !std::isfinite(cellsize)) {
    throw ValidationError(source + ": raster header needs a positive cellsize");
  }
  if (!std::isfinite(xll) || !std::isfinite(yll)) {
    throw ValidationError(source + ": raster header needs finite xllcorner and yllcorner");
  }
  if (x_center) xll -= 0.5 * cellsize;
  if (y_center) yll -= 0.5 * cellsize;

  Raster r(static_cast<int>(ncols), static_cast<int>(nrows), xll, yll, cellsize, 0.0);
  r.nodata = nodata;
  const char* p = text.data() + pos;
  const char* end = text.data() + text.size();
  for (int row = 0; row < r.nrows; ++row) {
    for (int col = 0; col < r.ncols; ++col) {
      while (p < end && is_space(*p)) {
        if (*p == '\n') ++line;
        ++p;
      }
      auto cell = [&] { return "row " + std::to_string(row + 1) + ", column " + std::to_string(col + 1); };
      if (p == end) throw ValidationError(source + ": raster ends early at " + cell());
      const char* q = p;
      while (q < end && !is_space(*q)) ++q;
      double v = 0.0;
      auto res = std::from_chars(p, q, v);
      if (res.ec != std::errc() || res.ptr != q) {
        throw ValidationError(where(line) + ": bad raster value '" + std::string(p, q) + "' at " + cell());
      }
      r.at(row, col) = v == nodata ? NAN : v;
      p = q;
    }
  }
  while (p < end && is_space(*p)) ++p;
  if (p != end) throw ValidationError(source + ": raster has more values than ncols x nrows");
  return r;
}

Raster read_ascii_grid(const std::filesystem::path& path) {
  return parse_ascii_grid(read_file(path), path.string());
}

std::string format_ascii_grid(const Raster& r) {
  std::string out;
  out.reserve(r.values.size() * 8 + 200);
  out += "ncols " + std::to_string(r.ncols) + "\n";
  out += "nrows " + std::to_string(r.nrows) + "\n";
  out += "xllcorner " + format_double(r.xllcorner) + "\n";
  out += "yllcorner " + format_double(r.yllcorner) + "\n";
  out += "cellsize " + format_double(r.cellsize) + "\n";
  out += "NODATA_value " + format_double(r.nodata) + "\n";
  char buf[64];
  for (int row = 0; row < r.nrows; ++row) {
    for (int col = 0; col < r.ncols; ++col) {
      double v = r.at(row, col);
      if (std::isnan(v)) v = r.nodata;
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      if (col) out += ' ';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

void write_ascii_grid(const std::filesystem::path& path, const Raster& r) {
  write_file(path, format_ascii_grid(r));
}

std::vector<CellIndex> cells_in_box(const Raster& r, double x0, double y0, double x1, double y1) {
  // Centre of column c is xll + (c + 0.5) h; keep x0 <= centre < x1.
  const double h = r.cellsize;
  const int c0 = std::max(0, static_cast<int>(std::ceil((x0 - r.xllcorner) / h - 0.5)));
  const int c1 = std::min(r.ncols, static_cast<int>(std::ceil((x1 - r.xllcorner) / h - 0.5)));
  // Centre of row k is ymax - (k + 0.5) h; keep y0 <= centre < y1.
  const double ymax = r.y_max();
  const int r0 = std::max(0, static_cast<int>(std::floor((ymax - y1) / h - 0.5)) + 1);
  const int r1 = std::min(r.nrows, static_cast<int>(std::floor((ymax - y0) / h - 0.5)) + 1);
  std::vector<CellIndex> out;
  for (int row = r0; row < r1; ++row) {
    const double yc = r.y_center(row);
    if (!(yc >= y0 && yc < y1)) continue;
    for (int col = c0; col < c1; ++col) {
      const double xc = r.x_center(col);
      if (xc >= x0 && xc < x1) out.emplace_back(row, col);
    }
  }
  return out;
}

std::vector<CellIndex> cells_in_disc(const Raster& r, double x, double y, double radius) {
  std::vector<CellIndex> out;
  for (const auto& [row, col] : cells_in_box(r, x - radius, y - radius, x + radius + r.cellsize,
                                             y + radius + r.cellsize)) {
    const double dx = r.x_center(col) - x, dy = r.y_center(row) - y;
    if (dx * dx + dy * dy <= radius * radius) out.emplace_back(row, col);
  }
  return out;
}

double sorted_percentile(const std::vector<double>& s, double p) {
  if (s.empty()) return NAN;
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= s.size()) return s.back();
  return s[lo] + (h - static_cast<double>(lo)) * (s[lo + 1] - s[lo]);
}

namespace {

// Central difference along one axis, one-sided at edges or next to gaps.
bool derivative(double left, double centre, double right, double h, double& out) {
  const bool l = !std::isnan(left), r = !std::isnan(right);
  if (l && r) out = (right - left) / (2.0 * h);
  else if (r) out = (right - centre) / h;
  else if (l) out = (centre - left) / h;
  else return false;
  return true;
}

}  // namespace

ZoneSummary zonal_summary(const Raster& dtm, const Raster& dsm, const std::vector<CellIndex>& cells) {
  if (!dtm.aligned_with(dsm)) throw ValidationError("DTM and DSM grids are not aligned");
  ZoneSummary z;
  z.cells = cells.size();
  std::vector<double> heights;
  heights.reserve(cells.size());
  double elevation = 0.0, gx_sum = 0.0, gy_sum = 0.0;
  std::size_t gradients = 0;
  const double h = dtm.cellsize;
  auto value = [&](int row, int col) -> double {
    if (row < 0 || col < 0 || row >= dtm.nrows || col >= dtm.ncols) return NAN;
    return dtm.at(row, col);
  };
  for (const auto& [row, col] : cells) {
    const double t = dtm.at(row, col), s = dsm.at(row, col);
    if (std::isnan(t) || std::isnan(s)) {
      ++z.missing;
      continue;
    }
    heights.push_back(std::max(s - t, 0.0));
    elevation += t;
    double gx = 0.0, gy = 0.0;
    // Row index grows southwards, so north is row - 1.
    if (derivative(value(row, col - 1), t, value(row, col + 1), h, gx) &&
        derivative(value(row + 1, col), t, value(row - 1, col), h, gy)) {
      gx_sum += gx;
      gy_sum += gy;
      ++gradients;
    }
  }
  auto& c = z.covariates;
  const std::size_t n = heights.size();
  if (n == 0) {
    c.mvh = c.sdvh = c.p2_5 = c.p97_5 = c.esl = c.slo = c.asp = NAN;
    return z;
  }
  double mean = 0.0;
  for (double v : heights) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : heights) ss += (v - mean) * (v - mean);
  std::sort(heights.begin(), heights.end());
  c.mvh = mean;
  c.sdvh = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  c.p2_5 = sorted_percentile(heights, 0.025);
  c.p97_5 = sorted_percentile(heights, 0.975);
  c.esl = elevation / static_cast<double>(n);
  c.slo = 0.0;
  c.asp = 0.0;
  if (gradients > 0) {
    const double gx = gx_sum / static_cast<double>(gradients);
    const double gy = gy_sum / static_cast<double>(gradients);
    const double norm = std::hypot(gx, gy);
    c.slo = std::atan(norm) * 180.0 / M_PI;
    if (norm > 1e-12) {
      double a = std::atan2(-gx, -gy) * 180.0 / M_PI;
      if (a < 0.0) a += 360.0;
      if (a >= 360.0) a -= 360.0;
      c.asp = a;
    }
  }
  return z;
}

PixelGrid PixelGrid::covering(const Raster& r, double pixel_size) {
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size)) {
    throw ValidationError("pixel size must be positive");
  }
  PixelGrid g;
  g.west = r.xllcorner;
  g.north = r.y_max();
  g.size = pixel_size;
  g.ncols = static_cast<int>(std::floor(r.ncols * r.cellsize / pixel_size + 1e-9));
  g.nrows = static_cast<int>(std::floor(r.nrows * r.cellsize / pixel_size + 1e-9));
  if (g.ncols == 0 || g.nrows == 0) throw ValidationError("raster is smaller than one prediction pixel");
  return g;
}

long PixelGrid::locate(double x, double y) const {
  const double c = std::floor((x - west) / size), r = std::floor((north - y) / size);
  if (c < 0 || r < 0 || c >= ncols || r >= nrows) return -1;
  return static_cast<long>(r) * ncols + static_cast<long>(c);
}

}  // namespace dbhdist
