#include "dbhdist/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "dbhdist/csv.hpp"
#include "dbhdist/error.hpp"
#include "dbhdist/gamma_family.hpp"
#include "dbhdist/ingest.hpp"
#include "dbhdist/random.hpp"

namespace dbhdist {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream per purpose.
Rng stream(std::uint64_t seed, std::uint64_t purpose) { return Rng(splitmix(seed ^ splitmix(purpose))); }

double round2(double v) { return std::round(v * 100.0) / 100.0; }

// Stationary Matern 3/2 field with unit variance from random Fourier features.
class MaternField {
 public:
  MaternField(double range, int features, Rng& rng) {
    const double s = std::sqrt(3.0) / range;
    for (int k = 0; k < features; ++k) {
      const double g = rng.gamma(1.5) * 2.0 / 3.0;  // chi-square(3) / 3
      const double scale = s / std::sqrt(g);
      wx_.push_back(scale * rng.normal());
      wy_.push_back(scale * rng.normal());
      phase_.push_back(kTwoPi * rng.uniform());
    }
    norm_ = std::sqrt(2.0 / features);
  }

  double operator()(double x, double y) const {
    double s = 0.0;
    for (std::size_t k = 0; k < wx_.size(); ++k) s += std::cos(wx_[k] * x + wy_[k] * y + phase_[k]);
    return norm_ * s;
  }

 private:
  std::vector<double> wx_, wy_, phase_;
  double norm_ = 0.0;
};

double shape_value(const std::string& shape, double u) {
  if (shape == "none") return 0.0;
  if (shape == "linear") return 2.0 * u - 1.0;
  if (shape == "sin") return std::sin(kTwoPi * u);
  throw ValidationError("unknown effect shape '" + shape + "' (expected none, linear or sin)");
}

struct Truth {
  double field, eta_mu, eta_sigma, mu, sigma;
};

Truth truth_at(const Scenario& s, const MaternField& field, double x, double y, const CovariateRecord& c) {
  Truth t{};
  t.field = s.field_sd > 0.0 ? s.field_sd * field(x - s.x0, y - s.y0) : 0.0;
  const double u = (c.get(s.mu_covariate) - s.mu_lo) / (s.mu_hi - s.mu_lo);
  t.eta_mu = s.mu_intercept + s.mu_amplitude * shape_value(s.mu_shape, u) + t.field;
  const double v = (c.get(s.sigma_covariate) - s.sigma_lo) / (s.sigma_hi - s.sigma_lo);
  t.eta_sigma = s.sigma_intercept + s.sigma_slope * (2.0 * v - 1.0);
  t.mu = std::exp(t.eta_mu);
  t.sigma = std::exp(t.eta_sigma);
  return t;
}

void make_rasters(const Scenario& s, std::uint64_t seed, Raster& dtm, Raster& dsm) {
  const int ncols = static_cast<int>(std::lround(s.width / s.cellsize));
  const int nrows = static_cast<int>(std::lround(s.height / s.cellsize));
  dtm = Raster(ncols, nrows, s.x0, s.y0, s.cellsize);
  dsm = Raster(ncols, nrows, s.x0, s.y0, s.cellsize);

  Rng terrain = stream(seed, 1);
  const double p1 = kTwoPi * terrain.uniform(), p2 = kTwoPi * terrain.uniform(), p3 = kTwoPi * terrain.uniform();
  const double l1 = 2500.0, l2 = 1700.0;
  std::vector<double> sx1(ncols), sa(ncols), ca(ncols);
  for (int c = 0; c < ncols; ++c) {
    const double x = (c + 0.5) * s.cellsize;
    sx1[c] = std::sin(kTwoPi * x / l1 + p1);
    sa[c] = std::sin(kTwoPi * x / l2 + p3);
    ca[c] = std::cos(kTwoPi * x / l2 + p3);
  }

  // Canopy shape on a coarse lattice, bilinearly interpolated to cells.
  Rng canopy_rng = stream(seed, 2);
  const MaternField canopy(s.canopy_range, 200, canopy_rng);
  const double step = std::min(10.0, s.canopy_range / 10.0);
  const int gx = static_cast<int>(std::ceil(s.width / step)) + 1;
  const int gy = static_cast<int>(std::ceil(s.height / step)) + 1;
  std::vector<double> lattice(static_cast<std::size_t>(gx) * gy);
  for (int j = 0; j < gy; ++j) {
    for (int i = 0; i < gx; ++i) lattice[static_cast<std::size_t>(j) * gx + i] = std::tanh(canopy(i * step, j * step));
  }

  Rng noise = stream(seed, 3);
  for (int r = 0; r < nrows; ++r) {
    const double y = s.height - (r + 0.5) * s.cellsize;
    const double cy1 = std::cos(kTwoPi * y / l1 + p2);
    const double sb = std::sin(kTwoPi * y / l2), cb = std::cos(kTwoPi * y / l2);
    const double fy = y / step;
    const int j = std::min(static_cast<int>(fy), gy - 2);
    const double ty = fy - j;
    for (int c = 0; c < ncols; ++c) {
      const double x = (c + 0.5) * s.cellsize;
      const double z = s.base_elevation + s.relief * (0.6 * sx1[c] * cy1 + 0.4 * (sa[c] * cb + ca[c] * sb));
      const double fx = x / step;
      const int i = std::min(static_cast<int>(fx), gx - 2);
      const double tx = fx - i;
      const std::size_t k = static_cast<std::size_t>(j) * gx + i;
      const double g = (1 - ty) * ((1 - tx) * lattice[k] + tx * lattice[k + 1]) +
                       ty * ((1 - tx) * lattice[k + gx] + tx * lattice[k + gx + 1]);
      const double h = std::max(0.0, s.canopy_mean + s.canopy_amplitude * g + s.canopy_noise * noise.normal());
      const double t = round2(z);
      dtm.at(r, c) = t;
      dsm.at(r, c) = round2(t + h);
    }
  }
}

std::vector<std::pair<double, double>> plot_locations(const Scenario& s, Rng& rng) {
  const int nx = static_cast<int>(std::ceil(std::sqrt(s.plots * s.width / s.height)));
  const int ny = (s.plots + nx - 1) / nx;
  const double dx = s.width / nx, dy = s.height / ny;
  std::vector<int> order(static_cast<std::size_t>(nx) * ny);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  const double margin = s.plot_radius + s.cellsize;
  std::vector<std::pair<double, double>> out;
  for (int k = 0; k < s.plots; ++k) {
    const int cell = order[static_cast<std::size_t>(k)];
    double x = ((cell % nx) + 0.5 + 0.6 * (rng.uniform() - 0.5)) * dx;
    double y = ((cell / nx) + 0.5 + 0.6 * (rng.uniform() - 0.5)) * dy;
    x = std::clamp(x, margin, s.width - margin);
    y = std::clamp(y, margin, s.height - margin);
    // Snap to the centimetre so coordinates survive any text format.
    out.emplace_back(round2(s.x0 + x), round2(s.y0 + y));
  }
  return out;
}

std::string stand_name(int k) {
  std::string n = std::to_string(k + 1);
  return "S" + std::string(n.size() < 2 ? 2 - n.size() : 0, '0') + n;
}

std::vector<Membership> stand_memberships(const Scenario& s, const PixelGrid& grid, Rng& rng) {
  std::vector<double> sx, sy;
  for (int k = 0; k < s.stands; ++k) {
    sx.push_back(s.x0 + s.width * rng.uniform());
    sy.push_back(s.y0 + s.height * rng.uniform());
  }
  auto nearest = [&](double x, double y) {
    int best = 0;
    double bd = INFINITY;
    for (int k = 0; k < s.stands; ++k) {
      const double d = (x - sx[k]) * (x - sx[k]) + (y - sy[k]) * (y - sy[k]);
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    return best;
  };
  const int sub = std::max(1, static_cast<int>(std::lround(grid.size / 0.5)));
  const double h = grid.size / sub;
  std::vector<Membership> out;
  for (long id = 0; id < grid.count(); ++id) {
    const double w = grid.center_x(id) - 0.5 * grid.size, n = grid.center_y(id) + 0.5 * grid.size;
    const int a = nearest(w, n), b = nearest(w + grid.size, n), c = nearest(w, n - grid.size),
              d = nearest(w + grid.size, n - grid.size);
    if (a == b && a == c && a == d) {
      // Voronoi cells are convex, so the whole square lies in the cell.
      out.push_back({id, stand_name(a), grid.size * grid.size});
      continue;
    }
    std::map<int, long> counts;
    for (int r = 0; r < sub; ++r) {
      for (int q = 0; q < sub; ++q) ++counts[nearest(w + (q + 0.5) * h, n - (r + 0.5) * h)];
    }
    for (const auto& [k, cnt] : counts) out.push_back({id, stand_name(k), static_cast<double>(cnt) * h * h});
  }
  return out;
}

double mean_of(const std::vector<TruePlot>& plots, double TruePlot::*field) {
  double s = 0.0;
  for (const auto& p : plots) s += p.*field;
  return s / static_cast<double>(plots.size());
}

}  // namespace

std::vector<std::string> Scenario::config_keys() {
  return {"width", "height", "x0", "y0", "cellsize", "plots", "trees_per_plot", "plot_radius",
          "mu_intercept", "mu_shape", "mu_amplitude", "mu_covariate", "mu_lo", "mu_hi", "field_sd",
          "field_range", "field_features", "sigma_intercept", "sigma_slope", "sigma_covariate",
          "sigma_lo", "sigma_hi", "base_elevation", "relief", "canopy_mean", "canopy_amplitude",
          "canopy_range", "canopy_noise", "landscape", "stands", "pixel_size", "classes"};
}

Scenario Scenario::from_config(const Config& c) {
  Scenario s;
  s.width = c.get_double("width", s.width);
  s.height = c.get_double("height", s.height);
  s.x0 = c.get_double("x0", s.x0);
  s.y0 = c.get_double("y0", s.y0);
  s.cellsize = c.get_double("cellsize", s.cellsize);
  s.plots = static_cast<int>(c.get_int("plots", s.plots));
  s.trees_per_plot = static_cast<int>(c.get_int("trees_per_plot", s.trees_per_plot));
  s.plot_radius = c.get_double("plot_radius", s.plot_radius);
  s.mu_intercept = c.get_double("mu_intercept", s.mu_intercept);
  s.mu_shape = c.get("mu_shape", s.mu_shape);
  s.mu_amplitude = c.get_double("mu_amplitude", s.mu_amplitude);
  s.mu_covariate = c.get("mu_covariate", s.mu_covariate);
  s.mu_lo = c.get_double("mu_lo", s.mu_lo);
  s.mu_hi = c.get_double("mu_hi", s.mu_hi);
  s.field_sd = c.get_double("field_sd", s.field_sd);
  s.field_range = c.get_double("field_range", s.field_range);
  s.field_features = static_cast<int>(c.get_int("field_features", s.field_features));
  s.sigma_intercept = c.get_double("sigma_intercept", s.sigma_intercept);
  s.sigma_slope = c.get_double("sigma_slope", s.sigma_slope);
  s.sigma_covariate = c.get("sigma_covariate", s.sigma_covariate);
  s.sigma_lo = c.get_double("sigma_lo", s.sigma_lo);
  s.sigma_hi = c.get_double("sigma_hi", s.sigma_hi);
  s.base_elevation = c.get_double("base_elevation", s.base_elevation);
  s.relief = c.get_double("relief", s.relief);
  s.canopy_mean = c.get_double("canopy_mean", s.canopy_mean);
  s.canopy_amplitude = c.get_double("canopy_amplitude", s.canopy_amplitude);
  s.canopy_range = c.get_double("canopy_range", s.canopy_range);
  s.canopy_noise = c.get_double("canopy_noise", s.canopy_noise);
  s.landscape = c.get_bool("landscape", s.landscape);
  s.stands = static_cast<int>(c.get_int("stands", s.stands));
  s.pixel_size = c.get_double("pixel_size", s.pixel_size);
  if (c.has("classes")) s.scheme = SizeClassScheme::parse(c.get("classes", ""));
  s.validate();
  return s;
}

void Scenario::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string("scenario: ") + name + " must be positive");
  };
  positive(width, "width");
  positive(height, "height");
  positive(cellsize, "cellsize");
  positive(plot_radius, "plot_radius");
  positive(field_range, "field_range");
  positive(canopy_range, "canopy_range");
  positive(pixel_size, "pixel_size");
  if (plots < 1 || trees_per_plot < 1) throw ValidationError("scenario: plots and trees_per_plot must be >= 1");
  if (field_features < 1) throw ValidationError("scenario: field_features must be >= 1");
  if (field_sd < 0.0 || canopy_noise < 0.0) throw ValidationError("scenario: standard deviations must be >= 0");
  if (!(mu_hi > mu_lo) || !(sigma_hi > sigma_lo)) throw ValidationError("scenario: covariate ranges must be increasing");
  if (landscape && stands < 1) throw ValidationError("scenario: stands must be >= 1");
  if (width < 2 * (plot_radius + cellsize) || height < 2 * (plot_radius + cellsize)) {
    throw ValidationError("scenario: extent too small for one plot");
  }
  shape_value(mu_shape, 0.0);
  CovariateRecord{}.get(mu_covariate);
  CovariateRecord{}.get(sigma_covariate);
  scheme.validate();
}

std::vector<PlotObservation> SimulatedData::observations() const {
  std::vector<PlotObservation> out;
  for (const auto& p : plots) out.push_back(p.plot);
  return out;
}

double SimulatedData::identifiable_mu_intercept() const { return mean_of(plots, &TruePlot::eta_mu); }
double SimulatedData::identifiable_sigma_intercept() const { return mean_of(plots, &TruePlot::eta_sigma); }

SimulatedData simulate(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  SimulatedData out;
  out.scenario = scenario;
  out.seed = seed;
  make_rasters(scenario, seed, out.dtm, out.dsm);

  Rng field_rng = stream(seed, 4);
  const MaternField field(scenario.field_range, scenario.field_features, field_rng);

  Rng place = stream(seed, 5);
  Rng trees = stream(seed, 6);
  const auto locations = plot_locations(scenario, place);
  for (std::size_t i = 0; i < locations.size(); ++i) {
    TruePlot tp;
    std::string n = std::to_string(i + 1);
    tp.plot.id = "P" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
    tp.plot.x = locations[i].first;
    tp.plot.y = locations[i].second;
    const ZoneSummary z = zonal_summary(out.dtm, out.dsm, cells_in_disc(out.dtm, tp.plot.x, tp.plot.y, scenario.plot_radius));
    tp.plot.covariates = z.covariates;
    const Truth t = truth_at(scenario, field, tp.plot.x, tp.plot.y, z.covariates);
    tp.field = t.field;
    tp.eta_mu = t.eta_mu;
    tp.eta_sigma = t.eta_sigma;
    tp.mu = t.mu;
    tp.sigma = t.sigma;
    tp.plot.dbh = sample(GammaParams(t.mu, t.sigma), trees, static_cast<std::size_t>(scenario.trees_per_plot));
    out.plots.push_back(std::move(tp));
  }

  if (!scenario.landscape) return out;
  const PixelGrid grid = PixelGrid::covering(out.dtm, scenario.pixel_size);
  const PixelCoverage cover = derive_pixel_covariates(out.dtm, out.dsm, grid);
  std::map<long, std::size_t> pixel_index;
  for (const auto& px : cover.pixels) {
    const Truth t = truth_at(scenario, field, px.x, px.y, px.covariates);
    pixel_index[px.id] = out.pixels.size();
    out.pixels.push_back({px, t.field, t.eta_mu, t.eta_sigma, t.mu, t.sigma});
  }
  Rng stand_rng = stream(seed, 7);
  out.memberships = stand_memberships(scenario, grid, stand_rng);

  std::map<std::string, TrueStand> stands;
  const std::size_t k = scenario.scheme.classes();
  for (const auto& mb : out.memberships) {
    auto& st = stands[mb.stand];
    st.stand = mb.stand;
    if (st.proportions.empty()) st.proportions.assign(k, 0.0);
    const auto it = pixel_index.find(mb.pixel);
    if (it == pixel_index.end()) continue;
    const TruePixel& px = out.pixels[it->second];
    const auto p = size_class_probs(GammaParams(px.mu, px.sigma), scenario.scheme);
    for (std::size_t c = 0; c < k; ++c) st.proportions[c] += mb.area * p[c];
    st.area += mb.area;
  }
  for (auto& [id, st] : stands) {
    for (double& v : st.proportions) v = st.area > 0.0 ? v / st.area : NAN;
    out.stands.push_back(st);
  }
  return out;
}

std::string truth_plots_csv(const SimulatedData& d) {
  std::ostringstream os;
  CsvWriter w(os);
  std::vector<std::string> header{"plot_id", "x", "y"};
  header.insert(header.end(), kCovariateNames.begin(), kCovariateNames.end());
  for (const char* h : {"field", "eta_mu", "eta_sigma", "mu", "sigma", "n_trees"}) header.emplace_back(h);
  w.row(header);
  for (const auto& p : d.plots) {
    std::vector<std::string> row{p.plot.id, format_double(p.plot.x), format_double(p.plot.y)};
    for (const auto& name : kCovariateNames) row.push_back(format_double(p.plot.covariates.get(name)));
    for (double v : {p.field, p.eta_mu, p.eta_sigma, p.mu, p.sigma}) row.push_back(format_double(v));
    row.push_back(std::to_string(p.plot.dbh.size()));
    w.row(row);
  }
  return os.str();
}

std::string truth_pixels_csv(const SimulatedData& d) {
  std::ostringstream os;
  CsvWriter w(os);
  std::vector<std::string> header{"pixel_id", "x", "y"};
  header.insert(header.end(), kCovariateNames.begin(), kCovariateNames.end());
  for (const char* h : {"field", "eta_mu", "eta_sigma", "mu", "sigma"}) header.emplace_back(h);
  w.row(header);
  for (const auto& p : d.pixels) {
    std::vector<std::string> row{std::to_string(p.pixel.id), format_double(p.pixel.x), format_double(p.pixel.y)};
    for (const auto& name : kCovariateNames) row.push_back(format_double(p.pixel.covariates.get(name)));
    for (double v : {p.field, p.eta_mu, p.eta_sigma, p.mu, p.sigma}) row.push_back(format_double(v));
    w.row(row);
  }
  return os.str();
}

std::string truth_stands_csv(const SimulatedData& d) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"stand_id", "class_label", "proportion", "area_m2"});
  for (const auto& st : d.stands) {
    for (std::size_t c = 0; c < st.proportions.size(); ++c) {
      w.row({st.stand, d.scenario.scheme.labels[c], format_double(st.proportions[c]), format_double(st.area)});
    }
  }
  return os.str();
}

std::string truth_summary(const SimulatedData& d) {
  std::ostringstream os;
  os << "seed = " << d.seed << "\n";
  os << "plots = " << d.plots.size() << "\n";
  os << "pixels = " << d.pixels.size() << "\n";
  os << "stands = " << d.stands.size() << "\n";
  os << "mu_intercept_identifiable = " << format_double(d.identifiable_mu_intercept()) << "\n";
  os << "sigma_intercept_identifiable = " << format_double(d.identifiable_sigma_intercept()) << "\n";
  return os.str();
}

std::vector<std::filesystem::path> write_simulation(const SimulatedData& d, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, std::string_view content) {
    write_file(dir / name, content);
    written.push_back(dir / name);
  };
  put("trees.csv", tree_table_csv(d.observations()));
  {
    std::ostringstream os;
    CsvWriter w(os);
    w.row({"plot_id", "x", "y"});
    for (const auto& p : d.plots) w.row({p.plot.id, format_double(p.plot.x), format_double(p.plot.y)});
    put("plots.csv", os.str());
  }
  put("dtm.asc", format_ascii_grid(d.dtm));
  put("dsm.asc", format_ascii_grid(d.dsm));
  put("truth_plots.csv", truth_plots_csv(d));
  put("truth_summary.txt", truth_summary(d));
  if (d.scenario.landscape) {
    put("stands.csv", format_memberships(d.memberships));
    put("truth_pixels.csv", truth_pixels_csv(d));
    put("truth_stands.csv", truth_stands_csv(d));
  }
  return written;
}

std::vector<TrueStand> read_truth_stands(const std::filesystem::path& path, const SizeClassScheme& scheme) {
  const CsvTable t = CsvTable::read(path);
  const std::size_t is = t.column("stand_id"), ic = t.column("class_label"), ip = t.column("proportion");
  std::vector<TrueStand> out;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < t.rows().size(); ++r) {
    const auto& row = t.rows()[r];
    const auto lab = std::find(scheme.labels.begin(), scheme.labels.end(), row[ic]);
    if (lab == scheme.labels.end()) throw ValidationError(t.where(r) + ": unknown class label '" + row[ic] + "'");
    auto [it, fresh] = index.try_emplace(row[is], out.size());
    if (fresh) out.push_back({row[is], 0.0, std::vector<double>(scheme.classes(), NAN)});
    out[it->second].proportions[static_cast<std::size_t>(lab - scheme.labels.begin())] =
        parse_double(row[ip], t.where(r) + " column proportion");
  }
  return out;
}

}  // namespace dbhdist
