#include "dbhdist/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "dbhdist/csv.hpp"
#include "dbhdist/error.hpp"

namespace dbhdist {

SizeClassScheme SizeClassScheme::preset(const std::string& name) {
  if (name == "narrative_25_50") return from_breakpoints({25.0, 50.0});
  if (name == "formula_20_45") return from_breakpoints({20.0, 45.0});
  throw ValidationError("unknown size-class preset '" + name +
                        "' (expected narrative_25_50 or formula_20_45)");
}

SizeClassScheme SizeClassScheme::from_breakpoints(std::vector<double> breakpoints) {
  SizeClassScheme s;
  s.breakpoints = std::move(breakpoints);
  s.validate();
  const auto& b = s.breakpoints;
  s.labels.push_back("<" + format_double(b.front()));
  for (std::size_t i = 1; i < b.size(); ++i) {
    s.labels.push_back(format_double(b[i - 1]) + "-" + format_double(b[i]));
  }
  s.labels.push_back(">=" + format_double(b.back()));
  return s;
}

SizeClassScheme SizeClassScheme::parse(const std::string& text) {
  if (text.find_first_of("0123456789") != 0) return preset(text);
  std::vector<double> b;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    b.push_back(parse_double(std::string_view(text).substr(pos, comma - pos), "size-class breakpoints"));
    pos = comma + 1;
  }
  return from_breakpoints(std::move(b));
}

void SizeClassScheme::validate() const {
  if (breakpoints.empty()) throw ValidationError("size classes need at least one breakpoint");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > 0.0) || !std::isfinite(breakpoints[i])) {
      throw ValidationError("size-class breakpoints must be positive and finite");
    }
    if (i > 0 && !(breakpoints[i] > breakpoints[i - 1])) {
      throw ValidationError("size-class breakpoints must be strictly ascending");
    }
  }
  if (!labels.empty() && labels.size() != classes()) {
    throw ValidationError("size-class labels do not match the breakpoints");
  }
}

std::vector<double> size_class_probs(const GammaParams& p, const SizeClassScheme& scheme) {
  const auto& b = scheme.breakpoints;
  std::vector<double> out(b.size() + 1);
  double prev = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double f = cdf(b[i], p);
    out[i] = f - prev;
    prev = f;
  }
  out.back() = 1.0 - prev;
  return out;
}

PixelCoverage derive_pixel_covariates(const Raster& dtm, const Raster& dsm, const PixelGrid& grid) {
  PixelCoverage out;
  for (long id = 0; id < grid.count(); ++id) {
    const double cx = grid.center_x(id), cy = grid.center_y(id), h = 0.5 * grid.size;
    const auto cells = cells_in_box(dtm, cx - h, cy - h, cx + h, cy + h);
    const ZoneSummary z = zonal_summary(dtm, dsm, cells);
    PixelRecord rec{id, cx, cy, z.covariates, z.cells, z.missing};
    if (z.missing_fraction() > 0.5) {
      out.excluded.push_back(rec);
    } else {
      out.pixels.push_back(rec);
    }
  }
  return out;
}

CovariateTable pixel_table(const std::vector<PixelRecord>& pixels) {
  std::vector<CovariateRecord> recs;
  std::vector<double> x, y;
  for (const auto& p : pixels) {
    recs.push_back(p.covariates);
    x.push_back(p.x);
    y.push_back(p.y);
  }
  return CovariateTable::from_records(recs, x, y);
}

std::vector<Membership> read_memberships(const std::filesystem::path& path) {
  const CsvTable t = CsvTable::read(path);
  const std::size_t ip = t.column("pixel_id"), is = t.column("stand_id"), ia = t.column("overlap_area_m2");
  std::vector<Membership> out;
  for (std::size_t r = 0; r < t.rows().size(); ++r) {
    const auto& row = t.rows()[r];
    Membership m;
    m.pixel = parse_int(row[ip], t.where(r));
    m.stand = row[is];
    m.area = parse_double(row[ia], t.where(r));
    if (m.stand.empty()) throw ValidationError(t.where(r) + ": empty stand_id");
    if (!(m.area >= 0.0) || !std::isfinite(m.area)) {
      throw ValidationError(t.where(r) + ": overlap area must be finite and >= 0");
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::string format_memberships(const std::vector<Membership>& memberships) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"pixel_id", "stand_id", "overlap_area_m2"});
  for (const auto& m : memberships) w.row({std::to_string(m.pixel), m.stand, format_double(m.area)});
  return os.str();
}

ParameterDraws predict_parameters(const AdditiveModel& model, const PosteriorDraws& draws,
                                  const CovariateTable& covariates) {
  ParameterDraws out;
  LinkDiagnostics diag;
  for (Parameter p : kParameters) {
    const auto [off, len] = model.parameter_slice(p);
    const Eigen::MatrixXd eta =
        model.design_at(p, covariates) * draws.coefficients.middleCols(off, len).transpose();
    Eigen::MatrixXd& target = p == Parameter::mu ? out.mu : out.sigma;
    target = eta.unaryExpr([&](double e) { return link_invert(e, &diag); });
  }
  out.clamped = diag.clamped;
  return out;
}

ClassSummary summarize_draws(const Eigen::VectorXd& values) {
  ClassSummary s;
  const Eigen::Index m = values.size();
  if (m == 0) return {NAN, NAN, NAN, NAN, NAN};
  const double m0 = values(0);
  double shift = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) shift += values(i) - m0;
  s.mean = m0 + shift / static_cast<double>(m);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) ss += (values(i) - s.mean) * (values(i) - s.mean);
  s.mse = ss / static_cast<double>(m);
  s.sd = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;
  std::vector<double> sorted(values.data(), values.data() + m);
  std::sort(sorted.begin(), sorted.end());
  s.lo = sorted_percentile(sorted, 0.025);
  s.hi = sorted_percentile(sorted, 0.975);
  return s;
}

StandAccumulator::StandAccumulator(std::string stand, Eigen::Index draws, Eigen::Index classes)
    : stand_(std::move(stand)), weighted_(Eigen::MatrixXd::Zero(draws, classes)) {}

void StandAccumulator::add(const Eigen::MatrixXd& probs, double area) {
  if (probs.rows() != weighted_.rows() || probs.cols() != weighted_.cols()) {
    throw std::invalid_argument("StandAccumulator: probability matrix has the wrong shape");
  }
  if (!(area > 0.0)) return;
  weighted_ += area * probs;
  area_ += area;
  ++pixels_;
}

StandSummary StandAccumulator::finish() const {
  StandSummary s;
  s.stand = stand_;
  s.pixels = pixels_;
  s.area = area_;
  if (s.empty()) {
    s.classes.assign(static_cast<std::size_t>(weighted_.cols()), {NAN, NAN, NAN, NAN, NAN});
    return s;
  }
  s.per_draw = weighted_ / area_;
  for (Eigen::Index c = 0; c < s.per_draw.cols(); ++c) s.classes.push_back(summarize_draws(s.per_draw.col(c)));
  return s;
}

StandSummary aggregate_stand(const std::string& stand, std::span<const Eigen::MatrixXd> pixel_probs,
                             std::span<const double> areas) {
  if (pixel_probs.size() != areas.size()) throw std::invalid_argument("aggregate_stand: size mismatch");
  if (pixel_probs.empty()) throw ValidationError("stand " + stand + " has no pixels");
  StandAccumulator acc(stand, pixel_probs[0].rows(), pixel_probs[0].cols());
  for (std::size_t j = 0; j < areas.size(); ++j) acc.add(pixel_probs[j], areas[j]);
  return acc.finish();
}

PredictionResult predict(const AdditiveModel& model, const PosteriorDraws& draws,
                         const std::vector<PixelRecord>& pixels,
                         const std::vector<Membership>& memberships, const SizeClassScheme& scheme) {
  scheme.validate();
  PredictionResult out;
  const Eigen::Index m = draws.size();
  const auto classes = static_cast<Eigen::Index>(scheme.classes());
  if (m == 0) throw ValidationError("no posterior draws to predict from");

  std::vector<std::string> stand_order;
  std::unordered_map<std::string, std::size_t> stand_index;
  std::unordered_map<long, std::vector<std::pair<std::size_t, double>>> by_pixel;
  for (const auto& mb : memberships) {
    auto [it, fresh] = stand_index.try_emplace(mb.stand, stand_order.size());
    if (fresh) stand_order.push_back(mb.stand);
    by_pixel[mb.pixel].emplace_back(it->second, mb.area);
  }
  std::vector<StandAccumulator> stands;
  for (const auto& s : stand_order) stands.emplace_back(s, m, classes);

  const CovariateTable all = pixel_table(pixels);
  out.extrapolation = model.extrapolation(all);
  std::size_t clamped = 0;
  std::vector<char> used(pixels.size(), 0);
  std::unordered_map<long, std::size_t> known;
  for (std::size_t i = 0; i < pixels.size(); ++i) known[pixels[i].id] = i;

  std::vector<Eigen::RowVectorXd> means;
  constexpr std::size_t kBlock = 128;
  Eigen::MatrixXd probs(m, classes);
  for (std::size_t start = 0; start < pixels.size(); start += kBlock) {
    const std::size_t stop = std::min(pixels.size(), start + kBlock);
    const std::vector<PixelRecord> chunk(pixels.begin() + static_cast<std::ptrdiff_t>(start),
                                         pixels.begin() + static_cast<std::ptrdiff_t>(stop));
    const ParameterDraws pd = predict_parameters(model, draws, pixel_table(chunk));
    clamped += pd.clamped;
    for (std::size_t j = 0; j < chunk.size(); ++j) {
      const auto row = static_cast<Eigen::Index>(j);
      bool finite = true;
      for (Eigen::Index d = 0; d < m && finite; ++d) {
        const double mu = pd.mu(row, d), sigma = pd.sigma(row, d);
        if (!std::isfinite(mu) || !std::isfinite(sigma)) {
          finite = false;
          break;
        }
        const auto p = size_class_probs(GammaParams(mu, sigma), scheme);
        for (Eigen::Index c = 0; c < classes; ++c) probs(d, c) = p[static_cast<std::size_t>(c)];
      }
      if (!finite) {
        out.dropped.push_back(chunk[j].id);
        continue;
      }
      out.pixel_ids.push_back(chunk[j].id);
      means.push_back(probs.colwise().mean());
      used[start + j] = 1;
      const auto it = by_pixel.find(chunk[j].id);
      if (it == by_pixel.end()) continue;
      for (const auto& [stand, area] : it->second) stands[stand].add(probs, area);
    }
  }
  out.pixel_mean.resize(static_cast<Eigen::Index>(means.size()), classes);
  for (std::size_t i = 0; i < means.size(); ++i) out.pixel_mean.row(static_cast<Eigen::Index>(i)) = means[i];

  std::size_t orphan = 0;
  for (const auto& mb : memberships) {
    const auto it = known.find(mb.pixel);
    if (it == known.end() || !used[it->second]) ++orphan;
  }
  if (orphan > 0) {
    out.warnings.push_back(std::to_string(orphan) +
                           " stand memberships refer to pixels without a prediction and were skipped");
  }
  if (!out.dropped.empty()) {
    out.warnings.push_back(std::to_string(out.dropped.size()) +
                           " pixels dropped because a parameter draw was not finite");
  }
  if (clamped > 0) {
    out.warnings.push_back(std::to_string(clamped) + " predictor values were clamped to +-30");
  }
  for (const auto& acc : stands) {
    out.stands.push_back(acc.finish());
    if (out.stands.back().empty()) {
      out.warnings.push_back("stand " + out.stands.back().stand + " has no covered area");
    }
  }
  for (const auto& [label, frac] : out.extrapolation) {
    if (frac > 0.0) {
      out.warnings.push_back(label + ": " + format_fixed(100.0 * frac, 2) +
                             "% of pixels outside the training range");
    }
  }
  return out;
}

namespace {

std::string value_or_na(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

}  // namespace

std::string stand_summary_csv(const std::vector<StandSummary>& stands, const SizeClassScheme& scheme) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"stand_id", "class_label", "mean", "sd", "mse", "ci_lo", "ci_hi", "n_pixels"});
  for (const auto& s : stands) {
    for (std::size_t c = 0; c < scheme.classes(); ++c) {
      const ClassSummary& k = s.classes[c];
      w.row({s.stand, scheme.labels[c], value_or_na(k.mean), value_or_na(k.sd), value_or_na(k.mse),
             value_or_na(k.lo), value_or_na(k.hi), std::to_string(s.pixels)});
    }
  }
  return os.str();
}

std::string pixel_mean_csv(const PredictionResult& result, const std::vector<PixelRecord>& pixels,
                           const SizeClassScheme& scheme) {
  std::unordered_map<long, const PixelRecord*> lookup;
  for (const auto& p : pixels) lookup[p.id] = &p;
  std::ostringstream os;
  CsvWriter w(os);
  std::vector<std::string> header{"pixel_id", "x", "y"};
  for (const auto& l : scheme.labels) header.push_back("p_" + l);
  w.row(header);
  for (std::size_t i = 0; i < result.pixel_ids.size(); ++i) {
    const PixelRecord& p = *lookup.at(result.pixel_ids[i]);
    std::vector<std::string> row{std::to_string(p.id), format_double(p.x), format_double(p.y)};
    for (Eigen::Index c = 0; c < result.pixel_mean.cols(); ++c) {
      row.push_back(format_double(result.pixel_mean(static_cast<Eigen::Index>(i), c)));
    }
    w.row(row);
  }
  return os.str();
}

std::string mse_ecdf_csv(const std::vector<StandSummary>& stands, const SizeClassScheme& scheme) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"class_label", "stand_id", "mse", "mse_pp2", "ecdf"});
  for (std::size_t c = 0; c < scheme.classes(); ++c) {
    std::vector<std::pair<double, std::string>> v;
    for (const auto& s : stands) {
      if (!s.empty()) v.emplace_back(s.classes[c].mse, s.stand);
    }
    std::sort(v.begin(), v.end());
    for (std::size_t i = 0; i < v.size(); ++i) {
      w.row({scheme.labels[c], v[i].second, format_double(v[i].first), format_double(1e4 * v[i].first),
             format_double(static_cast<double>(i + 1) / static_cast<double>(v.size()))});
    }
  }
  return os.str();
}

}  // namespace dbhdist
