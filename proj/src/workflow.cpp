#include "dbhdist/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "dbhdist/csv.hpp"
#include "dbhdist/digest.hpp"
#include "dbhdist/error.hpp"
#include "dbhdist/gamma_family.hpp"
#include "dbhdist/simulate.hpp"

#ifndef DBHDIST_VERSION
#define DBHDIST_VERSION "unknown"
#endif

namespace dbhdist {

namespace {

std::filesystem::path output_dir(const Config& c) {
  const auto p = c.get_path("output");
  if (!p) throw ValidationError("missing required setting 'output'");
  return *p;
}

std::filesystem::path required_path(const Config& c, const std::string& key) {
  const auto p = c.get_path(key);
  if (!p) throw ValidationError("missing required setting '" + key + "'");
  if (!std::filesystem::exists(*p)) {
    throw ValidationError("setting '" + key + "': path '" + p->string() + "' does not exist");
  }
  return *p;
}

const std::vector<SettingDoc>& data_docs() {
  static const std::vector<SettingDoc> d = {
      {"trees", "", "tree list CSV with columns plot_id,dbh_cm"},
      {"plots", "", "plot CSV with columns plot_id,x,y"},
      {"dtm", "", "terrain model, ESRI ASCII grid"},
      {"dsm", "", "surface model, ESRI ASCII grid aligned with the DTM"},
      {"dbh_threshold", "5", "trees below this DBH (cm) are dropped"},
      {"plot_radius", "20", "plot disc radius (m) for covariate derivation"},
      {"max_missing", "0.5", "plots with a larger fraction of missing raster cells are excluded"},
      {"covariates_from_table", "false", "read covariates from the plot CSV instead of the rasters"},
  };
  return d;
}

const std::vector<SettingDoc>& schedule_docs() {
  static const std::vector<SettingDoc> d = {
      {"chains", "7", "independent MCMC chains, run concurrently"},
      {"iterations", "5000", "iterations per chain"},
      {"burn_in", "2000", "discarded leading iterations per chain"},
      {"thin", "10", "keep every thin-th iteration after burn-in"},
      {"seed", "1", "base seed; chain c uses seed + c"},
      {"random_scan", "false", "visit blocks in random order"},
      {"tau2_a", "0.001", "inverse-gamma shape of the smoothing-variance prior"},
      {"tau2_b", "0.001", "inverse-gamma scale of the smoothing-variance prior"},
      {"pointwise", "plot", "WAIC unit: plot or tree"},
  };
  return d;
}

const std::vector<SettingDoc>& model_docs() {
  static const std::vector<SettingDoc> d = {
      {"name", "model", "model name"},
      {"mu", "1", "predictor of mu, e.g. s(MVH) + p(ESL) + s_gp(X,Y)"},
      {"sigma", "1", "predictor of sigma"},
      {"family", "gamma", "response family"},
      {"mu_link", "log", "link of mu"},
      {"sigma_link", "log", "link of sigma"},
  };
  return d;
}

std::vector<std::string> doc_keys(const std::vector<SettingDoc>& docs) {
  std::vector<std::string> out;
  for (const auto& d : docs) out.push_back(d.key);
  return out;
}

void check_settings(const Config& c, const std::string& command, const std::vector<std::string>& prefixes = {}) {
  c.check_keys(doc_keys(setting_docs(command)), prefixes);
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::string csv_text(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  CsvWriter w(os);
  for (const auto& r : rows) w.row(r);
  return os.str();
}

class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void put(const std::string& name, std::string_view content) {
    write_file(dir_ / name, content);
    files_.push_back(dir_ / name);
  }
  void add(const std::vector<std::filesystem::path>& files) { files_.insert(files_.end(), files.begin(), files.end()); }
  const std::vector<std::filesystem::path>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
};

double median(Eigen::VectorXd v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  return sorted_percentile(s, 0.5);
}

std::string criteria_csv(const CriteriaReport& r) {
  auto num = [&](double v) { return r.ok() ? format_double(v) : std::string("NA"); };
  return csv_text({{"model", "DIC", "edf", "WAIC1", "WAIC2", "p1", "p2", "note"},
                   {r.model, num(r.dic), num(r.edf), num(r.waic1), num(r.waic2), num(r.p1), num(r.p2),
                    r.ok() ? join(r.warnings, "; ") : *r.error}});
}

std::string model_config_text(const ModelSpec& spec, const SamplerSchedule& s) {
  std::ostringstream os;
  os << "name = " << spec.name << "\n";
  os << "mu = " << format_formula(spec.mu_terms) << "\n";
  os << "sigma = " << format_formula(spec.sigma_terms) << "\n";
  os << "family = " << spec.family << "\n";
  os << "mu_link = " << spec.mu_link << "\n";
  os << "sigma_link = " << spec.sigma_link << "\n";
  os << "chains = " << s.chains << "\n";
  os << "iterations = " << s.iterations << "\n";
  os << "burn_in = " << s.burn_in << "\n";
  os << "thin = " << s.thin << "\n";
  os << "seed = " << s.base_seed << "\n";
  os << "random_scan = " << (s.random_scan ? "true" : "false") << "\n";
  os << "tau2_a = " << format_double(s.tau2_a) << "\n";
  os << "tau2_b = " << format_double(s.tau2_b) << "\n";
  os << "pointwise = " << (s.pointwise == PointwiseUnit::plot ? "plot" : "tree") << "\n";
  return os.str();
}

std::string convergence_csv(const PosteriorDraws& draws, std::vector<std::string>& warnings) {
  std::vector<std::vector<std::string>> rows{{"block", "max_rhat", "min_ess", "flagged"}};
  if (draws.chains < 2) {
    warnings.push_back("convergence diagnostics need at least two chains");
    return csv_text(rows);
  }
  const ConvergenceReport rep = convergence_diagnostics(draws);
  for (const auto& b : rep.blocks) {
    rows.push_back({b.label, format_double(b.max_rhat), format_double(b.min_ess), b.flagged ? "1" : "0"});
    if (b.flagged) warnings.push_back("block " + b.label + " did not converge (R-hat " + format_fixed(b.max_rhat, 3) + ")");
  }
  return csv_text(rows);
}

}  // namespace

// ---------------------------------------------------------------- settings

SamplerSchedule schedule_from_config(const Config& c) {
  SamplerSchedule s;
  s.chains = static_cast<int>(c.get_int("chains", s.chains));
  s.iterations = static_cast<int>(c.get_int("iterations", s.iterations));
  s.burn_in = static_cast<int>(c.get_int("burn_in", s.burn_in));
  s.thin = static_cast<int>(c.get_int("thin", s.thin));
  s.base_seed = c.get_seed("seed", s.base_seed);
  s.random_scan = c.get_bool("random_scan", s.random_scan);
  s.tau2_a = c.get_double("tau2_a", s.tau2_a);
  s.tau2_b = c.get_double("tau2_b", s.tau2_b);
  const std::string unit = c.get("pointwise", "plot");
  if (unit == "plot") s.pointwise = PointwiseUnit::plot;
  else if (unit == "tree") s.pointwise = PointwiseUnit::tree;
  else throw ValidationError("setting 'pointwise': expected plot or tree, got '" + unit + "'");
  s.validate();
  return s;
}

ModelSpec model_from_config(const Config& c) {
  ModelSpec m;
  m.name = c.get("name", m.name);
  m.mu_terms = parse_formula(c.get("mu", "1"));
  m.sigma_terms = parse_formula(c.get("sigma", "1"));
  m.family = c.get("family", m.family);
  m.mu_link = c.get("mu_link", m.mu_link);
  m.sigma_link = c.get("sigma_link", m.sigma_link);
  if (m.name.empty()) throw ValidationError("model name must not be empty");
  m.validate();
  return m;
}

std::vector<ModelSpec> models_from_config(const Config& c) {
  std::vector<std::string> names;
  std::map<std::string, ModelSpec> specs;
  for (const auto& key : c.keys()) {
    if (key.rfind("model.", 0) != 0) continue;
    const auto dot = key.rfind('.');
    const std::string name = key.substr(6, dot > 6 ? dot - 6 : 0);
    const std::string part = key.substr(dot + 1);
    if (name.empty() || dot <= 6) throw ValidationError("setting '" + key + "': expected model.<name>.mu or model.<name>.sigma");
    if (!specs.count(name)) {
      names.push_back(name);
      specs[name].name = name;
    }
    auto& spec = specs[name];
    if (part == "mu") spec.mu_terms = parse_formula(c.get(key, "1"));
    else if (part == "sigma") spec.sigma_terms = parse_formula(c.get(key, "1"));
    else throw ValidationError("setting '" + key + "': expected model.<name>.mu or model.<name>.sigma");
  }
  std::vector<ModelSpec> out;
  for (const auto& n : names) {
    specs[n].validate();
    out.push_back(specs[n]);
  }
  return out;
}

IngestOptions ingest_options_from_config(const Config& c) {
  IngestOptions o;
  o.dbh_threshold = c.get_double("dbh_threshold", o.dbh_threshold);
  o.plot_radius = c.get_double("plot_radius", o.plot_radius);
  o.max_missing = c.get_double("max_missing", o.max_missing);
  o.covariates_from_table = c.get_bool("covariates_from_table", o.covariates_from_table);
  if (!(o.plot_radius > 0.0)) throw ValidationError("setting 'plot_radius' must be positive");
  if (!(o.max_missing >= 0.0 && o.max_missing <= 1.0)) throw ValidationError("setting 'max_missing' must lie in [0, 1]");
  return o;
}

IngestResult load_training_data(const Config& c) {
  const IngestOptions o = ingest_options_from_config(c);
  const auto trees = required_path(c, "trees");
  const auto plots = required_path(c, "plots");
  if (o.covariates_from_table) return ingest_files(trees, plots, {}, {}, o);
  return ingest_files(trees, plots, required_path(c, "dtm"), required_path(c, "dsm"), o);
}

// ---------------------------------------------------------------- archives

std::string draws_csv(const PosteriorDraws& d) {
  std::vector<std::string> header{"chain", "iteration"};
  header.insert(header.end(), d.coefficient_labels.begin(), d.coefficient_labels.end());
  header.insert(header.end(), d.tau2_labels.begin(), d.tau2_labels.end());
  std::string out = csv_text({header});
  for (Eigen::Index m = 0; m < d.size(); ++m) {
    out += std::to_string(d.chain[static_cast<std::size_t>(m)]) + "," +
           std::to_string(d.iteration[static_cast<std::size_t>(m)]);
    for (Eigen::Index j = 0; j < d.coefficients.cols(); ++j) out += "," + format_double(d.coefficients(m, j));
    for (Eigen::Index j = 0; j < d.tau2.cols(); ++j) out += "," + format_double(d.tau2(m, j));
    out += "\n";
  }
  return out;
}

PosteriorDraws read_draws(const std::filesystem::path& path, const AdditiveModel& model) {
  const CsvTable t = CsvTable::read(path);
  PosteriorDraws d = draw_layout(model);
  std::vector<std::string> expected{"chain", "iteration"};
  expected.insert(expected.end(), d.coefficient_labels.begin(), d.coefficient_labels.end());
  expected.insert(expected.end(), d.tau2_labels.begin(), d.tau2_labels.end());
  if (t.header() != expected) {
    throw ValidationError(path.string() + ": columns do not match the model's coefficient layout");
  }
  const auto m = static_cast<Eigen::Index>(t.rows().size());
  const auto p = static_cast<Eigen::Index>(d.coefficient_labels.size());
  const auto q = static_cast<Eigen::Index>(d.tau2_labels.size());
  d.coefficients.resize(m, p);
  d.tau2.resize(m, q);
  int chains = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = t.rows()[static_cast<std::size_t>(i)];
    const std::string where = t.where(static_cast<std::size_t>(i));
    const auto chain = static_cast<int>(parse_int(row[0], where + " column chain"));
    if (chain < 0) throw ValidationError(where + ": negative chain index");
    d.chain.push_back(chain);
    d.iteration.push_back(static_cast<int>(parse_int(row[1], where + " column iteration")));
    chains = std::max(chains, chain + 1);
    for (Eigen::Index j = 0; j < p; ++j) d.coefficients(i, j) = parse_double(row[static_cast<std::size_t>(2 + j)], where);
    for (Eigen::Index j = 0; j < q; ++j) d.tau2(i, j) = parse_double(row[static_cast<std::size_t>(2 + p + j)], where);
  }
  d.chains = chains;
  return d;
}

std::vector<FittedPlot> fitted_plots(const AdditiveModel& model, const PosteriorDraws& draws,
                                     const std::vector<PlotObservation>& plots) {
  const CovariateTable table = CovariateTable::from_plots(plots);
  const ParameterDraws pd = predict_parameters(model, draws, table);
  PosteriorDraws mean = draws;
  mean.coefficients = draws.coefficients.colwise().mean();
  mean.tau2 = draws.tau2.colwise().mean();
  mean.chain = {0};
  mean.iteration = {0};
  const ParameterDraws hat = predict_parameters(model, mean, table);
  std::vector<FittedPlot> out;
  for (std::size_t i = 0; i < plots.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const ClassSummary mu = summarize_draws(pd.mu.row(r).transpose());
    const ClassSummary sigma = summarize_draws(pd.sigma.row(r).transpose());
    out.push_back({plots[i].id, mu.mean, mu.lo, mu.hi, sigma.mean, sigma.lo, sigma.hi, hat.mu(r, 0), hat.sigma(r, 0)});
  }
  return out;
}

std::vector<double> fitted_residuals(const std::vector<FittedPlot>& fitted,
                                     const std::vector<PlotObservation>& plots) {
  std::vector<std::vector<double>> obs;
  std::vector<GammaParams> params;
  for (std::size_t i = 0; i < plots.size(); ++i) {
    obs.push_back(plots[i].dbh);
    params.emplace_back(fitted[i].mu_hat, fitted[i].sigma_hat);
  }
  return quantile_residuals(obs, params);
}

double ks_statistic_normal(std::vector<double> v) {
  if (v.empty()) throw ValidationError("KS statistic of an empty sample");
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = normal_cdf(v[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_5pct(std::size_t n) {
  const double s = std::sqrt(static_cast<double>(n));
  return 1.358 / (s + 0.12 + 0.11 / s);
}

Eigen::MatrixXd pointwise_loglik(const AdditiveModel& model, const ResponseData& data,
                                 const PosteriorDraws& draws, PointwiseUnit unit) {
  const Eigen::Index units = unit == PointwiseUnit::plot ? static_cast<Eigen::Index>(data.plots())
                                                         : static_cast<Eigen::Index>(data.trees_total());
  Eigen::MatrixXd out(draws.size(), units);
  PredictorState s = PredictorState::zeros(model);
  for (Eigen::Index m = 0; m < draws.size(); ++m) {
    s.coefficients = draws.coefficients.row(m).transpose();
    const Eigen::VectorXd em = assemble_eta(model, s, Parameter::mu);
    const Eigen::VectorXd es = assemble_eta(model, s, Parameter::sigma);
    out.row(m) = (unit == PointwiseUnit::plot ? plot_log_likelihood(em, es, data) : tree_log_likelihood(em, es, data))
                     .transpose();
  }
  return out;
}

std::vector<std::filesystem::path> write_fit(const std::filesystem::path& dir, const FittedModel& fit,
                                             const SamplerSchedule& schedule,
                                             const std::vector<PlotObservation>& plots,
                                             const CriteriaReport& criteria) {
  OutputSet out(dir);
  out.put("model.cfg", model_config_text(fit.model.spec(), schedule));
  out.put("plots.csv", plot_table_csv(plots));
  out.put("trees.csv", tree_table_csv(plots));
  out.put("draws.csv", draws_csv(fit.draws));

  const auto fitted = fitted_plots(fit.model, fit.draws, plots);
  std::vector<std::vector<std::string>> rows{
      {"plot_id", "mu_mean", "mu_lo", "mu_hi", "sigma_mean", "sigma_lo", "sigma_hi", "mu_hat", "sigma_hat"}};
  for (const auto& f : fitted) {
    rows.push_back({f.id, format_double(f.mu_mean), format_double(f.mu_lo), format_double(f.mu_hi),
                    format_double(f.sigma_mean), format_double(f.sigma_lo), format_double(f.sigma_hi),
                    format_double(f.mu_hat), format_double(f.sigma_hat)});
  }
  out.put("fitted.csv", csv_text(rows));

  const auto residuals = fitted_residuals(fitted, plots);
  rows = {{"plot_id", "dbh_cm", "residual"}};
  std::size_t k = 0;
  for (const auto& p : plots) {
    for (double y : p.dbh) rows.push_back({p.id, format_double(y), format_double(residuals[k++])});
  }
  out.put("residuals.csv", csv_text(rows));
  out.put("criteria.csv", criteria_csv(criteria));

  rows = {{"block", "rate", "fallback_steps", "per_chain"}};
  for (const auto& a : fit.draws.acceptance) {
    std::vector<std::string> pc;
    for (double r : a.per_chain) pc.push_back(format_double(r));
    rows.push_back({a.label, format_double(a.rate), std::to_string(a.fallback_steps), join(pc, ";")});
  }
  out.put("acceptance.csv", csv_text(rows));
  std::vector<std::string> ignored;
  out.put("convergence.csv", convergence_csv(fit.draws, ignored));
  return out.files();
}

LoadedFit read_fit(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("fit directory '" + dir.string() + "' does not exist");
  const Config c = Config::read(dir / "model.cfg");
  ModelSpec spec = model_from_config(c);
  SamplerSchedule schedule = schedule_from_config(c);
  IngestOptions o;
  o.dbh_threshold = 0.0;
  o.covariates_from_table = true;
  IngestResult data = ingest_files(dir / "trees.csv", dir / "plots.csv", {}, {}, o);
  AdditiveModel model(spec, CovariateTable::from_plots(data.plots));
  ResponseData response = ResponseData::from_plots(data.plots);
  PosteriorDraws draws = read_draws(dir / "draws.csv", model);
  draws.pointwise = schedule.pointwise;
  draws.loglik = pointwise_loglik(model, response, draws, schedule.pointwise);
  return {std::move(spec), schedule, std::move(data.plots), std::move(model), std::move(response), std::move(draws)};
}

// ---------------------------------------------------------------- effects

EffectTables compute_effects(const AdditiveModel& model, const PosteriorDraws& draws,
                             const std::vector<PlotObservation>& plots, const std::string& covariate,
                             int grid, int density_points) {
  if (grid < 2) throw ValidationError("effects grid needs at least 2 points");
  if (density_points < 2) throw ValidationError("density grid needs at least 2 points");
  const CovariateTable training = CovariateTable::from_plots(plots);
  if (!training.has(covariate)) throw ValidationError("unknown covariate '" + covariate + "'");

  struct Hit {
    Parameter p;
    int term;
  };
  std::vector<Hit> hits;
  double lo = training.column(covariate).minCoeff(), hi = training.column(covariate).maxCoeff();
  for (Parameter p : kParameters) {
    const auto& terms = model.spec().terms(p);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const auto& cov = terms[t].covariates;
      if (std::find(cov.begin(), cov.end(), covariate) == cov.end()) continue;
      hits.push_back({p, static_cast<int>(t)});
      if (terms[t].kind == TermKind::cyclic_smooth) {
        lo = 0.0;
        hi = terms[t].cyclic_period;
      }
    }
  }
  if (hits.empty()) throw ValidationError("covariate '" + covariate + "' is not in the fitted model");

  const auto g = static_cast<Eigen::Index>(grid);
  Eigen::VectorXd values(g);
  for (Eigen::Index i = 0; i < g; ++i) values(i) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(g - 1);
  values(g - 1) = hi;
  CovariateTable table(g);
  for (const auto& name : training.names()) {
    table.set(name, name == covariate ? values : Eigen::VectorXd::Constant(g, median(training.column(name))));
  }

  std::vector<std::vector<std::string>> rows{{"parameter", "term", "value", "mean", "lo", "hi"}};
  for (const auto& h : hits) {
    const auto slice = model.parameter_slice(h.p);
    const auto& blocks = model.blocks();
    const auto blk = std::find_if(blocks.begin(), blocks.end(),
                                  [&](const Block& b) { return b.parameter == h.p && b.term == h.term; });
    const Eigen::MatrixXd x = model.design_at(h.p, table).middleCols(blk->offset - slice.first, blk->size);
    const Eigen::MatrixXd effect = x * draws.coefficients.middleCols(blk->offset, blk->size).transpose();
    for (Eigen::Index i = 0; i < g; ++i) {
      const ClassSummary s = summarize_draws(effect.row(i).transpose());
      rows.push_back({parameter_name(h.p), blk->label, format_double(values(i)), format_double(s.mean),
                      format_double(s.lo), format_double(s.hi)});
    }
  }
  EffectTables out;
  out.effects_csv = csv_text(rows);

  auto eta = [&](Parameter p) {
    const auto slice = model.parameter_slice(p);
    return Eigen::MatrixXd(model.design_at(p, table) * draws.coefficients.middleCols(slice.first, slice.second).transpose());
  };
  const Eigen::MatrixXd eta_mu = eta(Parameter::mu), eta_sigma = eta(Parameter::sigma);
  const Eigen::Index m = draws.size();
  std::ostringstream os;
  os << "value,dbh_cm,density\n";
  Eigen::ArrayXd shape_m1(m), inv_scale(m), norm(m);
  for (Eigen::Index i = 0; i < g; ++i) {
    double ymax = 0.0;
    double at_zero = 0.0;
    for (Eigen::Index d = 0; d < m; ++d) {
      const GammaParams gp(link_invert(eta_mu(i, d)), link_invert(eta_sigma(i, d)));
      shape_m1(d) = gp.shape() - 1.0;
      inv_scale(d) = 1.0 / gp.scale();
      norm(d) = gp.shape() * std::log(gp.scale()) + std::lgamma(gp.shape());
      ymax = std::max(ymax, quantile(1.0 - 1e-9, gp));
      at_zero += gp.shape() > 1.0 ? 0.0 : gp.shape() == 1.0 ? inv_scale(d) : INFINITY;
    }
    for (int k = 0; k < density_points; ++k) {
      const double t = static_cast<double>(k) / (density_points - 1);
      const double y = ymax * t * t;
      const double f = k == 0 ? at_zero / static_cast<double>(m)
                              : (shape_m1 * std::log(y) - y * inv_scale - norm).exp().mean();
      os << format_double(values(i)) << ',' << format_double(y) << ',' << format_double(f) << '\n';
    }
  }
  out.density_csv = os.str();
  return out;
}

// ---------------------------------------------------------------- runs

std::string manifest_text(const std::string& command, const Config& config,
                          const std::vector<std::pair<std::string, std::filesystem::path>>& inputs,
                          const std::filesystem::path& output_dir,
                          const std::vector<std::filesystem::path>& outputs) {
  std::ostringstream os;
  const std::string canonical = config.canonical();
  os << "command = " << command << "\n";
  os << "dbhdist_version = " << DBHDIST_VERSION << "\n";
  os << "eigen_version = " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION << "\n";
  os << "boost_version = " << BOOST_LIB_VERSION << "\n";
  os << "compiler = " << __VERSION__ << "\n";
  os << "seed = " << config.get("seed", "1") << "\n";
  os << "config_sha256 = " << sha256_hex(canonical) << "\n";
  os << "\n[settings]\n" << canonical;
  os << "\n[inputs]\n";
  for (const auto& [key, path] : inputs) {
    if (std::filesystem::is_regular_file(path)) os << key << " " << sha256_file(path) << " " << path.string() << "\n";
  }
  os << "\n[outputs]\n";
  for (const auto& p : outputs) {
    os << std::filesystem::relative(p, output_dir).generic_string() << " " << sha256_file(p) << "\n";
  }
  return os.str();
}

namespace {

RunResult finish(const std::string& command, const Config& config, OutputSet& out,
                 const std::vector<std::pair<std::string, std::filesystem::path>>& inputs,
                 std::vector<std::string> warnings, std::string summary) {
  std::ostringstream report;
  report << summary;
  for (const auto& w : warnings) report << "warning: " << w << "\n";
  out.put("report.txt", report.str());
  std::vector<std::filesystem::path> files = out.files();
  write_file(out.dir() / "manifest.txt", manifest_text(command, config, inputs, out.dir(), files));
  files.push_back(out.dir() / "manifest.txt");
  return {out.dir(), files, std::move(warnings), std::move(summary)};
}

std::vector<std::pair<std::string, std::filesystem::path>> data_inputs(const Config& c) {
  std::vector<std::pair<std::string, std::filesystem::path>> in;
  for (const char* k : {"trees", "plots", "dtm", "dsm"}) {
    if (const auto p = c.get_path(k)) in.emplace_back(k, *p);
  }
  return in;
}

std::vector<std::pair<std::string, std::filesystem::path>> fit_inputs(const std::filesystem::path& fit) {
  std::vector<std::pair<std::string, std::filesystem::path>> in;
  for (const char* f : {"model.cfg", "plots.csv", "trees.csv", "draws.csv"}) in.emplace_back(std::string("fit/") + f, fit / f);
  return in;
}

std::string criteria_summary(const CriteriaReport& r) {
  std::ostringstream os;
  os << "model " << r.model << "\n";
  if (!r.ok()) {
    os << "error " << *r.error << "\n";
    return os.str();
  }
  os << "DIC " << format_fixed(r.dic, 3) << " (edf " << format_fixed(r.edf, 1) << ")\n";
  os << "WAIC1 " << format_fixed(r.waic1, 3) << " (p1 " << format_fixed(r.p1, 1) << ")\n";
  os << "WAIC2 " << format_fixed(r.waic2, 3) << " (p2 " << format_fixed(r.p2, 1) << ")\n";
  return os.str();
}

}  // namespace

RunResult run_simulate(const Config& config) {
  check_settings(config, "simulate");
  const Scenario scenario = Scenario::from_config(config);
  const std::uint64_t seed = config.get_seed("seed", 1);
  OutputSet out(output_dir(config));
  const SimulatedData data = simulate(scenario, seed);
  out.add(write_simulation(data, out.dir()));
  std::ostringstream s;
  std::size_t trees = 0;
  for (const auto& p : data.plots) trees += p.plot.dbh.size();
  s << "plots " << data.plots.size() << "\ntrees " << trees << "\npixels " << data.pixels.size()
    << "\nstands " << data.stands.size() << "\n";
  return finish("simulate", config, out, {}, {}, s.str());
}

RunResult run_fit(const Config& config) {
  check_settings(config, "fit");
  const ModelSpec spec = model_from_config(config);
  const SamplerSchedule schedule = schedule_from_config(config);
  OutputSet out(output_dir(config));
  const IngestResult data = load_training_data(config);
  std::vector<std::string> warnings = data.report.warnings;
  const FittedModel fitted = fit(spec, data.plots, schedule);
  const CriteriaReport criteria = criteria_report(spec.name, fitted.model, fitted.data, fitted.draws);
  warnings.insert(warnings.end(), criteria.warnings.begin(), criteria.warnings.end());
  out.add(write_fit(out.dir(), fitted, schedule, data.plots, criteria));
  out.put("ingest_report.txt", data.report.text());
  if (fitted.draws.chains >= 2) {
    for (const auto& b : convergence_diagnostics(fitted.draws).blocks) {
      if (b.flagged) warnings.push_back("block " + b.label + " did not converge (R-hat " + format_fixed(b.max_rhat, 3) + ")");
    }
  }
  std::ostringstream s;
  s << "plots " << data.plots.size() << "\ntrees " << data.report.trees_retained << "\ndraws " << fitted.draws.size()
    << "\n" << criteria_summary(criteria);
  return finish("fit", config, out, data_inputs(config), std::move(warnings), s.str());
}

RunResult run_compare(const Config& config) {
  check_settings(config, "compare", {"model."});
  const std::vector<ModelSpec> specs = models_from_config(config);
  if (specs.size() < 2) throw ValidationError("compare needs at least two model.<name>.mu / .sigma specifications");
  const SamplerSchedule schedule = schedule_from_config(config);
  OutputSet out(output_dir(config));
  const IngestResult data = load_training_data(config);
  std::vector<std::string> warnings = data.report.warnings;
  std::vector<CriteriaReport> reports;
  for (const auto& spec : specs) {
    try {
      const FittedModel fitted = fit(spec, data.plots, schedule);
      CriteriaReport r = criteria_report(spec.name, fitted.model, fitted.data, fitted.draws);
      out.add(write_fit(out.dir() / "models" / spec.name, fitted, schedule, data.plots, r));
      for (const auto& w : r.warnings) warnings.push_back(spec.name + ": " + w);
      reports.push_back(std::move(r));
    } catch (const std::exception& e) {
      warnings.push_back(spec.name + ": fit failed: " + e.what());
      reports.push_back(failed_report(spec.name, e.what()));
    }
  }
  out.put("comparison.csv", comparison_table_csv(reports));
  const auto ranking = compare(reports);
  out.put("ranking.csv", ranking_csv(ranking));
  out.put("ingest_report.txt", data.report.text());
  std::ostringstream s;
  for (const auto& r : ranking) {
    s << (r.rank ? std::to_string(r.rank) : std::string("-")) << " " << r.report.model;
    if (r.report.ok()) s << " DIC " << format_fixed(r.report.dic, 3);
    else s << " failed";
    s << "\n";
  }
  return finish("compare", config, out, data_inputs(config), std::move(warnings), s.str());
}

RunResult run_predict(const Config& config) {
  check_settings(config, "predict");
  const auto fit_dir = required_path(config, "fit");
  const auto dtm_path = required_path(config, "dtm"), dsm_path = required_path(config, "dsm");
  const auto stands_path = required_path(config, "stands");
  const SizeClassScheme scheme = SizeClassScheme::parse(config.get("classes", "narrative_25_50"));
  const double pixel_size = config.get_double("pixel_size", 35.5);
  OutputSet out(output_dir(config));

  const LoadedFit fitted = read_fit(fit_dir);
  const std::vector<Membership> memberships = read_memberships(stands_path);
  PixelCoverage cover;
  {
    const Raster dtm = read_ascii_grid(dtm_path);
    const Raster dsm = read_ascii_grid(dsm_path);
    cover = derive_pixel_covariates(dtm, dsm, PixelGrid::covering(dtm, pixel_size));
  }
  const PredictionResult result = predict(fitted.model, fitted.draws, cover.pixels, memberships, scheme);
  std::vector<std::string> warnings = result.warnings;
  if (!cover.excluded.empty()) {
    warnings.push_back(std::to_string(cover.excluded.size()) + " pixels excluded for missing raster cells");
  }
  out.put("stands.csv", stand_summary_csv(result.stands, scheme));
  out.put("pixels.csv", pixel_mean_csv(result, cover.pixels, scheme));
  out.put("mse_ecdf.csv", mse_ecdf_csv(result.stands, scheme));
  std::vector<std::vector<std::string>> rows{{"pixel_id", "x", "y", "reason", "missing_fraction"}};
  for (const auto& p : cover.excluded) {
    rows.push_back({std::to_string(p.id), format_double(p.x), format_double(p.y), "missing_cells",
                    format_double(p.cells ? static_cast<double>(p.missing) / static_cast<double>(p.cells) : 1.0)});
  }
  for (long id : result.dropped) rows.push_back({std::to_string(id), "NA", "NA", "non_finite_draw", "NA"});
  out.put("excluded_pixels.csv", csv_text(rows));
  rows = {{"term_covariate", "outside_fraction"}};
  for (const auto& [label, frac] : result.extrapolation) rows.push_back({label, format_double(frac)});
  out.put("extrapolation.csv", csv_text(rows));

  auto inputs = fit_inputs(fit_dir);
  inputs.emplace_back("dtm", dtm_path);
  inputs.emplace_back("dsm", dsm_path);
  inputs.emplace_back("stands", stands_path);
  std::ostringstream s;
  s << "pixels_predicted " << result.pixel_ids.size() << "\npixels_excluded " << cover.excluded.size() + result.dropped.size()
    << "\nstands " << result.stands.size() << "\ndraws " << fitted.draws.size() << "\n";
  return finish("predict", config, out, inputs, std::move(warnings), s.str());
}

RunResult run_effects(const Config& config) {
  check_settings(config, "effects");
  const auto fit_dir = required_path(config, "fit");
  const std::string covariate = config.require("covariate");
  const int grid = static_cast<int>(config.get_int("grid", 50));
  const int points = static_cast<int>(config.get_int("density_points", 4001));
  OutputSet out(output_dir(config));
  const LoadedFit fitted = read_fit(fit_dir);
  const EffectTables t = compute_effects(fitted.model, fitted.draws, fitted.plots, covariate, grid, points);
  out.put("effects.csv", t.effects_csv);
  out.put("density.csv", t.density_csv);
  return finish("effects", config, out, fit_inputs(fit_dir), {}, "covariate " + covariate + "\ngrid " + std::to_string(grid) + "\n");
}

RunResult run_diagnostics(const Config& config) {
  check_settings(config, "diagnostics");
  const auto fit_dir = required_path(config, "fit");
  OutputSet out(output_dir(config));
  const LoadedFit fitted = read_fit(fit_dir);
  std::vector<std::string> warnings;
  out.put("convergence.csv", convergence_csv(fitted.draws, warnings));

  const auto fp = fitted_plots(fitted.model, fitted.draws, fitted.plots);
  std::vector<double> r = fitted_residuals(fp, fitted.plots);
  const double d = ks_statistic_normal(r);
  const double crit = ks_critical_5pct(r.size());
  std::sort(r.begin(), r.end());
  std::vector<std::vector<std::string>> rows{{"theoretical", "sample"}};
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(r.size());
    rows.push_back({format_double(normal_quantile(u)), format_double(r[i])});
  }
  out.put("qq.csv", csv_text(rows));
  if (d > crit) warnings.push_back("quantile residuals depart from the standard normal (KS test, 5% level)");
  std::ostringstream s;
  s << "residuals " << r.size() << "\nks_statistic " << format_double(d) << "\nks_critical_5pct "
    << format_double(crit) << "\nks_pass " << (d <= crit ? "yes" : "no") << "\n";
  return finish("diagnostics", config, out, fit_inputs(fit_dir), std::move(warnings), s.str());
}

std::vector<SettingDoc> setting_docs(const std::string& command) {
  std::vector<SettingDoc> d;
  auto add = [&](const std::vector<SettingDoc>& more) { d.insert(d.end(), more.begin(), more.end()); };
  if (command == "simulate") {
    const Scenario s;
    auto num = [](double v) { return format_double(v); };
    add({{"seed", "1", "base seed"},
         {"width", num(s.width), "landscape width (m)"},
         {"height", num(s.height), "landscape height (m)"},
         {"x0", num(s.x0), "west edge (m)"},
         {"y0", num(s.y0), "south edge (m)"},
         {"cellsize", num(s.cellsize), "raster cell size (m)"},
         {"plots", std::to_string(s.plots), "number of sample plots"},
         {"trees_per_plot", std::to_string(s.trees_per_plot), "trees per plot"},
         {"plot_radius", num(s.plot_radius), "plot radius (m)"},
         {"mu_intercept", num(s.mu_intercept), "intercept of log mu"},
         {"mu_shape", s.mu_shape, "effect shape on log mu: none, linear or sin"},
         {"mu_amplitude", num(s.mu_amplitude), "amplitude of the shape"},
         {"mu_covariate", s.mu_covariate, "covariate driving the shape"},
         {"mu_lo", num(s.mu_lo), "covariate value mapped to u = 0"},
         {"mu_hi", num(s.mu_hi), "covariate value mapped to u = 1"},
         {"field_sd", num(s.field_sd), "sd of the spatial field on log mu"},
         {"field_range", num(s.field_range), "Matern 3/2 range of the field (m)"},
         {"field_features", std::to_string(s.field_features), "random Fourier features of the field"},
         {"sigma_intercept", num(s.sigma_intercept), "intercept of log sigma"},
         {"sigma_slope", num(s.sigma_slope), "slope of log sigma on 2u - 1"},
         {"sigma_covariate", s.sigma_covariate, "covariate of the sigma slope"},
         {"sigma_lo", num(s.sigma_lo), "covariate value mapped to u = 0"},
         {"sigma_hi", num(s.sigma_hi), "covariate value mapped to u = 1"},
         {"base_elevation", num(s.base_elevation), "mean terrain elevation (m)"},
         {"relief", num(s.relief), "terrain relief (m)"},
         {"canopy_mean", num(s.canopy_mean), "mean canopy height (m)"},
         {"canopy_amplitude", num(s.canopy_amplitude), "canopy height amplitude (m)"},
         {"canopy_range", num(s.canopy_range), "canopy pattern range (m)"},
         {"canopy_noise", num(s.canopy_noise), "per-cell canopy noise sd (m)"},
         {"landscape", "true", "also emit pixels, stands and their truth"},
         {"stands", std::to_string(s.stands), "number of Voronoi stands"},
         {"pixel_size", num(s.pixel_size), "prediction pixel edge (m)"},
         {"classes", "narrative_25_50", "size classes for the stand truth"}});
  } else if (command == "fit" || command == "compare") {
    add(data_docs());
    add(schedule_docs());
    if (command == "fit") add(model_docs());
    else add({{"model.<name>.mu", "", "mu predictor of model <name>"},
              {"model.<name>.sigma", "1", "sigma predictor of model <name>"}});
  } else if (command == "predict") {
    add({{"fit", "", "directory written by fit"},
         {"dtm", "", "terrain model covering the prediction area"},
         {"dsm", "", "surface model aligned with the DTM"},
         {"stands", "", "CSV pixel_id,stand_id,overlap_area_m2"},
         {"classes", "narrative_25_50", "preset name or breakpoints such as 20,45"},
         {"pixel_size", "35.5", "prediction pixel edge (m)"}});
  } else if (command == "effects") {
    add({{"fit", "", "directory written by fit"},
         {"covariate", "", "covariate to sweep"},
         {"grid", "50", "points on the covariate grid"},
         {"density_points", "4001", "points on the DBH grid of the density table"}});
  } else if (command == "diagnostics") {
    add({{"fit", "", "directory written by fit"}});
  } else {
    throw ValidationError("unknown command '" + command + "'");
  }
  d.push_back({"output", "", "output directory"});
  return d;
}

}  // namespace dbhdist
