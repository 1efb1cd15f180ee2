#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dbhdist/config.hpp"
#include "dbhdist/criteria.hpp"
#include "dbhdist/error.hpp"
#include "dbhdist/gamma_family.hpp"
#include "dbhdist/mcmc.hpp"
#include "dbhdist/prediction.hpp"
#include "dbhdist/predictor.hpp"
#include "dbhdist/workflow.hpp"

namespace py = pybind11;
using namespace dbhdist;

namespace {

Config make_config(const std::map<std::string, std::string>& settings, const std::filesystem::path& base) {
  Config c;
  for (const auto& [k, v] : settings) c.set(k, v);
  c.set_base_dir(base);
  return c;
}

py::dict run_result(const RunResult& r) {
  py::dict d;
  d["output"] = r.output;
  d["files"] = r.files;
  d["warnings"] = r.warnings;
  d["summary"] = r.summary;
  return d;
}

// Plots as dicts: id, x, y, dbh and covariate names (MVH, SDVH, ...) as keys.
std::vector<PlotObservation> plots_from(const py::list& items) {
  std::vector<PlotObservation> out;
  for (const auto& item : items) {
    const auto d = item.cast<py::dict>();
    PlotObservation p;
    p.id = d.contains("id") ? py::str(d["id"]).cast<std::string>() : "P" + std::to_string(out.size() + 1);
    p.x = d.contains("x") ? d["x"].cast<double>() : 0.0;
    p.y = d.contains("y") ? d["y"].cast<double>() : 0.0;
    p.dbh = d["dbh"].cast<std::vector<double>>();
    for (const auto& name : kCovariateNames) {
      if (d.contains(name.c_str())) p.covariates.set(name, d[name.c_str()].cast<double>());
    }
    out.push_back(std::move(p));
  }
  return out;
}

py::dict criteria_dict(const CriteriaReport& r) {
  py::dict d;
  d["model"] = r.model;
  d["dic"] = r.dic;
  d["edf"] = r.edf;
  d["waic1"] = r.waic1;
  d["waic2"] = r.waic2;
  d["p1"] = r.p1;
  d["p2"] = r.p2;
  d["warnings"] = r.warnings;
  return d;
}

py::dict fit_plots(const py::list& items, const std::string& mu, const std::string& sigma, int chains,
                   int iterations, int burn_in, int thin, std::uint64_t seed) {
  const auto plots = plots_from(items);
  ModelSpec spec;
  spec.mu_terms = parse_formula(mu);
  spec.sigma_terms = parse_formula(sigma);
  SamplerSchedule s;
  s.chains = chains;
  s.iterations = iterations;
  s.burn_in = burn_in;
  s.thin = thin;
  s.base_seed = seed;
  FittedModel f = [&] {
    py::gil_scoped_release release;
    return fit(spec, plots, s);
  }();
  py::dict d;
  d["coefficient_labels"] = f.draws.coefficient_labels;
  d["coefficients"] = f.draws.coefficients;
  d["tau2_labels"] = f.draws.tau2_labels;
  d["tau2"] = f.draws.tau2;
  d["loglik"] = f.draws.loglik;
  d["criteria"] = criteria_dict(criteria_report("model", f.model, f.data, f.draws));
  py::list fitted;
  for (const auto& fp : fitted_plots(f.model, f.draws, plots)) {
    py::dict row;
    row["id"] = fp.id;
    row["mu_mean"] = fp.mu_mean;
    row["mu_lo"] = fp.mu_lo;
    row["mu_hi"] = fp.mu_hi;
    row["sigma_mean"] = fp.sigma_mean;
    row["sigma_lo"] = fp.sigma_lo;
    row["sigma_hi"] = fp.sigma_hi;
    fitted.append(row);
  }
  d["fitted"] = fitted;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dbhdist, m) {
  m.doc() = "Gamma distributional regression of tree diameter distributions";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("pdf", [](double y, double mu, double sigma) { return pdf(y, GammaParams(mu, sigma)); },
        py::arg("y"), py::arg("mu"), py::arg("sigma"));
  m.def("log_pdf", [](double y, double mu, double sigma) { return log_pdf(y, GammaParams(mu, sigma)); },
        py::arg("y"), py::arg("mu"), py::arg("sigma"));
  m.def("cdf", [](double y, double mu, double sigma) { return cdf(y, GammaParams(mu, sigma)); },
        py::arg("y"), py::arg("mu"), py::arg("sigma"));
  m.def("quantile", [](double u, double mu, double sigma) { return quantile(u, GammaParams(mu, sigma)); },
        py::arg("u"), py::arg("mu"), py::arg("sigma"));
  m.def("quantile_residual",
        [](double y, double mu, double sigma) { return quantile_residual(y, GammaParams(mu, sigma)); },
        py::arg("y"), py::arg("mu"), py::arg("sigma"));
  m.def("sample",
        [](double mu, double sigma, std::size_t n, std::uint64_t seed) {
          Rng rng(seed);
          return sample(GammaParams(mu, sigma), rng, n);
        },
        py::arg("mu"), py::arg("sigma"), py::arg("n"), py::arg("seed") = 1);
  m.def("size_class_probs",
        [](double mu, double sigma, const std::string& classes) {
          return size_class_probs(GammaParams(mu, sigma), SizeClassScheme::parse(classes));
        },
        py::arg("mu"), py::arg("sigma"), py::arg("classes") = "narrative_25_50");

  m.def("compute_dic",
        [](const Eigen::MatrixXd& loglik, double deviance_at_mean) {
          const DicResult r = compute_dic(loglik, deviance_at_mean);
          return py::dict(py::arg("dic") = r.dic, py::arg("edf") = r.edf, py::arg("mean_deviance") = r.mean_deviance);
        },
        py::arg("loglik"), py::arg("deviance_at_posterior_mean"));
  m.def("compute_waic",
        [](const Eigen::MatrixXd& loglik) {
          const WaicResult r = compute_waic(loglik);
          return py::dict(py::arg("lppd") = r.lppd, py::arg("p1") = r.p1, py::arg("p2") = r.p2,
                          py::arg("waic1") = r.waic1, py::arg("waic2") = r.waic2);
        },
        py::arg("loglik"));
  m.def("ks_statistic_normal", &ks_statistic_normal, py::arg("values"));
  m.def("retained_draws",
        [](int chains, int iterations, int burn_in, int thin) {
          SamplerSchedule s;
          s.chains = chains;
          s.iterations = iterations;
          s.burn_in = burn_in;
          s.thin = thin;
          s.validate();
          return s.retained_total();
        },
        py::arg("chains"), py::arg("iterations"), py::arg("burn_in"), py::arg("thin"));

  m.def("fit", &fit_plots, py::arg("plots"), py::arg("mu"), py::arg("sigma") = "1", py::arg("chains") = 4,
        py::arg("iterations") = 2000, py::arg("burn_in") = 500, py::arg("thin") = 5, py::arg("seed") = 1);

  m.def("run",
        [](const std::string& command, const std::map<std::string, std::string>& settings,
           const std::filesystem::path& base_dir) {
          const Config c = make_config(settings, base_dir);
          RunResult r;
          {
            py::gil_scoped_release release;
            if (command == "simulate") r = run_simulate(c);
            else if (command == "fit") r = run_fit(c);
            else if (command == "compare") r = run_compare(c);
            else if (command == "predict") r = run_predict(c);
            else if (command == "effects") r = run_effects(c);
            else if (command == "diagnostics") r = run_diagnostics(c);
            else throw ValidationError("unknown command '" + command + "'");
          }
          return run_result(r);
        },
        py::arg("command"), py::arg("settings"), py::arg("base_dir") = std::filesystem::path("."));
  m.def("settings",
        [](const std::string& command) {
          std::vector<std::tuple<std::string, std::string, std::string>> out;
          for (const auto& d : setting_docs(command)) out.emplace_back(d.key, d.fallback, d.help);
          return out;
        },
        py::arg("command"));
}
