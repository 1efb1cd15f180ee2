// dbhdist: simulate, fit, compare, predict, effects, diagnostics.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dbhdist/config.hpp"
#include "dbhdist/error.hpp"
#include "dbhdist/workflow.hpp"

namespace {

using dbhdist::Config;

struct Command {
  std::string name;
  std::string about;
  dbhdist::RunResult (*run)(const Config&);
};

const std::vector<Command> kCommands = {
    {"simulate", "Generate a synthetic landscape, plots, trees, stands and truth files", dbhdist::run_simulate},
    {"fit", "Fit one gamma distributional regression model by MCMC", dbhdist::run_fit},
    {"compare", "Fit several model specifications and rank them by DIC and WAIC", dbhdist::run_compare},
    {"predict", "Predict pixel and stand diameter-class composition from a fit", dbhdist::run_predict},
    {"effects", "Effect curves and ceteris-paribus densities for one covariate", dbhdist::run_effects},
    {"diagnostics", "Convergence and quantile-residual diagnostics of a fit", dbhdist::run_diagnostics},
};

std::string settings_footer(const std::string& command) {
  std::string out = "Settings (key = value in --config, or --set key=value):\n";
  for (const auto& d : dbhdist::setting_docs(command)) {
    std::string line = "  " + d.key;
    if (line.size() < 26) line.resize(26, ' ');
    else line += "  ";
    line += d.help;
    if (!d.fallback.empty()) line += " [default: " + d.fallback + "]";
    out += line + "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gamma distributional regression for stem-diameter distributions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dbhdist " DBHDIST_VERSION);

  struct Options {
    std::string config;
    std::vector<std::string> overrides;
    std::string output;
  };
  std::map<std::string, Options> options;
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : kCommands) {
    auto* sub = app.add_subcommand(c.name, c.about);
    auto& o = options[c.name];
    sub->add_option("-c,--config", o.config, "settings file (key = value lines, # comments)")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", o.overrides, "override a setting, key=value (repeatable)");
    sub->add_option("-o,--output", o.output, "output directory (same as --set output=DIR)");
    sub->footer(settings_footer(c.name));
    subs[c.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (const auto& c : kCommands) {
    if (!subs[c.name]->parsed()) continue;
    const auto& o = options[c.name];
    try {
      Config config = o.config.empty() ? Config{} : Config::read(o.config);
      for (const auto& s : o.overrides) config.apply_override(s);
      if (!o.output.empty()) config.set("output", o.output);
      const dbhdist::RunResult r = c.run(config);
      std::cout << r.summary;
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "wrote " << r.files.size() << " files to " << r.output.string() << "\n";
      return 0;
    } catch (const dbhdist::ValidationError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    } catch (const dbhdist::NumericalError& e) {
      std::cerr << "numerical error: " << e.what() << "\n";
      return 2;
    } catch (const dbhdist::DomainError& e) {
      std::cerr << "numerical error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
