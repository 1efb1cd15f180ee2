#ifndef DBHDIST_TEST_FIXTURES_HPP
#define DBHDIST_TEST_FIXTURES_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "dbhdist/data.hpp"
#include "dbhdist/gamma_family.hpp"
#include "dbhdist/random.hpp"

namespace testing_fixtures {

using dbhdist::PlotObservation;

// Plots with random covariates and gamma trees whose log mean is
// 2.5 + 0.03 (MVH - 15) + 0.1 sin(2 pi ASP / 360) and log sigma -0.3.
inline std::vector<PlotObservation> synthetic_plots(int n_plots, int trees, std::uint64_t seed,
                                                    double log_sigma = -0.3) {
  dbhdist::Rng rng(seed);
  std::vector<PlotObservation> plots;
  for (int i = 0; i < n_plots; ++i) {
    PlotObservation p;
    p.id = "P" + std::to_string(i);
    p.x = 3000.0 * rng.uniform();
    p.y = 3000.0 * rng.uniform();
    auto& c = p.covariates;
    c.mvh = 5.0 + 25.0 * rng.uniform();
    c.sdvh = 1.0 + 6.0 * rng.uniform();
    c.p2_5 = c.mvh * 0.2 * rng.uniform();
    c.p97_5 = c.mvh + 10.0 * rng.uniform();
    c.esl = 400.0 + 800.0 * rng.uniform();
    c.slo = 40.0 * rng.uniform();
    c.asp = 360.0 * rng.uniform();
    const double eta_mu = 2.5 + 0.03 * (c.mvh - 15.0) + 0.1 * std::sin(2.0 * M_PI * c.asp / 360.0);
    p.dbh = dbhdist::sample(dbhdist::GammaParams(std::exp(eta_mu), std::exp(log_sigma)), rng,
                            static_cast<std::size_t>(trees));
    plots.push_back(std::move(p));
  }
  return plots;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("dbhdist_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_fixtures

#endif
