#include <cmath>
#include <string>

#include "dbhdist/csv.hpp"
#include "dbhdist/error.hpp"
#include "dbhdist/ingest.hpp"
#include "doctest.h"

using namespace dbhdist;

namespace {

// 200 x 200 cells of 0.5 m over [0, 100) x [0, 100); gentle plane and
// canopy varying with x.
struct Grids {
  Raster dtm{200, 200, 0.0, 0.0, 0.5};
  Raster dsm{200, 200, 0.0, 0.0, 0.5};
  Grids() {
    for (int r = 0; r < 200; ++r) {
      for (int c = 0; c < 200; ++c) {
        dtm.at(r, c) = 600.0 + 0.1 * dtm.x_center(c) + 0.05 * dtm.y_center(r);
        dsm.at(r, c) = dtm.at(r, c) + 5.0 + 0.2 * dtm.x_center(c);
      }
    }
  }
};

CsvTable table(const std::string& text) { return CsvTable::parse(text, "mem.csv"); }

}  // namespace

TEST_CASE("trees below the threshold are dropped and counted") {
  const Grids g;
  const auto plots = table("plot_id,x,y\nA,50,50\n");
  const auto trees = table("plot_id,dbh_cm\nA,4.9\nA,5\nA,12.5\nA,30\n");
  const IngestResult r = ingest(trees, plots, &g.dtm, &g.dsm);
  REQUIRE(r.plots.size() == 1);
  CHECK(r.plots[0].dbh == std::vector<double>{5.0, 12.5, 30.0});
  CHECK(r.report.trees_read == 4);
  CHECK(r.report.trees_dropped == 1);
  CHECK(r.report.trees_retained == 3);
  CHECK(r.report.mean_dbh == doctest::Approx((5.0 + 12.5 + 30.0) / 3.0).epsilon(1e-15));
  CHECK(r.report.text().find("trees_dropped_below_threshold 1") != std::string::npos);
}

TEST_CASE("plot covariates come from the same zonal statistics as pixels") {
  const Grids g;
  const auto plots = table("plot_id,x,y\nA,50,50\nB,30.25,70.5\n");
  const auto trees = table("plot_id,dbh_cm\nA,10\nB,11\n");
  const IngestResult r = ingest(trees, plots, &g.dtm, &g.dsm);
  REQUIRE(r.plots.size() == 2);
  for (const auto& p : r.plots) {
    const ZoneSummary z = zonal_summary(g.dtm, g.dsm, cells_in_disc(g.dtm, p.x, p.y, 20.0));
    for (const auto& name : kCovariateNames) CHECK(p.covariates.get(name) == z.covariates.get(name));
  }
  // Canopy height is 5 + 0.2 x, so the disc mean equals the value at the centre.
  CHECK(r.plots[0].covariates.mvh == doctest::Approx(15.0).epsilon(1e-9));
}

TEST_CASE("validation failures name the offending row") {
  const Grids g;
  const auto plots = table("plot_id,x,y\nA,50,50\n");
  auto message = [&](const std::string& trees_text, const std::string& plots_text) {
    try {
      ingest(table(trees_text), table(plots_text), &g.dtm, &g.dsm);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("plot_id,dbh_cm\nA,10\nA,NaN\n", "plot_id,x,y\nA,50,50\n").find("line 3") != std::string::npos);
  CHECK(message("plot_id,dbh_cm\nA,-2\n", "plot_id,x,y\nA,50,50\n").find("line 2") != std::string::npos);
  CHECK(message("plot_id,dbh_cm\nA,10\n", "plot_id,x,y\nA,50,inf\n").find("line 2") != std::string::npos);
  CHECK(message("plot_id,dbh_cm\nA,10\n", "plot_id,x,y\nA,50,50\nA,60,60\n").find("duplicate") != std::string::npos);
  CHECK(message("plot_id,diameter\nA,10\n", "plot_id,x,y\nA,50,50\n").find("dbh_cm") != std::string::npos);
  CHECK(message("plot_id,dbh_cm\nA,abc\n", "plot_id,x,y\nA,50,50\n").find("line 2") != std::string::npos);
}

TEST_CASE("plots without coverage or trees are excluded with warnings") {
  Grids g;
  // Blank out the western half of the grids.
  for (int r = 0; r < 200; ++r) {
    for (int c = 0; c < 100; ++c) g.dsm.at(r, c) = NAN;
  }
  const auto plots = table("plot_id,x,y\nin,75,50\nedge,45,50\nhalf,55,50\noutside,500,500\nempty,80,80\n");
  const auto trees = table("plot_id,dbh_cm\nin,10\nedge,10\nhalf,10\noutside,10\nempty,3\nghost,20\n");
  const IngestResult r = ingest(trees, plots, &g.dtm, &g.dsm);
  REQUIRE(r.plots.size() == 2);
  CHECK(r.plots[0].id == "in");
  CHECK(r.plots[1].id == "half");
  CHECK(r.report.uncovered_plots == std::vector<std::string>{"edge", "outside"});
  CHECK(r.report.empty_plots == std::vector<std::string>{"empty"});
  CHECK(r.report.trees_unmatched == 1);
  CHECK(r.report.warnings.size() >= 4);
}

TEST_CASE("zero usable plots is an error") {
  const Grids g;
  CHECK_THROWS_AS(ingest(table("plot_id,dbh_cm\nA,1\n"), table("plot_id,x,y\nA,50,50\n"), &g.dtm, &g.dsm),
                  ValidationError);
  CHECK_THROWS_AS(ingest(table("plot_id,dbh_cm\nA,10\n"), table("plot_id,x,y\nA,50,50\n"), nullptr, nullptr),
                  ValidationError);
}

TEST_CASE("covariates from the plot table reproduce a written table exactly") {
  const Grids g;
  const auto plots = table("plot_id,x,y\nA,50,50\nB,30.25,70.5\n");
  const auto trees = table("plot_id,dbh_cm\nA,10.125\nA,7\nB,11\n");
  const IngestResult r = ingest(trees, plots, &g.dtm, &g.dsm);
  IngestOptions o;
  o.covariates_from_table = true;
  const IngestResult back = ingest(table(tree_table_csv(r.plots)), table(plot_table_csv(r.plots)), nullptr, nullptr, o);
  REQUIRE(back.plots.size() == r.plots.size());
  for (std::size_t i = 0; i < r.plots.size(); ++i) {
    CHECK(back.plots[i].id == r.plots[i].id);
    CHECK(back.plots[i].x == r.plots[i].x);
    CHECK(back.plots[i].dbh == r.plots[i].dbh);
    for (const auto& name : kCovariateNames) CHECK(back.plots[i].covariates.get(name) == r.plots[i].covariates.get(name));
  }
  CHECK_THROWS_AS(ingest(trees, plots, nullptr, nullptr, o), ValidationError);
}
