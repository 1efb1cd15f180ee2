#ifndef DBHDIST_DATA_HPP
#define DBHDIST_DATA_HPP

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dbhdist {

/// Canopy and terrain summaries over one plot disc or prediction pixel.
struct CovariateRecord {
  double mvh = 0.0;    // mean vegetation height, m
  double sdvh = 0.0;   // sd of vegetation height, m
  double p2_5 = 0.0;   // 2.5th percentile of vegetation height, m
  double p97_5 = 0.0;  // 97.5th percentile of vegetation height, m
  double esl = 0.0;    // mean elevation above sea level, m
  double slo = 0.0;    // slope, degrees
  double asp = 0.0;    // aspect, degrees clockwise from north, [0, 360)

  double get(std::string_view name) const;
  void set(std::string_view name, double value);
};

/// Raster-derived covariate names, in file column order.
inline const std::array<std::string, 7> kCovariateNames = {"MVH", "SDVH", "P2.5", "P97.5",
                                                           "ESL", "SLO", "ASP"};
/// Coordinate columns added to every covariate table.
inline const std::array<std::string, 2> kCoordinateNames = {"X", "Y"};

/// The full schema a model term may reference.
std::vector<std::string> covariate_schema();

/// One sample plot: centroid (projected metres), tree DBH list (cm), covariates.
struct PlotObservation {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  std::vector<double> dbh;
  CovariateRecord covariates;
};

/// Named covariate columns of equal length.
class CovariateTable {
 public:
  CovariateTable() = default;
  explicit CovariateTable(Eigen::Index rows) : rows_(rows) {}

  Eigen::Index rows() const { return rows_; }
  bool has(const std::string& name) const { return columns_.count(name) > 0; }
  const Eigen::VectorXd& column(const std::string& name) const;
  void set(const std::string& name, Eigen::VectorXd values);
  std::vector<std::string> names() const;

  static CovariateTable from_records(const std::vector<CovariateRecord>& records,
                                     const std::vector<double>& x,
                                     const std::vector<double>& y);
  static CovariateTable from_plots(const std::vector<PlotObservation>& plots);

 private:
  Eigen::Index rows_ = 0;
  std::map<std::string, Eigen::VectorXd> columns_;
};

}  // namespace dbhdist

#endif  // DBHDIST_DATA_HPP
