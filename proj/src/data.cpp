#include "dbhdist/data.hpp"

#include "dbhdist/error.hpp"

namespace dbhdist {

double CovariateRecord::get(std::string_view name) const {
  if (name == "MVH") return mvh;
  if (name == "SDVH") return sdvh;
  if (name == "P2.5") return p2_5;
  if (name == "P97.5") return p97_5;
  if (name == "ESL") return esl;
  if (name == "SLO") return slo;
  if (name == "ASP") return asp;
  throw ValidationError("unknown covariate '" + std::string(name) + "'");
}

void CovariateRecord::set(std::string_view name, double value) {
  if (name == "MVH") mvh = value;
  else if (name == "SDVH") sdvh = value;
  else if (name == "P2.5") p2_5 = value;
  else if (name == "P97.5") p97_5 = value;
  else if (name == "ESL") esl = value;
  else if (name == "SLO") slo = value;
  else if (name == "ASP") asp = value;
  else throw ValidationError("unknown covariate '" + std::string(name) + "'");
}

std::vector<std::string> covariate_schema() {
  std::vector<std::string> out(kCovariateNames.begin(), kCovariateNames.end());
  out.insert(out.end(), kCoordinateNames.begin(), kCoordinateNames.end());
  return out;
}

const Eigen::VectorXd& CovariateTable::column(const std::string& name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw ValidationError("covariate '" + name + "' not available");
  return it->second;
}

void CovariateTable::set(const std::string& name, Eigen::VectorXd values) {
  if (values.size() != rows_) {
    throw std::invalid_argument("CovariateTable::set: column '" + name + "' has wrong length");
  }
  columns_[name] = std::move(values);
}

std::vector<std::string> CovariateTable::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : columns_) out.push_back(k);
  return out;
}

CovariateTable CovariateTable::from_records(const std::vector<CovariateRecord>& records,
                                            const std::vector<double>& x,
                                            const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(records.size());
  CovariateTable t(n);
  for (const auto& name : kCovariateNames) {
    Eigen::VectorXd col(n);
    for (Eigen::Index i = 0; i < n; ++i) col(i) = records[static_cast<std::size_t>(i)].get(name);
    t.set(name, std::move(col));
  }
  t.set("X", Eigen::Map<const Eigen::VectorXd>(x.data(), n));
  t.set("Y", Eigen::Map<const Eigen::VectorXd>(y.data(), n));
  return t;
}

CovariateTable CovariateTable::from_plots(const std::vector<PlotObservation>& plots) {
  std::vector<CovariateRecord> records;
  std::vector<double> x, y;
  for (const auto& p : plots) {
    records.push_back(p.covariates);
    x.push_back(p.x);
    y.push_back(p.y);
  }
  return from_records(records, x, y);
}

}  // namespace dbhdist
