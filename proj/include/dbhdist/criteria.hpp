#ifndef DBHDIST_CRITERIA_HPP
#define DBHDIST_CRITERIA_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dbhdist/mcmc.hpp"

namespace dbhdist {

struct DicResult {
  double dic = 0.0;
  double edf = 0.0;
  double mean_deviance = 0.0;
};

struct WaicResult {
  double waic1 = 0.0;
  double p1 = 0.0;
  double waic2 = 0.0;
  double p2 = 0.0;
  double lppd = 0.0;
  Eigen::VectorXd pointwise_lppd;
  Eigen::VectorXd pointwise_p1;
  Eigen::VectorXd pointwise_p2;
  std::size_t negative_p1_terms = 0;   // Jensen violations (numerical)
  std::size_t unstable_terms = 0;      // pointwise variance > 0.4
};

/// `loglik` is draws x pointwise units. DIC = Dbar + edf, edf = Dbar - D(theta_bar).
DicResult compute_dic(const Eigen::MatrixXd& loglik, double deviance_at_posterior_mean);

/// WAIC1/WAIC2 with p1 = 2 sum(lppd_i - mean ll_i), p2 = sum var(ll_i).
WaicResult compute_waic(const Eigen::MatrixXd& loglik);

/// -2 * log-likelihood at the posterior-mean coefficients.
double deviance_at_posterior_mean(const AdditiveModel& model, const ResponseData& data,
                                  const PosteriorDraws& draws);

struct CriteriaReport {
  std::string model;
  double dic = 0.0;
  double edf = 0.0;
  double waic1 = 0.0;
  double waic2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  Eigen::VectorXd pointwise_lppd;
  Eigen::VectorXd pointwise_p1;
  Eigen::VectorXd pointwise_p2;
  std::vector<std::string> warnings;
  std::optional<std::string> error;  // set when the fit failed

  bool ok() const { return !error.has_value(); }
};

CriteriaReport criteria_report(const std::string& name, const AdditiveModel& model,
                               const ResponseData& data, const PosteriorDraws& draws);
CriteriaReport failed_report(const std::string& name, const std::string& message);

struct RankingRow {
  int rank = 0;  // 1 = best; failed models are unranked (0)
  CriteriaReport report;
  bool best_dic = false;
  bool best_waic1 = false;
  bool best_waic2 = false;
  std::string note;
};

/// Sorted by DIC (ties broken by WAIC1); failed fits last.
std::vector<RankingRow> compare(const std::vector<CriteriaReport>& reports);

/// Rows DIC, edf, WAIC1, WAIC2, p1, p2 (plus a best-flag row); one column per
/// model in input order.
std::string comparison_table_csv(const std::vector<CriteriaReport>& reports);
std::string ranking_csv(const std::vector<RankingRow>& rows);

}  // namespace dbhdist

#endif  // DBHDIST_CRITERIA_HPP
