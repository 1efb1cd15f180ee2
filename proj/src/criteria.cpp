#include "dbhdist/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dbhdist/csv.hpp"
#include "dbhdist/error.hpp"

namespace dbhdist {

DicResult compute_dic(const Eigen::MatrixXd& loglik, double deviance_at_posterior_mean) {
  if (loglik.rows() < 2) throw ValidationError("DIC needs at least 2 draws");
  DicResult r;
  r.mean_deviance = (-2.0 * loglik.rowwise().sum()).mean();
  r.edf = r.mean_deviance - deviance_at_posterior_mean;
  r.dic = r.mean_deviance + r.edf;
  return r;
}

WaicResult compute_waic(const Eigen::MatrixXd& loglik) {
  const Eigen::Index m = loglik.rows();
  const Eigen::Index n = loglik.cols();
  if (m < 2) throw ValidationError("WAIC needs at least 2 draws");
  WaicResult r;
  r.pointwise_lppd.resize(n);
  r.pointwise_p1.resize(n);
  r.pointwise_p2.resize(n);
  const double log_m = std::log(static_cast<double>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto col = loglik.col(i);
    const double top = col.maxCoeff();
    const double lse = top + std::log((col.array() - top).exp().sum());
    const double lppd_i = lse - log_m;
    const double mean = col.mean();
    r.pointwise_lppd(i) = lppd_i;
    r.pointwise_p1(i) = 2.0 * (lppd_i - mean);
    r.pointwise_p2(i) = (col.array() - mean).square().sum() / static_cast<double>(m - 1);
    if (r.pointwise_p1(i) < 0.0) ++r.negative_p1_terms;
    if (r.pointwise_p2(i) > 0.4) ++r.unstable_terms;
  }
  r.lppd = r.pointwise_lppd.sum();
  r.p1 = r.pointwise_p1.sum();
  r.p2 = r.pointwise_p2.sum();
  r.waic1 = -2.0 * (r.lppd - r.p1);
  r.waic2 = -2.0 * (r.lppd - r.p2);
  return r;
}

double deviance_at_posterior_mean(const AdditiveModel& model, const ResponseData& data,
                                  const PosteriorDraws& draws) {
  PredictorState mean = PredictorState::zeros(model);
  mean.coefficients = draws.coefficients.colwise().mean().transpose();
  return -2.0 * log_likelihood(model, mean, data);
}

CriteriaReport criteria_report(const std::string& name, const AdditiveModel& model,
                               const ResponseData& data, const PosteriorDraws& draws) {
  CriteriaReport rep;
  rep.model = name;
  const DicResult dic = compute_dic(draws.loglik, deviance_at_posterior_mean(model, data, draws));
  const WaicResult waic = compute_waic(draws.loglik);
  rep.dic = dic.dic;
  rep.edf = dic.edf;
  rep.waic1 = waic.waic1;
  rep.waic2 = waic.waic2;
  rep.p1 = waic.p1;
  rep.p2 = waic.p2;
  rep.pointwise_lppd = waic.pointwise_lppd;
  rep.pointwise_p1 = waic.pointwise_p1;
  rep.pointwise_p2 = waic.pointwise_p2;
  if (waic.negative_p1_terms > 0) {
    rep.warnings.push_back(std::to_string(waic.negative_p1_terms) +
                           " pointwise p1 terms are negative");
  }
  if (waic.unstable_terms > 0) {
    rep.warnings.push_back(std::to_string(waic.unstable_terms) +
                           " pointwise log-likelihood variances exceed 0.4; WAIC may be unreliable");
  }
  if (rep.edf < 0.0) rep.warnings.push_back("negative DIC effective parameters");
  for (double v : {rep.dic, rep.edf, rep.waic1, rep.waic2, rep.p1, rep.p2}) {
    if (!std::isfinite(v)) {
      rep.error = "non-finite information criterion";
      break;
    }
  }
  return rep;
}

CriteriaReport failed_report(const std::string& name, const std::string& message) {
  CriteriaReport rep;
  rep.model = name;
  rep.error = message;
  return rep;
}

namespace {

bool same_value(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

std::vector<RankingRow> compare(const std::vector<CriteriaReport>& reports) {
  if (reports.size() < 2) throw ValidationError("compare needs at least 2 models");
  std::vector<RankingRow> rows;
  for (const auto& r : reports) rows.push_back({0, r, false, false, false, ""});
  std::stable_sort(rows.begin(), rows.end(), [](const RankingRow& a, const RankingRow& b) {
    if (a.report.ok() != b.report.ok()) return a.report.ok();
    if (!a.report.ok()) return false;
    if (!same_value(a.report.dic, b.report.dic)) return a.report.dic < b.report.dic;
    return a.report.waic1 < b.report.waic1;
  });
  double best_w1 = INFINITY, best_w2 = INFINITY;
  for (const auto& r : rows) {
    if (!r.report.ok()) continue;
    best_w1 = std::min(best_w1, r.report.waic1);
    best_w2 = std::min(best_w2, r.report.waic2);
  }
  int rank = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& r = rows[i];
    if (!r.report.ok()) {
      r.note = "fit failed: " + *r.report.error;
      continue;
    }
    r.rank = ++rank;
    r.best_dic = r.rank == 1;
    r.best_waic1 = r.report.waic1 == best_w1;
    r.best_waic2 = r.report.waic2 == best_w2;
    const bool tie_prev = i > 0 && rows[i - 1].report.ok() && same_value(rows[i - 1].report.dic, r.report.dic);
    const bool tie_next = i + 1 < rows.size() && rows[i + 1].report.ok() &&
                          same_value(rows[i + 1].report.dic, r.report.dic);
    if (tie_prev || tie_next) r.note = "DIC tie broken by WAIC1";
  }
  return rows;
}

namespace {

std::string num(double v, bool ok) { return ok ? format_double(v) : "NA"; }

}  // namespace

std::string comparison_table_csv(const std::vector<CriteriaReport>& reports) {
  const auto ranking = compare(reports);
  auto is_best = [&](const std::string& model) {
    for (const auto& r : ranking) {
      if (r.report.model == model) return r.best_dic;
    }
    return false;
  };
  std::ostringstream os;
  CsvWriter w(os);
  std::vector<std::string> header{"criterion"};
  for (const auto& r : reports) header.push_back(r.model);
  w.row(header);
  auto add = [&](const std::string& label, auto getter) {
    std::vector<std::string> row{label};
    for (const auto& r : reports) row.push_back(num(getter(r), r.ok()));
    w.row(row);
  };
  add("DIC", [](const CriteriaReport& r) { return r.dic; });
  add("edf", [](const CriteriaReport& r) { return r.edf; });
  add("WAIC1", [](const CriteriaReport& r) { return r.waic1; });
  add("WAIC2", [](const CriteriaReport& r) { return r.waic2; });
  add("p1", [](const CriteriaReport& r) { return r.p1; });
  add("p2", [](const CriteriaReport& r) { return r.p2; });
  std::vector<std::string> best{"best"};
  for (const auto& r : reports) best.push_back(is_best(r.model) ? "*" : "");
  w.row(best);
  return os.str();
}

std::string ranking_csv(const std::vector<RankingRow>& rows) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"rank", "model", "DIC", "edf", "WAIC1", "WAIC2", "p1", "p2", "best_DIC", "best_WAIC1",
         "best_WAIC2", "note"});
  for (const auto& r : rows) {
    const bool ok = r.report.ok();
    w.row({ok ? std::to_string(r.rank) : "NA", r.report.model, num(r.report.dic, ok),
           num(r.report.edf, ok), num(r.report.waic1, ok), num(r.report.waic2, ok),
           num(r.report.p1, ok), num(r.report.p2, ok), r.best_dic ? "1" : "0",
           r.best_waic1 ? "1" : "0", r.best_waic2 ? "1" : "0", r.note});
  }
  return os.str();
}

}  // namespace dbhdist
