#include "tailrisk/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "tailrisk/csv.hpp"
#include "tailrisk/rng.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

void EvalSeries::validate() const {
  if (r.size() != q.size() || r.size() != es.size())
    throw std::invalid_argument("eval series: column lengths differ");
  if (r.empty()) throw std::invalid_argument("eval series: empty");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("eval series: alpha outside (0,1)");
  for (std::size_t t = 0; t < r.size(); ++t)
    if (!(es[t] <= q[t]))
      throw std::invalid_argument("eval series: es > q at position " + std::to_string(t));
}

EvalSeries EvalSeries::from_records(const std::vector<ForecastRecord>& records) {
  if (records.empty()) throw std::invalid_argument("eval series: no records");
  EvalSeries e;
  e.alpha = records.front().alpha;
  for (const auto& rec : records) {
    if (rec.alpha != e.alpha)
      throw std::invalid_argument("eval series: records mix probability levels");
    e.r.push_back(rec.r);
    e.q.push_back(rec.q);
    e.es.push_back(rec.es);
  }
  e.validate();
  return e;
}

ViolationSummary vrate(const EvalSeries& eval) {
  eval.validate();
  ViolationSummary vs;
  for (std::size_t t = 0; t < eval.size(); ++t)
    if (eval.r[t] < eval.q[t]) ++vs.count;
  vs.rate = static_cast<double>(vs.count) / static_cast<double>(eval.size());
  return vs;
}

TestResult uc_test(std::size_t count, std::size_t m, double alpha) {
  if (count > m) throw std::invalid_argument("uc_test: count exceeds m");
  if (m == 0) throw std::invalid_argument("uc_test: m must be positive");
  const auto c = static_cast<double>(count);
  const auto n = static_cast<double>(m);
  const double lr = -2.0 * (stats::xlogy(c, alpha) + stats::xlogy(n - c, 1.0 - alpha) -
                            stats::xlogy(c, c / n) - stats::xlogy(n - c, 1.0 - c / n));
  return {lr, stats::chi2_sf(lr, 1.0)};
}

TestResult cc_test(const std::vector<int>& hits, double alpha) {
  if (hits.size() < 2) throw std::invalid_argument("cc_test: need at least 2 observations");
  double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
  std::size_t count = hits[0] ? 1 : 0;
  for (std::size_t t = 1; t < hits.size(); ++t) {
    if (hits[t]) ++count;
    if (hits[t - 1] == 0)
      (hits[t] == 0 ? n00 : n01) += 1.0;
    else
      (hits[t] == 0 ? n10 : n11) += 1.0;
  }
  const double lr_uc = uc_test(count, hits.size(), alpha).statistic;

  const double p01 = n00 + n01 > 0 ? n01 / (n00 + n01) : 0.0;
  const double p11 = n10 + n11 > 0 ? n11 / (n10 + n11) : 0.0;
  const double p = (n01 + n11) / (n00 + n01 + n10 + n11);
  const double ll_null = stats::xlogy(n01 + n11, p) + stats::xlogy(n00 + n10, 1.0 - p);
  const double ll_markov = stats::xlogy(n01, p01) + stats::xlogy(n00, 1.0 - p01) +
                           stats::xlogy(n11, p11) + stats::xlogy(n10, 1.0 - p11);
  const double lr_ind = -2.0 * (ll_null - ll_markov);
  const double lr_cc = lr_uc + lr_ind;
  return {lr_cc, stats::chi2_sf(lr_cc, 2.0)};
}

TestResult dq_test(const EvalSeries& eval, std::size_t lags) {
  eval.validate();
  const std::size_t m = eval.size();
  if (m <= lags + 2) throw std::invalid_argument("dq_test: series too short for lag count");
  const double alpha = eval.alpha;

  std::vector<double> hit(m);
  for (std::size_t t = 0; t < m; ++t) hit[t] = (eval.r[t] < eval.q[t] ? 1.0 : 0.0) - alpha;

  const std::size_t rows = m - lags;
  const std::size_t cols = lags + 2;
  Eigen::MatrixXd X(rows, cols);
  Eigen::VectorXd y(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t t = i + lags;
    X(i, 0) = 1.0;
    for (std::size_t l = 1; l <= lags; ++l) X(i, l) = hit[t - l];
    X(i, cols - 1) = eval.q[t];
    y(i) = hit[t];
  }
  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::VectorXd xty = X.transpose() * y;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
  if (!lu.isInvertible())
    throw std::runtime_error("dq_test: singular regressor matrix (rank " +
                             std::to_string(lu.rank()) + " of " + std::to_string(cols) + ")");
  const Eigen::VectorXd b = lu.solve(xty);
  const double statistic = b.dot(xtx * b) / (alpha * (1.0 - alpha));
  return {statistic, stats::chi2_sf(statistic, static_cast<double>(cols))};
}

VMeasure v_measure(const EvalSeries& eval) {
  eval.validate();
  std::vector<double> delta(eval.size());
  for (std::size_t t = 0; t < eval.size(); ++t) delta[t] = eval.r[t] - eval.es[t];

  VMeasure vm;
  double sum1 = 0.0;
  std::size_t n1 = 0;
  for (std::size_t t = 0; t < eval.size(); ++t)
    if (eval.r[t] < eval.q[t]) {
      sum1 += delta[t];
      ++n1;
    }
  if (n1 > 0) {
    vm.v1 = sum1 / static_cast<double>(n1);
    vm.v1_defined = true;
  }

  const double q_alpha = stats::quantile_type7(delta, eval.alpha);
  double sum2 = 0.0;
  std::size_t n2 = 0;
  for (double d : delta)
    if (d < q_alpha) {
      sum2 += d;
      ++n2;
    }
  if (n2 > 0) {
    vm.v2 = sum2 / static_cast<double>(n2);
    vm.v2_defined = true;
  }

  if (vm.v1_defined && vm.v2_defined)
    vm.v = 0.5 * (std::abs(vm.v1) + std::abs(vm.v2));
  else if (vm.v1_defined)
    vm.v = std::abs(vm.v1);
  else if (vm.v2_defined)
    vm.v = std::abs(vm.v2);
  else
    vm.v = std::numeric_limits<double>::quiet_NaN();
  return vm;
}

ScoreSeries quantile_score(const EvalSeries& eval) {
  eval.validate();
  ScoreSeries s;
  s.per_t.resize(eval.size());
  for (std::size_t t = 0; t < eval.size(); ++t) {
    const double ind = eval.r[t] <= eval.q[t] ? 1.0 : 0.0;
    s.per_t[t] = (eval.alpha - ind) * (eval.r[t] - eval.q[t]);
    s.sum += s.per_t[t];
  }
  return s;
}

ScoreSeries al_log_score(const EvalSeries& eval) {
  eval.validate();
  ScoreSeries s;
  s.per_t.resize(eval.size());
  const double alpha = eval.alpha;
  for (std::size_t t = 0; t < eval.size(); ++t) {
    const double es = eval.es[t];
    if (!(es < 0.0))
      throw std::domain_error("al_log_score: nonnegative es at position " + std::to_string(t));
    const double ind = eval.r[t] <= eval.q[t] ? 1.0 : 0.0;
    s.per_t[t] = -std::log((alpha - 1.0) / es) -
                 (eval.r[t] - eval.q[t]) * (alpha - ind) / (alpha * es);
    s.sum += s.per_t[t];
  }
  return s;
}

namespace {

double elementary_var(double r, double q, double alpha, double eta) {
  const double ind_r = r <= q ? 1.0 : 0.0;
  const double a = eta <= q ? 1.0 : 0.0;
  const double b = eta <= r ? 1.0 : 0.0;
  return (ind_r - alpha) * (a - b);
}

double elementary_es(double r, double q, double es, double alpha, double eta) {
  double score = 0.0;
  if (eta <= es) score += (1.0 / alpha) * (r <= q ? 1.0 : 0.0) * (q - r) - (q - eta);
  if (eta <= r) score += r - eta;
  return score;
}

MurphyCurve murphy_curve(const EvalSeries& eval, const std::vector<double>& grid,
                         Measure measure) {
  eval.validate();
  if (grid.empty()) throw std::invalid_argument("murphy: empty eta grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i - 1] < grid[i])) throw std::invalid_argument("murphy: grid not ascending");
  MurphyCurve curve;
  curve.measure = measure;
  curve.eta = grid;
  curve.score.assign(grid.size(), 0.0);
  const auto m = static_cast<double>(eval.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    for (std::size_t t = 0; t < eval.size(); ++t)
      sum += measure == Measure::VaR
                 ? elementary_var(eval.r[t], eval.q[t], eval.alpha, grid[g])
                 : elementary_es(eval.r[t], eval.q[t], eval.es[t], eval.alpha, grid[g]);
    curve.score[g] = sum / m;
  }
  return curve;
}

}  // namespace

MurphyCurve murphy_var(const EvalSeries& eval, const std::vector<double>& grid) {
  return murphy_curve(eval, grid, Measure::VaR);
}

MurphyCurve murphy_es(const EvalSeries& eval, const std::vector<double>& grid) {
  return murphy_curve(eval, grid, Measure::ES);
}

std::vector<double> default_murphy_grid(const std::vector<const EvalSeries*>& evals,
                                        std::size_t points) {
  if (evals.empty()) throw std::invalid_argument("murphy grid: no series");
  if (points < 2) throw std::invalid_argument("murphy grid: need at least 2 points");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::vector<double> pooled_r;
  for (const EvalSeries* e : evals) {
    e->validate();
    for (std::size_t t = 0; t < e->size(); ++t) {
      lo = std::min({lo, e->r[t], e->q[t], e->es[t]});
      hi = std::max({hi, e->r[t], e->q[t]});
      pooled_r.push_back(e->r[t]);
    }
  }
  const double pad = pooled_r.size() > 1 ? stats::sample_std(pooled_r) : 1.0;
  const double a = lo - pad;
  const double b = hi + pad;
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

void write_murphy_csv(const std::vector<std::pair<std::string, MurphyCurve>>& curves,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "eta,score,model\n";
  for (const auto& [name, curve] : curves)
    for (std::size_t i = 0; i < curve.eta.size(); ++i)
      out << csv::format_double(curve.eta[i]) << ',' << csv::format_double(curve.score[i]) << ','
          << name << '\n';
}

DominanceResult dominance_test(const EvalSeries& eval_a, const EvalSeries& eval_b,
                               Measure measure, const DominanceConfig& config) {
  eval_a.validate();
  eval_b.validate();
  if (eval_a.size() != eval_b.size())
    throw std::invalid_argument("dominance_test: series lengths differ");
  if (eval_a.alpha != eval_b.alpha)
    throw std::invalid_argument("dominance_test: probability levels differ");
  if (config.replications == 0 || config.expected_block_length < 1.0)
    throw std::invalid_argument("dominance_test: bad bootstrap configuration");

  const std::size_t m = eval_a.size();
  const std::vector<double> grid =
      default_murphy_grid({&eval_a, &eval_b}, config.grid_points);
  const std::size_t g = grid.size();

  // Per-day elementary-score differences d_t(eta), row-major by day.
  std::vector<double> diff(m * g);
  for (std::size_t t = 0; t < m; ++t)
    for (std::size_t i = 0; i < g; ++i) {
      const double sa = measure == Measure::VaR
                            ? elementary_var(eval_a.r[t], eval_a.q[t], eval_a.alpha, grid[i])
                            : elementary_es(eval_a.r[t], eval_a.q[t], eval_a.es[t], eval_a.alpha,
                                            grid[i]);
      const double sb = measure == Measure::VaR
                            ? elementary_var(eval_b.r[t], eval_b.q[t], eval_b.alpha, grid[i])
                            : elementary_es(eval_b.r[t], eval_b.q[t], eval_b.es[t], eval_b.alpha,
                                            grid[i]);
      diff[t * g + i] = sa - sb;
    }

  std::vector<double> mean_diff(g, 0.0);
  for (std::size_t t = 0; t < m; ++t)
    for (std::size_t i = 0; i < g; ++i) mean_diff[i] += diff[t * g + i];
  for (double& v : mean_diff) v /= static_cast<double>(m);
  const double observed = *std::max_element(mean_diff.begin(), mean_diff.end());

  // Stationary bootstrap: geometric block lengths with the configured mean.
  const double restart_prob = 1.0 / config.expected_block_length;
  Rng rng(config.seed);
  std::vector<double> boot_mean(g);
  std::size_t exceed = 0;
  for (std::size_t b = 0; b < config.replications; ++b) {
    std::fill(boot_mean.begin(), boot_mean.end(), 0.0);
    std::size_t idx = static_cast<std::size_t>(rng.below(m));
    for (std::size_t t = 0; t < m; ++t) {
      const double* row = &diff[idx * g];
      for (std::size_t i = 0; i < g; ++i) boot_mean[i] += row[i];
      if (rng.uniform() < restart_prob)
        idx = static_cast<std::size_t>(rng.below(m));
      else
        idx = (idx + 1) % m;
    }
    double stat = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g; ++i)
      stat = std::max(stat, boot_mean[i] / static_cast<double>(m) - mean_diff[i]);
    if (stat >= observed - 1e-12) ++exceed;
  }
  return {observed,
          static_cast<double>(exceed) / static_cast<double>(config.replications)};
}

double score_diff_tstat(const EvalSeries& eval_with, const EvalSeries& eval_without,
                        ScoreKind kind) {
  eval_with.validate();
  eval_without.validate();
  if (eval_with.size() != eval_without.size())
    throw std::invalid_argument("score_diff_tstat: series lengths differ");
  const ScoreSeries s_with =
      kind == ScoreKind::Quantile ? quantile_score(eval_with) : al_log_score(eval_with);
  const ScoreSeries s_without =
      kind == ScoreKind::Quantile ? quantile_score(eval_without) : al_log_score(eval_without);
  const std::size_t m = eval_with.size();
  std::vector<double> delta(m);
  for (std::size_t t = 0; t < m; ++t) delta[t] = s_without.per_t[t] - s_with.per_t[t];
  const double mu = stats::mean(delta);
  const auto lag = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(m))));
  const double sigma = stats::hac_std(delta, lag);
  if (sigma == 0.0) {
    if (mu == 0.0) return 0.0;  // identical scores
    throw std::domain_error("score_diff_tstat: zero long-run variance");
  }
  return std::sqrt(static_cast<double>(m)) * mu / sigma;
}

RankTable rank_models(const std::vector<std::vector<double>>& values,
                      const std::vector<CriterionKind>& kinds, double alpha) {
  const std::size_t n_models = values.size();
  if (n_models < 2) throw std::invalid_argument("rank_models: need at least 2 models");
  const std::size_t n_criteria = kinds.size();
  for (const auto& row : values)
    if (row.size() != n_criteria)
      throw std::invalid_argument("rank_models: ragged criteria matrix");

  RankTable table;
  table.ranks.assign(n_models, std::vector<int>(n_criteria, 0));
  table.sums.assign(n_models, 0);

  constexpr double tie_eps = 1e-12;  // absorbs rounding noise in |rate - alpha|
  for (std::size_t c = 0; c < n_criteria; ++c) {
    // Primary badness, with equidistant-rate ties broken toward the lower
    // (more conservative) rate. Exact ties share a rank and the next rank is
    // skipped.
    std::vector<std::pair<double, double>> keys(n_models);
    for (std::size_t i = 0; i < n_models; ++i) {
      const double v = values[i][c];
      if (!std::isfinite(v))
        throw std::invalid_argument("rank_models: non-finite criterion value");
      keys[i] = kinds[c] == CriterionKind::VRateCloseness
                    ? std::make_pair(std::abs(v - alpha), v)
                    : std::make_pair(v, 0.0);
    }
    auto strictly_less = [&](const std::pair<double, double>& a,
                             const std::pair<double, double>& b) {
      if (a.first < b.first - tie_eps) return true;
      if (a.first > b.first + tie_eps) return false;
      return a.second < b.second;
    };
    for (std::size_t i = 0; i < n_models; ++i) {
      int rank = 1;
      for (std::size_t j = 0; j < n_models; ++j)
        if (strictly_less(keys[j], keys[i])) ++rank;
      table.ranks[i][c] = rank;
      table.sums[i] += rank;
    }
  }
  return table;
}

BacktestReport run_backtests(const EvalSeries& eval, const std::string& model_name) {
  eval.validate();
  BacktestReport report;
  report.model = model_name;
  report.alpha = eval.alpha;
  report.m = eval.size();
  report.violations = vrate(eval);
  report.uc = uc_test(report.violations.count, eval.size(), eval.alpha);
  std::vector<int> hits(eval.size());
  for (std::size_t t = 0; t < eval.size(); ++t) hits[t] = eval.r[t] < eval.q[t] ? 1 : 0;
  report.cc = cc_test(hits, eval.alpha);
  report.dq = dq_test(eval);
  report.rejections_5pct = (report.uc.p_value < 0.05) + (report.cc.p_value < 0.05) +
                           (report.dq.p_value < 0.05);
  report.es_measure = v_measure(eval);
  report.quantile_score_sum = quantile_score(eval).sum;
  report.al_log_score_sum = al_log_score(eval).sum;
  return report;
}

std::string backtest_report_json(const std::vector<BacktestReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j;
    j["model"] = r.model;
    j["alpha"] = r.alpha;
    j["m"] = r.m;
    j["violation_count"] = r.violations.count;
    j["vrate"] = r.violations.rate;
    j["uc"] = {{"statistic", r.uc.statistic}, {"p_value", r.uc.p_value}};
    j["cc"] = {{"statistic", r.cc.statistic}, {"p_value", r.cc.p_value}};
    j["dq"] = {{"statistic", r.dq.statistic}, {"p_value", r.dq.p_value}};
    j["rejections_5pct"] = r.rejections_5pct;
    j["es_evaluation"] = {{"v1", r.es_measure.v1_defined ? nlohmann::json(r.es_measure.v1)
                                                         : nlohmann::json()},
                          {"v2", r.es_measure.v2_defined ? nlohmann::json(r.es_measure.v2)
                                                         : nlohmann::json()},
                          {"v", r.es_measure.v}};
    j["quantile_score_sum"] = r.quantile_score_sum;
    j["al_log_score_sum"] = r.al_log_score_sum;
    out.push_back(j);
  }
  return out.dump(2);
}

}  // namespace tailrisk
