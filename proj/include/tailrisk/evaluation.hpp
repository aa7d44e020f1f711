#ifndef TAILRISK_EVALUATION_HPP
#define TAILRISK_EVALUATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tailrisk/forecast.hpp"

namespace tailrisk {

/// Aligned out-of-sample triples (realized return, VaR forecast, ES forecast)
/// at one probability level. Immutable; every evaluation below is a pure
/// function of it.
struct EvalSeries {
  std::vector<double> r;
  std::vector<double> q;
  std::vector<double> es;
  double alpha = 0.01;

  std::size_t size() const { return r.size(); }
  void validate() const;
  static EvalSeries from_records(const std::vector<ForecastRecord>& records);
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Count and rate of days with r < q (strict inequality).
struct ViolationSummary {
  std::size_t count = 0;
  double rate = 0.0;
};
ViolationSummary vrate(const EvalSeries& eval);

/// Unconditional-coverage likelihood ratio against chi-squared(1).
TestResult uc_test(std::size_t count, std::size_t m, double alpha);

/// Conditional coverage: UC plus first-order Markov independence, against
/// chi-squared(2). Zero-count transition cells contribute nothing.
TestResult cc_test(const std::vector<int>& hits, double alpha);

/// Out-of-sample dynamic-quantile regression test: demeaned hits on an
/// intercept, `lags` lagged hits, and the contemporaneous VaR forecast;
/// statistic against chi-squared(lags + 2).
TestResult dq_test(const EvalSeries& eval, std::size_t lags = 4);

/// Discrepancy measure between realized tail losses and the ES forecasts.
/// v1 averages r - es over violation days; v2 averages it over days where it
/// falls below its own empirical alpha-quantile; v combines the defined
/// parts.
struct VMeasure {
  double v1 = 0.0;
  bool v1_defined = false;
  double v2 = 0.0;
  bool v2_defined = false;
  double v = 0.0;
};
VMeasure v_measure(const EvalSeries& eval);

struct ScoreSeries {
  std::vector<double> per_t;
  double sum = 0.0;
};
/// Pinball / quantile score (alpha - I(r <= q)) (r - q), reported as a sum.
ScoreSeries quantile_score(const EvalSeries& eval);
/// Joint (VaR, ES) score from the asymmetric-Laplace density; requires
/// es < 0 throughout.
ScoreSeries al_log_score(const EvalSeries& eval);

enum class Measure { VaR, ES };

struct MurphyCurve {
  std::vector<double> eta;
  std::vector<double> score;
  Measure measure = Measure::VaR;
};

/// Mean elementary scores over an ascending eta grid.
MurphyCurve murphy_var(const EvalSeries& eval, const std::vector<double>& grid);
MurphyCurve murphy_es(const EvalSeries& eval, const std::vector<double>& grid);

/// Default grid: equally spaced points spanning [min(r,q,es) - std(r),
/// max(r,q) + std(r)] pooled across the given series, so that the VaR curves
/// vanish at both ends and the ES curves at the upper end.
std::vector<double> default_murphy_grid(const std::vector<const EvalSeries*>& evals,
                                        std::size_t points = 501);

void write_murphy_csv(const std::vector<std::pair<std::string, MurphyCurve>>& curves,
                      const std::string& path);

struct DominanceConfig {
  std::size_t replications = 999;
  double expected_block_length = 50.0;
  std::uint64_t seed = 1;
  std::size_t grid_points = 501;
};

struct DominanceResult {
  double statistic = 0.0;  // max over eta of mean elementary-score difference (A - B)
  double p_value = 1.0;
};

/// Stationary-bootstrap test of "A dominates B" across the elementary-score
/// family: large positive max differences reject; the null distribution
/// recentres the bootstrap means at the observed ones.
DominanceResult dominance_test(const EvalSeries& eval_a, const EvalSeries& eval_b,
                               Measure measure, const DominanceConfig& config);

enum class ScoreKind { Quantile, AlLog };

/// Standardized mean score difference sqrt(m) mu / sigma where the per-day
/// differences are S(without) - S(with) and sigma is the Bartlett-kernel
/// long-run standard deviation with lag floor(m^(1/3)).
double score_diff_tstat(const EvalSeries& eval_with, const EvalSeries& eval_without,
                        ScoreKind kind);

enum class CriterionKind {
  VRateCloseness,  // rank by |rate - alpha|; equidistant ties prefer the lower rate
  SmallerBetter,
};

/// Competition ranking (ties share a rank, the next rank is skipped) of
/// models per criterion column. values[model][criterion].
struct RankTable {
  std::vector<std::vector<int>> ranks;  // [model][criterion]
  std::vector<int> sums;                // per model
};
RankTable rank_models(const std::vector<std::vector<double>>& values,
                      const std::vector<CriterionKind>& kinds, double alpha);

struct BacktestReport {
  std::string model;
  double alpha = 0.0;
  std::size_t m = 0;
  ViolationSummary violations;
  TestResult uc;
  TestResult cc;
  TestResult dq;
  int rejections_5pct = 0;  // UC/CC/DQ p-values below 0.05
  VMeasure es_measure;
  double quantile_score_sum = 0.0;
  double al_log_score_sum = 0.0;
};

BacktestReport run_backtests(const EvalSeries& eval, const std::string& model_name);
std::string backtest_report_json(const std::vector<BacktestReport>& reports);

}  // namespace tailrisk

#endif
