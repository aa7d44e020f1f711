#ifndef TAILRISK_FORECAST_HPP
#define TAILRISK_FORECAST_HPP

#include <optional>
#include <string>
#include <vector>

#include "tailrisk/market_data.hpp"
#include "tailrisk/mcmc.hpp"
#include "tailrisk/model.hpp"

namespace tailrisk {

struct ForecastRecord {
  std::string date;
  double r = 0.0;   // realized return on the forecast day
  double q = 0.0;   // VaR forecast
  double es = 0.0;  // ES forecast
  Variant variant = Variant::ResCaviarOc;
  double alpha = 0.01;
};

struct RollingConfig {
  enum class WindowMode { Expanding, Fixed };
  WindowMode window_mode = WindowMode::Expanding;
  std::size_t refit_interval = 1;  // re-estimate every k out-of-sample steps
  bool warm_start = true;          // previous posterior mean as next start

  void validate() const;
};

/// Per-draw one-step-ahead states, plus their averages (the point forecast).
/// Once the forecast day's return is realized, q_next / w_next are exactly
/// the recursion states to forecast the following day from.
struct ForecastDraws {
  std::vector<double> q_next;
  std::vector<double> w_next;
  double q_mean = 0.0;
  double es_mean = 0.0;
};

/// One-step-ahead forecast from a fitted chain. The overnight return of the
/// forecast day must be supplied for the variants that use it (it is observed
/// at the open, before the day's close). r_last / rv_last are the last
/// estimation-window observations the recursion steps from.
ForecastDraws forecast_next(const ModelSpec& spec, const Chain& chain, double r_last,
                            double rv_last, std::optional<double> oc_next);

/// Carry each draw's state forward after the forecast day's close.
void adopt_states(Chain& chain, const ForecastDraws& draws);

std::vector<ForecastRecord> run_rolling(const ModelSpec& spec, const MarketSeries& series,
                                        const SampleSplit& split, const McmcConfig& mcmc,
                                        const RollingConfig& rolling);

void write_forecast_csv(const std::vector<ForecastRecord>& records, const std::string& path);
std::vector<ForecastRecord> read_forecast_csv(const std::string& path);

}  // namespace tailrisk

#endif
