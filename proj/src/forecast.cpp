#include "tailrisk/forecast.hpp"

#include <fstream>
#include <stdexcept>

#include "tailrisk/csv.hpp"
#include "tailrisk/rng.hpp"

namespace tailrisk {

void RollingConfig::validate() const {
  if (refit_interval == 0) throw std::invalid_argument("rolling config: refit_interval >= 1");
}

ForecastDraws forecast_next(const ModelSpec& spec, const Chain& chain, double r_last,
                            double rv_last, std::optional<double> oc_next) {
  if (chain.draws.empty()) throw std::runtime_error("forecast_next: chain has no retained draws");
  if (spec.uses_overnight() && !oc_next.has_value())
    throw std::invalid_argument("forecast_next: variant needs the forecast day's overnight return");
  const double oc = oc_next.value_or(0.0);

  ForecastDraws out;
  out.q_next.resize(chain.draws.size());
  out.w_next.resize(chain.draws.size());
  double q_sum = 0.0;
  double es_sum = 0.0;
  for (std::size_t j = 0; j < chain.draws.size(); ++j) {
    const ParamVector& p = chain.draws[j];
    const double q = quantile_step(spec, p, chain.q_term[j], r_last, rv_last, oc);
    const double w = gap_step(p, chain.q_term[j], r_last, chain.w_term[j]);
    out.q_next[j] = q;
    out.w_next[j] = w;
    q_sum += q;
    es_sum += q - w;
  }
  const auto n = static_cast<double>(chain.draws.size());
  out.q_mean = q_sum / n;
  out.es_mean = es_sum / n;
  return out;
}

void adopt_states(Chain& chain, const ForecastDraws& draws) {
  if (draws.q_next.size() != chain.draws.size())
    throw std::invalid_argument("adopt_states: draw-count mismatch");
  chain.q_term = draws.q_next;
  chain.w_term = draws.w_next;
}

std::vector<ForecastRecord> run_rolling(const ModelSpec& spec, const MarketSeries& series,
                                        const SampleSplit& split, const McmcConfig& mcmc,
                                        const RollingConfig& rolling) {
  rolling.validate();
  if (split.n + split.m != series.size())
    throw std::invalid_argument("run_rolling: split does not match series length");
  if (split.m < 1) throw std::invalid_argument("run_rolling: no out-of-sample days");
  if (split.n < 2) throw std::invalid_argument("run_rolling: in-sample window too short");

  std::vector<ForecastRecord> records;
  records.reserve(split.m);

  Chain chain;
  ParamVector warm;
  for (std::size_t h = 0; h < split.m; ++h) {
    const std::size_t forecast_idx = split.n + h;  // day being forecast
    if (h % rolling.refit_interval == 0) {
      // Refit on the window ending the day before the forecast day. The
      // window starts at index 1 (expanding) or slides to keep n days
      // (fixed), since index 0 only supplies lagged covariates.
      IndexRange window;
      window.last = forecast_idx;
      window.first = rolling.window_mode == RollingConfig::WindowMode::Expanding
                         ? 1
                         : forecast_idx - split.n + 1;
      std::vector<double> window_returns(series.r.begin() + static_cast<std::ptrdiff_t>(window.first),
                                         series.r.begin() + static_cast<std::ptrdiff_t>(window.last));
      const InitialState init = default_initial_state(window_returns, spec.alpha);
      McmcConfig step_config = mcmc;
      step_config.rng_seed = Rng::substream(mcmc.rng_seed, "refit", h).next_u64();
      if (rolling.warm_start && h > 0) step_config.start_override = warm;
      chain = sample(spec, series, init, window, step_config);
      warm = chain.posterior_mean();
    }
    const std::optional<double> oc_next =
        spec.uses_overnight() ? std::optional<double>(series.oc[forecast_idx]) : std::nullopt;
    const ForecastDraws draws = forecast_next(spec, chain, series.r[forecast_idx - 1],
                                              series.rv[forecast_idx - 1], oc_next);
    ForecastRecord rec;
    rec.date = series.dates[forecast_idx];
    rec.r = series.r[forecast_idx];
    rec.q = draws.q_mean;
    rec.es = draws.es_mean;
    rec.variant = spec.variant;
    rec.alpha = spec.alpha;
    records.push_back(rec);
    adopt_states(chain, draws);
  }
  return records;
}

void write_forecast_csv(const std::vector<ForecastRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "date,r,q,es,variant,alpha\n";
  for (const auto& rec : records)
    out << rec.date << ',' << csv::format_double(rec.r) << ',' << csv::format_double(rec.q) << ','
        << csv::format_double(rec.es) << ',' << variant_name(rec.variant) << ','
        << csv::format_double(rec.alpha) << '\n';
}

std::vector<ForecastRecord> read_forecast_csv(const std::string& path) {
  const csv::Table table = csv::read_file(path);
  const std::size_t c_date = table.column("date");
  const std::size_t c_r = table.column("r");
  const std::size_t c_q = table.column("q");
  const std::size_t c_es = table.column("es");
  const std::size_t c_variant = table.column("variant");
  const std::size_t c_alpha = table.column("alpha");
  std::vector<ForecastRecord> records;
  std::size_t row_no = 1;
  for (const auto& row : table.rows) {
    ++row_no;
    ForecastRecord rec;
    rec.date = row[c_date];
    rec.r = csv::parse_double(row[c_r], row_no);
    rec.q = csv::parse_double(row[c_q], row_no);
    rec.es = csv::parse_double(row[c_es], row_no);
    rec.variant = parse_variant(row[c_variant]);
    rec.alpha = csv::parse_double(row[c_alpha], row_no);
    records.push_back(rec);
  }
  if (records.empty()) throw std::runtime_error("forecast file has no rows: " + path);
  return records;
}

}  // namespace tailrisk
