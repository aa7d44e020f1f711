#ifndef TAILRISK_MARKET_DATA_HPP
#define TAILRISK_MARKET_DATA_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace tailrisk {

/// Aligned daily market series: close-to-close log-return x100, overnight
/// (close-to-open) log-return x100, and a realized-volatility proxy, with
/// ISO-8601 dates. Immutable after ingestion; safe for concurrent reads.
struct MarketSeries {
  std::vector<std::string> dates;
  std::vector<double> r;
  std::vector<double> oc;
  std::vector<double> rv;

  std::size_t size() const { return dates.size(); }
  void validate() const;  // lengths, date order, rv >= 0, finiteness
};

struct IngestResult {
  MarketSeries series;
  std::size_t dropped_rows = 0;  // rows skipped due to missing cells
};

/// Column-name mapping for ingestion. Either (date, r, oc, rv) or
/// (date, open, close, rv); when open/close are present and r/oc absent the
/// returns are derived and the first row is consumed as the lag.
struct CsvSchema {
  std::string date = "date";
  std::string r = "r";
  std::string oc = "oc";
  std::string rv = "rv";
  std::string open = "open";
  std::string close = "close";
};

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema = {});

void write_series_csv(const MarketSeries& series, const std::string& path);

/// In-sample / out-of-sample partition: the first n rows are in-sample, the
/// remaining m out-of-sample. Fit-time code is where minimum-length demands
/// live; the split itself only requires both parts non-empty.
struct SampleSplit {
  std::size_t n = 0;
  std::size_t m = 0;
};

SampleSplit split_at_index(const MarketSeries& series, std::size_t n);
/// Rows with date <= boundary are in-sample.
SampleSplit split_at_date(const MarketSeries& series, const std::string& boundary);

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;
  double skewness = 0.0;         // NaN when std == 0
  double excess_kurtosis = 0.0;  // NaN when std == 0
  double min = 0.0;
  double max = 0.0;
  bool moments_defined = true;   // false for zero-variance input
};

enum class SeriesField { Return, Overnight, RealizedVol };

SummaryStats summarize(const MarketSeries& series, SeriesField field);
SummaryStats summarize(const std::vector<double>& values);

const std::vector<double>& field_values(const MarketSeries& series, SeriesField field);
std::string field_name(SeriesField field);

}  // namespace tailrisk

#endif
