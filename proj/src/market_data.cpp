#include "tailrisk/market_data.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "tailrisk/csv.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

namespace {

bool looks_like_iso_date(const std::string& d) {
  if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (d[i] < '0' || d[i] > '9') return false;
  return true;
}

}  // namespace

void MarketSeries::validate() const {
  const std::size_t n = dates.size();
  if (r.size() != n || oc.size() != n || rv.size() != n)
    throw std::runtime_error("market series: column lengths differ");
  if (n < 2) throw std::runtime_error("market series: need at least 2 rows");
  for (std::size_t i = 0; i < n; ++i) {
    if (!looks_like_iso_date(dates[i]))
      throw std::runtime_error("market series: date '" + dates[i] + "' is not YYYY-MM-DD");
    if (i > 0 && !(dates[i - 1] < dates[i]))
      throw std::runtime_error("market series: dates not strictly increasing at row " +
                               std::to_string(i + 1) + " (" + dates[i] + ")");
    if (!(rv[i] >= 0.0))
      throw std::runtime_error("market series: negative rv at " + dates[i]);
    if (!std::isfinite(r[i]) || !std::isfinite(oc[i]) || !std::isfinite(rv[i]))
      throw std::runtime_error("market series: non-finite value at " + dates[i]);
  }
}

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema) {
  const csv::Table table = csv::read_file(path);

  const bool has_returns = table.has_column(schema.r) && table.has_column(schema.oc);
  const bool has_prices = table.has_column(schema.open) && table.has_column(schema.close);
  if (!table.has_column(schema.date) || !table.has_column(schema.rv) ||
      (!has_returns && !has_prices))
    throw std::runtime_error(
        "ingest: columns must include date and rv plus either (r, oc) or (open, close)");

  const std::size_t c_date = table.column(schema.date);
  const std::size_t c_rv = table.column(schema.rv);

  IngestResult out;
  MarketSeries& s = out.series;

  if (has_returns) {
    const std::size_t c_r = table.column(schema.r);
    const std::size_t c_oc = table.column(schema.oc);
    std::size_t row_no = 1;
    for (const auto& row : table.rows) {
      ++row_no;
      if (row.size() <= std::max({c_date, c_r, c_oc, c_rv}))
        throw std::runtime_error("ingest: short row at data row " + std::to_string(row_no));
      if (csv::is_missing(row[c_r]) || csv::is_missing(row[c_oc]) ||
          csv::is_missing(row[c_rv]) || csv::is_missing(row[c_date])) {
        ++out.dropped_rows;
        continue;
      }
      s.dates.push_back(row[c_date]);
      s.r.push_back(csv::parse_double(row[c_r], row_no));
      s.oc.push_back(csv::parse_double(row[c_oc], row_no));
      s.rv.push_back(csv::parse_double(row[c_rv], row_no));
    }
  } else {
    // schema B: derive r_t = 100 (ln C_t - ln C_{t-1}), oc_t = 100 (ln O_t - ln C_{t-1});
    // the first retained price row only supplies the lagged close.
    const std::size_t c_open = table.column(schema.open);
    const std::size_t c_close = table.column(schema.close);
    bool have_prev = false;
    double prev_close = 0.0;
    std::size_t row_no = 1;
    for (const auto& row : table.rows) {
      ++row_no;
      if (row.size() <= std::max({c_date, c_open, c_close, c_rv}))
        throw std::runtime_error("ingest: short row at data row " + std::to_string(row_no));
      if (csv::is_missing(row[c_open]) || csv::is_missing(row[c_close]) ||
          csv::is_missing(row[c_rv]) || csv::is_missing(row[c_date])) {
        ++out.dropped_rows;
        continue;
      }
      const double open = csv::parse_double(row[c_open], row_no);
      const double close = csv::parse_double(row[c_close], row_no);
      if (open <= 0.0 || close <= 0.0)
        throw std::runtime_error("ingest: non-positive price at data row " + std::to_string(row_no));
      if (!have_prev) {
        prev_close = close;
        have_prev = true;
        continue;
      }
      s.dates.push_back(row[c_date]);
      s.r.push_back(100.0 * (std::log(close) - std::log(prev_close)));
      s.oc.push_back(100.0 * (std::log(open) - std::log(prev_close)));
      s.rv.push_back(csv::parse_double(row[c_rv], row_no));
      prev_close = close;
    }
  }

  if (s.dates.empty()) throw std::runtime_error("ingest: no usable rows in " + path);
  s.validate();
  return out;
}

void write_series_csv(const MarketSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "date,r,oc,rv\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out << series.dates[i] << ',' << csv::format_double(series.r[i]) << ','
        << csv::format_double(series.oc[i]) << ',' << csv::format_double(series.rv[i]) << '\n';
}

SampleSplit split_at_index(const MarketSeries& series, std::size_t n) {
  if (n < 1 || n >= series.size())
    throw std::invalid_argument("split: boundary must leave both parts non-empty");
  return SampleSplit{n, series.size() - n};
}

SampleSplit split_at_date(const MarketSeries& series, const std::string& boundary) {
  std::size_t n = 0;
  while (n < series.size() && series.dates[n] <= boundary) ++n;
  return split_at_index(series, n);
}

SummaryStats summarize(const std::vector<double>& values) {
  if (values.size() < 4)
    throw std::invalid_argument("summarize: need at least 4 observations");
  SummaryStats st;
  st.mean = stats::mean(values);
  st.std = stats::sample_std(values);
  st.min = *std::min_element(values.begin(), values.end());
  st.max = *std::max_element(values.begin(), values.end());
  if (st.std == 0.0) {
    st.moments_defined = false;
    st.skewness = std::numeric_limits<double>::quiet_NaN();
    st.excess_kurtosis = std::numeric_limits<double>::quiet_NaN();
  } else {
    st.skewness = stats::skewness(values);
    st.excess_kurtosis = stats::excess_kurtosis(values);
  }
  return st;
}

SummaryStats summarize(const MarketSeries& series, SeriesField field) {
  return summarize(field_values(series, field));
}

const std::vector<double>& field_values(const MarketSeries& series, SeriesField field) {
  switch (field) {
    case SeriesField::Return: return series.r;
    case SeriesField::Overnight: return series.oc;
    case SeriesField::RealizedVol: return series.rv;
  }
  throw std::logic_error("field_values: bad field");
}

std::string field_name(SeriesField field) {
  switch (field) {
    case SeriesField::Return: return "r";
    case SeriesField::Overnight: return "oc";
    case SeriesField::RealizedVol: return "rv";
  }
  return "";
}

}  // namespace tailrisk
