// Command-line front end: thin orchestration over the library. Numeric work
// lives in the library; this file only parses options, wires files, and
// formats output.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "tailrisk/csv.hpp"
#include "tailrisk/evaluation.hpp"
#include "tailrisk/forecast.hpp"
#include "tailrisk/market_data.hpp"
#include "tailrisk/mcmc.hpp"
#include "tailrisk/rng.hpp"
#include "tailrisk/synthetic.hpp"

namespace fs = std::filesystem;
using namespace tailrisk;

namespace {

const std::vector<std::string> kVariantNames = {
    "es-caviar", "res-caviar", "es-caviar-oc", "res-caviar-oc-minus", "res-caviar-oc"};

struct SplitOptions {
  std::optional<std::size_t> index;
  std::optional<std::string> date;

  SampleSplit resolve(const MarketSeries& series) const {
    if (index) return split_at_index(series, *index);
    if (date) return split_at_date(series, *date);
    throw std::runtime_error("either --split-index or --split-date is required");
  }
};

void add_split_options(CLI::App* cmd, SplitOptions& split) {
  auto* idx = cmd->add_option("--split-index", split.index, "in-sample length as a row count");
  auto* date = cmd->add_option("--split-date", split.date, "last in-sample date (YYYY-MM-DD)");
  idx->excludes(date);
}

struct McmcOptions {
  McmcConfig config;

  void attach(CLI::App* cmd) {
    cmd->add_option("--iters", config.total_iters, "total MCMC iterations");
    cmd->add_option("--burn-in", config.burn_in, "burn-in iterations");
    cmd->add_option("--thin", config.thin, "keep every k-th post burn-in draw");
    cmd->add_option("--seed", config.rng_seed, "root RNG seed");
  }
};

struct SchemaOptions {
  CsvSchema schema;

  void attach(CLI::App* cmd) {
    cmd->add_option("--date-col", schema.date, "date column name");
    cmd->add_option("--r-col", schema.r, "return column name");
    cmd->add_option("--oc-col", schema.oc, "overnight-return column name");
    cmd->add_option("--rv-col", schema.rv, "realized-volatility column name");
    cmd->add_option("--open-col", schema.open, "open-price column name");
    cmd->add_option("--close-col", schema.close, "close-price column name");
  }
};

MarketSeries load_series(const std::string& path, const CsvSchema& schema) {
  const IngestResult res = ingest_csv(path, schema);
  if (res.dropped_rows > 0)
    std::cerr << "note: dropped " << res.dropped_rows << " rows with missing fields\n";
  return res.series;
}

std::string summary_csv(const MarketSeries& series) {
  std::ostringstream out;
  out << "series,mean,std,skewness,excess_kurtosis,min,max\n";
  for (SeriesField f : {SeriesField::Return, SeriesField::Overnight, SeriesField::RealizedVol}) {
    const SummaryStats st = summarize(series, f);
    out << field_name(f) << ',' << csv::format_double(st.mean) << ','
        << csv::format_double(st.std) << ',' << csv::format_double(st.skewness) << ','
        << csv::format_double(st.excess_kurtosis) << ',' << csv::format_double(st.min) << ','
        << csv::format_double(st.max) << '\n';
  }
  return out.str();
}

std::string summary_json(const MarketSeries& series) {
  nlohmann::json out;
  for (SeriesField f : {SeriesField::Return, SeriesField::Overnight, SeriesField::RealizedVol}) {
    const SummaryStats st = summarize(series, f);
    nlohmann::json row;
    row["mean"] = st.mean;
    row["std"] = st.std;
    if (st.moments_defined) {
      row["skewness"] = st.skewness;
      row["excess_kurtosis"] = st.excess_kurtosis;
    } else {
      row["skewness"] = nullptr;
      row["excess_kurtosis"] = nullptr;
    }
    row["min"] = st.min;
    row["max"] = st.max;
    out[field_name(f)] = row;
  }
  return out.dump(2);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
  }
}

std::string model_label(const std::string& file) { return fs::path(file).stem().string(); }

void print_backtest_table(const std::vector<BacktestReport>& reports) {
  std::printf("%-24s %6s %8s %9s %9s %9s %5s %9s %12s %12s\n", "model", "viol", "vrate%", "uc_p",
              "cc_p", "dq_p", "rej", "es_eval", "qscore_sum", "alscore_sum");
  for (const auto& r : reports)
    std::printf("%-24s %6zu %8.2f %9.4f %9.4f %9.4f %5d %9.4f %12.4f %12.3f\n", r.model.c_str(),
                r.violations.count, 100.0 * r.violations.rate, r.uc.p_value, r.cc.p_value,
                r.dq.p_value, r.rejections_5pct, r.es_measure.v, r.quantile_score_sum,
                r.al_log_score_sum);
}

int cmd_summarize(const std::string& input, const SchemaOptions& schema,
                  const std::string& format, const std::string& out_path) {
  const MarketSeries series = load_series(input, schema.schema);
  emit(format == "json" ? summary_json(series) : summary_csv(series), out_path);
  return 0;
}

int cmd_fit(const std::string& input, const SchemaOptions& schema, const std::string& model,
            double alpha, const SplitOptions& split_opts, const McmcOptions& mcmc_opts,
            const std::string& out_dir) {
  const MarketSeries series = load_series(input, schema.schema);
  const ModelSpec spec{parse_variant(model), alpha};
  std::size_t n = series.size();
  if (split_opts.index || split_opts.date) n = split_opts.resolve(series).n;
  if (n < 100) std::cerr << "warning: in-sample window has only " << n << " rows\n";

  const IndexRange window{1, n};
  std::vector<double> in_sample(series.r.begin(),
                                series.r.begin() + static_cast<std::ptrdiff_t>(n));
  const InitialState init = default_initial_state(in_sample, alpha);
  const Chain chain = sample(spec, series, init, window, mcmc_opts.config);
  const PosteriorSummary summary = summarize_chain(chain);

  fs::create_directories(out_dir);
  write_posterior_summary_csv(summary, (fs::path(out_dir) / "posterior_summary.csv").string());
  export_diagnostics(chain, out_dir);
  save_chain_csv(chain, (fs::path(out_dir) / "chain.csv").string());

  std::printf("%-10s %10s %10s %10s %10s %10s\n", "parameter", "mean", "median", "std", "2.5%",
              "97.5%");
  for (const auto& p : summary.params)
    std::printf("%-10s %10.4f %10.4f %10.4f %10.4f %10.4f\n", p.name.c_str(), p.mean, p.median,
                p.std, p.q025, p.q975);
  std::printf(
      "rw acceptance (final epoch): beta %.3f gamma %.3f; kernel acceptance: beta %.3f "
      "gamma %.3f\n",
      chain.beta_block.rw_accept_final, chain.gamma_block.rw_accept_final,
      chain.beta_block.ind_accept, chain.gamma_block.ind_accept);
  return 0;
}

int cmd_forecast(const std::string& input, const SchemaOptions& schema, const std::string& model,
                 double alpha, const SplitOptions& split_opts, const McmcOptions& mcmc_opts,
                 const RollingConfig& rolling, const std::string& out_path) {
  const MarketSeries series = load_series(input, schema.schema);
  const ModelSpec spec{parse_variant(model), alpha};
  const SampleSplit split = split_opts.resolve(series);
  const auto records = run_rolling(spec, series, split, mcmc_opts.config, rolling);
  write_forecast_csv(records, out_path);
  std::cerr << "wrote " << records.size() << " forecasts to " << out_path << '\n';
  return 0;
}

int cmd_backtest(const std::vector<std::string>& forecast_files, const std::string& out_path,
                 const std::string& murphy_dir, std::size_t murphy_points) {
  std::vector<BacktestReport> reports;
  std::vector<std::pair<std::string, EvalSeries>> evals;
  for (const auto& file : forecast_files) {
    EvalSeries eval = EvalSeries::from_records(read_forecast_csv(file));
    reports.push_back(run_backtests(eval, model_label(file)));
    evals.emplace_back(model_label(file), std::move(eval));
  }
  print_backtest_table(reports);
  if (!out_path.empty()) emit(backtest_report_json(reports) + "\n", out_path);

  if (!murphy_dir.empty()) {
    fs::create_directories(murphy_dir);
    std::vector<const EvalSeries*> ptrs;
    for (const auto& [name, eval] : evals) ptrs.push_back(&eval);
    const auto grid = default_murphy_grid(ptrs, murphy_points);
    std::vector<std::pair<std::string, MurphyCurve>> var_curves, es_curves;
    for (const auto& [name, eval] : evals) {
      var_curves.emplace_back(name, murphy_var(eval, grid));
      es_curves.emplace_back(name, murphy_es(eval, grid));
    }
    write_murphy_csv(var_curves, (fs::path(murphy_dir) / "murphy_var.csv").string());
    write_murphy_csv(es_curves, (fs::path(murphy_dir) / "murphy_es.csv").string());
  }
  return 0;
}

int cmd_rank(const std::string& input, double alpha, const std::string& out_path) {
  const csv::Table table = csv::read_file(input);
  const std::size_t c_market = table.column("market");
  const std::size_t c_rule = table.column("criterion");
  const std::size_t c_kind = table.column("kind");
  if (table.header.size() < c_kind + 3)
    throw std::runtime_error("rank: need at least two model columns");
  const std::size_t first_model = c_kind + 1;
  const std::size_t n_models = table.header.size() - first_model;

  // group rows by market, preserving input order
  std::vector<std::string> market_order;
  std::map<std::string, std::vector<std::size_t>> rows_by_market;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string& market = table.rows[i][c_market];
    if (!rows_by_market.count(market)) market_order.push_back(market);
    rows_by_market[market].push_back(i);
  }

  std::ostringstream out;
  out << "market,criterion";
  for (std::size_t m = 0; m < n_models; ++m) out << ',' << table.header[first_model + m];
  out << '\n';

  std::vector<int> totals(n_models, 0);
  for (const auto& market : market_order) {
    const auto& row_ids = rows_by_market[market];
    std::vector<std::vector<double>> values(n_models, std::vector<double>(row_ids.size()));
    std::vector<CriterionKind> kinds;
    for (std::size_t c = 0; c < row_ids.size(); ++c) {
      const auto& row = table.rows[row_ids[c]];
      const std::string& kind = row[c_kind];
      if (kind == "vrate")
        kinds.push_back(CriterionKind::VRateCloseness);
      else if (kind == "smaller")
        kinds.push_back(CriterionKind::SmallerBetter);
      else
        throw std::runtime_error("rank: unknown criterion kind '" + kind + "'");
      for (std::size_t m = 0; m < n_models; ++m)
        values[m][c] = csv::parse_double(row[first_model + m], row_ids[c] + 2);
    }
    const RankTable ranks = rank_models(values, kinds, alpha);
    for (std::size_t c = 0; c < row_ids.size(); ++c) {
      out << market << ',' << table.rows[row_ids[c]][c_rule];
      for (std::size_t m = 0; m < n_models; ++m) out << ',' << ranks.ranks[m][c];
      out << '\n';
    }
    out << market << ",Sum";
    for (std::size_t m = 0; m < n_models; ++m) {
      out << ',' << ranks.sums[m];
      totals[m] += ranks.sums[m];
    }
    out << '\n';
  }
  out << "Total,";
  for (int t : totals) out << ',' << t;
  out << '\n';
  emit(out.str(), out_path);
  return 0;
}

int cmd_simulate(const std::string& model, double alpha, std::vector<double> beta,
                 const std::vector<double>& gamma, SimulationConfig config, std::uint64_t seed,
                 const std::string& innovations, const std::string& out_dir) {
  const ModelSpec spec{parse_variant(model), alpha};
  ParamVector params;
  params.beta = std::move(beta);
  if (gamma.size() != 3) throw std::runtime_error("simulate: --gamma needs exactly 3 values");
  std::copy(gamma.begin(), gamma.end(), params.gamma.begin());
  if (!constraints_ok(spec, params))
    throw std::runtime_error("simulate: parameters violate the variant's constraint set");
  config.innovations = innovations == "likelihood" ? AlInnovations::LikelihoodFamily
                                                   : AlInnovations::TailCalibrated;
  Rng rng(Rng::substream(seed, "simulate", 0).next_u64());
  const SimulatedMarket sim = simulate_market(spec, params, config, rng);

  fs::create_directories(out_dir);
  write_series_csv(sim.series, (fs::path(out_dir) / "series.csv").string());
  write_risk_path_csv(sim.true_path, sim.series, IndexRange{0, sim.series.size()},
                      (fs::path(out_dir) / "true_path.csv").string());
  std::cerr << "wrote " << sim.series.size() << " rows to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint VaR/ES forecasting and backtesting for CAViaR-family models"};
  app.require_subcommand(1);
  app.set_config("--config", "", "configuration file (INI; sections per subcommand)");

  auto* summarize_cmd = app.add_subcommand("summarize", "descriptive statistics of a series");
  std::string in_path, out_path, format = "csv";
  SchemaOptions schema;
  summarize_cmd->add_option("--input", in_path, "input CSV")->required();
  summarize_cmd->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  summarize_cmd->add_option("--out", out_path, "output file (default stdout)");
  schema.attach(summarize_cmd);

  auto* fit_cmd = app.add_subcommand("fit", "estimate a model on the in-sample window");
  std::string fit_in, fit_model = "res-caviar-oc", fit_out = "fit-out";
  double fit_alpha = 0.01;
  SplitOptions fit_split;
  McmcOptions fit_mcmc;
  SchemaOptions fit_schema;
  fit_cmd->add_option("--input", fit_in)->required();
  fit_cmd->add_option("--model", fit_model)->check(CLI::IsMember(kVariantNames));
  fit_cmd->add_option("--alpha", fit_alpha)->check(CLI::Range(1e-6, 0.5));
  fit_cmd->add_option("--out", fit_out, "output directory");
  add_split_options(fit_cmd, fit_split);
  fit_mcmc.attach(fit_cmd);
  fit_schema.attach(fit_cmd);

  auto* fc_cmd = app.add_subcommand("forecast", "rolling one-step-ahead forecasts");
  std::string fc_in, fc_model = "res-caviar-oc", fc_out = "forecasts.csv";
  double fc_alpha = 0.01;
  std::string fc_window = "expanding";
  SplitOptions fc_split;
  McmcOptions fc_mcmc;
  SchemaOptions fc_schema;
  RollingConfig rolling;
  fc_cmd->add_option("--input", fc_in)->required();
  fc_cmd->add_option("--model", fc_model)->check(CLI::IsMember(kVariantNames));
  fc_cmd->add_option("--alpha", fc_alpha)->check(CLI::Range(1e-6, 0.5));
  fc_cmd->add_option("--out", fc_out, "forecast CSV path");
  fc_cmd->add_option("--refit-interval", rolling.refit_interval, "re-estimate every k steps");
  fc_cmd->add_option("--window-mode", fc_window)->check(CLI::IsMember({"expanding", "fixed"}));
  fc_cmd->add_flag("--no-warm-start", "restart each refit from the default initializer");
  add_split_options(fc_cmd, fc_split);
  fc_mcmc.attach(fc_cmd);
  fc_schema.attach(fc_cmd);

  auto* bt_cmd = app.add_subcommand("backtest", "score and test forecast files");
  std::vector<std::string> bt_files;
  std::string bt_out, bt_murphy_dir;
  std::size_t bt_points = 501;
  bt_cmd->add_option("--forecasts", bt_files, "forecast CSVs, one per model")
      ->required()
      ->expected(-1);
  bt_cmd->add_option("--out", bt_out, "report JSON path");
  bt_cmd->add_option("--murphy-dir", bt_murphy_dir, "also write elementary-score curves here");
  bt_cmd->add_option("--murphy-points", bt_points);

  auto* murphy_cmd = app.add_subcommand("murphy", "elementary-score curves only");
  std::vector<std::string> murphy_files;
  std::string murphy_out = "murphy-out";
  std::size_t murphy_points = 501;
  murphy_cmd->add_option("--forecasts", murphy_files)->required()->expected(-1);
  murphy_cmd->add_option("--out-dir", murphy_out);
  murphy_cmd->add_option("--points", murphy_points);

  auto* rank_cmd = app.add_subcommand("rank", "multi-criteria model ranking");
  std::string rank_in, rank_out;
  double rank_alpha = 0.01;
  rank_cmd->add_option("--input", rank_in, "criteria CSV (market,criterion,kind,models...)")
      ->required();
  rank_cmd->add_option("--alpha", rank_alpha)->check(CLI::Range(1e-6, 0.5));
  rank_cmd->add_option("--out", rank_out, "output CSV (default stdout)");

  auto* sim_cmd = app.add_subcommand("simulate", "synthetic series with known risk dynamics");
  std::string sim_model = "res-caviar-oc", sim_out = "sim-out", sim_innovations = "tail";
  double sim_alpha = 0.025;
  std::vector<double> sim_beta, sim_gamma;
  SimulationConfig sim_config;
  std::uint64_t sim_seed = 1;
  sim_cmd->add_option("--model", sim_model)->check(CLI::IsMember(kVariantNames));
  sim_cmd->add_option("--alpha", sim_alpha)->check(CLI::Range(1e-6, 0.5));
  sim_cmd->add_option("--beta", sim_beta, "quantile-equation coefficients")
      ->required()
      ->expected(-1);
  sim_cmd->add_option("--gamma", sim_gamma, "three gap coefficients")->required()->expected(3);
  sim_cmd->add_option("--length", sim_config.length, "rows to generate");
  sim_cmd->add_option("--seed", sim_seed);
  sim_cmd->add_option("--innovations", sim_innovations)
      ->check(CLI::IsMember({"tail", "likelihood"}));
  sim_cmd->add_option("--out", sim_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(summarize_cmd))
      return cmd_summarize(in_path, schema, format, out_path);
    if (app.got_subcommand(fit_cmd))
      return cmd_fit(fit_in, fit_schema, fit_model, fit_alpha, fit_split, fit_mcmc, fit_out);
    if (app.got_subcommand(fc_cmd)) {
      rolling.window_mode = fc_window == "fixed" ? RollingConfig::WindowMode::Fixed
                                                 : RollingConfig::WindowMode::Expanding;
      rolling.warm_start = fc_cmd->count("--no-warm-start") == 0;
      return cmd_forecast(fc_in, fc_schema, fc_model, fc_alpha, fc_split, fc_mcmc, rolling,
                          fc_out);
    }
    if (app.got_subcommand(bt_cmd)) return cmd_backtest(bt_files, bt_out, bt_murphy_dir, bt_points);
    if (app.got_subcommand(murphy_cmd))
      return cmd_backtest(murphy_files, "", murphy_out, murphy_points);
    if (app.got_subcommand(rank_cmd)) return cmd_rank(rank_in, rank_alpha, rank_out);
    if (app.got_subcommand(sim_cmd))
      return cmd_simulate(sim_model, sim_alpha, sim_beta, sim_gamma, sim_config, sim_seed,
                          sim_innovations, sim_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
