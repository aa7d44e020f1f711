#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ranking_fixture.hpp"
#include "tailrisk/csv.hpp"
#include "tailrisk/evaluation.hpp"
#include "tailrisk/forecast.hpp"
#include "tailrisk/market_data.hpp"
#include "tailrisk/rng.hpp"
#include "tailrisk/synthetic.hpp"

namespace fs = std::filesystem;
using namespace tailrisk;
using Catch::Approx;

namespace {

const fs::path kWork = fs::temp_directory_path() / "tailrisk_cli_tests";

int run_cli(const std::string& args) {
  fs::create_directories(kWork);
  const std::string cmd = std::string(TAILRISK_CLI_PATH) + " " + args + " > " +
                          (kWork / "stdout.txt").string() + " 2> " +
                          (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_sim_series(std::uint64_t seed, std::size_t length) {
  const ModelSpec spec{Variant::ResCaviarOc, 0.025};
  ParamVector p;
  p.beta = {-0.7, 0.3, -1.5, 0.15, -1.1};
  p.gamma = {0.3, 0.3, 0.2};
  SimulationConfig config;
  config.length = length;
  config.innovations = AlInnovations::LikelihoodFamily;
  Rng rng(seed);
  const auto sim = simulate_market(spec, p, config, rng);
  fs::create_directories(kWork);
  const fs::path path = kWork / ("series_" + std::to_string(seed) + ".csv");
  write_series_csv(sim.series, path.string());
  return path;
}

}  // namespace

TEST_CASE("exit codes", "[cli]") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("fit") == 2);                               // missing required option
  CHECK(run_cli("fit --input x.csv --model nope") == 2);    // bad model name
  CHECK(run_cli("summarize --input /does/not/exist.csv") == 1);
}

TEST_CASE("summarize matches the library byte for byte", "[cli]") {
  const fs::path series_path = write_sim_series(3001, 120);
  const fs::path out = kWork / "summary.csv";
  REQUIRE(run_cli("summarize --input " + series_path.string() + " --out " + out.string()) == 0);

  const MarketSeries series = ingest_csv(series_path.string()).series;
  std::ostringstream expected;
  expected << "series,mean,std,skewness,excess_kurtosis,min,max\n";
  for (SeriesField f : {SeriesField::Return, SeriesField::Overnight, SeriesField::RealizedVol}) {
    const SummaryStats st = summarize(series, f);
    expected << field_name(f) << ',' << csv::format_double(st.mean) << ','
             << csv::format_double(st.std) << ',' << csv::format_double(st.skewness) << ','
             << csv::format_double(st.excess_kurtosis) << ',' << csv::format_double(st.min)
             << ',' << csv::format_double(st.max) << '\n';
  }
  CHECK(slurp(out) == expected.str());

  SECTION("json variant parses and agrees on the mean") {
    const fs::path jout = kWork / "summary.json";
    REQUIRE(run_cli("summarize --format json --input " + series_path.string() + " --out " +
                    jout.string()) == 0);
    const auto parsed = nlohmann::json::parse(slurp(jout));
    CHECK(parsed["r"]["mean"].get<double>() == Approx(summarize(series, SeriesField::Return).mean));
  }
}

TEST_CASE("simulate is deterministic and emits the ingest schema", "[cli]") {
  const std::string args =
      "simulate --model res-caviar-oc --alpha 0.025 --beta -0.7 0.3 -1.5 0.15 -1.1 "
      "--gamma 0.3 0.3 0.2 --length 400 --seed 9 --out ";
  REQUIRE(run_cli(args + (kWork / "sim_a").string()) == 0);
  REQUIRE(run_cli(args + (kWork / "sim_b").string()) == 0);
  CHECK(slurp(kWork / "sim_a/series.csv") == slurp(kWork / "sim_b/series.csv"));
  CHECK(slurp(kWork / "sim_a/true_path.csv") == slurp(kWork / "sim_b/true_path.csv"));

  const auto ingested = ingest_csv((kWork / "sim_a/series.csv").string());
  REQUIRE(ingested.series.size() == 400);

  // violation-rate sanity against the emitted true path
  const csv::Table truth = csv::read_file((kWork / "sim_a/true_path.csv").string());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < 400; ++i)
    if (ingested.series.r[i] < csv::parse_double(truth.rows[i][1], i + 2)) ++hits;
  const double rate = static_cast<double>(hits) / 400.0;
  CHECK(rate > 0.005);
  CHECK(rate < 0.06);
}

TEST_CASE("forecast matches run_rolling byte for byte", "[cli]") {
  const fs::path series_path = write_sim_series(3002, 140);
  const fs::path out = kWork / "forecasts_cli.csv";
  REQUIRE(run_cli("forecast --input " + series_path.string() +
                  " --model res-caviar-oc --alpha 0.025 --split-index 130 "
                  "--iters 600 --burn-in 300 --thin 2 --seed 77 --refit-interval 5 --out " +
                  out.string()) == 0);

  const MarketSeries series = ingest_csv(series_path.string()).series;
  const ModelSpec spec{Variant::ResCaviarOc, 0.025};
  McmcConfig mcmc;
  mcmc.total_iters = 600;
  mcmc.burn_in = 300;
  mcmc.thin = 2;
  mcmc.rng_seed = 77;
  RollingConfig rolling;
  rolling.refit_interval = 5;
  const auto records = run_rolling(spec, series, SampleSplit{130, 10}, mcmc, rolling);
  const fs::path lib_out = kWork / "forecasts_lib.csv";
  write_forecast_csv(records, lib_out.string());
  CHECK(slurp(out) == slurp(lib_out));
}

TEST_CASE("backtest report and murphy files", "[cli]") {
  // hand-built forecast fixture: constant forecasts, alternating tail hits
  std::vector<ForecastRecord> records;
  Rng rng(88);
  for (int i = 0; i < 60; ++i) {
    ForecastRecord rec;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "2021-%02d-%02d", 1 + i / 28, 1 + i % 28);
    rec.date = buf;
    rec.r = i % 15 == 7 ? -2.5 - rng.uniform() : rng.normal();
    rec.q = -2.0;
    rec.es = -3.0;
    rec.variant = Variant::ResCaviarOc;
    rec.alpha = 0.05;
    records.push_back(rec);
  }
  fs::create_directories(kWork);
  const fs::path fc = kWork / "bt_fixture.csv";
  write_forecast_csv(records, fc.string());

  const fs::path report = kWork / "report.json";
  const fs::path murphy_dir = kWork / "murphy";
  REQUIRE(run_cli("backtest --forecasts " + fc.string() + " --out " + report.string() +
                  " --murphy-dir " + murphy_dir.string() + " --murphy-points 101") == 0);

  const auto parsed = nlohmann::json::parse(slurp(report));
  REQUIRE(parsed.size() == 1);
  const EvalSeries eval = EvalSeries::from_records(records);
  const BacktestReport expected = run_backtests(eval, "bt_fixture");
  CHECK(parsed[0]["model"] == "bt_fixture");
  CHECK(parsed[0]["violation_count"].get<std::size_t>() == expected.violations.count);
  CHECK(parsed[0]["uc"]["statistic"].get<double>() == Approx(expected.uc.statistic));
  CHECK(parsed[0]["dq"]["p_value"].get<double>() == Approx(expected.dq.p_value));
  CHECK(parsed[0]["quantile_score_sum"].get<double>() == Approx(expected.quantile_score_sum));

  // elementary-score curves vanish at the padded grid ends
  const csv::Table var_curve = csv::read_file((murphy_dir / "murphy_var.csv").string());
  REQUIRE(var_curve.rows.size() == 101);
  CHECK(csv::parse_double(var_curve.rows.front()[1], 2) == 0.0);
  CHECK(csv::parse_double(var_curve.rows.back()[1], 2) == 0.0);
}

TEST_CASE("rank command reproduces the reference blocks", "[cli]") {
  fs::create_directories(kWork);
  const fs::path input = kWork / "criteria.csv";
  {
    std::ofstream out(input);
    out << "market,criterion,kind,res-caviar,es-caviar,es-caviar-oc,res-caviar-oc-minus,"
           "res-caviar-oc\n";
    for (const auto& block : ranking_fixture::blocks_1pct()) {
      auto row = [&](const std::string& name, const std::string& kind,
                     const std::array<double, 5>& v, double scale) {
        out << block.market << ',' << name << ',' << kind;
        for (double x : v) out << ',' << csv::format_double(x * scale);
        out << '\n';
      };
      row("VRate", "vrate", block.vrate_pct, 0.01);
      row("ES", "smaller", block.es_measure, 1.0);
      row("QuantileScore", "smaller", block.quantile_score, 1.0);
      row("ALLogScore", "smaller", block.al_log_score, 1.0);
      row("ESR", "smaller", block.esr_rejections, 1.0);
    }
  }
  const fs::path out_path = kWork / "ranks.csv";
  REQUIRE(run_cli("rank --input " + input.string() + " --alpha 0.01 --out " +
                  out_path.string()) == 0);

  const csv::Table ranks = csv::read_file(out_path.string());
  const auto blocks = ranking_fixture::blocks_1pct();
  std::size_t block_idx = 0;
  for (const auto& row : ranks.rows) {
    if (row[1] == "Sum") {
      REQUIRE(block_idx < blocks.size());
      for (std::size_t m = 0; m < 5; ++m)
        CHECK(csv::parse_double(row[2 + m], 1) == blocks[block_idx].expected_sum[m]);
      ++block_idx;
    }
    if (row[0] == "Total")
      for (std::size_t m = 0; m < 5; ++m)
        CHECK(csv::parse_double(row[2 + m], 1) == ranking_fixture::total_1pct()[m]);
  }
  CHECK(block_idx == 4);

  SECTION("single-model input is a usage-level failure") {
    const fs::path bad = kWork / "criteria_one.csv";
    std::ofstream out(bad);
    out << "market,criterion,kind,only\nUS,VRate,vrate,0.01\n";
    out.close();
    CHECK(run_cli("rank --input " + bad.string() + " --alpha 0.01") == 1);
  }
}

TEST_CASE("fit writes a deterministic posterior summary", "[cli]") {
  const fs::path series_path = write_sim_series(3003, 200);
  const std::string args = "fit --input " + series_path.string() +
                           " --model res-caviar-oc --alpha 0.025 --iters 800 --burn-in 400 "
                           "--thin 2 --seed 5 --out ";
  REQUIRE(run_cli(args + (kWork / "fit_a").string()) == 0);
  REQUIRE(run_cli(args + (kWork / "fit_b").string()) == 0);
  const std::string a = slurp(kWork / "fit_a/posterior_summary.csv");
  CHECK(a == slurp(kWork / "fit_b/posterior_summary.csv"));

  const csv::Table summary = csv::read_file((kWork / "fit_a/posterior_summary.csv").string());
  CHECK(summary.header ==
        std::vector<std::string>{"parameter", "mean", "median", "std", "q2.5", "q97.5"});
  CHECK(summary.rows.size() == 8);
  CHECK(summary.rows[0][0] == "beta1");
  CHECK(fs::exists(kWork / "fit_a/traces.csv"));
  CHECK(fs::exists(kWork / "fit_a/acf.csv"));
  CHECK(fs::exists(kWork / "fit_a/chain.csv"));
}
