#include "tailrisk/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "tailrisk/csv.hpp"
#include "tailrisk/rng.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct TargetEval {
  double logpost = kNegInf;
  double q_last = 0.0;
  double w_last = 0.0;
};

using TargetFn = std::function<TargetEval(const ParamVector&)>;

std::vector<double> flatten(const ParamVector& p) {
  std::vector<double> x(p.beta.begin(), p.beta.end());
  x.insert(x.end(), p.gamma.begin(), p.gamma.end());
  return x;
}

ParamVector unflatten(const std::vector<double>& x, std::size_t k) {
  ParamVector p;
  p.beta.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k));
  for (std::size_t i = 0; i < 3; ++i) p.gamma[i] = x[k + i];
  return p;
}

// Nudge a start point strictly inside the constraint set.
void project_into_constraints(const ModelSpec& spec, ParamVector& p) {
  constexpr double eps = 1e-3;
  auto clamp_ar = [&](double& v) { v = std::clamp(v, -1.0 + eps, 1.0 - eps); };
  auto force_neg = [&](double& v) { if (v >= 0.0) v = -eps; };
  switch (spec.variant) {
    case Variant::EsCaviar: clamp_ar(p.beta[3]); break;
    case Variant::ResCaviar: clamp_ar(p.beta[1]); force_neg(p.beta[2]); break;
    case Variant::EsCaviarOc: clamp_ar(p.beta[1]); force_neg(p.beta[3]); break;
    case Variant::ResCaviarOcMinus:
      clamp_ar(p.beta[1]); force_neg(p.beta[2]); force_neg(p.beta[3]);
      break;
    case Variant::ResCaviarOc:
      clamp_ar(p.beta[1]); force_neg(p.beta[2]); force_neg(p.beta[4]);
      break;
  }
  for (int i = 0; i < 2; ++i) p.gamma[i] = std::max(p.gamma[i], 0.0);
  p.gamma[2] = std::clamp(p.gamma[2], 0.0, 1.0 - eps);
}

// Nelder-Mead ascent on the log target; derivative-free so the pinball kinks
// are harmless. Deterministic.
std::vector<double> refine_start_point(const ModelSpec& spec, const TargetFn& target,
                                       const std::vector<double>& x0, std::size_t k) {
  const std::size_t d = x0.size();
  const std::size_t max_evals = 400 * d;
  std::size_t evals = 0;
  auto objective = [&](const std::vector<double>& x) {
    ++evals;
    const ParamVector p = unflatten(x, k);
    if (!constraints_ok(spec, p)) return std::numeric_limits<double>::infinity();
    const double lp = target(p).logpost;
    return std::isfinite(lp) ? -lp : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(d + 1, x0);
  std::vector<double> fval(d + 1);
  for (std::size_t i = 0; i < d; ++i)
    simplex[i + 1][i] += 0.05 * std::max(1.0, std::abs(x0[i]));
  for (std::size_t i = 0; i <= d; ++i) fval[i] = objective(simplex[i]);

  auto order = [&] {
    std::vector<std::size_t> idx(d + 1);
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fval[a] < fval[b]; });
    std::vector<std::vector<double>> s2(d + 1);
    std::vector<double> f2(d + 1);
    for (std::size_t i = 0; i <= d; ++i) { s2[i] = simplex[idx[i]]; f2[i] = fval[idx[i]]; }
    simplex = std::move(s2);
    fval = std::move(f2);
  };

  while (evals < max_evals) {
    order();
    if (std::isfinite(fval[0]) && std::isfinite(fval[d]) && fval[d] - fval[0] < 1e-10) break;
    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[i][j] / static_cast<double>(d);
    auto blend = [&](double coef) {
      std::vector<double> x(d);
      for (std::size_t j = 0; j < d; ++j) x[j] = centroid[j] + coef * (simplex[d][j] - centroid[j]);
      return x;
    };
    const auto xr = blend(-1.0);
    const double fr = objective(xr);
    if (fr < fval[0]) {
      const auto xe = blend(-2.0);
      const double fe = objective(xe);
      if (fe < fr) { simplex[d] = xe; fval[d] = fe; }
      else { simplex[d] = xr; fval[d] = fr; }
    } else if (fr < fval[d - 1]) {
      simplex[d] = xr;
      fval[d] = fr;
    } else {
      const auto xc = blend(fr < fval[d] ? -0.5 : 0.5);
      const double fc = objective(xc);
      if (fc < std::min(fr, fval[d])) { simplex[d] = xc; fval[d] = fc; }
      else {
        for (std::size_t i = 1; i <= d; ++i) {
          for (std::size_t j = 0; j < d; ++j)
            simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
          fval[i] = objective(simplex[i]);
        }
      }
    }
  }
  order();
  return std::isfinite(fval[0]) ? simplex[0] : x0;
}

// Per-block proposal machinery over a coordinate range of the flattened
// parameter vector.
struct Block {
  std::size_t offset = 0;
  std::size_t dim = 0;
  double scale = 1.0;
  Eigen::MatrixXd rw_chol;           // random-walk shape (Cholesky factor)
  Eigen::VectorXd ind_mean;          // independence-kernel fit
  Eigen::MatrixXd ind_chol;
  Eigen::MatrixXd ind_cov_inv;
  double ind_logdet = 0.0;
  std::size_t epoch_proposals = 0;
  std::size_t epoch_accepts = 0;
  std::size_t total_proposals = 0;
  std::size_t total_accepts = 0;
  std::size_t ind_proposals = 0;
  std::size_t ind_accepts = 0;
  double final_epoch_rate = 0.0;
  std::size_t stalled = 0;
};

Eigen::MatrixXd sample_covariance(const std::vector<std::vector<double>>& rows,
                                  std::size_t offset, std::size_t dim, Eigen::VectorXd& mean) {
  const auto n = static_cast<double>(rows.size());
  mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& row : rows)
    for (std::size_t j = 0; j < dim; ++j) mean[static_cast<Eigen::Index>(j)] += row[offset + j];
  mean /= n;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
  for (const auto& row : rows) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) z[static_cast<Eigen::Index>(j)] = row[offset + j];
    z -= mean;
    cov += z * z.transpose();
  }
  cov /= std::max(1.0, n - 1.0);
  return cov;
}

double mixture_log_density(const Block& b, const Eigen::VectorXd& x, double mix_weight,
                           double inflation) {
  const Eigen::VectorXd z = x - b.ind_mean;
  const double quad = z.dot(b.ind_cov_inv * z);
  const double d = static_cast<double>(b.dim);
  const double narrow = -0.5 * quad - 0.5 * b.ind_logdet;
  const double wide = -0.5 * quad / inflation - 0.5 * (b.ind_logdet + d * std::log(inflation));
  const double a = std::log1p(-mix_weight) + narrow;
  const double c = std::log(mix_weight) + wide;
  const double hi = std::max(a, c);
  return hi + std::log(std::exp(a - hi) + std::exp(c - hi));
}

Chain run_sampler(const ModelSpec& spec, const TargetFn& target, const McmcConfig& config,
                  const InitialState& init, const IndexRange& range) {
  config.validate();
  const std::size_t k = spec.beta_count();

  ParamVector start;
  if (!config.start_override.beta.empty()) {
    if (config.start_override.beta.size() != k)
      throw std::invalid_argument("mcmc: start override has wrong beta count");
    start = config.start_override;
  } else {
    start.beta.assign(k, -0.1);
    start.gamma = {0.1, 0.1, 0.1};
  }
  project_into_constraints(spec, start);

  std::vector<double> x = flatten(start);
  if (config.refine_start) x = refine_start_point(spec, target, x, k);

  ParamVector current = unflatten(x, k);
  TargetEval cur = target(current);
  if (!std::isfinite(cur.logpost))
    throw std::runtime_error("mcmc: starting point has zero posterior mass");

  Rng rng(config.rng_seed);
  const std::size_t N = config.total_iters;
  const std::size_t M = config.burn_in;

  Block beta_block;
  beta_block.offset = 0;
  beta_block.dim = k;
  Block gamma_block;
  gamma_block.offset = k;
  gamma_block.dim = 3;
  for (Block* b : {&beta_block, &gamma_block})
    b->rw_chol = config.rw_initial_scale *
                 Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(b->dim),
                                           static_cast<Eigen::Index>(b->dim));

  std::vector<std::vector<double>> burn_draws;
  burn_draws.reserve(M);

  Chain chain;
  chain.spec = spec;
  chain.init = init;
  chain.window_first = range.first;
  chain.window_last = range.last;
  const std::size_t retained = (N - M) / config.thin;
  chain.draws.reserve(retained);
  chain.q_term.reserve(retained);
  chain.w_term.reserve(retained);

  auto draw_standard_normal = [&](std::size_t d) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) z[static_cast<Eigen::Index>(i)] = rng.normal();
    return z;
  };

  auto rw_update = [&](Block& b) {
    const Eigen::VectorXd step = b.scale * (b.rw_chol * draw_standard_normal(b.dim));
    std::vector<double> cand_x = x;
    for (std::size_t i = 0; i < b.dim; ++i) cand_x[b.offset + i] += step[static_cast<Eigen::Index>(i)];
    ++b.epoch_proposals;
    ++b.total_proposals;
    const ParamVector cand = unflatten(cand_x, k);
    if (!constraints_ok(spec, cand)) return;
    const TargetEval e = target(cand);
    if (std::log(rng.uniform()) < e.logpost - cur.logpost) {
      x = std::move(cand_x);
      current = cand;
      cur = e;
      ++b.epoch_accepts;
      ++b.total_accepts;
    }
  };

  auto ind_update = [&](Block& b) {
    const bool heavy = rng.uniform() < config.heavy_tail_mix_weight;
    Eigen::VectorXd z = b.ind_chol * draw_standard_normal(b.dim);
    if (heavy) z *= std::sqrt(config.heavy_tail_inflation);
    const Eigen::VectorXd cand_block = b.ind_mean + z;
    std::vector<double> cand_x = x;
    for (std::size_t i = 0; i < b.dim; ++i) cand_x[b.offset + i] = cand_block[static_cast<Eigen::Index>(i)];
    ++b.ind_proposals;
    const ParamVector cand = unflatten(cand_x, k);
    if (!constraints_ok(spec, cand)) return;
    const TargetEval e = target(cand);
    Eigen::VectorXd cur_block(static_cast<Eigen::Index>(b.dim));
    for (std::size_t i = 0; i < b.dim; ++i) cur_block[static_cast<Eigen::Index>(i)] = x[b.offset + i];
    const double log_ratio = e.logpost - cur.logpost +
                             mixture_log_density(b, cur_block, config.heavy_tail_mix_weight,
                                                 config.heavy_tail_inflation) -
                             mixture_log_density(b, cand_block, config.heavy_tail_mix_weight,
                                                 config.heavy_tail_inflation);
    if (std::log(rng.uniform()) < log_ratio) {
      x = std::move(cand_x);
      current = cand;
      cur = e;
      ++b.ind_accepts;
    }
  };

  auto adapt_epoch_end = [&](Block& b) {
    const double rate =
        static_cast<double>(b.epoch_accepts) / static_cast<double>(b.epoch_proposals);
    b.final_epoch_rate = rate;
    if (b.epoch_accepts == 0) {
      ++b.stalled;
      b.scale *= 0.5;
    }
    if (rate > config.target_accept_high)
      b.scale *= 1.1;
    else if (rate < config.target_accept_low)
      b.scale *= 0.9;
    b.epoch_accepts = 0;
    b.epoch_proposals = 0;
  };

  auto reshape_from_history = [&](Block& b, std::size_t upto) {
    const std::size_t from = upto / 2;
    std::vector<std::vector<double>> window(burn_draws.begin() + static_cast<std::ptrdiff_t>(from),
                                            burn_draws.begin() + static_cast<std::ptrdiff_t>(upto));
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov = sample_covariance(window, b.offset, b.dim, mean);
    cov *= 2.38 * 2.38 / static_cast<double>(b.dim);
    cov += 1e-8 * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) b.rw_chol = llt.matrixL();
  };

  auto fit_independence_kernel = [&](Block& b) {
    const std::size_t from = M / 2;
    std::vector<std::vector<double>> window(burn_draws.begin() + static_cast<std::ptrdiff_t>(from),
                                            burn_draws.end());
    Eigen::MatrixXd cov = sample_covariance(window, b.offset, b.dim, b.ind_mean);
    cov += 1e-8 * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("mcmc: burn-in covariance is not positive definite");
    b.ind_chol = llt.matrixL();
    b.ind_cov_inv = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < b.ind_chol.rows(); ++i) logdet += 2.0 * std::log(b.ind_chol(i, i));
    b.ind_logdet = logdet;
  };

  for (std::size_t j = 1; j <= N; ++j) {
    if (j <= M) {
      rw_update(beta_block);
      rw_update(gamma_block);
      burn_draws.push_back(x);
      if (j % config.adapt_epoch == 0) {
        adapt_epoch_end(beta_block);
        adapt_epoch_end(gamma_block);
        if (config.shape_adapt && j >= 2 * config.adapt_epoch) {
          reshape_from_history(beta_block, j);
          reshape_from_history(gamma_block, j);
        }
      }
      if (j == M) {
        fit_independence_kernel(beta_block);
        fit_independence_kernel(gamma_block);
      }
    } else {
      ind_update(beta_block);
      ind_update(gamma_block);
      if ((j - M) % config.thin == 0) {
        chain.draws.push_back(current);
        chain.q_term.push_back(cur.q_last);
        chain.w_term.push_back(cur.w_last);
      }
    }
  }

  auto finish = [&](const Block& b, BlockDiagnostics& d) {
    d.rw_accept_final = b.final_epoch_rate;
    d.rw_accept_mean =
        b.total_proposals ? static_cast<double>(b.total_accepts) / static_cast<double>(b.total_proposals)
                          : 0.0;
    d.ind_accept =
        b.ind_proposals ? static_cast<double>(b.ind_accepts) / static_cast<double>(b.ind_proposals)
                        : 0.0;
    d.stalled_epochs = b.stalled;
  };
  finish(beta_block, chain.beta_block);
  finish(gamma_block, chain.gamma_block);
  return chain;
}

}  // namespace

void McmcConfig::validate() const {
  if (burn_in == 0 || burn_in >= total_iters)
    throw std::invalid_argument("mcmc config: need 0 < burn_in < total_iters");
  if (thin == 0) throw std::invalid_argument("mcmc config: thin must be >= 1");
  if (!(0.0 < target_accept_low && target_accept_low < target_accept_high &&
        target_accept_high < 1.0))
    throw std::invalid_argument("mcmc config: acceptance band must satisfy 0 < low < high < 1");
  if (adapt_epoch == 0) throw std::invalid_argument("mcmc config: adapt_epoch must be >= 1");
  if (!(heavy_tail_mix_weight > 0.0 && heavy_tail_mix_weight < 1.0))
    throw std::invalid_argument("mcmc config: heavy_tail_mix_weight must be in (0,1)");
  if (!(heavy_tail_inflation >= 1.0))
    throw std::invalid_argument("mcmc config: heavy_tail_inflation must be >= 1");
}

Chain sample(const ModelSpec& spec, const MarketSeries& series, const InitialState& init,
             const IndexRange& range, const McmcConfig& config) {
  series.validate();
  init.validate();
  TargetFn target = [&](const ParamVector& p) {
    TargetEval e;
    if (!constraints_ok(spec, p)) return e;
    const PathEval pe = al_path_eval(spec, p, series, init, range);
    e.logpost = pe.loglik;  // flat prior contributes 0 inside the support
    e.q_last = pe.q_last;
    e.w_last = pe.w_last;
    return e;
  };
  return run_sampler(spec, target, config, init, range);
}

Chain sample_with_loglik(const ModelSpec& spec,
                         const std::function<double(const ParamVector&)>& loglik,
                         const McmcConfig& config) {
  TargetFn target = [&](const ParamVector& p) {
    TargetEval e;
    if (!constraints_ok(spec, p)) return e;
    e.logpost = loglik(p);
    return e;
  };
  InitialState dummy;
  return run_sampler(spec, target, config, dummy, IndexRange{1, 2});
}

ParamVector Chain::posterior_mean() const {
  if (draws.empty()) throw std::runtime_error("chain: no retained draws");
  ParamVector mean;
  mean.beta.assign(spec.beta_count(), 0.0);
  for (const auto& d : draws) {
    for (std::size_t i = 0; i < mean.beta.size(); ++i) mean.beta[i] += d.beta[i];
    for (std::size_t i = 0; i < 3; ++i) mean.gamma[i] += d.gamma[i];
  }
  const auto n = static_cast<double>(draws.size());
  for (auto& b : mean.beta) b /= n;
  for (auto& g : mean.gamma) g /= n;
  return mean;
}

PosteriorSummary summarize_chain(const Chain& chain) {
  if (chain.draws.size() < 10)
    throw std::invalid_argument("summarize_chain: need at least 10 retained draws");
  const auto names = param_names(chain.spec);
  PosteriorSummary summary;
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<double> v;
    v.reserve(chain.draws.size());
    for (const auto& d : chain.draws) v.push_back(d.coord(i));
    std::sort(v.begin(), v.end());
    ParamSummary ps;
    ps.name = names[i];
    ps.mean = stats::mean(v);
    ps.median = stats::quantile_type7_sorted(v, 0.5);
    ps.std = stats::sample_std(v);
    ps.q025 = stats::quantile_type7_sorted(v, 0.025);
    ps.q975 = stats::quantile_type7_sorted(v, 0.975);
    summary.params.push_back(ps);
  }
  return summary;
}

void write_posterior_summary_csv(const PosteriorSummary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "parameter,mean,median,std,q2.5,q97.5\n";
  for (const auto& p : summary.params)
    out << p.name << ',' << csv::format_double(p.mean) << ',' << csv::format_double(p.median)
        << ',' << csv::format_double(p.std) << ',' << csv::format_double(p.q025) << ','
        << csv::format_double(p.q975) << '\n';
}

DiagnosticsPaths export_diagnostics(const Chain& chain, const std::string& directory,
                                    std::size_t max_lag) {
  if (chain.draws.empty()) throw std::runtime_error("export_diagnostics: empty chain");
  std::filesystem::create_directories(directory);
  DiagnosticsPaths paths;
  paths.traces = (std::filesystem::path(directory) / "traces.csv").string();
  paths.acf = (std::filesystem::path(directory) / "acf.csv").string();
  const auto names = param_names(chain.spec);

  std::ofstream traces(paths.traces);
  if (!traces) throw std::runtime_error("cannot write " + paths.traces);
  traces << "iteration,parameter,value\n";
  for (std::size_t t = 0; t < chain.draws.size(); ++t)
    for (std::size_t i = 0; i < names.size(); ++i)
      traces << (t + 1) << ',' << names[i] << ','
             << csv::format_double(chain.draws[t].coord(i)) << '\n';

  const std::size_t lag = std::min(max_lag, chain.draws.size() - 1);
  std::ofstream acf_out(paths.acf);
  if (!acf_out) throw std::runtime_error("cannot write " + paths.acf);
  acf_out << "lag,parameter,acf\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<double> v;
    v.reserve(chain.draws.size());
    for (const auto& d : chain.draws) v.push_back(d.coord(i));
    std::vector<double> rho;
    try {
      rho = stats::acf(v, lag);
    } catch (const std::invalid_argument&) {
      continue;  // constant trace has no ACF
    }
    for (std::size_t l = 0; l < rho.size(); ++l)
      acf_out << l << ',' << names[i] << ',' << csv::format_double(rho[l]) << '\n';
  }
  return paths;
}

void save_chain_csv(const Chain& chain, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const auto names = param_names(chain.spec);
  out << "variant,alpha,q0,es0,window_first,window_last,draw";
  for (const auto& n : names) out << ',' << n;
  out << ",q_term,w_term\n";
  for (std::size_t t = 0; t < chain.draws.size(); ++t) {
    out << variant_name(chain.spec.variant) << ',' << csv::format_double(chain.spec.alpha) << ','
        << csv::format_double(chain.init.q0) << ',' << csv::format_double(chain.init.es0) << ','
        << chain.window_first << ',' << chain.window_last << ',' << (t + 1);
    for (std::size_t i = 0; i < names.size(); ++i)
      out << ',' << csv::format_double(chain.draws[t].coord(i));
    out << ',' << csv::format_double(chain.q_term[t]) << ','
        << csv::format_double(chain.w_term[t]) << '\n';
  }
}

Chain load_chain_csv(const std::string& path) {
  const csv::Table table = csv::read_file(path);
  if (table.rows.empty()) throw std::runtime_error("chain file has no draws: " + path);
  Chain chain;
  chain.spec.variant = parse_variant(table.rows[0][table.column("variant")]);
  chain.spec.alpha = csv::parse_double(table.rows[0][table.column("alpha")], 2);
  chain.init.q0 = csv::parse_double(table.rows[0][table.column("q0")], 2);
  chain.init.es0 = csv::parse_double(table.rows[0][table.column("es0")], 2);
  chain.window_first =
      static_cast<std::size_t>(csv::parse_double(table.rows[0][table.column("window_first")], 2));
  chain.window_last =
      static_cast<std::size_t>(csv::parse_double(table.rows[0][table.column("window_last")], 2));
  const auto names = param_names(chain.spec);
  std::vector<std::size_t> cols;
  for (const auto& n : names) cols.push_back(table.column(n));
  const std::size_t c_q = table.column("q_term");
  const std::size_t c_w = table.column("w_term");
  std::size_t row_no = 1;
  for (const auto& row : table.rows) {
    ++row_no;
    ParamVector p;
    p.beta.resize(chain.spec.beta_count());
    for (std::size_t i = 0; i < names.size(); ++i) p.coord(i) = csv::parse_double(row[cols[i]], row_no);
    chain.draws.push_back(std::move(p));
    chain.q_term.push_back(csv::parse_double(row[c_q], row_no));
    chain.w_term.push_back(csv::parse_double(row[c_w], row_no));
  }
  return chain;
}

}  // namespace tailrisk
