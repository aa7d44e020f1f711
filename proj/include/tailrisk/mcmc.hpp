#ifndef TAILRISK_MCMC_HPP
#define TAILRISK_MCMC_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tailrisk/likelihood.hpp"
#include "tailrisk/model.hpp"

namespace tailrisk {

/// Two-phase adaptive Metropolis settings. Burn-in uses random-walk proposals
/// whose scale is nudged toward the target acceptance band each epoch (and,
/// when shape_adapt is on, whose covariance tracks the accumulated draws);
/// after burn-in an independence kernel fitted to the late burn-in draws
/// takes over, mixed with a covariance-inflated component for tail safety.
struct McmcConfig {
  std::size_t total_iters = 20000;  // N
  std::size_t burn_in = 8000;       // M
  std::size_t thin = 4;
  double target_accept_low = 0.25;
  double target_accept_high = 0.50;
  std::uint64_t rng_seed = 1;
  double rw_initial_scale = 0.05;
  double heavy_tail_mix_weight = 0.05;
  double heavy_tail_inflation = 9.0;  // covariance factor of the wide component
  std::size_t adapt_epoch = 200;
  bool shape_adapt = true;    // covariance-shaped random-walk proposals
  bool refine_start = true;   // derivative-free ascent before sampling
  ParamVector start_override; // non-empty beta replaces the default start

  void validate() const;
};

struct BlockDiagnostics {
  double rw_accept_final = 0.0;  // acceptance rate of the last burn-in epoch
  double rw_accept_mean = 0.0;
  double ind_accept = 0.0;
  std::size_t stalled_epochs = 0;  // epochs with zero accepted proposals
};

/// Retained (post burn-in, thinned) draws plus the per-draw recursion state
/// at the window's last index, from which one-step forecasts are formed.
struct Chain {
  ModelSpec spec;
  std::vector<ParamVector> draws;
  std::vector<double> q_term;
  std::vector<double> w_term;
  BlockDiagnostics beta_block;
  BlockDiagnostics gamma_block;
  InitialState init;
  std::size_t window_first = 1;
  std::size_t window_last = 0;

  ParamVector posterior_mean() const;
};

Chain sample(const ModelSpec& spec, const MarketSeries& series, const InitialState& init,
             const IndexRange& range, const McmcConfig& config);

/// Test hook: run the identical sampler against an arbitrary log-likelihood
/// (the indicator prior is still applied). Terminal states are zero.
Chain sample_with_loglik(const ModelSpec& spec,
                         const std::function<double(const ParamVector&)>& loglik,
                         const McmcConfig& config);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

struct PosteriorSummary {
  std::vector<ParamSummary> params;
};

/// Per-parameter mean / median / std / 95% credible interval (type-7
/// quantiles). Needs at least 10 retained draws.
PosteriorSummary summarize_chain(const Chain& chain);

void write_posterior_summary_csv(const PosteriorSummary& summary, const std::string& path);

/// Plot-ready convergence exports: traces.csv (iteration,parameter,value) and
/// acf.csv (lag,parameter,acf) under the given directory.
struct DiagnosticsPaths {
  std::string traces;
  std::string acf;
};
DiagnosticsPaths export_diagnostics(const Chain& chain, const std::string& directory,
                                    std::size_t max_lag = 50);

/// Self-describing checkpoint (CSV; metadata repeated per row) for warm
/// starts and offline inspection.
void save_chain_csv(const Chain& chain, const std::string& path);
Chain load_chain_csv(const std::string& path);

}  // namespace tailrisk

#endif
