#ifndef TAILRISK_LIKELIHOOD_HPP
#define TAILRISK_LIKELIHOOD_HPP

#include "tailrisk/market_data.hpp"
#include "tailrisk/model.hpp"

namespace tailrisk {

/// Result of one likelihood sweep. q_last / w_last are the recursion state at
/// the final window index, which one-step-ahead forecasting resumes from.
struct PathEval {
  double loglik = 0.0;
  double q_last = 0.0;
  double w_last = 0.0;
};

/// Asymmetric-Laplace log-likelihood of the window's returns under the
/// variant's (VaR, ES) recursion. Any nonnegative ES along the path yields
/// -infinity (rejection) rather than an exception.
double al_loglik(const ModelSpec& spec, const ParamVector& params, const MarketSeries& series,
                 const InitialState& init, const IndexRange& range);

/// Same sweep, also reporting the terminal recursion state.
PathEval al_path_eval(const ModelSpec& spec, const ParamVector& params,
                      const MarketSeries& series, const InitialState& init,
                      const IndexRange& range);

/// Flat indicator prior: 0 inside the variant's constraint set, -infinity
/// outside.
double log_prior(const ModelSpec& spec, const ParamVector& params);

double log_posterior(const ModelSpec& spec, const ParamVector& params, const MarketSeries& series,
                     const InitialState& init, const IndexRange& range);

}  // namespace tailrisk

#endif
