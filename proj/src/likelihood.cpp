#include "tailrisk/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tailrisk {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

PathEval al_path_eval(const ModelSpec& spec, const ParamVector& params,
                      const MarketSeries& series, const InitialState& init,
                      const IndexRange& range) {
  if (range.first < 1 || range.last > series.size() || range.first >= range.last)
    throw std::invalid_argument("al_path_eval: bad window");
  init.validate();

  const double alpha = spec.alpha;
  PathEval out;
  double q_prev = init.q0;
  double w_prev = init.w0();
  double ll = 0.0;
  for (std::size_t t = range.first; t < range.last; ++t) {
    const double r_prev = series.r[t - 1];
    const double q = quantile_step(spec, params, q_prev, r_prev, series.rv[t - 1], series.oc[t]);
    const double w = gap_step(params, q_prev, r_prev, w_prev);
    const double es = q - w;
    if (!std::isfinite(q) || !std::isfinite(w))
      throw std::runtime_error("al_path_eval: non-finite state at series index " +
                               std::to_string(t));
    if (es >= 0.0) {
      out.loglik = kNegInf;
      out.q_last = q;
      out.w_last = w;
      return out;
    }
    const double r = series.r[t];
    const double indicator = r <= q ? 1.0 : 0.0;
    ll += std::log((alpha - 1.0) / es) + (r - q) * (alpha - indicator) / (alpha * es);
    q_prev = q;
    w_prev = w;
  }
  out.loglik = ll;
  out.q_last = q_prev;
  out.w_last = w_prev;
  return out;
}

double al_loglik(const ModelSpec& spec, const ParamVector& params, const MarketSeries& series,
                 const InitialState& init, const IndexRange& range) {
  return al_path_eval(spec, params, series, init, range).loglik;
}

double log_prior(const ModelSpec& spec, const ParamVector& params) {
  return constraints_ok(spec, params) ? 0.0 : kNegInf;
}

double log_posterior(const ModelSpec& spec, const ParamVector& params, const MarketSeries& series,
                     const InitialState& init, const IndexRange& range) {
  const double prior = log_prior(spec, params);
  if (prior == kNegInf) return kNegInf;
  return prior + al_loglik(spec, params, series, init, range);
}

}  // namespace tailrisk
