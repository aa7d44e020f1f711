#ifndef TAILRISK_MODEL_HPP
#define TAILRISK_MODEL_HPP

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "tailrisk/market_data.hpp"

namespace tailrisk {

/// The five conditional-quantile recursions. All share the expected-shortfall
/// gap recursion; they differ in the drivers of the quantile equation.
enum class Variant {
  EsCaviar,          // sign-split lagged return, AR quantile
  ResCaviar,         // AR quantile + lagged realized volatility
  EsCaviarOc,        // AR quantile + sign-split overnight return
  ResCaviarOcMinus,  // AR + realized vol + negative overnight return only
  ResCaviarOc,       // AR + realized vol + sign-split overnight return
};

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct ModelSpec {
  Variant variant = Variant::ResCaviarOc;
  double alpha = 0.01;

  std::size_t beta_count() const;
  bool uses_overnight() const;
  bool uses_realized_vol() const;
};

/// Quantile-equation coefficients plus the three gap coefficients.
struct ParamVector {
  std::vector<double> beta;
  std::array<double, 3> gamma{0.0, 0.0, 0.0};

  std::size_t size() const { return beta.size() + 3; }
  double coord(std::size_t i) const { return i < beta.size() ? beta[i] : gamma[i - beta.size()]; }
  double& coord(std::size_t i) { return i < beta.size() ? beta[i] : gamma[i - beta.size()]; }
};

std::vector<std::string> param_names(const ModelSpec& spec);

/// Support of the flat prior: the autoregressive coefficient lies in (-1,1),
/// realized-vol and negative-overnight coefficients are negative where the
/// variant has them, and gamma1, gamma2 >= 0, 0 <= gamma3 < 1.
bool constraints_ok(const ModelSpec& spec, const ParamVector& params);

/// Starting state of the coupled recursions, one day before the evaluation
/// window. q0 < 0 and es0 <= q0 so the gap w0 = q0 - es0 is nonnegative.
struct InitialState {
  double q0 = -1.0;
  double es0 = -1.5;

  double w0() const { return q0 - es0; }
  void validate() const;
};

/// Data-driven default: q0 = empirical alpha-quantile of the window's
/// returns, es0 = mean of returns at or below q0 (fallback 1.2*q0).
InitialState default_initial_state(const std::vector<double>& returns, double alpha);

/// In-sample VaR / gap / ES trajectories, aligned with a series window.
struct RiskPath {
  std::vector<double> q;
  std::vector<double> w;
  std::vector<double> es;

  std::size_t size() const { return q.size(); }
};

/// Half-open index window [first, last) into a MarketSeries. first >= 1 so
/// the lagged covariates of the first step exist.
struct IndexRange {
  std::size_t first = 1;
  std::size_t last = 0;

  std::size_t size() const { return last - first; }
};

/// One step of the variant's quantile equation. Covariates a variant does not
/// use are ignored.
double quantile_step(const ModelSpec& spec, const ParamVector& params, double q_prev,
                     double r_prev, double rv_prev, double oc_curr);

/// One step of the shared gap recursion: on a violation (r_prev <= q_prev)
/// the gap refreshes to gamma1 + gamma2 (q_prev - r_prev) + gamma3 w_prev,
/// otherwise it carries over.
double gap_step(const ParamVector& params, double q_prev, double r_prev, double w_prev);

RiskPath run_path(const ModelSpec& spec, const ParamVector& params, const MarketSeries& series,
                  const InitialState& init, const IndexRange& range);

void write_risk_path_csv(const RiskPath& path, const MarketSeries& series,
                         const IndexRange& range, const std::string& out_path);

}  // namespace tailrisk

#endif
