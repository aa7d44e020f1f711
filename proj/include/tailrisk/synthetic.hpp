#ifndef TAILRISK_SYNTHETIC_HPP
#define TAILRISK_SYNTHETIC_HPP

#include "tailrisk/market_data.hpp"
#include "tailrisk/model.hpp"
#include "tailrisk/rng.hpp"

namespace tailrisk {

/// Two exponential branches around q with mass alpha below. The two variants
/// pin down different properties and are both needed:
///
/// TailCalibrated   lower rate 1/(q - es) so the conditional tail mean is
///                  exactly es; upper scale chosen so the draw has zero mean,
///                  matching the assumption under which the joint (VaR, ES)
///                  score is minimized at the truth.
/// LikelihoodFamily the exact density whose log appears in the model
///                  likelihood (lower rate (1-alpha)/(alpha|es|), upper rate
///                  1/|es|); estimation on such draws is correctly specified,
///                  but the tail mean is q + alpha es / (1 - alpha), not es,
///                  and the mean is nonzero.
///
/// Both have their alpha-quantile exactly at q.
enum class AlInnovations { TailCalibrated, LikelihoodFamily };

/// One draw given (q, es, alpha). Requires es <= q < 0.
double al_sample(double q, double es, double alpha, Rng& rng,
                 AlInnovations kind = AlInnovations::TailCalibrated);

struct SimulationConfig {
  std::size_t length = 1000;    // rows returned
  std::size_t warmup = 200;     // discarded leading rows
  double rv_level = 0.4;        // stationary mean of rv (log-AR(1), exp'd)
  double rv_persistence = 0.9;
  double rv_log_innovation_std = 0.3;
  double oc_std = 0.8;
  double q_init = -1.5;
  double w_init = 0.5;
  AlInnovations innovations = AlInnovations::TailCalibrated;
  std::string start_date = "2000-01-03";

  void validate() const;
};

struct SimulatedMarket {
  MarketSeries series;
  RiskPath true_path;  // the generating (q, w, es) trajectory, aligned with series
};

/// Simulate covariates (log-AR(1) realized vol, iid Gaussian overnight
/// returns), run the variant's recursion at the true parameters, and draw
/// each day's return from the AL innovation family at that day's (q, es).
SimulatedMarket simulate_market(const ModelSpec& spec, const ParamVector& true_params,
                                const SimulationConfig& config, Rng& rng);

}  // namespace tailrisk

#endif
