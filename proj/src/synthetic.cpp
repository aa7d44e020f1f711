#include "tailrisk/synthetic.hpp"

#include <cmath>
#include <stdexcept>

namespace tailrisk {

double al_sample(double q, double es, double alpha, Rng& rng, AlInnovations kind) {
  if (!(q < 0.0)) throw std::invalid_argument("al_sample: q must be negative");
  if (!(es <= q)) throw std::invalid_argument("al_sample: es must not exceed q");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("al_sample: alpha outside (0,1)");

  // One uniform (branch choice) and one exponential per draw, regardless of
  // branch, so seeded streams stay aligned across variants.
  const double u = rng.uniform();
  const double e = rng.exponential();

  if (kind == AlInnovations::TailCalibrated) {
    const double w = q - es;
    if (u < alpha) return q - w * e;
    const double upper_scale = (alpha * w - q) / (1.0 - alpha);
    return q + upper_scale * e;
  }
  // LikelihoodFamily
  const double lower_scale = alpha * (-es) / (1.0 - alpha);
  if (u < alpha) return q - lower_scale * e;
  return q + (-es) * e;
}

void SimulationConfig::validate() const {
  if (length < 2) throw std::invalid_argument("simulation: length must be >= 2");
  if (!(rv_level > 0.0)) throw std::invalid_argument("simulation: rv_level must be positive");
  if (!(std::abs(rv_persistence) < 1.0))
    throw std::invalid_argument("simulation: |rv_persistence| must be < 1");
  if (!(rv_log_innovation_std >= 0.0) || !(oc_std >= 0.0))
    throw std::invalid_argument("simulation: negative innovation scale");
  if (!(q_init < 0.0)) throw std::invalid_argument("simulation: q_init must be negative");
  if (!(w_init >= 0.0)) throw std::invalid_argument("simulation: w_init must be nonnegative");
}

namespace {

// Sequential weekday dates in ISO form, purely synthetic.
std::string add_days(const std::string& iso, int days) {
  int y = std::stoi(iso.substr(0, 4));
  int m = std::stoi(iso.substr(5, 2));
  int d = std::stoi(iso.substr(8, 2));
  static const int len[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  auto month_len = [&](int yy, int mm) {
    if (mm != 2) return len[mm - 1];
    const bool leap = (yy % 4 == 0 && yy % 100 != 0) || yy % 400 == 0;
    return leap ? 29 : 28;
  };
  for (int i = 0; i < days; ++i) {
    if (++d > month_len(y, m)) {
      d = 1;
      if (++m > 12) {
        m = 1;
        ++y;
      }
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

}  // namespace

SimulatedMarket simulate_market(const ModelSpec& spec, const ParamVector& true_params,
                                const SimulationConfig& config, Rng& rng) {
  config.validate();
  if (!constraints_ok(spec, true_params))
    throw std::invalid_argument("simulate_market: parameters violate the constraint set");

  const std::size_t total = config.length + config.warmup;

  // log realized volatility follows an AR(1) around log(rv_level)
  const double mu = std::log(config.rv_level);
  const double phi = config.rv_persistence;
  const double sd = config.rv_log_innovation_std;
  std::vector<double> rv(total);
  double lrv = mu + (sd > 0.0 ? rng.normal() * sd / std::sqrt(1.0 - phi * phi) : 0.0);
  rv[0] = std::exp(lrv);
  for (std::size_t t = 1; t < total; ++t) {
    lrv = mu + phi * (lrv - mu) + sd * rng.normal();
    rv[t] = std::exp(lrv);
  }

  std::vector<double> oc(total);
  for (std::size_t t = 0; t < total; ++t) oc[t] = config.oc_std * rng.normal();

  std::vector<double> r(total), q_path(total), w_path(total);
  double q_prev = config.q_init;
  double w_prev = config.w_init;
  double r_prev = 0.0;
  double rv_prev = config.rv_level;
  for (std::size_t t = 0; t < total; ++t) {
    const double q = quantile_step(spec, true_params, q_prev, r_prev, rv_prev, oc[t]);
    const double w = t == 0 ? w_prev : gap_step(true_params, q_prev, r_prev, w_prev);
    const double es = q - w;
    if (!(q < 0.0))
      throw std::domain_error("simulate_market: recursion produced a nonnegative quantile at step " +
                              std::to_string(t) + "; adjust parameters or covariate scales");
    r[t] = al_sample(q, es, spec.alpha, rng, config.innovations);
    q_path[t] = q;
    w_path[t] = w;
    q_prev = q;
    w_prev = w;
    r_prev = r[t];
    rv_prev = rv[t];
  }

  SimulatedMarket out;
  out.series.dates.reserve(config.length);
  std::string date = config.start_date;
  for (std::size_t i = 0; i < config.length; ++i) {
    out.series.dates.push_back(date);
    date = add_days(date, 1);
  }
  const std::size_t w0 = config.warmup;
  out.series.r.assign(r.begin() + w0, r.end());
  out.series.oc.assign(oc.begin() + w0, oc.end());
  out.series.rv.assign(rv.begin() + w0, rv.end());
  out.true_path.q.assign(q_path.begin() + w0, q_path.end());
  out.true_path.w.assign(w_path.begin() + w0, w_path.end());
  out.true_path.es.resize(config.length);
  for (std::size_t i = 0; i < config.length; ++i)
    out.true_path.es[i] = out.true_path.q[i] - out.true_path.w[i];
  out.series.validate();
  return out;
}

}  // namespace tailrisk
