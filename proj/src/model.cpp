#include "tailrisk/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "tailrisk/csv.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::EsCaviar: return "es-caviar";
    case Variant::ResCaviar: return "res-caviar";
    case Variant::EsCaviarOc: return "es-caviar-oc";
    case Variant::ResCaviarOcMinus: return "res-caviar-oc-minus";
    case Variant::ResCaviarOc: return "res-caviar-oc";
  }
  return "";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::EsCaviar, Variant::ResCaviar, Variant::EsCaviarOc,
                    Variant::ResCaviarOcMinus, Variant::ResCaviarOc})
    if (name == variant_name(v)) return v;
  throw std::invalid_argument("unknown model variant '" + name + "'");
}

std::size_t ModelSpec::beta_count() const {
  switch (variant) {
    case Variant::EsCaviar: return 4;
    case Variant::ResCaviar: return 3;
    case Variant::EsCaviarOc: return 4;
    case Variant::ResCaviarOcMinus: return 4;
    case Variant::ResCaviarOc: return 5;
  }
  return 0;
}

bool ModelSpec::uses_overnight() const {
  return variant == Variant::EsCaviarOc || variant == Variant::ResCaviarOcMinus ||
         variant == Variant::ResCaviarOc;
}

bool ModelSpec::uses_realized_vol() const {
  return variant == Variant::ResCaviar || variant == Variant::ResCaviarOcMinus ||
         variant == Variant::ResCaviarOc;
}

std::vector<std::string> param_names(const ModelSpec& spec) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= spec.beta_count(); ++i) names.push_back("beta" + std::to_string(i));
  for (std::size_t i = 1; i <= 3; ++i) names.push_back("gamma" + std::to_string(i));
  return names;
}

bool constraints_ok(const ModelSpec& spec, const ParamVector& p) {
  if (p.beta.size() != spec.beta_count()) return false;
  for (double b : p.beta)
    if (!std::isfinite(b)) return false;
  for (double g : p.gamma)
    if (!std::isfinite(g)) return false;

  switch (spec.variant) {
    case Variant::EsCaviar:
      if (!(std::abs(p.beta[3]) < 1.0)) return false;
      break;
    case Variant::ResCaviar:
      if (!(std::abs(p.beta[1]) < 1.0)) return false;
      if (!(p.beta[2] < 0.0)) return false;
      break;
    case Variant::EsCaviarOc:
      if (!(std::abs(p.beta[1]) < 1.0)) return false;
      if (!(p.beta[3] < 0.0)) return false;
      break;
    case Variant::ResCaviarOcMinus:
      if (!(std::abs(p.beta[1]) < 1.0)) return false;
      if (!(p.beta[2] < 0.0)) return false;
      if (!(p.beta[3] < 0.0)) return false;
      break;
    case Variant::ResCaviarOc:
      if (!(std::abs(p.beta[1]) < 1.0)) return false;
      if (!(p.beta[2] < 0.0)) return false;
      if (!(p.beta[4] < 0.0)) return false;
      break;
  }
  return p.gamma[0] >= 0.0 && p.gamma[1] >= 0.0 && p.gamma[2] >= 0.0 && p.gamma[2] < 1.0;
}

void InitialState::validate() const {
  if (!(q0 < 0.0)) throw std::invalid_argument("initial state: q0 must be negative");
  if (!(es0 <= q0)) throw std::invalid_argument("initial state: es0 must not exceed q0");
}

InitialState default_initial_state(const std::vector<double>& returns, double alpha) {
  if (returns.empty()) throw std::invalid_argument("default_initial_state: empty returns");
  InitialState init;
  init.q0 = stats::quantile_type7(returns, alpha);
  if (!(init.q0 < 0.0))
    throw std::domain_error(
        "default_initial_state: empirical quantile is not negative; supply an explicit state");
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : returns)
    if (v <= init.q0) {
      sum += v;
      ++count;
    }
  init.es0 = count > 0 ? sum / static_cast<double>(count) : 1.2 * init.q0;
  if (init.es0 > init.q0) init.es0 = init.q0;
  init.validate();
  return init;
}

double quantile_step(const ModelSpec& spec, const ParamVector& p, double q_prev, double r_prev,
                     double rv_prev, double oc_curr) {
  if (p.beta.size() != spec.beta_count())
    throw std::invalid_argument("quantile_step: parameter count does not match variant");
  const auto& b = p.beta;
  switch (spec.variant) {
    case Variant::EsCaviar: {
      double q = b[0];
      const double a = std::abs(r_prev);
      if (r_prev > 0.0)
        q += b[1] * a;
      else
        q += b[2] * a;
      return q + b[3] * q_prev;
    }
    case Variant::ResCaviar:
      return b[0] + b[1] * q_prev + b[2] * rv_prev;
    case Variant::EsCaviarOc: {
      double q = b[0] + b[1] * q_prev;
      const double a = std::abs(oc_curr);
      if (oc_curr > 0.0)
        q += b[2] * a;
      else
        q += b[3] * a;
      return q;
    }
    case Variant::ResCaviarOcMinus: {
      double q = b[0] + b[1] * q_prev + b[2] * rv_prev;
      if (oc_curr <= 0.0) q += b[3] * std::abs(oc_curr);
      return q;
    }
    case Variant::ResCaviarOc: {
      double q = b[0] + b[1] * q_prev + b[2] * rv_prev;
      const double a = std::abs(oc_curr);
      if (oc_curr > 0.0)
        q += b[3] * a;
      else
        q += b[4] * a;
      return q;
    }
  }
  throw std::logic_error("quantile_step: bad variant");
}

double gap_step(const ParamVector& p, double q_prev, double r_prev, double w_prev) {
  if (r_prev <= q_prev)
    return p.gamma[0] + p.gamma[1] * (q_prev - r_prev) + p.gamma[2] * w_prev;
  return w_prev;
}

RiskPath run_path(const ModelSpec& spec, const ParamVector& params, const MarketSeries& series,
                  const InitialState& init, const IndexRange& range) {
  if (range.first < 1) throw std::invalid_argument("run_path: window must start at index >= 1");
  if (range.last > series.size() || range.first >= range.last)
    throw std::invalid_argument("run_path: window outside series");
  init.validate();

  RiskPath path;
  path.q.resize(range.size());
  path.w.resize(range.size());
  path.es.resize(range.size());

  double q_prev = init.q0;
  double w_prev = init.w0();
  for (std::size_t t = range.first; t < range.last; ++t) {
    const double r_prev = series.r[t - 1];
    const double q = quantile_step(spec, params, q_prev, r_prev, series.rv[t - 1], series.oc[t]);
    const double w = gap_step(params, q_prev, r_prev, w_prev);
    if (!std::isfinite(q) || !std::isfinite(w))
      throw std::runtime_error("run_path: non-finite state at series index " + std::to_string(t));
    const std::size_t i = t - range.first;
    path.q[i] = q;
    path.w[i] = w;
    path.es[i] = q - w;
    q_prev = q;
    w_prev = w;
  }
  return path;
}

void write_risk_path_csv(const RiskPath& path, const MarketSeries& series,
                         const IndexRange& range, const std::string& out_path) {
  if (path.size() != range.size())
    throw std::invalid_argument("write_risk_path_csv: path/window length mismatch");
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << "date,q,es\n";
  for (std::size_t i = 0; i < path.size(); ++i)
    out << series.dates[range.first + i] << ',' << csv::format_double(path.q[i]) << ','
        << csv::format_double(path.es[i]) << '\n';
}

}  // namespace tailrisk
