#ifndef TAILRISK_STATS_HPP
#define TAILRISK_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace tailrisk::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean: empty input");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Sample standard deviation, n-1 denominator.
inline double sample_std(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("sample_std: need at least 2 values");
  if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end()))
    return 0.0;  // constant input, exactly
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// Central sample moment with n denominator.
inline double central_moment(std::span<const double> x, int order) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += std::pow(v - m, order);
  return s / static_cast<double>(x.size());
}

// Moment-ratio skewness m3 / m2^{3/2}.
inline double skewness(std::span<const double> x) {
  const double m2 = central_moment(x, 2);
  if (m2 == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return central_moment(x, 3) / std::pow(m2, 1.5);
}

// Moment-ratio excess kurtosis m4 / m2^2 - 3.
inline double excess_kurtosis(std::span<const double> x) {
  const double m2 = central_moment(x, 2);
  if (m2 == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return central_moment(x, 4) / (m2 * m2) - 3.0;
}

// Type-7 (linear interpolation) quantile of an unsorted sample.
inline double quantile_type7(std::span<const double> x, double p) {
  if (x.empty()) throw std::invalid_argument("quantile_type7: empty input");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile_type7: p outside [0,1]");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= s.size()) return s.back();
  return s[lo] + (h - static_cast<double>(lo)) * (s[lo + 1] - s[lo]);
}

// Sorted-input variant for callers that quantile repeatedly.
inline double quantile_type7_sorted(std::span<const double> s, double p) {
  if (s.empty()) throw std::invalid_argument("quantile_type7_sorted: empty input");
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= s.size()) return s.back();
  return s[lo] + (h - static_cast<double>(lo)) * (s[lo + 1] - s[lo]);
}

// Sample autocorrelations rho(0..max_lag), biased (n-denominator) estimator.
inline std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
  if (x.size() <= max_lag)
    throw std::invalid_argument("acf: series shorter than max_lag + 1");
  const double m = mean(x);
  double denom = 0.0;
  for (double v : x) denom += (v - m) * (v - m);
  if (denom == 0.0) throw std::invalid_argument("acf: zero-variance series");
  std::vector<double> rho(max_lag + 1);
  rho[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = 0; t + k < x.size(); ++t)
      num += (x[t] - m) * (x[t + k] - m);
    rho[k] = num / denom;
  }
  return rho;
}

// Newey-West long-run standard deviation with Bartlett weights and the given
// truncation lag.
inline double hac_std(std::span<const double> x, std::size_t lag) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("hac_std: need at least 2 values");
  const double m = mean(x);
  auto gamma_k = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) s += (x[t] - m) * (x[t + k] - m);
    return s / static_cast<double>(n);
  };
  double v = gamma_k(0);
  for (std::size_t k = 1; k <= lag && k < n; ++k)
    v += 2.0 * (1.0 - static_cast<double>(k) / static_cast<double>(lag + 1)) * gamma_k(k);
  if (v <= 0.0) return 0.0;  // possible in small samples; caller decides
  return std::sqrt(v);
}

// Upper tail probability of a chi-squared distribution.
inline double chi2_sf(double x, double dof) {
  if (x < 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

// x*log(y) with the 0*log(0) = 0 convention used by the coverage tests.
inline double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

}  // namespace tailrisk::stats

#endif
