#ifndef WP_FIT_HPP
#define WP_FIT_HPP

#include <cmath>
#include <utility>
#include <vector>

#include "wp/linalg.hpp"
#include "wp/types.hpp"

#include <json.hpp>

namespace wp {

/// Result of an asymptotic-rate fit: value ~ constant * tmod^alpha * (-log tmod)^beta.
struct FitReport {
  double alpha = 0.0;
  double beta = 0.0;
  double constant = 0.0;
  double residual = 0.0;  ///< rms residual of log(value) over the samples
};

inline void to_json(nlohmann::json& j, const FitReport& f) {
  j = nlohmann::json{
      {"alpha", f.alpha}, {"beta", f.beta}, {"constant", f.constant}, {"residual", f.residual}};
}

/// Least-squares fit of log(value) against log(tmod) and log(-log(tmod)).
/// Needs at least 4 samples spanning at least 4 decades of tmod.
inline FitReport asymptotic_fit(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 4)
    throw std::invalid_argument("asymptotic_fit: need at least 4 samples");
  double tmin = samples.front().first, tmax = tmin;
  for (const auto& [t, v] : samples) {
    if (!(t > 0.0 && t < 1.0)) throw std::domain_error("asymptotic_fit: tmod must be in (0,1)");
    if (!(v > 0.0)) throw std::domain_error("asymptotic_fit: values must be positive");
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  if (std::log10(tmax / tmin) < 4.0 - 1e-9)
    throw std::invalid_argument("asymptotic_fit: samples must span >= 4 decades");

  const std::size_t n = samples.size();
  std::vector<double> ones(n, 1.0), lt(n), llt(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    lt[k] = std::log(samples[k].first);
    llt[k] = std::log(-std::log(samples[k].first));
    y[k] = std::log(samples[k].second);
  }
  std::vector<double> c;
  try {
    c = lstsq({ones, lt, llt}, y);
  } catch (const std::runtime_error& e) {
    throw numerical_error(std::string("asymptotic_fit: degenerate design matrix (") + e.what() +
                          ")");
  }
  FitReport out;
  out.constant = std::exp(c[0]);
  out.alpha = c[1];
  out.beta = c[2];
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = y[k] - (c[0] + c[1] * lt[k] + c[2] * llt[k]);
    ss += r * r;
  }
  out.residual = std::sqrt(ss / static_cast<double>(n));
  return out;
}

/// Plain log-log slope fit: value ~ constant * x^alpha (beta fixed to zero).
inline FitReport powerlaw_fit(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("powerlaw_fit: need at least 2 samples");
  const std::size_t n = samples.size();
  std::vector<double> ones(n, 1.0), lx(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(samples[k].first > 0.0 && samples[k].second > 0.0))
      throw std::domain_error("powerlaw_fit: positive samples required");
    lx[k] = std::log(samples[k].first);
    y[k] = std::log(samples[k].second);
  }
  const std::vector<double> c = lstsq({ones, lx}, y);
  FitReport out;
  out.constant = std::exp(c[0]);
  out.alpha = c[1];
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = y[k] - (c[0] + c[1] * lx[k]);
    ss += r * r;
  }
  out.residual = std::sqrt(ss / static_cast<double>(n));
  return out;
}

} // namespace wp

#endif
