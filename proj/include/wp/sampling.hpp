#ifndef WP_SAMPLING_HPP
#define WP_SAMPLING_HPP

#include <cstdint>
#include <random>

#include "wp/metric.hpp"
#include "wp/types.hpp"

namespace wp {

/// Seeded sampler for the randomized suites. Same seed, same sequence.
class Sampler {
public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng_);
  }

  ChartPoint point(const ModelSpec& spec, double u_lo, double u_hi, double theta_span = 1.5,
                   double t_span = 1.0) {
    ChartPoint x;
    x.u.reserve(spec.p);
    x.theta.reserve(spec.p);
    x.t.reserve(spec.m);
    for (std::size_t i = 0; i < spec.p; ++i) {
      x.u.push_back(uniform(u_lo, u_hi));
      x.theta.push_back(uniform(-theta_span, theta_span));
    }
    for (std::size_t j = 0; j < spec.m; ++j)
      x.t.emplace_back(uniform(-t_span, t_span), uniform(-t_span, t_span));
    return x;
  }

  /// Random tangent, normalized to unit metric norm at x.
  TangentVector unit_tangent(const ModelSpec& spec, const ChartPoint& x,
                             double theta_component_cap = 1.0) {
    TangentVector v(spec);
    for (std::size_t i = 0; i < spec.p; ++i) {
      v.du[i] = uniform(-1.0, 1.0);
      v.dtheta[i] = uniform(-theta_component_cap, theta_component_cap);
    }
    for (std::size_t j = 0; j < spec.m; ++j)
      v.dt[j] = complex(uniform(-1.0, 1.0), uniform(-1.0, 1.0));
    const double n = metric_norm(spec, x, v);
    for (double& a : v.du) a /= n;
    for (double& a : v.dtheta) a /= n;
    for (complex& a : v.dt) a /= n;
    return v;
  }

  std::mt19937_64& rng() { return rng_; }

private:
  std::mt19937_64 rng_;
};

} // namespace wp

#endif
