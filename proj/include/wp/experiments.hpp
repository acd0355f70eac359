#ifndef WP_EXPERIMENTS_HPP
#define WP_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "wp/collar.hpp"
#include "wp/fit.hpp"
#include "wp/geodesic.hpp"
#include "wp/quadrature.hpp"
#include "wp/types.hpp"

namespace wp {

// --- corner-path comparison ----------------------------------------------------

/// Parameters of the two-block corner comparison. eps is the conserved value
/// of L = l_1 + l_2 along the through-the-interior path; Cc and Ct are the
/// block constants in the dl^2/l normalization (block A = 4C); T1, T2 flat
/// offsets of the endpoints, scaled by sqrt(eps).
struct CornerParams {
  double eps = 1.0;
  double Cc = 1.0;
  double Ct = 1.0;
  std::vector<complex> T1;
  std::vector<complex> T2;

  void validate() const {
    if (!(eps > 0.0 && Cc > 0.0 && Ct > 0.0))
      throw std::domain_error("CornerParams: eps, Cc, Ct must be positive");
    if (T1.size() != T2.size())
      throw std::invalid_argument("CornerParams: T1 and T2 must have the same dimension");
  }
};

struct CornerReport {
  double L1 = 0.0;  ///< length of the interior path, the L held constant
  double L2 = 0.0;  ///< length of the two-leg corner path through the deeper stratum
  double gap = 0.0; ///< L2 - L1 > 0
};

namespace detail {

// int_0^1 sqrt(C/s + k2) ds, evaluated with the s = sigma^2 substitution
// that removes the integrable endpoint singularity exactly:
// = 2 int_0^1 sqrt(C + k2 sigma^2) dsigma.
inline double corner_leg(double C, double k2, double rel_tol) {
  return 2.0 * integrate_or_throw(
                   [&](double sig) { return std::sqrt(C + k2 * sig * sig); }, 0.0, 1.0, 1e-300,
                   rel_tol);
}

// int_0^{1/2} sqrt(Ca/(1-s) + Cb/s + k2) ds with the same substitution.
inline double corner_half(double Ca, double Cb, double k2, double rel_tol) {
  const double hi = 1.0 / std::numbers::sqrt2;
  return 2.0 * integrate_or_throw(
                   [&](double sig) {
                     const double s2 = sig * sig;
                     return std::sqrt(Ca * s2 / (1.0 - s2) + Cb + k2 * s2);
                   },
                   0.0, hi, 1e-300, rel_tol);
}

} // namespace detail

/// Lengths of the constant-L interior path and the corner path through the
/// two-node stratum, under the two-block model metric. Both scale exactly
/// as sqrt(eps); the gap is strictly positive for every parameter choice.
inline CornerReport corner_comparison(const CornerParams& params, double rel_tol = 1e-12) {
  params.validate();
  double dT2 = 0.0, T1n2 = 0.0, T2n2 = 0.0;
  for (std::size_t j = 0; j < params.T1.size(); ++j) {
    dT2 += std::norm(params.T2[j] - params.T1[j]);
    T1n2 += std::norm(params.T1[j]);
    T2n2 += std::norm(params.T2[j]);
  }
  const double se = std::sqrt(params.eps);
  CornerReport rep;
  rep.L1 = se * (detail::corner_half(params.Cc, params.Ct, dT2, rel_tol) +
                 detail::corner_half(params.Ct, params.Cc, dT2, rel_tol));
  rep.L2 = se * (detail::corner_leg(params.Cc, T1n2, rel_tol) +
                 detail::corner_leg(params.Ct, T2n2, rel_tol));
  rep.gap = rep.L2 - rep.L1;
  return rep;
}

/// The interior comparison path sigma_1 as a polyline in the two-block model
/// with A = (4 Cc, 4 Ct): u_1 = sqrt((1-s) eps), u_2 = sqrt(s eps), flat part
/// sqrt(eps) ((1-s) T1 + s T2). Endpoint blocks are pinched, so s runs over
/// the open interval when the polyline is meant to stay off the strata.
inline Polyline corner_sigma1(const CornerParams& params, std::size_t npoints) {
  params.validate();
  Polyline poly;
  poly.points.reserve(npoints);
  const double se = std::sqrt(params.eps);
  for (std::size_t k = 0; k < npoints; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(npoints - 1);
    ChartPoint x;
    x.u = {std::sqrt((1.0 - s) * params.eps), std::sqrt(s * params.eps)};
    x.theta = {0.0, 0.0};
    x.t.resize(params.T1.size());
    for (std::size_t j = 0; j < params.T1.size(); ++j)
      x.t[j] = se * ((1.0 - s) * params.T1[j] + s * params.T2[j]);
    poly.points.push_back(std::move(x));
  }
  return poly;
}

// --- non-refraction -------------------------------------------------------------

struct NonrefractionReport {
  double min_interior_u = 0.0;  ///< min over interior samples and blocks of u_i
  GeodesicPath path;
};

/// Solve the boundary-value problem from p to a point q with pinched blocks
/// and scan the interior samples: away from the endpoints the geodesic must
/// keep every non-pinched coordinate strictly positive, and blocks pinched
/// at both ends stay pinched exactly.
inline NonrefractionReport nonrefraction_probe(const ModelSpec& spec, const ChartPoint& p,
                                               const ChartPoint& q, double tol = 1e-8,
                                               std::size_t samples = 101) {
  bool q_boundary = false;
  for (double uq : q.u) q_boundary |= uq == 0.0;
  if (!q_boundary) throw std::invalid_argument("nonrefraction_probe: q must pinch some block");

  ConnectOptions opts;
  opts.tol = tol;
  opts.samples = samples;
  NonrefractionReport rep;
  rep.path = connect(spec, p, q, opts);
  if (!rep.path.converged)
    throw numerical_error("nonrefraction_probe: connect did not converge");

  double umin = std::numeric_limits<double>::infinity();
  const auto& smp = rep.path.traj.samples;
  const double total = smp.back().s;
  const double margin = 0.5 * total / static_cast<double>(samples - 1);
  for (std::size_t k = 1; k + 1 < smp.size(); ++k) {
    if (smp[k].s < margin || smp[k].s > total - margin) continue;
    for (std::size_t i = 0; i < spec.p; ++i)
      if (p.u[i] > 0.0 || q.u[i] > 0.0) umin = std::min(umin, smp[k].x.u[i]);
  }
  if (!std::isfinite(umin)) umin = 0.0;  // every block pinched at both ends
  rep.min_interior_u = umin;
  return rep;
}

// --- differential inequality -----------------------------------------------------

struct DiffIneqReport {
  double max_violation = 0.0;  ///< max over interior samples of u'' - C u
  double constant = 0.0;       ///< the per-run constant C
};

/// Check the differential inequality (u_block)'' <= C (u_block) along a
/// unit-speed trajectory. C is calibrated per run as the supremum over the
/// trajectory of |Gamma^u terms| / u, evaluated from the model Christoffel
/// closed forms with the trajectory's own conserved data, then the discrete
/// second difference of u is tested against C u.
inline DiffIneqReport differential_inequality_check(const ModelSpec& spec, const Trajectory& traj,
                                                    std::size_t block = 0) {
  const auto& smp = traj.samples;
  if (smp.size() < 9)
    throw std::invalid_argument("differential_inequality_check: need >= 9 samples");
  if (block >= spec.p)
    throw std::invalid_argument("differential_inequality_check: block out of range");
  const double ds = smp[1].s - smp[0].s;
  // a located boundary event may append a final sample off the uniform grid
  std::size_t n = smp.size();
  while (n > 2 && std::abs((smp[n - 1].s - smp[n - 2].s) - ds) > 1e-9 * std::max(1.0, ds)) --n;
  if (n < 9)
    throw std::invalid_argument("differential_inequality_check: need >= 9 uniform samples");
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs((smp[k].s - smp[k - 1].s) - ds) > 1e-9 * std::max(1.0, ds))
      throw std::invalid_argument("differential_inequality_check: samples must be uniform");

  DiffIneqReport rep;
  const double ueps = 1e-9;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& s = smp[k];
    const double u = s.x.u[block];
    const double du = s.v.du[block];
    const double dth = s.v.dtheta[block];
    const double c = spec.pert[block];
    const double u2 = u * u, u3 = u2 * u, u4 = u2 * u2, u5 = u4 * u;
    const double f = 1.0 + c * u4;
    const double acc = -2.0 * c * u3 / f * du * du +
                       (6.0 * u5 + 10.0 * c * u5 * u4) / (8.0 * f) * dth * dth;
    rep.constant = std::max(rep.constant, std::abs(acc) / std::max(u, ueps));
  }
  rep.constant *= 1.1;  // margin over the sampled supremum

  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double d2 = (smp[k + 1].x.u[block] - 2.0 * smp[k].x.u[block] + smp[k - 1].x.u[block]) /
                      (ds * ds);
    rep.max_violation = std::max(rep.max_violation, d2 - rep.constant * smp[k].x.u[block]);
  }
  return rep;
}

// --- distance approximation under the perturbed metric ----------------------------

struct ScaledPair {
  double scale = 0.0;
  ChartPoint p, q;
};

/// Fit the exponent of |d_pert - d_model| against the scale U over pairs
/// sampled at geometrically decreasing scales. d_pert uses the given spec;
/// d_model the same spec with the perturbation switched off.
inline FitReport perturbation_gap_fit(const ModelSpec& spec_with_pert,
                                      const std::vector<ScaledPair>& pairs, double tol = 1e-10) {
  bool any_pert = false;
  for (double c : spec_with_pert.pert) any_pert |= c > 0.0;
  if (!any_pert)
    throw std::invalid_argument("perturbation_gap_fit: spec must carry a perturbation");
  if (pairs.size() < 2) throw std::invalid_argument("perturbation_gap_fit: need >= 2 pairs");

  ModelSpec base = spec_with_pert;
  std::fill(base.pert.begin(), base.pert.end(), 0.0);

  std::vector<std::pair<double, double>> samples;
  for (const ScaledPair& sp : pairs) {
    const double dp = distance(spec_with_pert, sp.p, sp.q, tol);
    const double d0 = distance(base, sp.p, sp.q, tol);
    const double gap = std::abs(dp - d0);
    if (!(gap > 0.0))
      throw numerical_error("perturbation_gap_fit: vanishing gap at scale " +
                            std::to_string(sp.scale));
    samples.emplace_back(sp.scale, gap);
  }
  return powerlaw_fit(samples);
}

// --- localized twist norm ----------------------------------------------------------

/// Bump profile of the localized twist: smooth, nonnegative, supported on
/// [tmod^{1/2}, tmod^{1/4}], with unit integral.
struct TwistProfile {
  enum class Shape { smoothstep, flat_top };

  double tmod = 0.0;
  Shape shape = Shape::smoothstep;

  TwistProfile(double tmod_, Shape shape_ = Shape::smoothstep) : tmod(tmod_), shape(shape_) {
    if (!(tmod > 0.0 && tmod < 1.0)) throw std::domain_error("TwistProfile: tmod must be in (0,1)");
    if (!(width() > 1e-9))
      throw std::domain_error("TwistProfile: support is empty, tmod too close to 1");
  }

  double lower() const { return std::sqrt(tmod); }
  double upper() const { return std::pow(tmod, 0.25); }
  double width() const { return upper() - lower(); }

  /// phi(r): unit-integral bump over [lower(), upper()].
  double phi(double r) const {
    const double a = lower(), w = width();
    const double x = (r - a) / w;
    if (x <= 0.0 || x >= 1.0) return 0.0;
    if (shape == Shape::smoothstep) {
      // symmetric quintic-smoothstep bump; integral of the unit shape is 1/2
      const double y = x < 0.5 ? smoothstep(2.0 * x) : smoothstep(2.0 * (1.0 - x));
      return 2.0 * y / w;
    }
    // flat top with smoothstep shoulders over the outer quarters;
    // integral of the unit shape is 3/4
    double y;
    if (x < 0.25) y = smoothstep(4.0 * x);
    else if (x > 0.75) y = smoothstep(4.0 * (1.0 - x));
    else y = 1.0;
    return y / (0.75 * w);
  }

private:
  static double smoothstep(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
  }
};

/// Norm of the tangent vector induced by the localized twist,
///   (pi/2) Int phi(r)^2 r / (log r)^2 dr
/// over the support. Positive, and -> 0 as tmod -> 0.
inline double dehn_twist_norm(const TwistProfile& profile, double rel_tol = 1e-11) {
  const double val = integrate_or_throw(
      [&](double r) {
        const double ph = profile.phi(r);
        const double lg = std::log(r);
        return ph * ph * r / (lg * lg);
      },
      profile.lower(), profile.upper(), 1e-300, rel_tol);
  return 0.5 * std::numbers::pi * val;
}

} // namespace wp

#endif
