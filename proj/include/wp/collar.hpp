#ifndef WP_COLLAR_HPP
#define WP_COLLAR_HPP

#include <cmath>
#include <numbers>

#include "wp/quadrature.hpp"
#include "wp/types.hpp"

namespace wp {

/// Degenerating annulus parameters: plumbing modulus tmod = |t| and outer
/// cutoff delta. The working annulus is { tmod <= |z| <= 1 - delta }, which
/// must be nonempty and contain the core circle |z| = sqrt(tmod).
struct CollarParams {
  double tmod;
  double delta;

  CollarParams(double tmod_, double delta_ = 0.1) : tmod(tmod_), delta(delta_) { validate(); }

  void validate() const {
    if (!(tmod > 0.0 && tmod < 1.0)) throw std::domain_error("CollarParams: tmod must be in (0,1)");
    if (!(delta > 0.0 && delta < 1.0))
      throw std::domain_error("CollarParams: delta must be in (0,1)");
    const double edge = (1.0 - delta) * (1.0 - delta);
    if (!(tmod < edge))
      throw std::domain_error("CollarParams: need tmod < (1-delta)^2 so the annulus "
                              "contains the core circle");
  }
};

enum class CollarVariant { collar, cusp };

/// Conformal factor rho^2 at radius |z| = r.
///
/// collar: (pi/log tmod)^2 csc^2(pi log r / log tmod) / r^2  on tmod < r < 1,
/// cusp:   1 / (r log r)^2                                   on 0 < r < 1.
///
/// The collar factor converges pointwise to the cusp factor as tmod -> 0,
/// and takes its finite core value (csc(pi/2) = 1) at r = sqrt(tmod).
inline double collar_factor(double r, const CollarParams& params, CollarVariant variant) {
  if (variant == CollarVariant::cusp) {
    if (!(r > 0.0 && r < 1.0)) throw std::domain_error("collar_factor: cusp needs 0 < r < 1");
    const double rl = r * std::log(r);
    return 1.0 / (rl * rl);
  }
  if (!(r > params.tmod && r < 1.0))
    throw std::domain_error("collar_factor: collar needs tmod < r < 1");
  const double L = std::log(params.tmod);  // negative
  const double s = std::sin(std::numbers::pi * std::log(r) / L);
  const double a = std::numbers::pi / (L * s * r);
  return a * a;
}

/// Remainder of the collar expansion: |(T csc T)^2 - (1 + T^2/3 + T^4/15)|,
/// of order T^6 as T -> 0.
inline double collar_expansion_error(double theta) {
  if (!(theta > 0.0 && theta < 0.5 * std::numbers::pi))
    throw std::domain_error("collar_expansion_error: theta must be in (0, pi/2)");
  const double q = theta / std::sin(theta);
  const double t2 = theta * theta;
  return std::abs(q * q - (1.0 + t2 / 3.0 + t2 * t2 / 15.0));
}

/// Leading term of the geodesic length around the pinching neck:
/// l(tmod) = 2 pi^2 / (-log tmod). Strictly increasing, -> 0 as tmod -> 0.
inline double wolpert_length(double tmod) {
  if (!(tmod > 0.0 && tmod < 1.0)) throw std::domain_error("wolpert_length: tmod must be in (0,1)");
  return 2.0 * std::numbers::pi * std::numbers::pi / (-std::log(tmod));
}

/// Pairing of the normalized cotangent deformation with itself over the
/// annulus, with the regular part of the differential truncated to 1:
///
///   value = (tmod^2/pi^2) Int_0^{2pi} Int_{tmod}^{1-delta}
///           (1/r^4) (1/rho^2_collar(r)) r dr dtheta.
///
/// Evaluated by adaptive quadrature in the log-radius variable
/// lambda = log r / log tmod, which absorbs the csc^2 core concentration
/// exactly (dr/r = -log(tmod) dlambda) and leaves a smooth integrand.
/// The integrand goes through collar_factor itself.
inline double wp_pairing(const CollarParams& params, double rel_tol = 1e-10) {
  params.validate();
  const double L = -std::log(params.tmod);
  const double lam_outer = -std::log(1.0 - params.delta) / L;
  const auto radial = [&](double lam) {
    const double r = std::exp(-lam * L);
    const double rho2 = collar_factor(r, params, CollarVariant::collar);
    const double r2 = r * r;
    // (1/r^4) * (1/rho2) * r * |dr/dlambda|, with dr/dlambda = -L r
    return (1.0 / (r2 * r2)) * (1.0 / rho2) * r * (L * r);
  };
  const double inner = integrate_or_throw(radial, lam_outer, 1.0, 1e-300, rel_tol);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return (params.tmod * params.tmod / pi2) * 2.0 * std::numbers::pi * inner;
}

} // namespace wp

#endif
