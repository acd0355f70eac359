#ifndef WP_METRIC_HPP
#define WP_METRIC_HPP

#include <cmath>
#include <numbers>

#include "wp/linalg.hpp"
#include "wp/types.hpp"

namespace wp {

// Real coordinate order used everywhere a flat index is needed:
//   [ u_0 .. u_{p-1} | theta_0 .. theta_{p-1} | Re t_0, Im t_0, .. ]
inline std::size_t index_u(const ModelSpec&, std::size_t i) { return i; }
inline std::size_t index_theta(const ModelSpec& s, std::size_t i) { return s.p + i; }
inline std::size_t index_t_re(const ModelSpec& s, std::size_t j) { return 2 * s.p + 2 * j; }
inline std::size_t index_t_im(const ModelSpec& s, std::size_t j) { return 2 * s.p + 2 * j + 1; }

/// Diagonal metric coefficients of one node block at radius u:
///   g_uu = A f(u),  g_thth = (A/4) u^6 f(u),  f(u) = 1 + pert u^4.
struct BlockCoeffs {
  double g_uu;
  double g_thth;
};

inline BlockCoeffs block_coeffs(const ModelSpec& spec, std::size_t i, double u) {
  const double f = 1.0 + spec.pert[i] * u * u * u * u;
  const double u6 = u * u * u * u * u * u;
  return {spec.A[i] * f, 0.25 * spec.A[i] * u6 * f};
}

/// Metric tensor at x as a (2p+2m) x (2p+2m) symmetric matrix over the real
/// coordinates. Block-diagonal: node blocks contribute diag(g_uu, g_thth),
/// flat directions the identity. Positive definite for u_i > 0; at u_i = 0
/// the theta_i row/column vanishes.
inline Matrix metric_tensor(const ModelSpec& spec, const ChartPoint& x) {
  x.validate(spec);
  Matrix g(spec.dim(), spec.dim());
  for (std::size_t i = 0; i < spec.p; ++i) {
    const BlockCoeffs c = block_coeffs(spec, i, x.u[i]);
    g(index_u(spec, i), index_u(spec, i)) = c.g_uu;
    g(index_theta(spec, i), index_theta(spec, i)) = c.g_thth;
  }
  for (std::size_t j = 0; j < spec.m; ++j) {
    g(index_t_re(spec, j), index_t_re(spec, j)) = 1.0;
    g(index_t_im(spec, j), index_t_im(spec, j)) = 1.0;
  }
  return g;
}

inline double metric_inner(const ModelSpec& spec, const ChartPoint& x,
                           const TangentVector& v, const TangentVector& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < spec.p; ++i) {
    const BlockCoeffs c = block_coeffs(spec, i, x.u[i]);
    s += c.g_uu * v.du[i] * w.du[i] + c.g_thth * v.dtheta[i] * w.dtheta[i];
  }
  for (std::size_t j = 0; j < spec.m; ++j)
    s += v.dt[j].real() * w.dt[j].real() + v.dt[j].imag() * w.dt[j].imag();
  return s;
}

inline double metric_norm2(const ModelSpec& spec, const ChartPoint& x, const TangentVector& v) {
  return metric_inner(spec, x, v, v);
}

inline double metric_norm(const ModelSpec& spec, const ChartPoint& x, const TangentVector& v) {
  return std::sqrt(metric_norm2(spec, x, v));
}

/// Nonzero Christoffel symbols of one block. With f = 1 + c u^4:
///   Gamma^u_uu      = f'/(2f)
///   Gamma^u_thth    = -(6u^5 + 10c u^9)/(8f)
///   Gamma^th_u,th   = 3/u + f'/(2f)
/// Everything else in the block, and all flat components, vanish.
struct BlockChristoffel {
  double g_u_uu;
  double g_u_thth;
  double g_th_uth;
};

inline BlockChristoffel block_christoffel(const ModelSpec& spec, std::size_t i, double u) {
  const double c = spec.pert[i];
  const double u2 = u * u, u3 = u2 * u, u4 = u2 * u2, u5 = u4 * u;
  const double f = 1.0 + c * u4;
  const double fp_over_2f = 2.0 * c * u3 / f;
  BlockChristoffel out;
  out.g_u_uu = fp_over_2f;
  out.g_u_thth = -(6.0 * u5 + 10.0 * c * u5 * u4) / (8.0 * f);
  out.g_th_uth = 3.0 / u + fp_over_2f;
  return out;
}

/// Full Christoffel array Gamma^k_{ij} at x. Requires u_i > 0 in every block
/// (Gamma^theta_{u theta} = 3/u + ... degenerates at the stratum).
inline Christoffel christoffel(const ModelSpec& spec, const ChartPoint& x) {
  x.validate(spec);
  for (std::size_t i = 0; i < spec.p; ++i)
    if (!(x.u[i] > 0.0))
      throw std::domain_error("christoffel: degenerate coordinate, u_i = 0");
  Christoffel gamma(spec.dim());
  for (std::size_t i = 0; i < spec.p; ++i) {
    const BlockChristoffel b = block_christoffel(spec, i, x.u[i]);
    const std::size_t iu = index_u(spec, i), ith = index_theta(spec, i);
    gamma(iu, iu, iu) = b.g_u_uu;
    gamma(iu, ith, ith) = b.g_u_thth;
    gamma(ith, iu, ith) = b.g_th_uth;
    gamma(ith, ith, iu) = b.g_th_uth;
  }
  return gamma;
}

/// Gauss curvature of the unperturbed (u, theta) block: K(u) = -6/(A u^2).
/// Strictly negative, diverging to -infinity at the stratum.
inline double gauss_curvature_block(double u, double A) {
  if (!(u > 0.0)) throw std::domain_error("gauss_curvature_block: u must be > 0");
  if (!(A > 0.0)) throw std::domain_error("gauss_curvature_block: A must be > 0");
  return -6.0 / (A * u * u);
}

// --- collar <-> plumbing coordinate transform -------------------------------
//
// Per block, |t| = exp(-2 pi^2 / u^2) with arg t = theta; the square-root
// length coordinate is u = sqrt(l), l = 2 pi^2 / (-log |t|). The flat
// coordinates pass through unchanged. u = 0 <-> t = 0 exactly (encoded as
// -log|t| = +infinity).

inline PlumbingModulus node_to_plumbing(double u, double theta) {
  if (!(u >= 0.0) || !std::isfinite(u))
    throw std::domain_error("node_to_plumbing: u must be finite and >= 0");
  PlumbingModulus w;
  w.arg = theta;
  if (u > 0.0) w.neg_log_mod = 2.0 * std::numbers::pi * std::numbers::pi / (u * u);
  return w;
}

inline std::pair<double, double> node_from_plumbing(const PlumbingModulus& w) {
  if (!(w.neg_log_mod > 0.0))
    throw std::domain_error("node_from_plumbing: |t| >= 1, collar coordinate undefined");
  if (std::isinf(w.neg_log_mod)) return {0.0, 0.0};
  const double l = 2.0 * std::numbers::pi * std::numbers::pi / w.neg_log_mod;
  return {std::sqrt(l), w.arg};
}

inline std::pair<double, double> node_from_plumbing(const complex& t) {
  const double mod = std::abs(t);
  if (!(mod < 1.0))
    throw std::domain_error("node_from_plumbing: |t| >= 1, collar coordinate undefined");
  PlumbingModulus w;
  w.neg_log_mod = mod == 0.0 ? std::numeric_limits<double>::infinity() : -std::log(mod);
  w.arg = mod == 0.0 ? 0.0 : std::arg(t);
  return node_from_plumbing(w);
}

inline PlumbingPoint to_plumbing(const ChartPoint& x) {
  PlumbingPoint out;
  out.w.reserve(x.u.size());
  for (std::size_t i = 0; i < x.u.size(); ++i)
    out.w.push_back(node_to_plumbing(x.u[i], x.theta[i]));
  out.t = x.t;
  return out;
}

inline ChartPoint from_plumbing(const PlumbingPoint& pp) {
  ChartPoint x;
  x.u.reserve(pp.w.size());
  x.theta.reserve(pp.w.size());
  for (const PlumbingModulus& w : pp.w) {
    auto [u, th] = node_from_plumbing(w);
    x.u.push_back(u);
    x.theta.push_back(th);
  }
  x.t = pp.t;
  return x;
}

// --- chart arithmetic helpers ----------------------------------------------

/// Coordinate difference b - a as a tangent vector (theta taken raw, no
/// wrapping: the chart keeps angles on the whole real line).
inline TangentVector chart_difference(const ChartPoint& a, const ChartPoint& b) {
  TangentVector v;
  v.du.resize(a.u.size());
  v.dtheta.resize(a.theta.size());
  v.dt.resize(a.t.size());
  for (std::size_t i = 0; i < a.u.size(); ++i) {
    v.du[i] = b.u[i] - a.u[i];
    v.dtheta[i] = b.theta[i] - a.theta[i];
  }
  for (std::size_t j = 0; j < a.t.size(); ++j) v.dt[j] = b.t[j] - a.t[j];
  return v;
}

inline ChartPoint chart_midpoint(const ChartPoint& a, const ChartPoint& b) {
  ChartPoint m = a;
  for (std::size_t i = 0; i < a.u.size(); ++i) {
    m.u[i] = 0.5 * (a.u[i] + b.u[i]);
    m.theta[i] = 0.5 * (a.theta[i] + b.theta[i]);
  }
  for (std::size_t j = 0; j < a.t.size(); ++j) m.t[j] = 0.5 * (a.t[j] + b.t[j]);
  return m;
}

} // namespace wp

#endif
