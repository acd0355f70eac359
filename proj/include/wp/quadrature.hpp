#ifndef WP_QUADRATURE_HPP
#define WP_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <string>

#include "wp/types.hpp"

namespace wp {

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int subdivisions = 0;
  bool converged = false;
};

namespace detail {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
void gk15(F&& f, double a, double b, double& value, double& error) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  // nodes ordered as -x0, +x0, -x1, +x1, ..., center last
  double resk = 0.0, resg = 0.0;
  for (int i = 0; i < 7; ++i) {
    const double x = kronrod_nodes[static_cast<std::size_t>(i)];
    fv[2 * i] = f(c - h * x);
    fv[2 * i + 1] = f(c + h * x);
    resk += kronrod_weights[static_cast<std::size_t>(i)] * (fv[2 * i] + fv[2 * i + 1]);
  }
  fv[14] = f(c);
  resk += kronrod_weights[7] * fv[14];
  // Gauss subset: odd Kronrod nodes (indices 1, 3, 5) plus the center
  resg = gauss_weights[0] * (fv[2] + fv[3]) + gauss_weights[1] * (fv[6] + fv[7]) +
         gauss_weights[2] * (fv[10] + fv[11]) + gauss_weights[3] * fv[14];
  value = resk * h;
  const double diff = std::abs(resk - resg) * std::abs(h);
  // standard QUADPACK-style sharpening of the raw G-K difference
  error = diff > 0.0 ? std::pow(200.0 * diff, 1.5) : 0.0;
  if (error > diff) error = diff;
  if (error < 1e-300) error = diff;
}

template <class F>
void adapt(F&& f, double a, double b, double abs_tol, double rel_tol, int depth, int max_depth,
           QuadResult& acc) {
  double v, e;
  gk15(f, a, b, v, e);
  const double budget = std::max(abs_tol, rel_tol * std::abs(v));
  if (e <= budget || depth >= max_depth) {
    acc.value += v;
    acc.error_estimate += e;
    if (depth >= max_depth && e > budget) acc.converged = false;
    return;
  }
  ++acc.subdivisions;
  const double mid = 0.5 * (a + b);
  adapt(f, a, mid, 0.5 * abs_tol, rel_tol, depth + 1, max_depth, acc);
  adapt(f, mid, b, 0.5 * abs_tol, rel_tol, depth + 1, max_depth, acc);
}

} // namespace detail

/// Adaptive Gauss-Kronrod 7-15 on [a, b]. Never evaluates the endpoints,
/// so integrable endpoint singularities subdivide their way to convergence.
template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol = 1e-12, double rel_tol = 1e-12,
                     int max_depth = 60) {
  QuadResult acc;
  acc.converged = true;
  if (a == b) return acc;
  detail::adapt(f, a, b, abs_tol, rel_tol, 0, max_depth, acc);
  return acc;
}

/// Same, but failure to converge is an error with diagnostics.
template <class F>
double integrate_or_throw(F&& f, double a, double b, double abs_tol = 1e-12,
                          double rel_tol = 1e-12, int max_depth = 60) {
  QuadResult r = integrate(f, a, b, abs_tol, rel_tol, max_depth);
  if (!r.converged)
    throw numerical_error("quadrature did not converge on [" + std::to_string(a) + ", " +
                          std::to_string(b) + "]: estimated error " +
                          std::to_string(r.error_estimate) + " after " +
                          std::to_string(r.subdivisions) + " subdivisions");
  return r.value;
}

} // namespace wp

#endif
