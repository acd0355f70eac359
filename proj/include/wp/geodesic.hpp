#ifndef WP_GEODESIC_HPP
#define WP_GEODESIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "wp/linalg.hpp"
#include "wp/metric.hpp"
#include "wp/types.hpp"

namespace wp {

enum class Termination { length_reached, boundary_hit, step_failure };

struct TrajectorySample {
  double s = 0.0;
  ChartPoint x;
  TangentVector v;
  double energy = 0.0;               ///< g(v, v) at the sample
  std::vector<double> p_theta;       ///< angular momenta g_thth * dtheta per block
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  Termination termination = Termination::length_reached;
  int boundary_block = -1;           ///< block index for boundary_hit
  std::string diagnostic;

  double length() const { return samples.empty() ? 0.0 : samples.back().s; }
};

/// Discrete path: ordered chart points under one ModelSpec.
struct Polyline {
  std::vector<ChartPoint> points;

  void validate(const ModelSpec& spec) const {
    if (points.size() < 2) throw std::invalid_argument("Polyline: need at least 2 points");
    for (const ChartPoint& x : points) x.validate(spec);
  }
};

namespace detail {

// Flat layout: y[0..n) chart coordinates, y[n..2n) velocity.
inline void pack_point(const ModelSpec& s, const ChartPoint& x, double* y) {
  for (std::size_t i = 0; i < s.p; ++i) {
    y[index_u(s, i)] = x.u[i];
    y[index_theta(s, i)] = x.theta[i];
  }
  for (std::size_t j = 0; j < s.m; ++j) {
    y[index_t_re(s, j)] = x.t[j].real();
    y[index_t_im(s, j)] = x.t[j].imag();
  }
}

inline ChartPoint unpack_point(const ModelSpec& s, const double* y) {
  ChartPoint x;
  x.u.resize(s.p);
  x.theta.resize(s.p);
  x.t.resize(s.m);
  for (std::size_t i = 0; i < s.p; ++i) {
    x.u[i] = y[index_u(s, i)];
    x.theta[i] = y[index_theta(s, i)];
  }
  for (std::size_t j = 0; j < s.m; ++j)
    x.t[j] = complex(y[index_t_re(s, j)], y[index_t_im(s, j)]);
  return x;
}

inline void pack_tangent(const ModelSpec& s, const TangentVector& v, double* y) {
  for (std::size_t i = 0; i < s.p; ++i) {
    y[index_u(s, i)] = v.du[i];
    y[index_theta(s, i)] = v.dtheta[i];
  }
  for (std::size_t j = 0; j < s.m; ++j) {
    y[index_t_re(s, j)] = v.dt[j].real();
    y[index_t_im(s, j)] = v.dt[j].imag();
  }
}

inline TangentVector unpack_tangent(const ModelSpec& s, const double* y) {
  TangentVector v;
  v.du.resize(s.p);
  v.dtheta.resize(s.p);
  v.dt.resize(s.m);
  for (std::size_t i = 0; i < s.p; ++i) {
    v.du[i] = y[index_u(s, i)];
    v.dtheta[i] = y[index_theta(s, i)];
  }
  for (std::size_t j = 0; j < s.m; ++j)
    v.dt[j] = complex(y[index_t_re(s, j)], y[index_t_im(s, j)]);
  return v;
}

/// Dormand-Prince 5(4) stepper for the geodesic equation in chart
/// coordinates. The equation is smooth away from u_i = 0; the only
/// singular term, 2 Gamma^th_{u th} u' th' with Gamma ~ 3/u, vanishes
/// identically on trajectories with th' = 0, which is guarded explicitly
/// so radial motion integrates through and past the stratum.
class GeodesicStepper {
public:
  GeodesicStepper(const ModelSpec& spec, double rtol, double atol)
      : spec_(&spec), n_(spec.dim()), rtol_(rtol), atol_(atol) {
    for (auto* b : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_})
      b->assign(2 * n_, 0.0);
  }

  std::size_t dim() const { return n_; }

  void rhs(const std::vector<double>& y, std::vector<double>& dy) const {
    const ModelSpec& s = *spec_;
    for (std::size_t i = 0; i < n_; ++i) dy[i] = y[n_ + i];
    for (std::size_t i = 0; i < s.p; ++i) {
      const double u = y[index_u(s, i)];
      const double du = y[n_ + index_u(s, i)];
      const double dth = y[n_ + index_theta(s, i)];
      const double c = s.pert[i];
      const double u2 = u * u, u3 = u2 * u, u4 = u2 * u2, u5 = u4 * u;
      const double f = 1.0 + c * u4;
      const double fp2f = 2.0 * c * u3 / f;
      double au = -fp2f * du * du + ((6.0 * u5 + 10.0 * c * u5 * u4) / (8.0 * f)) * dth * dth;
      double ath = 0.0;
      if (dth != 0.0) ath = -2.0 * (3.0 / u + fp2f) * du * dth;
      dy[n_ + index_u(s, i)] = au;
      dy[n_ + index_theta(s, i)] = ath;
    }
    for (std::size_t j = 0; j < s.m; ++j) {
      dy[n_ + index_t_re(s, j)] = 0.0;
      dy[n_ + index_t_im(s, j)] = 0.0;
    }
  }

  /// One accepted adaptive step of size at most h_max. Returns false when
  /// the step size underflows. h_taken reports the size actually used.
  bool single_step(std::vector<double>& y, double h_max, double& h_taken) {
    double h = std::min(h_next_ > 0.0 ? h_next_ : std::min(1e-2, h_max), h_max);
    if (!(h > 0.0)) return false;
    const double h_floor = 1e-14 * std::max(1.0, std::abs(h_max));
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double err = try_step(y, h);
      if (std::isfinite(err) && err <= 1.0) {
        y = ynew_;
        h_taken = h;
        const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h_next_ = h * std::clamp(grow, 0.2, 5.0);
        return true;
      }
      const double shrink = std::isfinite(err) && err > 0.0
                                ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5)
                                : 0.1;
      h *= shrink;
      if (h < h_floor) return false;
    }
    return false;
  }

  /// Advance exactly ds with adaptive internal steps.
  bool advance(std::vector<double>& y, double ds) {
    double s = 0.0;
    std::size_t guard = 0;
    while (s < ds * (1.0 - 1e-15)) {
      double h_taken = 0.0;
      if (!single_step(y, ds - s, h_taken)) return false;
      s += h_taken;
      if (++guard > 5'000'000) return false;
    }
    return true;
  }

  void reset_step_size() { h_next_ = 0.0; }

private:
  double try_step(const std::vector<double>& y, double h) {
    auto axpy = [&](const std::vector<double>& base, std::initializer_list<double> cs,
                    std::initializer_list<const std::vector<double>*> ks) {
      ytmp_ = base;
      auto c = cs.begin();
      for (const auto* k : ks) {
        const double f = h * (*c++);
        for (std::size_t i = 0; i < 2 * n_; ++i) ytmp_[i] += f * (*k)[i];
      }
    };
    rhs(y, k1_);
    axpy(y, {1.0 / 5.0}, {&k1_});
    rhs(ytmp_, k2_);
    axpy(y, {3.0 / 40.0, 9.0 / 40.0}, {&k1_, &k2_});
    rhs(ytmp_, k3_);
    axpy(y, {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0}, {&k1_, &k2_, &k3_});
    rhs(ytmp_, k4_);
    axpy(y, {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0},
         {&k1_, &k2_, &k3_, &k4_});
    rhs(ytmp_, k5_);
    axpy(y, {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0},
         {&k1_, &k2_, &k3_, &k4_, &k5_});
    rhs(ytmp_, k6_);
    axpy(y, {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0},
         {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_});
    ynew_ = ytmp_;
    rhs(ynew_, k7_);

    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    double err2 = 0.0;
    for (std::size_t i = 0; i < 2 * n_; ++i) {
      const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
                            e7 * k7_[i]);
      const double sc = atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(ynew_[i]));
      err2 += (e / sc) * (e / sc);
    }
    return std::sqrt(err2 / static_cast<double>(2 * n_));
  }

  const ModelSpec* spec_;
  std::size_t n_;
  double rtol_, atol_;
  double h_next_ = 0.0;
  std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_;
};

inline std::vector<double> momenta(const ModelSpec& s, const ChartPoint& x,
                                   const TangentVector& v) {
  std::vector<double> p(s.p, 0.0);
  for (std::size_t i = 0; i < s.p; ++i)
    p[i] = block_coeffs(s, i, x.u[i]).g_thth * v.dtheta[i];
  return p;
}

inline TrajectorySample make_sample(const ModelSpec& s, double arclen,
                                    const std::vector<double>& y) {
  TrajectorySample smp;
  smp.s = arclen;
  smp.x = unpack_point(s, y.data());
  smp.v = unpack_tangent(s, y.data() + s.dim());
  smp.energy = metric_norm2(s, smp.x, smp.v);
  smp.p_theta = momenta(s, smp.x, smp.v);
  return smp;
}

} // namespace detail

struct ShootOptions {
  double tol = 1e-8;        ///< integrator rel/abs tolerance and event tolerance
  double sample_ds = 0.0;   ///< > 0: record samples on this uniform arclength grid
  bool stop_at_boundary = true;
  std::size_t max_steps = 10'000'000;
};

/// Integrate the geodesic through x0 with initial direction v0 (normalized
/// to unit speed) up to the requested arclength, or up to the first
/// boundary event u_i = 0, located by bisection to the shoot tolerance.
/// Step-size underflow near the degenerate stratum with nonzero angular
/// momentum terminates with Termination::step_failure and a diagnostic.
inline Trajectory shoot(const ModelSpec& spec, const ChartPoint& x0, const TangentVector& v0,
                        double length, const ShootOptions& opts = {}) {
  x0.validate(spec);
  if (!(length > 0.0)) throw std::invalid_argument("shoot: length must be > 0");
  for (std::size_t i = 0; i < spec.p; ++i) {
    if (x0.u[i] == 0.0 && v0.dtheta[i] != 0.0)
      throw std::domain_error("shoot: angular velocity at u_i = 0 is degenerate");
    if (x0.u[i] == 0.0 && v0.du[i] < 0.0)
      throw std::domain_error("shoot: initial direction leaves the domain at u_i = 0");
  }
  const double speed = metric_norm(spec, x0, v0);
  if (!(speed > 0.0) || !std::isfinite(speed))
    throw std::invalid_argument("shoot: v0 must have positive finite norm");

  const std::size_t n = spec.dim();
  std::vector<double> y(2 * n);
  detail::pack_point(spec, x0, y.data());
  {
    TangentVector vu = v0;
    for (double& a : vu.du) a /= speed;
    for (double& a : vu.dtheta) a /= speed;
    for (complex& a : vu.dt) a /= speed;
    detail::pack_tangent(spec, vu, y.data() + n);
  }

  detail::GeodesicStepper stepper(spec, opts.tol, opts.tol);
  Trajectory traj;
  double s = 0.0;
  traj.samples.push_back(detail::make_sample(spec, s, y));

  auto crossed_block = [&](const std::vector<double>& yprev, const std::vector<double>& ynow) {
    for (std::size_t i = 0; i < spec.p; ++i)
      if (yprev[index_u(spec, i)] > 0.0 && ynow[index_u(spec, i)] <= 0.0)
        return static_cast<int>(i);
    return -1;
  };

  double next_sample = opts.sample_ds > 0.0 ? opts.sample_ds : std::numeric_limits<double>::max();
  std::size_t steps = 0;
  while (s < length * (1.0 - 1e-15)) {
    if (++steps > opts.max_steps) {
      traj.termination = Termination::step_failure;
      traj.diagnostic = "step budget exhausted at s = " + std::to_string(s);
      traj.samples.push_back(detail::make_sample(spec, s, y));
      return traj;
    }
    const double h_cap = std::min(length - s, next_sample - s > 0.0 ? next_sample - s : length - s);
    std::vector<double> yprev = y;
    double h_taken = 0.0;
    if (!stepper.single_step(y, h_cap, h_taken)) {
      traj.termination = Termination::step_failure;
      traj.diagnostic = "adaptive step underflow near the degenerate stratum at s = " +
                        std::to_string(s);
      traj.samples.push_back(detail::make_sample(spec, s, yprev));
      return traj;
    }

    const int blk = opts.stop_at_boundary ? crossed_block(yprev, y) : -1;
    if (blk >= 0) {
      // Bisect the step length until the crossing block sits within the
      // event tolerance above zero.
      double lo = 0.0, hi = h_taken;
      std::vector<double> yev = yprev;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        std::vector<double> ytry = yprev;
        detail::GeodesicStepper sub(spec, opts.tol, opts.tol);
        if (mid > 0.0 && !sub.advance(ytry, mid)) break;
        const double uval = ytry[index_u(spec, static_cast<std::size_t>(blk))];
        if (uval <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          yev = ytry;
          if (uval <= opts.tol) break;
        }
        if (hi - lo < 1e-16 * std::max(1.0, h_taken)) break;
      }
      s += lo;
      yev[index_u(spec, static_cast<std::size_t>(blk))] =
          std::max(0.0, yev[index_u(spec, static_cast<std::size_t>(blk))]);
      if (yev[index_u(spec, static_cast<std::size_t>(blk))] <= opts.tol)
        yev[index_u(spec, static_cast<std::size_t>(blk))] = 0.0;
      traj.samples.push_back(detail::make_sample(spec, s, yev));
      traj.termination = Termination::boundary_hit;
      traj.boundary_block = blk;
      return traj;
    }

    s += h_taken;
    if (opts.sample_ds > 0.0) {
      if (s >= next_sample * (1.0 - 1e-12)) {
        traj.samples.push_back(detail::make_sample(spec, s, y));
        next_sample += opts.sample_ds;
      }
    } else {
      traj.samples.push_back(detail::make_sample(spec, s, y));
    }
  }
  if (traj.samples.back().s < s * (1.0 - 1e-12))
    traj.samples.push_back(detail::make_sample(spec, s, y));
  traj.termination = Termination::length_reached;
  return traj;
}

// --- discrete paths ----------------------------------------------------------

struct PathFunctionals {
  double length = 0.0;
  double energy = 0.0;
};

/// Discrete length and Dirichlet energy of a polyline over the uniform
/// parameter grid: per segment, the midpoint-metric norm of the chart
/// difference. Cauchy-Schwarz gives length^2 <= energy, a fortiori
/// length^2 <= segments * energy.
inline PathFunctionals path_functionals(const ModelSpec& spec, const Polyline& path) {
  path.validate(spec);
  const std::size_t nseg = path.points.size() - 1;
  PathFunctionals out;
  for (std::size_t k = 0; k < nseg; ++k) {
    const ChartPoint mid = chart_midpoint(path.points[k], path.points[k + 1]);
    const TangentVector d = chart_difference(path.points[k], path.points[k + 1]);
    const double q = metric_norm2(spec, mid, d);
    out.length += std::sqrt(q);
    out.energy += q * static_cast<double>(nseg);
  }
  return out;
}

/// Dyadic refinement: insert the chart midpoint of every segment.
inline Polyline refine_polyline(const Polyline& path) {
  Polyline out;
  out.points.reserve(2 * path.points.size() - 1);
  for (std::size_t k = 0; k + 1 < path.points.size(); ++k) {
    out.points.push_back(path.points[k]);
    out.points.push_back(chart_midpoint(path.points[k], path.points[k + 1]));
  }
  out.points.push_back(path.points.back());
  return out;
}

inline Polyline straight_polyline(const ChartPoint& a, const ChartPoint& b, std::size_t npoints) {
  Polyline out;
  out.points.reserve(npoints);
  for (std::size_t k = 0; k < npoints; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(npoints - 1);
    ChartPoint x = a;
    for (std::size_t i = 0; i < a.u.size(); ++i) {
      x.u[i] = std::max(0.0, (1.0 - t) * a.u[i] + t * b.u[i]);
      x.theta[i] = (1.0 - t) * a.theta[i] + t * b.theta[i];
    }
    for (std::size_t j = 0; j < a.t.size(); ++j) x.t[j] = (1.0 - t) * a.t[j] + t * b.t[j];
    out.points.push_back(std::move(x));
  }
  return out;
}

struct MinimizeOptions {
  double tol = 1e-9;           ///< gradient sup-norm at which the minimum counts as reached
  std::size_t max_iterations = 50'000;
};

struct MinimizeResult {
  Polyline path;
  double energy = 0.0;
  double length = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

// Gradient of the discrete energy with respect to the interior points.
// g depends on the u coordinates only, so the midpoint terms contribute
// derivatives through g_uu and g_thth alone.
inline void energy_gradient(const ModelSpec& s, const std::vector<ChartPoint>& pts,
                            std::vector<std::vector<double>>& grad) {
  const std::size_t npts = pts.size();
  const double nseg = static_cast<double>(npts - 1);
  for (auto& g : grad) std::fill(g.begin(), g.end(), 0.0);

  for (std::size_t k = 0; k + 1 < npts; ++k) {
    const ChartPoint& a = pts[k];
    const ChartPoint& b = pts[k + 1];
    for (std::size_t i = 0; i < s.p; ++i) {
      const double mu = 0.5 * (a.u[i] + b.u[i]);
      const double c = s.pert[i];
      const double mu2 = mu * mu, mu3 = mu2 * mu, mu4 = mu2 * mu2, mu5 = mu4 * mu,
                   mu6 = mu4 * mu2;
      const double f = 1.0 + c * mu4;
      const double fp = 4.0 * c * mu3;
      const double dU = b.u[i] - a.u[i];
      const double dTh = b.theta[i] - a.theta[i];
      const double g_uu = s.A[i] * f;
      const double g_tt = 0.25 * s.A[i] * mu6 * f;
      const double dG_dmu = s.A[i] * fp * dU * dU +
                            0.25 * s.A[i] * (6.0 * mu5 * f + mu6 * fp) * dTh * dTh;
      const double dG_ddU = 2.0 * g_uu * dU;
      const double dG_ddTh = 2.0 * g_tt * dTh;
      grad[k][index_u(s, i)] += nseg * (0.5 * dG_dmu - dG_ddU);
      grad[k + 1][index_u(s, i)] += nseg * (0.5 * dG_dmu + dG_ddU);
      grad[k][index_theta(s, i)] += nseg * (-dG_ddTh);
      grad[k + 1][index_theta(s, i)] += nseg * (dG_ddTh);
    }
    for (std::size_t j = 0; j < s.m; ++j) {
      const complex d = b.t[j] - a.t[j];
      grad[k][index_t_re(s, j)] += nseg * (-2.0 * d.real());
      grad[k + 1][index_t_re(s, j)] += nseg * (2.0 * d.real());
      grad[k][index_t_im(s, j)] += nseg * (-2.0 * d.imag());
      grad[k + 1][index_t_im(s, j)] += nseg * (2.0 * d.imag());
    }
  }
}

inline double discrete_energy(const ModelSpec& s, const std::vector<ChartPoint>& pts) {
  double e = 0.0;
  const double nseg = static_cast<double>(pts.size() - 1);
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const ChartPoint mid = chart_midpoint(pts[k], pts[k + 1]);
    const TangentVector d = chart_difference(pts[k], pts[k + 1]);
    e += metric_norm2(s, mid, d) * nseg;
  }
  return e;
}

} // namespace detail

/// Projected gradient descent with Armijo backtracking on the discrete
/// energy. Endpoints stay pinned; interior points are projected back to
/// u_i >= 0 after every step. Energy is non-increasing across iterations.
inline MinimizeResult minimize_path(const ModelSpec& spec, const Polyline& init,
                                    const MinimizeOptions& opts = {}) {
  init.validate(spec);
  if (init.points.size() < 3)
    throw std::invalid_argument("minimize_path: need at least 3 points (pinned endpoints)");

  std::vector<ChartPoint> pts = init.points;
  const std::size_t npts = pts.size();
  const std::size_t n = spec.dim();
  std::vector<std::vector<double>> grad(npts, std::vector<double>(n, 0.0));

  double energy = detail::discrete_energy(spec, pts);
  double step = 0.05 / static_cast<double>(npts);
  std::size_t iter = 0;
  std::size_t floor_hits = 0;
  bool converged = false;

  std::vector<ChartPoint> trial = pts;
  for (; iter < opts.max_iterations; ++iter) {
    detail::energy_gradient(spec, pts, grad);
    double gmax = 0.0;
    for (std::size_t k = 1; k + 1 < npts; ++k)
      for (double gv : grad[k]) gmax = std::max(gmax, std::abs(gv));
    if (gmax <= opts.tol) {
      converged = true;
      break;
    }

    double g2 = 0.0;
    for (std::size_t k = 1; k + 1 < npts; ++k)
      for (double gv : grad[k]) g2 += gv * gv;

    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t k = 1; k + 1 < npts; ++k) {
        ChartPoint& x = trial[k];
        x = pts[k];
        for (std::size_t i = 0; i < spec.p; ++i) {
          x.u[i] = std::max(0.0, x.u[i] - step * grad[k][index_u(spec, i)]);
          x.theta[i] -= step * grad[k][index_theta(spec, i)];
        }
        for (std::size_t j = 0; j < spec.m; ++j)
          x.t[j] -= complex(step * grad[k][index_t_re(spec, j)],
                            step * grad[k][index_t_im(spec, j)]);
      }
      const double e_trial = detail::discrete_energy(spec, trial);
      if (e_trial <= energy - 1e-4 * step * g2) {
        const double decrease = (energy - e_trial) / std::max(energy, 1e-300);
        pts.swap(trial);
        for (std::size_t k = 1; k + 1 < npts; ++k) trial[k] = pts[k];
        energy = e_trial;
        step *= 1.25;
        accepted = true;
        floor_hits = decrease < 1e-16 ? floor_hits + 1 : 0;
        break;
      }
      step *= 0.5;
      if (step < 1e-18) break;
    }
    if (!accepted || floor_hits >= 8) {
      converged = true;  // descent has reached the floating-point floor
      break;
    }
  }

  MinimizeResult out;
  out.path.points = std::move(pts);
  out.energy = energy;
  out.length = path_functionals(spec, out.path).length;
  out.iterations = iter;
  out.converged = converged;
  return out;
}

// --- two-point connection ----------------------------------------------------

struct ConnectOptions {
  double tol = 1e-8;          ///< endpoint mismatch tolerance in chart coordinates
  double ivp_tol = 1e-11;     ///< integrator tolerance inside the solver
  int multistart = 6;
  int newton_max = 50;
  std::uint64_t seed = 0;
  std::size_t samples = 65;   ///< uniform samples on the returned trajectory
  bool allow_fallback = true;
};

struct GeodesicPath {
  Trajectory traj;
  double length = 0.0;
  bool converged = false;
  double mismatch = 0.0;       ///< endpoint residual of the accepted candidate
  std::string method;          ///< "flat", "shooting", "minimizer"
  ChartPoint start;
  TangentVector v0_unit;       ///< unit initial direction (shooting/flat routes)
};

namespace detail {

struct BvpLayout {
  std::vector<std::size_t> active_blocks;   // either endpoint has u > 0
  std::vector<bool> theta_free;             // per active block
  std::vector<double> frozen_theta;         // value used when not free
};

inline BvpLayout bvp_layout(const ModelSpec& spec, const ChartPoint& p, const ChartPoint& q) {
  BvpLayout lay;
  for (std::size_t i = 0; i < spec.p; ++i) {
    if (p.u[i] == 0.0 && q.u[i] == 0.0) continue;  // stays in the stratum
    lay.active_blocks.push_back(i);
    const bool free = p.u[i] > 0.0 && q.u[i] > 0.0;
    lay.theta_free.push_back(free);
    lay.frozen_theta.push_back(p.u[i] > 0.0 ? p.theta[i] : q.theta[i]);
  }
  return lay;
}

// Unknowns: du per active block, dtheta per free block, dt components.
inline std::size_t bvp_dim(const ModelSpec& spec, const BvpLayout& lay) {
  std::size_t d = lay.active_blocks.size() + 2 * spec.m;
  for (bool f : lay.theta_free) d += f ? 1 : 0;
  return d;
}

inline ChartPoint bvp_start(const ChartPoint& p, const BvpLayout& lay) {
  ChartPoint x = p;
  for (std::size_t a = 0; a < lay.active_blocks.size(); ++a)
    if (!lay.theta_free[a]) x.theta[lay.active_blocks[a]] = lay.frozen_theta[a];
  return x;
}

inline TangentVector bvp_tangent(const ModelSpec& spec, const BvpLayout& lay,
                                 const std::vector<double>& w) {
  TangentVector v(spec);
  std::size_t c = 0;
  for (std::size_t a = 0; a < lay.active_blocks.size(); ++a) v.du[lay.active_blocks[a]] = w[c++];
  for (std::size_t a = 0; a < lay.active_blocks.size(); ++a)
    if (lay.theta_free[a]) v.dtheta[lay.active_blocks[a]] = w[c++];
  for (std::size_t j = 0; j < spec.m; ++j) {
    const double re = w[c++];
    const double im = w[c++];
    v.dt[j] = complex(re, im);
  }
  return v;
}

// Integrates the raw (affine-parameter) geodesic over [0,1] and returns the
// endpoint residual against q in the active coordinates. Large sentinel on
// integrator failure so the outer solver backs away.
inline bool bvp_residual(const ModelSpec& spec, const ChartPoint& start, const ChartPoint& q,
                         const BvpLayout& lay, const std::vector<double>& w, double ivp_tol,
                         std::vector<double>& res) {
  const std::size_t n = spec.dim();
  std::vector<double> y(2 * n);
  pack_point(spec, start, y.data());
  pack_tangent(spec, bvp_tangent(spec, lay, w), y.data() + n);
  GeodesicStepper stepper(spec, ivp_tol, ivp_tol);
  if (!stepper.advance(y, 1.0)) {
    std::fill(res.begin(), res.end(), 1e10);
    return false;
  }
  std::size_t c = 0;
  for (std::size_t a = 0; a < lay.active_blocks.size(); ++a)
    res[c++] = y[index_u(spec, lay.active_blocks[a])] - q.u[lay.active_blocks[a]];
  for (std::size_t a = 0; a < lay.active_blocks.size(); ++a)
    if (lay.theta_free[a])
      res[c++] = y[index_theta(spec, lay.active_blocks[a])] - q.theta[lay.active_blocks[a]];
  for (std::size_t j = 0; j < spec.m; ++j) {
    res[c++] = y[index_t_re(spec, j)] - q.t[j].real();
    res[c++] = y[index_t_im(spec, j)] - q.t[j].imag();
  }
  return true;
}

inline double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline Trajectory trajectory_from_polyline(const ModelSpec& spec, const Polyline& poly) {
  Trajectory traj;
  const std::size_t npts = poly.points.size();
  std::vector<double> s(npts, 0.0);
  for (std::size_t k = 1; k < npts; ++k) {
    const ChartPoint mid = chart_midpoint(poly.points[k - 1], poly.points[k]);
    const TangentVector d = chart_difference(poly.points[k - 1], poly.points[k]);
    s[k] = s[k - 1] + metric_norm(spec, mid, d);
  }
  for (std::size_t k = 0; k < npts; ++k) {
    TrajectorySample smp;
    smp.s = s[k];
    smp.x = poly.points[k];
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 < npts ? k + 1 : k;
    TangentVector d = chart_difference(poly.points[lo], poly.points[hi]);
    const double ds = std::max(s[hi] - s[lo], 1e-300);
    for (double& a : d.du) a /= ds;
    for (double& a : d.dtheta) a /= ds;
    for (complex& a : d.dt) a /= ds;
    smp.v = d;
    smp.energy = metric_norm2(spec, smp.x, smp.v);
    smp.p_theta = momenta(spec, smp.x, smp.v);
    traj.samples.push_back(std::move(smp));
  }
  traj.termination = Termination::length_reached;
  return traj;
}

} // namespace detail

/// Connect p to q by a length-minimizing geodesic: multi-start shooting with
/// damped Newton on the endpoint mismatch, falling back to the discrete
/// energy minimizer when shooting stalls near the degenerate boundary.
/// Blocks pinched at both endpoints stay pinched (the stratum is totally
/// geodesic); blocks pinched at one endpoint have their twist angle frozen,
/// since any geodesic reaching u_i = 0 carries zero angular momentum.
inline GeodesicPath connect(const ModelSpec& spec, const ChartPoint& p, const ChartPoint& q,
                            const ConnectOptions& opts = {}) {
  p.validate(spec);
  q.validate(spec);
  if (same_point(p, q))
    throw std::invalid_argument("connect: endpoints coincide on the completion");

  const detail::BvpLayout lay = detail::bvp_layout(spec, p, q);
  const std::size_t d = detail::bvp_dim(spec, lay);
  const ChartPoint start = detail::bvp_start(p, lay);

  GeodesicPath out;
  out.start = start;

  // Pure stratum motion: flat factor only, straight line is exact.
  if (lay.active_blocks.empty()) {
    double len2 = 0.0;
    for (std::size_t j = 0; j < spec.m; ++j) len2 += std::norm(q.t[j] - p.t[j]);
    const double len = std::sqrt(len2);
    ChartPoint end = q;
    for (std::size_t i = 0; i < spec.p; ++i) end.theta[i] = start.theta[i];
    Polyline line = straight_polyline(start, end, opts.samples);
    out.traj = detail::trajectory_from_polyline(spec, line);
    out.length = len;
    out.converged = true;
    out.method = "flat";
    out.mismatch = 0.0;
    out.v0_unit = TangentVector(spec);
    for (std::size_t j = 0; j < spec.m; ++j)
      out.v0_unit.dt[j] = (q.t[j] - p.t[j]) / std::max(len, 1e-300);
    return out;
  }

  // Candidate initial velocities for the shooting solver.
  std::vector<std::vector<double>> candidates;
  {
    std::vector<double> w0(d, 0.0);
    std::size_t c = 0;
    for (std::size_t a = 0; a < lay.active_blocks.size(); ++a)
      w0[c++] = q.u[lay.active_blocks[a]] - start.u[lay.active_blocks[a]];
    for (std::size_t a = 0; a < lay.active_blocks.size(); ++a)
      if (lay.theta_free[a])
        w0[c++] = q.theta[lay.active_blocks[a]] - start.theta[lay.active_blocks[a]];
    for (std::size_t j = 0; j < spec.m; ++j) {
      w0[c++] = q.t[j].real() - start.t[j].real();
      w0[c++] = q.t[j].imag() - start.t[j].imag();
    }
    candidates.push_back(w0);

    std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    double scale = 0.0;
    for (double x : w0) scale = std::max(scale, std::abs(x));
    scale = std::max(scale, 1e-3);
    for (int k = 1; k < opts.multistart; ++k) {
      std::vector<double> w = w0;
      for (double& x : w) x = x * (1.0 + 0.3 * jitter(rng)) + 0.15 * scale * jitter(rng);
      candidates.push_back(std::move(w));
    }
  }

  const double pos_tol = std::max(1e-13, 0.1 * opts.tol);
  std::vector<double> res(d), res_trial(d), best_w;
  double best_mismatch = std::numeric_limits<double>::infinity();

  auto try_candidate = [&](std::vector<double> w) -> bool {
    if (!detail::bvp_residual(spec, start, q, lay, w, opts.ivp_tol, res)) return false;
    double rnorm = detail::inf_norm(res);
    for (int it = 0; it < opts.newton_max; ++it) {
      if (rnorm < best_mismatch) {
        best_mismatch = rnorm;
        best_w = w;
      }
      if (rnorm <= pos_tol) return true;
      // forward-difference Jacobian
      Matrix J(d, d);
      bool ok = true;
      for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> wj = w;
        const double h = 1e-7 * std::max(1.0, std::abs(w[j]));
        wj[j] += h;
        if (!detail::bvp_residual(spec, start, q, lay, wj, opts.ivp_tol, res_trial)) {
          ok = false;
          break;
        }
        for (std::size_t r = 0; r < d; ++r) J(r, j) = (res_trial[r] - res[r]) / h;
      }
      if (!ok) return false;
      std::vector<double> rhs(d);
      for (std::size_t r = 0; r < d; ++r) rhs[r] = -res[r];
      std::vector<double> dw;
      try {
        dw = solve_dense(J, rhs);
      } catch (const std::runtime_error&) {
        return false;
      }
      double lambda = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 30; ++ls) {
        std::vector<double> wt = w;
        for (std::size_t j = 0; j < d; ++j) wt[j] += lambda * dw[j];
        if (detail::bvp_residual(spec, start, q, lay, wt, opts.ivp_tol, res_trial)) {
          const double rn = detail::inf_norm(res_trial);
          if (rn < rnorm * (1.0 - 0.1 * lambda) || rn <= pos_tol) {
            w = std::move(wt);
            res = res_trial;
            rnorm = rn;
            improved = true;
            break;
          }
        }
        lambda *= 0.5;
        if (lambda < 1e-6) break;
      }
      if (!improved) return false;
    }
    return rnorm <= pos_tol;
  };

  bool solved = false;
  std::vector<double> w_solution;
  for (const auto& cand : candidates) {
    std::vector<double> w = cand;
    if (try_candidate(w)) {
      // try_candidate mutates a copy; recover the converged velocity from best_w
      w_solution = best_w;
      solved = best_mismatch <= pos_tol;
      if (solved) break;
    }
  }

  // Rescue start informed by a coarse discrete minimizer, then fallback to
  // the minimizer itself.
  if (!solved) {
    Polyline init = straight_polyline(start, detail::bvp_start(q, lay), 17);
    MinimizeOptions mo;
    mo.tol = 1e-10;
    mo.max_iterations = 4000;
    const MinimizeResult coarse = minimize_path(spec, init, mo);
    const TangentVector d0 = chart_difference(coarse.path.points[0], coarse.path.points[1]);
    const double d0n = metric_norm(spec, coarse.path.points[0], d0);
    if (d0n > 0.0) {
      // initial velocity of magnitude = path length along the minimizer's
      // departure direction
      std::vector<double> w(d, 0.0);
      std::size_t c = 0;
      const double f = coarse.length / d0n;
      for (std::size_t a = 0; a < lay.active_blocks.size(); ++a)
        w[c++] = d0.du[lay.active_blocks[a]] * f;
      for (std::size_t a = 0; a < lay.active_blocks.size(); ++a)
        if (lay.theta_free[a]) w[c++] = d0.dtheta[lay.active_blocks[a]] * f;
      for (std::size_t j = 0; j < spec.m; ++j) {
        w[c++] = d0.dt[j].real() * f;
        w[c++] = d0.dt[j].imag() * f;
      }
      if (try_candidate(w)) {
        w_solution = best_w;
        solved = best_mismatch <= pos_tol;
      }
    }
    if (!solved && opts.allow_fallback) {
      Polyline fine = coarse.path;
      MinimizeResult mres = coarse;
      for (int level = 0; level < 4; ++level) {
        fine = refine_polyline(mres.path);
        mres = minimize_path(spec, fine, mo);
      }
      out.traj = detail::trajectory_from_polyline(spec, mres.path);
      out.length = mres.length;
      out.converged = mres.converged;
      out.method = "minimizer";
      out.mismatch = best_mismatch;
      const TangentVector d0f = chart_difference(mres.path.points[0], mres.path.points[1]);
      const double dn = metric_norm(spec, mres.path.points[0], d0f);
      out.v0_unit = d0f;
      if (dn > 0.0) {
        for (double& a : out.v0_unit.du) a /= dn;
        for (double& a : out.v0_unit.dtheta) a /= dn;
        for (complex& a : out.v0_unit.dt) a /= dn;
      }
      return out;
    }
    if (!solved) {
      out.converged = false;
      out.method = "shooting";
      out.mismatch = best_mismatch;
      if (!best_w.empty()) w_solution = best_w;
      else return out;
    }
  }

  const TangentVector w_vec = detail::bvp_tangent(spec, lay, w_solution);
  const double speed = metric_norm(spec, start, w_vec);
  TangentVector v_unit = w_vec;
  for (double& a : v_unit.du) a /= speed;
  for (double& a : v_unit.dtheta) a /= speed;
  for (complex& a : v_unit.dt) a /= speed;

  ShootOptions so;
  so.tol = opts.ivp_tol;
  so.sample_ds = speed / static_cast<double>(opts.samples - 1);
  Trajectory traj = shoot(spec, start, v_unit, speed, so);

  out.traj = std::move(traj);
  out.length = speed;
  out.converged = solved;
  out.mismatch = best_mismatch;
  out.method = "shooting";
  out.v0_unit = v_unit;
  return out;
}

/// Point on a solved geodesic at a given arclength.
inline ChartPoint geodesic_point_at(const ModelSpec& spec, const GeodesicPath& path, double s) {
  if (!(s >= 0.0 && s <= path.length * (1.0 + 1e-9)))
    throw std::invalid_argument("geodesic_point_at: arclength out of range");
  s = std::min(s, path.length);
  if (path.method != "shooting") {
    const auto& smp = path.traj.samples;
    for (std::size_t k = 1; k < smp.size(); ++k) {
      if (s <= smp[k].s || k + 1 == smp.size()) {
        const double den = std::max(smp[k].s - smp[k - 1].s, 1e-300);
        const double t = std::clamp((s - smp[k - 1].s) / den, 0.0, 1.0);
        ChartPoint x = smp[k - 1].x;
        for (std::size_t i = 0; i < spec.p; ++i) {
          x.u[i] = std::max(0.0, (1.0 - t) * x.u[i] + t * smp[k].x.u[i]);
          x.theta[i] = (1.0 - t) * x.theta[i] + t * smp[k].x.theta[i];
        }
        for (std::size_t j = 0; j < spec.m; ++j)
          x.t[j] = (1.0 - t) * x.t[j] + t * smp[k].x.t[j];
        return x;
      }
    }
    return smp.back().x;
  }
  if (s == 0.0) return path.start;
  ShootOptions so;
  so.tol = 1e-11;
  Trajectory t = shoot(spec, path.start, path.v0_unit, s, so);
  return t.samples.back().x;
}

/// Geodesic distance on the completed model. Zero for points identified on
/// the completion; otherwise the length of the connecting geodesic.
inline double distance(const ModelSpec& spec, const ChartPoint& p, const ChartPoint& q,
                       double tol = 1e-8) {
  p.validate(spec);
  q.validate(spec);
  if (same_point(p, q, 1e-14)) return 0.0;
  ConnectOptions opts;
  opts.tol = tol;
  const GeodesicPath path = connect(spec, p, q, opts);
  if (!path.converged)
    throw numerical_error("distance: connect did not converge (best mismatch " +
                          std::to_string(path.mismatch) + ")");
  return path.length;
}

} // namespace wp

#endif
