#ifndef WP_NPC_HPP
#define WP_NPC_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "wp/geodesic.hpp"
#include "wp/metric.hpp"
#include "wp/types.hpp"

namespace wp {

// --- model isometries --------------------------------------------------------

/// Translation in the flat factor.
struct FlatTranslation {
  std::vector<complex> v;
};

/// Rotation of one twist angle; the model of the Dehn twist around the
/// corresponding pinching curve. Its fixed set on the completion is exactly
/// the stratum u_block = 0.
struct ThetaRotation {
  std::size_t block = 0;
  double angle = 0.0;
};

/// A composition of elementary moves, applied in order. Every move acts
/// affinely on chart coordinates with identity linear part, so the pullback
/// differential is the identity and the metric is preserved exactly
/// (g depends only on u, which no move touches).
struct Isometry {
  std::vector<std::variant<FlatTranslation, ThetaRotation>> moves;

  static Isometry flat_translation(std::vector<complex> v) {
    Isometry g;
    g.moves.push_back(FlatTranslation{std::move(v)});
    return g;
  }
  static Isometry theta_rotation(std::size_t block, double angle) {
    Isometry g;
    g.moves.push_back(ThetaRotation{block, angle});
    return g;
  }

  ChartPoint apply(const ChartPoint& x) const {
    ChartPoint y = x;
    for (const auto& mv : moves) {
      if (const auto* t = std::get_if<FlatTranslation>(&mv)) {
        if (t->v.size() != y.t.size())
          throw std::invalid_argument("Isometry: translation dimension mismatch");
        for (std::size_t j = 0; j < y.t.size(); ++j) y.t[j] += t->v[j];
      } else {
        const auto& r = std::get<ThetaRotation>(mv);
        if (r.block >= y.theta.size())
          throw std::invalid_argument("Isometry: rotation block out of range");
        y.theta[r.block] += r.angle;
      }
    }
    return y;
  }

  /// Differential acting on tangent components: the identity.
  TangentVector push_forward(const TangentVector& v) const { return v; }

  bool is_identity(const ModelSpec& spec) const {
    ChartPoint probe;
    probe.u.assign(spec.p, 1.0);
    probe.theta.assign(spec.p, 0.3);
    probe.t.assign(spec.m, complex(0.2, -0.1));
    return same_point(probe, apply(probe), 1e-15);
  }
};

/// Uniformly sampled nonnegative function on an interval.
struct SampledFunction {
  std::vector<double> grid;
  std::vector<double> values;

  void validate() const {
    if (grid.size() < 3 || grid.size() != values.size())
      throw std::invalid_argument("SampledFunction: need matching grids with >= 3 points");
    const double h0 = grid[1] - grid[0];
    for (std::size_t k = 1; k < grid.size(); ++k) {
      const double h = grid[k] - grid[k - 1];
      if (!(h > 0.0) || std::abs(h - h0) > 1e-12 * std::max(1.0, std::abs(h0)))
        throw std::invalid_argument("SampledFunction: grid must be uniform and increasing");
    }
    for (double v : values)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("SampledFunction: values must be finite and >= 0");
  }
};

// --- midpoints and comparison triangles ---------------------------------------

/// Midpoint of the geodesic from p to q: the point m with
/// d(p,m) = d(m,q) = d(p,q)/2 up to the solver tolerance.
inline ChartPoint midpoint(const ModelSpec& spec, const ChartPoint& p, const ChartPoint& q,
                           double tol = 1e-8) {
  ConnectOptions opts;
  opts.tol = tol;
  const GeodesicPath path = connect(spec, p, q, opts);
  if (!path.converged)
    throw numerical_error("midpoint: connect did not converge (mismatch " +
                          std::to_string(path.mismatch) + ")");
  return geodesic_point_at(spec, path, 0.5 * path.length);
}

struct Cat0Report {
  double lhs = 0.0;    ///< d(midpoint(p,q), r)
  double rhs = 0.0;    ///< Euclidean comparison median
  double slack = 0.0;  ///< rhs - lhs, >= 0 in a CAT(0) space
  double d_pq = 0.0, d_pr = 0.0, d_qr = 0.0;
};

/// Midpoint form of the CAT(0) comparison: the distance from the geodesic
/// midpoint of [p,q] to r must not exceed the corresponding median of the
/// Euclidean triangle with the same side lengths.
inline Cat0Report cat0_check(const ModelSpec& spec, const ChartPoint& p, const ChartPoint& q,
                             const ChartPoint& r, double tol = 1e-8) {
  ConnectOptions opts;
  opts.tol = tol;
  const GeodesicPath pq = connect(spec, p, q, opts);
  if (!pq.converged) throw numerical_error("cat0_check: connect(p,q) did not converge");
  const ChartPoint m = geodesic_point_at(spec, pq, 0.5 * pq.length);

  Cat0Report rep;
  rep.d_pq = pq.length;
  rep.d_pr = distance(spec, p, r, tol);
  rep.d_qr = distance(spec, q, r, tol);
  rep.lhs = distance(spec, m, r, tol);
  const double med2 =
      0.25 * (2.0 * rep.d_pr * rep.d_pr + 2.0 * rep.d_qr * rep.d_qr - rep.d_pq * rep.d_pq);
  rep.rhs = std::sqrt(std::max(0.0, med2));
  rep.slack = rep.rhs - rep.lhs;
  return rep;
}

// --- convexity along geodesics -------------------------------------------------

/// Minimum central second difference of field(traj) over the interior
/// samples, divided by ds^2. Requires a unit-speed trajectory sampled on a
/// uniform arclength grid with at least 5 samples.
inline double convexity_scan(const ModelSpec& spec,
                             const std::function<double(const ChartPoint&)>& field,
                             const Trajectory& traj) {
  (void)spec;
  const auto& smp = traj.samples;
  if (smp.size() < 5) throw std::invalid_argument("convexity_scan: need >= 5 samples");
  const double ds = smp[1].s - smp[0].s;
  for (std::size_t k = 1; k < smp.size(); ++k)
    if (std::abs((smp[k].s - smp[k - 1].s) - ds) > 1e-9 * std::max(1.0, ds))
      throw std::invalid_argument("convexity_scan: samples must be uniform in arclength");
  double vmin = std::numeric_limits<double>::infinity();
  std::vector<double> f(smp.size());
  for (std::size_t k = 0; k < smp.size(); ++k) f[k] = field(smp[k].x);
  for (std::size_t k = 1; k + 1 < smp.size(); ++k) {
    const double d2 = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / (ds * ds);
    vmin = std::min(vmin, d2);
  }
  return vmin;
}

// --- Harnack-type verifier -----------------------------------------------------

struct HarnackReport {
  bool hypothesis_ok = false;   ///< f'' <= C1 f holds at every interior node
  double ratio = 0.0;           ///< sup/inf over [-R0, R0]; +inf flags a violation
  bool harnack_violated = false; ///< inf = 0 with sup > 0 under a valid hypothesis
};

/// Checks the differential inequality f'' <= C1 f by central differences and
/// reports the sup/inf ratio over the inner ball [-R0, R0]. The h^2 bias of
/// the second difference is compensated so the extremal solution
/// f = cosh(sqrt(C1) x) passes as the equality case.
inline HarnackReport harnack_verify(const SampledFunction& f, double c1, double r0) {
  f.validate();
  if (!(c1 > 0.0) || !(r0 > 0.0))
    throw std::invalid_argument("harnack_verify: C1 and R0 must be positive");
  const double h = f.grid[1] - f.grid[0];
  if (f.grid.front() > -2.0 * r0 + 1e-12 || f.grid.back() < 2.0 * r0 - 1e-12)
    throw std::invalid_argument("harnack_verify: grid must cover [-2R0, 2R0]");
  if (h > r0 / 16.0)
    throw std::invalid_argument("harnack_verify: grid too coarse, need >= 16 points per R0");

  double fmax = 0.0;
  for (double v : f.values) fmax = std::max(fmax, v);

  HarnackReport rep;
  rep.hypothesis_ok = true;
  for (std::size_t k = 1; k + 1 < f.values.size(); ++k) {
    const double d2 = (f.values[k + 1] - 2.0 * f.values[k] + f.values[k - 1]) / (h * h);
    const double slack = c1 * c1 * h * h * f.values[k] / 6.0 + 1e-12 * (1.0 + fmax);
    if (d2 > c1 * f.values[k] + slack) {
      rep.hypothesis_ok = false;
      break;
    }
  }

  double sup = 0.0, inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < f.grid.size(); ++k) {
    if (std::abs(f.grid[k]) <= r0 + 0.5 * h) {
      sup = std::max(sup, f.values[k]);
      inf = std::min(inf, f.values[k]);
    }
  }
  if (!rep.hypothesis_ok) return rep;
  if (inf > 0.0) {
    rep.ratio = sup / inf;
  } else if (sup > 0.0) {
    rep.ratio = std::numeric_limits<double>::infinity();
    rep.harnack_violated = true;
  } else {
    rep.ratio = 1.0;
  }
  return rep;
}

// --- displacement and axes -----------------------------------------------------

/// Displacement delta_gamma(x) = d(x, gamma x); zero exactly when gamma
/// fixes x on the completion.
inline double displacement(const ModelSpec& spec, const Isometry& gamma, const ChartPoint& x,
                           double tol = 1e-8) {
  const ChartPoint gx = gamma.apply(x);
  if (same_point(x, gx, 1e-14)) return 0.0;
  return distance(spec, x, gx, tol);
}

struct AxisResult {
  enum class Status { axis, not_attained, degenerate_identity };
  Status status = Status::axis;
  double translation_length = 0.0;
  std::vector<ChartPoint> line;  ///< {q, m1, gq, m2, g2q} when an axis exists
  bool collinear_ok = false;
  double collinearity_gap = 0.0;  ///< |d(q, g2q) - 2 d(q, gq)|
  std::vector<std::pair<ChartPoint, double>> minimizing_sequence;  ///< (x_k, delta(x_k))
  std::size_t evaluations = 0;
  bool budget_exhausted = false;
};

/// Minimize the displacement function from a seed by deterministic
/// coordinate descent with a shrinking step schedule. If the infimum is
/// attained, returns the midpoint-construction line through q, gamma q,
/// gamma^2 q and verifies d(q, gamma^2 q) = 2 d(q, gamma q). If the
/// displacement keeps decreasing toward the stratum (the twist-rotation
/// case), returns the minimizing sequence instead.
inline AxisResult axis_construct(const ModelSpec& spec, const Isometry& gamma,
                                 const ChartPoint& seed, double tol = 1e-6,
                                 std::size_t eval_budget = 600) {
  seed.validate(spec);
  AxisResult out;
  if (gamma.is_identity(spec)) {
    out.status = AxisResult::Status::degenerate_identity;
    out.translation_length = 0.0;
    out.line = {seed};
    out.collinear_ok = true;
    return out;
  }

  std::size_t evals = 0;
  auto delta = [&](const ChartPoint& x) {
    ++evals;
    return displacement(spec, gamma, x, tol * 1e-2);
  };

  ChartPoint x = seed;
  double dx = delta(x);
  double step = 0.25;
  const std::size_t n = spec.dim();
  while (step > tol && evals + 2 * n < eval_budget) {
    bool improved = false;
    for (std::size_t c = 0; c < n && evals + 2 < eval_budget; ++c) {
      for (double sgn : {+1.0, -1.0}) {
        ChartPoint trial = x;
        if (c < spec.p) {
          trial.u[c] = std::max(0.0, trial.u[c] + sgn * step);
          if (trial.u[c] == x.u[c]) continue;
        } else if (c < 2 * spec.p) {
          trial.theta[c - spec.p] += sgn * step;
        } else {
          const std::size_t j = (c - 2 * spec.p) / 2;
          const bool re = ((c - 2 * spec.p) % 2) == 0;
          trial.t[j] += re ? complex(sgn * step, 0.0) : complex(0.0, sgn * step);
        }
        const double dt = delta(trial);
        if (dt < dx - 1e-14 * std::max(1.0, dx)) {
          x = trial;
          dx = dt;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  out.evaluations = evals;
  out.budget_exhausted = evals + 2 * n >= eval_budget;

  // Escape test toward the stratum for blocks the isometry twists: sweep
  // u = u_seed 2^-k and watch the displacement. A decreasing sweep heading
  // to zero means the infimum is approached along the boundary and never
  // attained in the interior.
  std::vector<std::size_t> twisted;
  for (const auto& mv : gamma.moves)
    if (const auto* r = std::get_if<ThetaRotation>(&mv))
      if (wrap_angle(r->angle) != 0.0 && r->block < spec.p) twisted.push_back(r->block);
  bool sweep_possible = false;
  for (std::size_t b : twisted) sweep_possible |= seed.u[b] > 0.0;
  if (sweep_possible) {
    ChartPoint probe = x;
    for (std::size_t b : twisted) probe.u[b] = seed.u[b];
    std::vector<std::pair<ChartPoint, double>> seq;
    const double d0 = delta(probe);
    seq.emplace_back(probe, d0);
    bool decreasing = true;
    double last = d0;
    for (int k = 1; k <= 12 && decreasing; ++k) {
      for (std::size_t b : twisted) probe.u[b] *= 0.5;
      const double dv = delta(probe);
      decreasing = dv < last + 1e-15;
      seq.emplace_back(probe, dv);
      last = dv;
    }
    const double mid = seq[seq.size() / 2].second;
    if (decreasing && last <= std::max(tol, 0.25 * mid)) {
      out.status = AxisResult::Status::not_attained;
      out.translation_length = last;
      out.minimizing_sequence = std::move(seq);
      return out;
    }
  }

  // Infimum attained at q = x: build the line through the orbit.
  const ChartPoint q1 = gamma.apply(x);
  if (same_point(x, q1, 1e-14)) {
    out.status = AxisResult::Status::axis;
    out.translation_length = 0.0;
    out.line = {x};
    out.collinear_ok = true;
    return out;
  }
  const ChartPoint q2 = gamma.apply(q1);
  const double d01 = distance(spec, x, q1, tol * 1e-2);
  const double d02 = distance(spec, x, q2, tol * 1e-2);
  out.status = AxisResult::Status::axis;
  out.translation_length = d01;
  out.collinearity_gap = std::abs(d02 - 2.0 * d01);
  out.collinear_ok = out.collinearity_gap <= tol * std::max(1.0, d02);
  out.line = {x, midpoint(spec, x, q1, tol * 1e-2), q1, midpoint(spec, q1, q2, tol * 1e-2), q2};
  return out;
}

} // namespace wp

#endif
