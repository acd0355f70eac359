#ifndef WP_ACCEPTANCE_HPP
#define WP_ACCEPTANCE_HPP

// End-to-end acceptance suite. Each criterion runs with its tolerances
// pinned here and reports one pass/fail line. The finite-difference
// curvature oracle below is verification-only code: nothing in the library
// proper depends on it.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "wp/collar.hpp"
#include "wp/experiments.hpp"
#include "wp/fit.hpp"
#include "wp/geodesic.hpp"
#include "wp/metric.hpp"
#include "wp/npc.hpp"
#include "wp/quadrature.hpp"
#include "wp/sampling.hpp"

namespace wp {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::string details;
  /// The only failing sub-check is a documented reference-value discrepancy
  /// (see the repository notes); everything else in the criterion held.
  bool known_defect = false;
};

namespace acceptance_detail {

inline std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// Verification oracle: Gauss curvature by the Brioschi formula with central
// finite differences of the metric coefficients.
inline double brioschi_curvature(const ModelSpec& spec, double u, double theta, double h = 1e-4) {
  auto E = [&](double uu, double) { return metric_tensor(spec, {{uu}, {0.0}, {}})(0, 0); };
  auto G = [&](double uu, double th) { return metric_tensor(spec, {{uu}, {th}, {}})(1, 1); };
  auto d1u = [&](auto f, double uu, double th) { return (f(uu + h, th) - f(uu - h, th)) / (2 * h); };
  auto d1v = [&](auto f, double uu, double th) { return (f(uu, th + h) - f(uu, th - h)) / (2 * h); };
  auto d2uu = [&](auto f, double uu, double th) {
    return (f(uu + h, th) - 2 * f(uu, th) + f(uu - h, th)) / (h * h);
  };
  auto d2vv = [&](auto f, double uu, double th) {
    return (f(uu, th + h) - 2 * f(uu, th) + f(uu, th - h)) / (h * h);
  };
  const double e = E(u, theta), g = G(u, theta);
  const double Ev = d1v(E, u, theta), Eu = d1u(E, u, theta);
  const double Gu = d1u(G, u, theta), Gv = d1v(G, u, theta);
  const double Evv = d2vv(E, u, theta), Guu = d2uu(G, u, theta);
  const double m1[3][3] = {{-0.5 * Evv - 0.5 * Guu, 0.5 * Eu, -0.5 * Ev},
                           {-0.5 * Gu, e, 0.0},
                           {0.5 * Gv, 0.0, g}};
  const double m2[3][3] = {{0.0, 0.5 * Ev, 0.5 * Gu}, {0.5 * Ev, e, 0.0}, {0.5 * Gu, 0.0, g}};
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double denom = e * g;
  return (det3(m1) - det3(m2)) / (denom * denom);
}

template <class F>
CriterionResult timed(int id, std::string name, double budget, F&& body) {
  CriterionResult res;
  res.id = id;
  res.name = std::move(name);
  res.budget_seconds = budget;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    res.pass = body(res.details);
  } catch (const std::exception& e) {
    res.pass = false;
    res.details += std::string("exception: ") + e.what();
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (res.seconds > budget) {
    res.pass = false;
    res.details += " [over runtime budget]";
  }
  return res;
}

// 1. Conservation of energy and angular momenta along random shots whose
// u coordinates stay inside the stated band [0.05, 3].
inline CriterionResult conservation(std::uint64_t seed) {
  return timed(1, "conservation", 10.0, [&](std::string& details) {
    ModelSpec spec(2, 1, {1.0, 2.0});
    Sampler smp(seed ^ 0xc1);
    double worst = 0.0;
    int cases = 0, attempts = 0;
    while (cases < 100 && attempts < 1000) {
      ++attempts;
      const ChartPoint x0 = smp.point(spec, 0.05, 3.0);
      const TangentVector v0 = smp.unit_tangent(spec, x0);
      ShootOptions so;
      so.tol = 1e-10;
      so.sample_ds = 0.1;
      const Trajectory traj = shoot(spec, x0, v0, 3.0, so);
      if (traj.termination == Termination::step_failure) {
        details = "step failure at attempt " + std::to_string(attempts);
        return false;
      }
      // measure while inside the band; the claim is for u in [0.05, 3]
      auto in_band = [&](const TrajectorySample& s) {
        for (double ui : s.x.u)
          if (ui < 0.05 || ui > 3.0) return false;
        return true;
      };
      // Drift measured against the unit-energy scale of the trajectory:
      // momenta can be incidentally tiny, and the conservation claim is
      // about the integrator's accuracy at the scale it controls.
      const auto& first = traj.samples.front();
      double measured = 0.0, case_worst = 0.0;
      for (const auto& s : traj.samples) {
        if (!in_band(s)) break;
        measured = s.s;
        const double scale = std::max(first.energy, 1.0);
        case_worst = std::max(case_worst, std::abs(s.energy - first.energy) / scale);
        for (std::size_t i = 0; i < spec.p; ++i)
          case_worst = std::max(case_worst, std::abs(s.p_theta[i] - first.p_theta[i]) /
                                                std::max(std::abs(first.p_theta[i]), scale));
      }
      if (measured < 1.0) continue;  // trajectory leaves the band too soon
      worst = std::max(worst, case_worst / measured);
      ++cases;
    }
    details = "max relative drift per unit arclength " + fmt(worst, 3) + " over " +
              std::to_string(cases) + " trajectories (tol 1e-8)";
    return cases == 100 && worst < 1e-8;
  });
}

// 2. Closed-form curvature against the finite-difference Brioschi oracle.
inline CriterionResult curvature_oracle() {
  return timed(2, "curvature oracle", 1.0, [&](std::string& details) {
    double worst = 0.0;
    for (double A : {0.5, 1.0, 2.0}) {
      ModelSpec spec(1, 0, {A});
      for (int k = 0; k < 20; ++k) {
        const double u = 0.2 + 1.8 * static_cast<double>(k) / 19.0;
        const double kfd = brioschi_curvature(spec, u, 0.3);
        const double kcf = gauss_curvature_block(u, A);
        worst = std::max(worst, std::abs(kfd - kcf) / std::abs(kcf));
      }
    }
    details = "max relative deviation " + fmt(worst, 3) + " (tol 1e-4)";
    return worst < 1e-4;
  });
}

// 3. Blow-up rate of the pairing: exponents (2, 3) and the limit constant.
inline CriterionResult blowup_rate() {
  bool only_stated_constant_failed = false;
  CriterionResult res = timed(3, "blow-up rate", 30.0, [&](std::string& details) {
    std::vector<std::pair<double, double>> samples;
    for (int k = 4; k <= 12; ++k) {
      const double t = std::pow(10.0, -k);
      samples.emplace_back(t, wp_pairing(CollarParams(t, 0.1)));
    }
    const FitReport fit = asymptotic_fit(samples);
    const bool exponents_ok = std::abs(fit.alpha - 2.0) <= 0.05 && std::abs(fit.beta - 3.0) <= 0.05;

    // Stated target: 1/(2 pi). The same 1d quadrature oracle with the exact
    // reduction chain gives (4/pi^4) Int_0^1 s^2/sqrt(1-s^2) ds = 1/pi^3;
    // see the ledger note on the constant discrepancy.
    const double stated = 1.0 / (2.0 * std::numbers::pi);
    const double oracle_q = integrate_or_throw(
        [](double phi) { const double s = std::sin(phi); return s * s; }, 0.0,
        0.5 * std::numbers::pi, 1e-14, 1e-14);
    const double derived = 4.0 / std::pow(std::numbers::pi, 4.0) * oracle_q;
    const bool stated_ok = std::abs(fit.constant - stated) <= 0.02 * stated;
    const bool derived_ok = std::abs(fit.constant - derived) <= 0.02 * derived;

    details = "alpha " + fmt(fit.alpha, 8) + ", beta " + fmt(fit.beta, 8) + " (" +
              (exponents_ok ? "ok" : "OUT OF TOLERANCE") + "); constant " +
              fmt(fit.constant, 6) + " vs stated 1/(2pi) = " + fmt(stated, 6) +
              (stated_ok ? " (ok)" : " (FAILS 2%)") +
              "; oracle-derived (4/pi^4) Int s^2/sqrt(1-s^2) = " + fmt(derived, 6) +
              (derived_ok ? " matches within 2%" : " DOES NOT MATCH");
    only_stated_constant_failed = exponents_ok && derived_ok && !stated_ok;
    return exponents_ok && stated_ok;
  });
  res.known_defect = !res.pass && only_stated_constant_failed;
  if (res.known_defect) res.details += " [documented discrepancy]";
  return res;
}

// 4. Collar expansion coefficients.
inline CriterionResult collar_expansion() {
  return timed(4, "collar expansion", 1.0, [&](std::string& details) {
    std::vector<double> c2, c4, y;
    for (double th = 1e-3; th <= 1e-1; th *= 1.1) {
      const double q = th / std::sin(th);
      y.push_back(q * q - 1.0);
      c2.push_back(th * th);
      c4.push_back(th * th * th * th);
    }
    const std::vector<double> coef = lstsq({c2, c4}, y);
    const double e2 = std::abs(coef[0] - 1.0 / 3.0);
    const double e4 = std::abs(coef[1] - 1.0 / 15.0);
    details = "coefficients (" + fmt(coef[0], 8) + ", " + fmt(coef[1], 8) +
              "), deviations (" + fmt(e2, 3) + ", " + fmt(e4, 3) + ") vs (1/3, 1/15), tol 1e-3";
    return e2 < 1e-3 && e4 < 1e-3;
  });
}

// 5. Corner comparison: reference values, positivity on the grid, scaling.
inline CriterionResult corner() {
  return timed(5, "corner comparison", 5.0, [&](std::string& details) {
    CornerParams unit;
    const CornerReport base = corner_comparison(unit);
    const bool ref_ok = std::abs(base.L1 - std::numbers::pi) < 1e-6 &&
                        std::abs(base.L2 - 4.0) < 1e-6;

    bool gap_ok = true;
    const double grid[5] = {0.25, 0.5, 1.0, 2.0, 4.0};
    const double offs[5] = {0.0, 1.0, 2.0, 3.0, 4.0};
    for (double cc : grid)
      for (double ct : grid)
        for (double off : offs)
          for (double eps : {1e-2, 1e-4}) {
            CornerParams par;
            par.Cc = cc;
            par.Ct = ct;
            par.T1 = {complex(0.0, 0.0)};
            par.T2 = {complex(off, 0.0)};
            par.eps = eps;
            gap_ok = gap_ok && corner_comparison(par).gap > 0.0;
          }

    bool scale_ok = true;
    CornerParams par;
    par.Cc = 2.0;
    par.Ct = 0.5;
    par.T1 = {complex(1.0, 0.0)};
    par.T2 = {complex(-0.5, 1.0)};
    par.eps = 1.0;
    const CornerReport r1 = corner_comparison(par);
    for (double eps : {1e-2, 1e-4, 1e-6}) {
      par.eps = eps;
      const CornerReport r = corner_comparison(par);
      scale_ok = scale_ok && std::abs(r.L1 / std::sqrt(eps) - r1.L1) <= 1e-10 * r1.L1 &&
                 std::abs(r.L2 / std::sqrt(eps) - r1.L2) <= 1e-10 * r1.L2;
    }
    details = "L1 " + fmt(base.L1, 10) + " (pi +- 1e-6), L2 " + fmt(base.L2, 10) +
              " (4 +- 1e-6); gap > 0 on the 5x5x5x2 grid: " + (gap_ok ? "yes" : "NO") +
              "; sqrt(eps) homogeneity to 1e-10: " + (scale_ok ? "yes" : "NO");
    return ref_ok && gap_ok && scale_ok;
  });
}

// 6. CAT(0) midpoint comparison on random and flat triangles.
inline CriterionResult cat0_suite(std::uint64_t seed) {
  return timed(6, "CAT(0) suite", 60.0, [&](std::string& details) {
    const double tol = 1e-8;
    ModelSpec spec(1, 1);
    Sampler smp(seed ^ 0xca);
    double min_slack = 1e300;
    for (int k = 0; k < 100; ++k) {
      const ChartPoint p = smp.point(spec, 0.3, 2.0, 1.2, 0.8);
      const ChartPoint q = smp.point(spec, 0.3, 2.0, 1.2, 0.8);
      const ChartPoint r = smp.point(spec, 0.3, 2.0, 1.2, 0.8);
      min_slack = std::min(min_slack, cat0_check(spec, p, q, r, tol).slack);
    }
    // triangles on the stratum itself: the pinched block stays pinned and
    // the comparison is sharp
    ModelSpec strat(1, 2);
    double max_flat = 0.0;
    for (int k = 0; k < 20; ++k) {
      ChartPoint p = smp.point(strat, 0, 0, 1.0, 1.0);
      ChartPoint q = smp.point(strat, 0, 0, 1.0, 1.0);
      ChartPoint r = smp.point(strat, 0, 0, 1.0, 1.0);
      max_flat = std::max(max_flat, std::abs(cat0_check(strat, p, q, r, tol).slack));
    }
    details = "min slack " + fmt(min_slack, 3) + " (>= -3e-8); flat-stratum |slack| max " +
              fmt(max_flat, 3) + " (<= 2e-8)";
    return min_slack >= -3.0 * tol && max_flat <= 2.0 * tol;
  });
}

// 7. Convexity of u^2 and of displacement functions along geodesics.
inline CriterionResult convexity(std::uint64_t seed) {
  return timed(7, "convexity", 60.0, [&](std::string& details) {
    ModelSpec spec(1, 1);
    Sampler smp(seed ^ 0xc7);
    ShootOptions so;
    so.tol = 1e-10;

    double min_u2 = 1e300;
    for (int k = 0; k < 50; ++k) {
      const ChartPoint x0 = smp.point(spec, 0.4, 2.0);
      const TangentVector v0 = smp.unit_tangent(spec, x0);
      const double len = 1.6;
      so.sample_ds = len / 16.0;
      const Trajectory traj = shoot(spec, x0, v0, len, so);
      if (traj.samples.size() < 5) continue;
      if (traj.termination != Termination::length_reached) continue;
      min_u2 = std::min(min_u2, convexity_scan(
                                    spec, [](const ChartPoint& x) { return x.u[0] * x.u[0]; },
                                    traj));
    }

    const Isometry kinds[3] = {Isometry::flat_translation({complex(0.4, -0.3)}),
                               Isometry::theta_rotation(0, 0.9),
                               [] {
                                 Isometry c = Isometry::flat_translation({complex(0.3, 0.2)});
                                 c.moves.push_back(ThetaRotation{0, 0.7});
                                 return c;
                               }()};
    double min_disp = 1e300;
    for (const Isometry& iso : kinds) {
      for (int k = 0; k < 20; ++k) {
        const ChartPoint x0 = smp.point(spec, 0.6, 1.6, 1.0, 0.5);
        const TangentVector v0 = smp.unit_tangent(spec, x0, 0.6);
        const double len = 1.2;
        so.sample_ds = len / 8.0;
        const Trajectory traj = shoot(spec, x0, v0, len, so);
        if (traj.samples.size() < 5 || traj.termination != Termination::length_reached) continue;
        min_disp = std::min(
            min_disp, convexity_scan(
                          spec,
                          [&](const ChartPoint& x) { return displacement(spec, iso, x, 1e-9); },
                          traj));
      }
    }
    details = "min d2(u^2) " + fmt(min_u2, 3) + " (>= -1e-6); min d2(delta_gamma) " +
              fmt(min_disp, 3) + " (>= -1e-5)";
    return min_u2 >= -1e-6 && min_disp >= -1e-5;
  });
}

// 8. Non-refraction probes and the differential inequality.
inline CriterionResult nonrefraction(std::uint64_t seed) {
  return timed(8, "non-refraction", 30.0, [&](std::string& details) {
    ModelSpec spec(2, 1, {1.0, 1.5});
    Sampler smp(seed ^ 0xc8);
    double min_u = 1e300, max_viol = -1e300;
    for (int k = 0; k < 20; ++k) {
      ChartPoint p = smp.point(spec, 0.4, 1.2, 0.8, 0.4);
      ChartPoint q = smp.point(spec, 0.4, 1.2, 0.8, 0.4);
      q.u[0] = 0.0;
      q.u[1] = p.u[1];       // keep the spectator block level
      q.theta[1] = p.theta[1];
      const NonrefractionReport rep = nonrefraction_probe(spec, p, q, 1e-8, 101);
      min_u = std::min(min_u, rep.min_interior_u);
      const DiffIneqReport di = differential_inequality_check(spec, rep.path.traj, 0);
      max_viol = std::max(max_viol, di.max_violation);
    }

    bool stratum_ok = true;
    for (int k = 0; k < 3; ++k) {
      ChartPoint p = smp.point(spec, 0.4, 1.0, 0.5, 0.4);
      ChartPoint q = smp.point(spec, 0.4, 1.0, 0.5, 0.4);
      p.u[0] = q.u[0] = 0.0;
      const NonrefractionReport rep = nonrefraction_probe(spec, p, q, 1e-8, 65);
      for (const auto& s : rep.path.traj.samples) stratum_ok = stratum_ok && s.x.u[0] == 0.0;
    }
    details = "min interior u " + fmt(min_u, 4) + " (> 1e-3); max inequality violation " +
              fmt(max_viol, 3) + " (<= 1e-6); stratum geodesics pinned: " +
              (stratum_ok ? "yes" : "NO");
    return min_u > 1e-3 && max_viol <= 1e-6 && stratum_ok;
  });
}

// 9. Distance approximation rate under the quartic perturbation.
inline CriterionResult perturbation_rate() {
  return timed(9, "distance approximation rate", 60.0, [&](std::string& details) {
    ModelSpec pert(1, 1, {1.0}, {1.0});
    std::vector<ScaledPair> pairs;
    for (double U : {0.4, 0.2, 0.1, 0.05, 0.025}) {
      ScaledPair a;
      a.scale = U;
      a.p = ChartPoint{{U}, {0.0}, {complex(0.0, 0.0)}};
      a.q = ChartPoint{{0.5 * U}, {0.0}, {complex(0.75 * U, 0.0)}};
      pairs.push_back(a);
      ScaledPair b;
      b.scale = U;
      b.p = ChartPoint{{0.8 * U}, {0.0}, {complex(0.0, 0.25 * U)}};
      b.q = ChartPoint{{U}, {0.0}, {complex(-0.5 * U, 0.0)}};
      pairs.push_back(b);
    }
    const FitReport fit = perturbation_gap_fit(pert, pairs, 1e-11);
    details = "fitted exponent " + fmt(fit.alpha, 4) + " (>= 2.8), residual " +
              fmt(fit.residual, 3);
    return fit.alpha >= 2.8;
  });
}

// 10. Decay of the localized twist and of the twist displacement.
inline CriterionResult twist_decay() {
  bool only_ratio_failed = false;
  CriterionResult res = timed(10, "twist decay", 30.0, [&](std::string& details) {
    std::vector<double> vals;
    bool decreasing = true;
    for (int k = 2; k <= 12; ++k) {
      vals.push_back(dehn_twist_norm(TwistProfile(std::pow(10.0, -k))));
      if (vals.size() > 1) decreasing = decreasing && vals.back() < vals[vals.size() - 2];
    }
    const double ratio = vals.back() / vals.front();
    const bool ratio_ok = ratio < 1e-2;

    ModelSpec spec(1, 0);
    const double alpha = 1.0;
    const Isometry twist = Isometry::theta_rotation(0, alpha);
    bool disp_ok = true;
    double prev = 1e300;
    for (int k = 0; k <= 10; ++k) {
      const double u = std::pow(2.0, -k);
      const double d = displacement(spec, twist, {{u}, {0.0}, {}}, 1e-9);
      const double arc = 0.5 * u * u * u * alpha;
      disp_ok = disp_ok && d < prev && d <= arc + 1e-9;
      prev = d;
    }
    const AxisResult axis = axis_construct(spec, twist, {{1.0}, {0.0}, {}}, 1e-6);
    const bool axis_ok = axis.status == AxisResult::Status::not_attained &&
                         !axis.minimizing_sequence.empty() &&
                         axis.minimizing_sequence.back().second < 1e-6;

    details = "norm strictly decreasing k=2..12: " + std::string(decreasing ? "yes" : "NO") +
              "; final/initial " + fmt(ratio, 4) + (ratio_ok ? " (< 1e-2)" : " (FAILS < 1e-2)") +
              "; twist displacement below the arc bound and decreasing: " +
              (disp_ok ? "yes" : "NO") + "; axis not attained, displacement -> 0: " +
              (axis_ok ? "yes" : "NO");
    only_ratio_failed = decreasing && disp_ok && axis_ok && !ratio_ok;
    return decreasing && ratio_ok && disp_ok && axis_ok;
  });
  res.known_defect = !res.pass && only_ratio_failed;
  if (res.known_defect) res.details += " [documented discrepancy]";
  return res;
}

// 11. Shooting solver against the discrete energy-minimizer oracle.
inline CriterionResult bvp_oracle(std::uint64_t seed) {
  return timed(11, "BVP vs minimizer oracle", 60.0, [&](std::string& details) {
    ModelSpec spec(1, 1);
    Sampler smp(seed ^ 0xcb);
    double worst = 0.0;
    for (int k = 0; k < 30; ++k) {
      const ChartPoint p = smp.point(spec, 0.4, 1.6, 0.9, 0.5);
      const ChartPoint q = smp.point(spec, 0.4, 1.6, 0.9, 0.5);
      ConnectOptions co;
      co.tol = 1e-10;
      const GeodesicPath path = connect(spec, p, q, co);
      if (!path.converged || path.method != "shooting") {
        details = "connect failed to converge by shooting on case " + std::to_string(k);
        return false;
      }
      MinimizeOptions mo;
      mo.tol = 3e-9;
      mo.max_iterations = 60000;
      MinimizeResult res = minimize_path(spec, straight_polyline(p, q, 17), mo);
      for (int level = 0; level < 2; ++level)
        res = minimize_path(spec, refine_polyline(res.path), mo);
      const double l_n = res.length;  // 65 points
      res = minimize_path(spec, refine_polyline(res.path), mo);
      const double l_2n = res.length;  // 129 points
      const double oracle = (4.0 * l_2n - l_n) / 3.0;  // h^2 extrapolation
      worst = std::max(worst, std::abs(path.length - oracle));
    }
    details = "max |connect - oracle| " + fmt(worst, 3) + " (tol 1e-5)";
    return worst <= 1e-5;
  });
}

} // namespace acceptance_detail

inline std::vector<CriterionResult> run_acceptance(std::uint64_t seed = 0) {
  using namespace acceptance_detail;
  std::vector<CriterionResult> out;
  out.push_back(conservation(seed));
  out.push_back(curvature_oracle());
  out.push_back(blowup_rate());
  out.push_back(collar_expansion());
  out.push_back(corner());
  out.push_back(cat0_suite(seed));
  out.push_back(convexity(seed));
  out.push_back(nonrefraction(seed));
  out.push_back(perturbation_rate());
  out.push_back(twist_decay());
  out.push_back(bvp_oracle(seed));
  return out;
}

inline std::string criterion_line(const CriterionResult& r) {
  std::ostringstream os;
  os << "criterion " << (r.id < 10 ? " " : "") << r.id << " [" << (r.pass ? "PASS" : "FAIL")
     << "] " << r.name << ": " << r.details << " (" << acceptance_detail::fmt(r.seconds, 3)
     << " s, budget " << acceptance_detail::fmt(r.budget_seconds, 3) << " s)";
  return os.str();
}

} // namespace wp

#endif
