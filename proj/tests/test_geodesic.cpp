#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wp/geodesic.hpp"
#include "wp/sampling.hpp"

using namespace wp;
using doctest::Approx;

TEST_CASE("radial shot reaches the stratum at the exact arclength") {
  ModelSpec spec(1, 0);
  ChartPoint x0{{1.0}, {0.0}, {}};
  TangentVector v0{{-1.0}, {0.0}, {}};
  ShootOptions so;
  so.tol = 1e-10;
  const Trajectory traj = shoot(spec, x0, v0, 2.0, so);
  CHECK(traj.termination == Termination::boundary_hit);
  CHECK(traj.boundary_block == 0);
  CHECK(traj.length() == Approx(1.0).epsilon(1e-8));
  // u(s) = 1 - s along the way
  for (const auto& s : traj.samples) CHECK(s.x.u[0] == Approx(1.0 - s.s).epsilon(1e-8));
}

TEST_CASE("flat shot is a straight line in t") {
  ModelSpec spec(0, 1);
  ChartPoint x0{{}, {}, {complex(0.0, 0.0)}};
  TangentVector v0{{}, {}, {complex(1.0, 0.0)}};
  const Trajectory traj = shoot(spec, x0, v0, 2.0, {});
  CHECK(traj.termination == Termination::length_reached);
  CHECK(traj.samples.back().x.t[0].real() == Approx(2.0).epsilon(1e-12));
  CHECK(traj.samples.back().x.t[0].imag() == Approx(0.0));
}

TEST_CASE("energy and angular momentum conserved along generic shots") {
  ModelSpec spec(1, 0);
  ChartPoint x0{{1.0}, {0.0}, {}};
  TangentVector v0{{-0.2}, {1.4}, {}};
  ShootOptions so;
  so.tol = 1e-10;
  so.sample_ds = 0.05;
  const Trajectory traj = shoot(spec, x0, v0, 5.0, so);
  REQUIRE(traj.termination == Termination::length_reached);
  const double e0 = traj.samples.front().energy;
  const double p0 = traj.samples.front().p_theta[0];
  CHECK(e0 == Approx(1.0).epsilon(1e-12));  // unit-speed normalization
  for (const auto& s : traj.samples) {
    CHECK(std::abs(s.energy - e0) < 1e-8 * 5.0);
    CHECK(std::abs(s.p_theta[0] - p0) < 1e-8 * 5.0);
  }
}

TEST_CASE("angular momentum keeps geodesics off the stratum") {
  // turning point at u_min^6 = 4 p^2 / (A E); aimed inward, the geodesic
  // must turn around instead of reaching u = 0
  ModelSpec spec(1, 0);
  ChartPoint x0{{1.0}, {0.0}, {}};
  TangentVector v0{{-0.9}, {0.8}, {}};
  ShootOptions so;
  so.tol = 1e-10;
  so.sample_ds = 0.02;
  const Trajectory traj = shoot(spec, x0, v0, 6.0, so);
  REQUIRE(traj.termination == Termination::length_reached);
  const double p = traj.samples.front().p_theta[0];
  const double e = traj.samples.front().energy;
  const double umin_pred = std::pow(4.0 * p * p / e, 1.0 / 6.0);
  double umin_seen = 1e300;
  for (const auto& s : traj.samples) umin_seen = std::min(umin_seen, s.x.u[0]);
  CHECK(umin_seen > 0.0);
  CHECK(umin_seen >= umin_pred * (1.0 - 1e-6));
  CHECK(umin_seen <= umin_pred * 1.05);  // the sweep passes near the turning point
}

TEST_CASE("step failure is reported with diagnostics, never silently clamped") {
  ModelSpec spec(1, 0);
  ShootOptions so;
  so.tol = 1e-10;
  so.max_steps = 5;  // starve the stepper
  const Trajectory traj = shoot(spec, {{1.0}, {0.0}, {}}, {{-0.3}, {0.9}, {}}, 50.0, so);
  CHECK(traj.termination == Termination::step_failure);
  CHECK_FALSE(traj.diagnostic.empty());
  CHECK(traj.samples.size() >= 2);
  CHECK(traj.length() < 50.0);
}

TEST_CASE("shoot input validation") {
  ModelSpec spec(1, 0);
  CHECK_THROWS_AS(shoot(spec, {{0.0}, {0.0}, {}}, {{0.0}, {1.0}, {}}, 1.0, {}),
                  std::domain_error);  // angular speed at the stratum
  CHECK_THROWS_AS(shoot(spec, {{0.0}, {0.0}, {}}, {{-1.0}, {0.0}, {}}, 1.0, {}),
                  std::domain_error);  // leaving the domain
  CHECK_THROWS_AS(shoot(spec, {{1.0}, {0.0}, {}}, {{0.0}, {0.0}, {}}, 1.0, {}),
                  std::invalid_argument);  // zero direction
  CHECK_THROWS_AS(shoot(spec, {{1.0}, {0.0}, {}}, {{1.0}, {0.0}, {}}, 0.0, {}),
                  std::invalid_argument);  // zero length
}

TEST_CASE("path functionals") {
  ModelSpec spec(1, 1);

  SUBCASE("two-point radial polyline has length 1") {
    Polyline poly;
    poly.points = {{{1.0}, {0.0}, {complex(0, 0)}}, {{0.0}, {0.0}, {complex(0, 0)}}};
    const PathFunctionals pf = path_functionals(spec, poly);
    CHECK(pf.length == Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("stratum polyline measures the flat factor") {
    Polyline poly;
    poly.points = {{{0.0}, {0.0}, {complex(0, 0)}},
                   {{0.0}, {0.0}, {complex(1, 1)}},
                   {{0.0}, {0.0}, {complex(2, 2)}}};
    const PathFunctionals pf = path_functionals(spec, poly);
    CHECK(pf.length == Approx(2.0 * std::numbers::sqrt2).epsilon(1e-12));
  }
  SUBCASE("Cauchy-Schwarz: length^2 <= segments * energy") {
    Sampler smp(3);
    ModelSpec s2(2, 1);
    Polyline poly;
    for (int k = 0; k < 7; ++k) poly.points.push_back(smp.point(s2, 0.2, 2.0));
    const PathFunctionals pf = path_functionals(s2, poly);
    CHECK(pf.length * pf.length <= 6.0 * pf.energy * (1.0 + 1e-12));
  }
  SUBCASE("dyadic refinement changes length at second order") {
    // sample a smooth curved path, refine dyadically, and check the
    // Richardson ratio (L_h - L_{h/2}) / (L_{h/2} - L_{h/4}) ~ 4
    auto curve = [](double t) {
      return ChartPoint{{1.0 + 0.5 * std::sin(t)}, {0.8 * t}, {complex(0.3 * t, 0.0)}};
    };
    auto sampled = [&](std::size_t n) {
      Polyline poly;
      for (std::size_t k = 0; k < n; ++k)
        poly.points.push_back(curve(static_cast<double>(k) / static_cast<double>(n - 1)));
      return poly;
    };
    const double l1 = path_functionals(spec, sampled(17)).length;
    const double l2 = path_functionals(spec, sampled(33)).length;
    const double l3 = path_functionals(spec, sampled(65)).length;
    CHECK((l1 - l2) / (l2 - l3) == Approx(4.0).epsilon(0.05));
  }
  SUBCASE("validation") {
    Polyline poly;
    poly.points = {{{1.0}, {0.0}, {complex(0, 0)}}};
    CHECK_THROWS_AS(path_functionals(spec, poly), std::invalid_argument);
  }
}

TEST_CASE("discrete energy minimizer") {
  SUBCASE("radial geodesic stays put") {
    ModelSpec spec(1, 0);
    Polyline init = straight_polyline({{1.0}, {0.0}, {}}, {{0.2}, {0.0}, {}}, 9);
    const MinimizeResult res = minimize_path(spec, init);
    CHECK(res.converged);
    CHECK(res.length == Approx(0.8).epsilon(1e-9));
    for (std::size_t k = 0; k < res.path.points.size(); ++k)
      CHECK(res.path.points[k].u[0] == Approx(init.points[k].u[0]).epsilon(1e-6));
  }
  SUBCASE("flat detour straightens out") {
    ModelSpec spec(0, 1);
    Polyline init = straight_polyline({{}, {}, {complex(0, 0)}}, {{}, {}, {complex(2, 0)}}, 17);
    for (std::size_t k = 1; k + 1 < init.points.size(); ++k)
      init.points[k].t[0] += complex(0.0, 0.4 * std::sin(static_cast<double>(k)));
    MinimizeOptions mo;
    mo.tol = 1e-12;
    const MinimizeResult res = minimize_path(spec, init, mo);
    CHECK(res.length == Approx(2.0).epsilon(1e-6));
    for (const auto& pt : res.path.points) CHECK(std::abs(pt.t[0].imag()) < 1e-6);
  }
  SUBCASE("interior pair: minimizer keeps min u strictly positive") {
    ModelSpec spec(1, 0);
    // initial path dips through the stratum between two interior points
    Polyline init = straight_polyline({{0.8}, {0.0}, {}}, {{0.8}, {1.2}, {}}, 33);
    for (std::size_t k = 1; k + 1 < init.points.size(); ++k) {
      const double t = static_cast<double>(k) / 32.0;
      init.points[k].u[0] = std::max(0.0, 0.8 - 3.0 * std::sin(std::numbers::pi * t));
    }
    const MinimizeResult res = minimize_path(spec, init);
    double umin = 1e300;
    for (const auto& pt : res.path.points) umin = std::min(umin, pt.u[0]);
    CHECK(umin > 0.0);
    // and the minimizer lands on the same geodesic the shooting solver finds
    const GeodesicPath bvp = connect(spec, init.points.front(), init.points.back());
    REQUIRE(bvp.converged);
    CHECK(res.length == Approx(bvp.length).epsilon(1e-3));
  }
}

TEST_CASE("two-point connection") {
  SUBCASE("radial pair") {
    ModelSpec spec(1, 0);
    const GeodesicPath path = connect(spec, {{1.0}, {0.0}, {}}, {{0.2}, {0.0}, {}});
    CHECK(path.converged);
    CHECK(path.length == Approx(0.8).epsilon(1e-9));
    CHECK(path.method == "shooting");
  }
  SUBCASE("points on the stratum connect inside it") {
    ModelSpec spec(1, 1);
    const GeodesicPath path = connect(spec, {{0.0}, {0.1}, {complex(0, 0)}},
                                      {{0.0}, {-4.0}, {complex(3, 4)}});
    CHECK(path.converged);
    CHECK(path.length == Approx(5.0).epsilon(1e-12));
    CHECK(path.method == "flat");
    for (const auto& s : path.traj.samples) CHECK(s.x.u[0] == 0.0);
  }
  SUBCASE("interior to boundary point") {
    ModelSpec spec(1, 0);
    const GeodesicPath path = connect(spec, {{1.0}, {0.7}, {}}, {{0.0}, {0.0}, {}});
    CHECK(path.converged);
    CHECK(path.length == Approx(1.0).epsilon(1e-8));
    // twist angle is frozen along a boundary-reaching geodesic
    for (const auto& s : path.traj.samples) CHECK(s.x.theta[0] == Approx(0.7).epsilon(1e-9));
  }
  SUBCASE("distance to the stratum is sqrt(A) u") {
    ModelSpec spec(1, 0, {4.0});
    const double d = distance(spec, {{0.9}, {0.3}, {}}, {{0.0}, {9.9}, {}});
    CHECK(d == Approx(2.0 * 0.9).epsilon(1e-8));
  }
  SUBCASE("boundary points differing only in theta coincide") {
    ModelSpec spec(1, 0);
    CHECK(distance(spec, {{0.0}, {1.0}, {}}, {{0.0}, {2.5}, {}}) == 0.0);
    CHECK_THROWS_AS(connect(spec, {{0.0}, {1.0}, {}}, {{0.0}, {2.5}, {}}),
                    std::invalid_argument);
  }
  SUBCASE("generic interior pair agrees with the discrete minimizer oracle") {
    ModelSpec spec(1, 1);
    const ChartPoint p{{1.0}, {0.0}, {complex(0.0, 0.0)}};
    const ChartPoint q{{0.5}, {1.1}, {complex(0.6, -0.3)}};
    const GeodesicPath path = connect(spec, p, q);
    REQUIRE(path.converged);
    CHECK(path.method == "shooting");

    MinimizeOptions mo;
    mo.tol = 1e-13;
    mo.max_iterations = 200000;
    MinimizeResult res = minimize_path(spec, straight_polyline(p, q, 33), mo);
    for (int level = 0; level < 3; ++level) res = minimize_path(spec, refine_polyline(res.path), mo);
    const double l_n = res.length;
    res = minimize_path(spec, refine_polyline(res.path), mo);
    const double l_2n = res.length;
    const double oracle = (4.0 * l_2n - l_n) / 3.0;  // h^2 extrapolation
    CHECK(path.length == Approx(oracle).epsilon(1e-5));
  }
}

TEST_CASE("distance is symmetric and satisfies the triangle inequality") {
  ModelSpec spec(1, 1);
  Sampler smp(11);
  const double tol = 1e-8;
  for (int k = 0; k < 100; ++k) {
    const ChartPoint a = smp.point(spec, 0.3, 1.8, 1.0, 0.8);
    const ChartPoint b = smp.point(spec, 0.3, 1.8, 1.0, 0.8);
    const ChartPoint c = smp.point(spec, 0.3, 1.8, 1.0, 0.8);
    const double dab = distance(spec, a, b, tol);
    const double dac = distance(spec, a, c, tol);
    const double dbc = distance(spec, b, c, tol);
    CHECK(dac <= dab + dbc + 3.0 * tol);
    if (k % 10 == 0) {
      const double dba = distance(spec, b, a, tol);
      CHECK(std::abs(dab - dba) < 1e-8 * std::max(1.0, dab));
    }
  }
}

TEST_CASE("trajectory arclength is strictly increasing") {
  ModelSpec spec(2, 1);
  Sampler smp(31);
  for (int k = 0; k < 5; ++k) {
    const ChartPoint x0 = smp.point(spec, 0.3, 2.0);
    const TangentVector v0 = smp.unit_tangent(spec, x0);
    for (double ds : {0.0, 0.07}) {
      ShootOptions so;
      so.tol = 1e-9;
      so.sample_ds = ds;
      const Trajectory traj = shoot(spec, x0, v0, 1.5, so);
      for (std::size_t i = 1; i < traj.samples.size(); ++i)
        CHECK(traj.samples[i].s > traj.samples[i - 1].s);
    }
  }
}

TEST_CASE("connect is deterministic for fixed endpoints, tolerance and seed") {
  ModelSpec spec(1, 1);
  const ChartPoint p{{0.9}, {0.1}, {complex(0.0, 0.2)}};
  const ChartPoint q{{0.5}, {1.3}, {complex(0.4, -0.1)}};
  ConnectOptions co;
  co.seed = 42;
  const GeodesicPath a = connect(spec, p, q, co);
  const GeodesicPath b = connect(spec, p, q, co);
  REQUIRE(a.converged);
  CHECK(a.length == b.length);  // bitwise identical
  REQUIRE(a.traj.samples.size() == b.traj.samples.size());
  for (std::size_t k = 0; k < a.traj.samples.size(); ++k)
    CHECK(a.traj.samples[k].x.u[0] == b.traj.samples[k].x.u[0]);
}

TEST_CASE("connect is minimal against user-supplied polylines") {
  ModelSpec spec(1, 1);
  Sampler smp(29);
  for (int k = 0; k < 10; ++k) {
    const ChartPoint p = smp.point(spec, 0.4, 1.6, 0.8, 0.6);
    const ChartPoint q = smp.point(spec, 0.4, 1.6, 0.8, 0.6);
    const GeodesicPath path = connect(spec, p, q);
    REQUIRE(path.converged);
    // arbitrary wiggled polylines between the same endpoints
    Polyline poly = straight_polyline(p, q, 21);
    for (std::size_t j = 1; j + 1 < poly.points.size(); ++j) {
      poly.points[j].u[0] =
          std::max(0.0, poly.points[j].u[0] + 0.2 * smp.uniform(-1.0, 1.0));
      poly.points[j].theta[0] += 0.2 * smp.uniform(-1.0, 1.0);
      poly.points[j].t[0] += complex(0.1 * smp.uniform(-1.0, 1.0), 0.1 * smp.uniform(-1.0, 1.0));
    }
    CHECK(path.length <= path_functionals(spec, poly).length + 1e-8);
  }
}

TEST_CASE("u^2 is convex along geodesics") {
  ModelSpec spec(1, 0);
  Sampler smp(23);
  for (int k = 0; k < 10; ++k) {
    const ChartPoint x0 = smp.point(spec, 0.4, 2.0);
    const TangentVector v0 = smp.unit_tangent(spec, x0);
    ShootOptions so;
    so.tol = 1e-10;
    so.sample_ds = 0.05;
    const Trajectory traj = shoot(spec, x0, v0, 3.0, so);
    if (traj.samples.size() < 5) continue;
    const double ds = so.sample_ds;
    for (std::size_t i = 1; i + 1 < traj.samples.size(); ++i) {
      auto uu = [&](std::size_t j) {
        return traj.samples[j].x.u[0] * traj.samples[j].x.u[0];
      };
      const double d2 = (uu(i + 1) - 2.0 * uu(i) + uu(i - 1)) / (ds * ds);
      CHECK(d2 >= -1e-6);
    }
  }
}
