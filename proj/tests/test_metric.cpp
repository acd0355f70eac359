#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wp/metric.hpp"
#include "wp/sampling.hpp"

using namespace wp;
using doctest::Approx;

namespace {

// Independent oracle: Christoffel symbols from second-order central finite
// differences of metric_tensor, Gamma^k_ij = 1/2 g^{kl} (g_il,j + g_lj,i - g_ij,l).
// The metric is diagonal here, so g^{kk} = 1/g_kk suffices.
double fd_christoffel(const ModelSpec& spec, const ChartPoint& x, std::size_t k, std::size_t i,
                      std::size_t j, double h = 1e-5) {
  const std::size_t n = spec.dim();
  auto bump = [&](const ChartPoint& base, std::size_t idx, double d) {
    ChartPoint y = base;
    if (idx < spec.p) y.u[idx] += d;
    else if (idx < 2 * spec.p) y.theta[idx - spec.p] += d;
    else {
      const std::size_t jj = (idx - 2 * spec.p) / 2;
      if ((idx - 2 * spec.p) % 2 == 0) y.t[jj] += complex(d, 0.0);
      else y.t[jj] += complex(0.0, d);
    }
    return y;
  };
  auto dg = [&](std::size_t a, std::size_t b, std::size_t wrt) {
    const Matrix gp = metric_tensor(spec, bump(x, wrt, h));
    const Matrix gm = metric_tensor(spec, bump(x, wrt, -h));
    return (gp(a, b) - gm(a, b)) / (2.0 * h);
  };
  const Matrix g = metric_tensor(spec, x);
  double sum = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    if (l != k) continue;  // diagonal metric
    const double ginv = 1.0 / g(k, k);
    sum += 0.5 * ginv * (dg(i, l, j) + dg(l, j, i) - dg(i, j, l));
  }
  return sum;
}

// Independent oracle: Gauss curvature of the (u, theta) block by the
// Brioschi formula with central finite differences of E, F, G.
double brioschi_curvature(const ModelSpec& spec, double u, double theta, double h = 1e-4) {
  auto E = [&](double uu, double) { return metric_tensor(spec, {{uu}, {0.0}, {}})(0, 0); };
  auto G = [&](double uu, double th) { return metric_tensor(spec, {{uu}, {th}, {}})(1, 1); };
  // F = 0 identically for this metric
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
  const double Fuv = 0.0, Fu = 0.0, Fv = 0.0, f = 0.0;

  const double m1[3][3] = {{-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev},
                           {Fv - 0.5 * Gu, e, f},
                           {0.5 * Gv, f, g}};
  const double m2[3][3] = {{0.0, 0.5 * Ev, 0.5 * Gu}, {0.5 * Ev, e, f}, {0.5 * Gu, f, g}};
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double denom = e * g - f * f;
  return (det3(m1) - det3(m2)) / (denom * denom);
}

} // namespace

TEST_CASE("plumbing transform matches the length law") {
  // l = 1 at u = 1: |t| = exp(-2 pi^2)
  const PlumbingModulus t1 = node_to_plumbing(1.0, 0.0);
  CHECK(t1.modulus() == Approx(std::exp(-2.0 * std::numbers::pi * std::numbers::pi)));
  CHECK(t1.arg == Approx(0.0));
  CHECK(t1.modulus() == Approx(2.6622e-9).epsilon(1e-3));

  // l = 2 forces -log|t| = pi^2
  const PlumbingModulus t2 = node_to_plumbing(std::numbers::sqrt2, 0.7);
  CHECK(t2.modulus() == Approx(std::exp(-std::numbers::pi * std::numbers::pi)));
  CHECK(t2.arg == Approx(0.7));

  // boundary cases both ways
  CHECK(node_to_plumbing(0.0, 1.23).modulus() == 0.0);
  auto [u0, th0] = node_from_plumbing(complex(0.0, 0.0));
  CHECK(u0 == 0.0);
  CHECK(th0 == 0.0);

  CHECK_THROWS_AS(node_from_plumbing(complex(1.0, 0.0)), std::domain_error);
  CHECK_THROWS_AS(node_from_plumbing(complex(0.8, 0.8)), std::domain_error);
}

TEST_CASE("plumbing round trip is identity to 1e-12 relative on u in [0.05, 3]") {
  for (double u = 0.05; u <= 3.0; u += 0.05) {
    for (double th : {-2.5, 0.0, 1.0}) {
      auto [ub, thb] = node_from_plumbing(node_to_plumbing(u, th));
      CHECK(ub == Approx(u).epsilon(1e-12));
      if (u > 0.0) CHECK(std::remainder(thb - th, 2.0 * std::numbers::pi) == Approx(0.0).epsilon(1e-12));
    }
  }
  // whole-point round trip including flat coordinates
  ChartPoint x{{0.4, 1.7}, {0.3, -2.0}, {complex(0.25, -0.5)}};
  const ChartPoint back = from_plumbing(to_plumbing(x));
  ModelSpec spec(2, 1);
  CHECK(same_point(x, back, 1e-12));
}

TEST_CASE("metric tensor block values") {
  ModelSpec spec(1, 0);
  SUBCASE("u = 1, A = 1: diag(1, 1/4)") {
    const Matrix g = metric_tensor(spec, {{1.0}, {0.0}, {}});
    CHECK(g(0, 0) == Approx(1.0));
    CHECK(g(1, 1) == Approx(0.25));
    CHECK(g(0, 1) == 0.0);
  }
  SUBCASE("u = 0: theta direction degenerates") {
    const Matrix g = metric_tensor(spec, {{0.0}, {0.0}, {}});
    CHECK(g(0, 0) == Approx(1.0));
    CHECK(g(1, 1) == 0.0);
  }
  SUBCASE("pert = 1, u = 1: f doubles both entries") {
    ModelSpec ps(1, 0, {1.0}, {1.0});
    const Matrix g = metric_tensor(ps, {{1.0}, {0.0}, {}});
    CHECK(g(0, 0) == Approx(2.0));
    CHECK(g(1, 1) == Approx(0.5));
  }
  SUBCASE("flat directions carry the identity") {
    ModelSpec fs(1, 2);
    const Matrix g = metric_tensor(fs, {{0.7}, {0.1}, {complex(1, 2), complex(-3, 0.5)}});
    for (std::size_t j = 2; j < 6; ++j) CHECK(g(j, j) == 1.0);
  }
}

TEST_CASE("metric tensor is symmetric positive definite away from the stratum") {
  ModelSpec spec(2, 1, {0.5, 2.0}, {0.3, 0.0});
  Sampler smp(17);
  for (int k = 0; k < 25; ++k) {
    const ChartPoint x = smp.point(spec, 0.1, 2.5);
    const Matrix g = metric_tensor(spec, x);
    CHECK(g.symmetric());
    for (std::size_t i = 0; i < spec.dim(); ++i) CHECK(g(i, i) > 0.0);
  }
}

TEST_CASE("christoffel closed forms match the finite-difference oracle") {
  SUBCASE("reference values at u = 1, A = 1") {
    ModelSpec spec(1, 0);
    const ChartPoint x{{1.0}, {0.0}, {}};
    const Christoffel gam = christoffel(spec, x);
    CHECK(gam(0, 1, 1) == Approx(-0.75));
    CHECK(gam(1, 0, 1) == Approx(3.0));
    CHECK(gam(0, 0, 0) == 0.0);
    CHECK(gam(0, 1, 1) == Approx(fd_christoffel(spec, x, 0, 1, 1)).epsilon(1e-6));
    CHECK(gam(1, 0, 1) == Approx(fd_christoffel(spec, x, 1, 0, 1)).epsilon(1e-6));
  }
  SUBCASE("agreement over u in [0.2, 2], with and without perturbation") {
    for (double pert : {0.0, 0.7}) {
      ModelSpec spec(1, 0, {1.3}, {pert});
      for (double u = 0.2; u <= 2.0; u += 0.3) {
        const ChartPoint x{{u}, {0.4}, {}};
        const Christoffel gam = christoffel(spec, x);
        for (auto [k, i, j] : {std::array<std::size_t, 3>{0, 0, 0},
                               std::array<std::size_t, 3>{0, 1, 1},
                               std::array<std::size_t, 3>{1, 0, 1}}) {
          const double fd = fd_christoffel(spec, x, k, i, j);
          CHECK(gam(k, i, j) == Approx(fd).epsilon(1e-6).scale(std::max(1.0, std::abs(fd))));
        }
      }
    }
  }
  SUBCASE("gamma^u_uu vanishes identically when pert = 0") {
    ModelSpec spec(1, 0);
    for (double u : {0.1, 0.9, 2.7}) {
      const Christoffel gam = christoffel(spec, {{u}, {0.0}, {}});
      CHECK(gam(0, 0, 0) == 0.0);
    }
  }
  SUBCASE("degenerate coordinate error at u = 0") {
    ModelSpec spec(1, 0);
    CHECK_THROWS_AS(christoffel(spec, {{0.0}, {0.0}, {}}), std::domain_error);
  }
}

TEST_CASE("gauss curvature of the block") {
  CHECK(gauss_curvature_block(1.0, 1.0) == Approx(-6.0));
  CHECK(gauss_curvature_block(2.0, 1.0) == Approx(-1.5));
  CHECK_THROWS_AS(gauss_curvature_block(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(gauss_curvature_block(-1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(gauss_curvature_block(1.0, 0.0), std::domain_error);

  SUBCASE("scaling identity K A u^2 = -6") {
    for (double u : {0.3, 0.8, 1.5, 2.4})
      for (double A : {0.5, 1.0, 2.0})
        CHECK(gauss_curvature_block(u, A) * A * u * u == Approx(-6.0));
  }

  SUBCASE("agrees with the Brioschi finite-difference oracle to 1e-4 relative") {
    for (double A : {0.5, 1.0, 2.0}) {
      ModelSpec spec(1, 0, {A});
      for (double u = 0.2; u <= 2.0; u += 0.1) {
        const double kfd = brioschi_curvature(spec, u, 0.3);
        const double kcf = gauss_curvature_block(u, A);
        CHECK(std::abs(kfd - kcf) / std::abs(kcf) < 1e-4);
      }
    }
  }
}

TEST_CASE("tangent norms degenerate with the metric at the stratum") {
  ModelSpec spec(1, 1);
  const ChartPoint x0{{0.0}, {0.0}, {complex(0, 0)}};
  const TangentVector v{{0.0}, {7.0}, {complex(0, 0)}};  // pure angular component
  CHECK(metric_norm2(spec, x0, v) == 0.0);
  const TangentVector w{{0.5}, {7.0}, {complex(3, 4)}};
  CHECK(metric_norm2(spec, x0, w) == Approx(0.25 + 25.0));  // theta contributes nothing
}

TEST_CASE("point equality semantics") {
  ChartPoint a{{0.5}, {0.0}, {}};
  ChartPoint b{{0.5}, {2.0 * std::numbers::pi}, {}};
  ChartPoint c{{0.5}, {1.0}, {}};
  CHECK(same_point(a, b, 1e-12));
  CHECK_FALSE(same_point(a, c, 1e-12));
  // at the stratum, theta carries no information
  ChartPoint p0{{0.0}, {0.3}, {}};
  ChartPoint q0{{0.0}, {-42.0}, {}};
  CHECK(same_point(p0, q0));
  ChartPoint r0{{0.0}, {0.3}, {}};
  r0.u[0] = 1e-3;
  CHECK_FALSE(same_point(p0, r0));
}

TEST_CASE("json round trips for the wire formats") {
  ModelSpec spec(2, 1, {0.5, 2.0}, {0.0, 0.25});
  nlohmann::json js = spec;
  CHECK(js.at("p") == 2);
  const ModelSpec spec2 = js.get<ModelSpec>();
  CHECK(spec2 == spec);

  ChartPoint x{{0.4, 1.1}, {0.2, -0.9}, {complex(0.5, -0.25)}};
  nlohmann::json jx = x;
  CHECK(jx.at("t").at(0).at(1) == -0.25);
  const ChartPoint x2 = jx.get<ChartPoint>();
  CHECK(same_point(x, x2));
}

TEST_CASE("spec invariant validation") {
  CHECK_THROWS_AS(ModelSpec(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec(1, 0, {-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec(1, 0, {1.0}, {-0.5}), std::invalid_argument);
  ModelSpec spec(1, 1);
  ChartPoint bad{{-0.1}, {0.0}, {complex(0, 0)}};
  CHECK_THROWS_AS(bad.validate(spec), std::domain_error);
}
