#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wp/collar.hpp"
#include "wp/fit.hpp"
#include "wp/linalg.hpp"
#include "wp/metric.hpp"
#include "wp/quadrature.hpp"

using namespace wp;
using doctest::Approx;

TEST_CASE("collar and cusp conformal factors") {
  CollarParams par(1e-4, 0.1);

  SUBCASE("cusp at r = 1/e gives e^2") {
    CHECK(collar_factor(std::exp(-1.0), par, CollarVariant::cusp) == Approx(std::exp(2.0)));
  }
  SUBCASE("core value is finite: csc(pi/2) = 1") {
    const double core = std::sqrt(par.tmod);
    const double L = std::log(par.tmod);
    const double expected = std::numbers::pi * std::numbers::pi / (L * L * par.tmod);
    CHECK(collar_factor(core, par, CollarVariant::collar) == Approx(expected).epsilon(1e-12));
  }
  SUBCASE("collar converges to cusp pointwise as tmod -> 0") {
    CollarParams tiny(1e-8, 0.1);
    const double r = 0.5;
    const double ratio = collar_factor(r, tiny, CollarVariant::collar) /
                         collar_factor(r, tiny, CollarVariant::cusp);
    CHECK(std::abs(ratio - 1.0) < 1e-2);
  }
  SUBCASE("collar factor dominates the cusp factor on the annulus") {
    for (double tmod : {1e-3, 1e-6, 1e-10}) {
      CollarParams p(tmod, 0.1);
      for (double frac : {0.05, 0.3, 0.5, 0.7, 0.95}) {
        // log-uniform radius between tmod and 1 - delta
        const double r = std::exp(std::log(tmod) * (1.0 - frac) + std::log(0.9) * frac);
        const double c = collar_factor(r, p, CollarVariant::collar);
        const double k = collar_factor(r, p, CollarVariant::cusp);
        CHECK(c >= k * (1.0 - 1e-12));
        CHECK(c > 0.0);
        CHECK(k > 0.0);
      }
    }
  }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(collar_factor(1e-5, par, CollarVariant::collar), std::domain_error);
    CHECK_THROWS_AS(collar_factor(1.0, par, CollarVariant::collar), std::domain_error);
    CHECK_THROWS_AS(collar_factor(0.0, par, CollarVariant::cusp), std::domain_error);
    CHECK_THROWS_AS(CollarParams(0.9, 0.1), std::domain_error);  // annulus misses the core
    CHECK_THROWS_AS(CollarParams(-0.1, 0.1), std::domain_error);
    CHECK_THROWS_AS(CollarParams(0.5, 1.5), std::domain_error);
  }
}

TEST_CASE("collar expansion remainder is sixth order") {
  SUBCASE("error -> 0 with theta") {
    CHECK(collar_expansion_error(1e-3) < 1e-14);
    CHECK(collar_expansion_error(0.3) < 1e-3);
  }
  SUBCASE("ratio across a halving is 2^6 within 10%") {
    const double ratio = collar_expansion_error(0.1) / collar_expansion_error(0.05);
    CHECK(ratio == Approx(64.0).epsilon(0.10));
  }
  SUBCASE("(theta csc theta)^2 >= 1 with equality only in the limit") {
    for (double th = 0.05; th < 1.5; th += 0.05) {
      const double q = th / std::sin(th);
      CHECK(q * q > 1.0);
    }
  }
  SUBCASE("fitted quadratic and quartic coefficients are 1/3 and 1/15 to 1e-3") {
    std::vector<double> c2, c4, y;
    for (double th = 1e-3; th <= 1e-1; th *= 1.12) {
      const double q = th / std::sin(th);
      y.push_back(q * q - 1.0);
      c2.push_back(th * th);
      c4.push_back(th * th * th * th);
    }
    const std::vector<double> coef = lstsq({c2, c4}, y);
    CHECK(coef[0] == Approx(1.0 / 3.0).epsilon(1e-3));
    CHECK(std::abs(coef[1] - 1.0 / 15.0) < 1e-3);
  }
  CHECK_THROWS_AS(collar_expansion_error(0.0), std::domain_error);
  CHECK_THROWS_AS(collar_expansion_error(2.0), std::domain_error);
}

TEST_CASE("length law around the pinching neck") {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  CHECK(wolpert_length(std::exp(-2.0 * pi2)) == Approx(1.0));
  CHECK(wolpert_length(std::exp(-pi2)) == Approx(2.0));
  CHECK_THROWS_AS(wolpert_length(0.0), std::domain_error);
  CHECK_THROWS_AS(wolpert_length(1.0), std::domain_error);

  SUBCASE("strictly increasing, -> 0 as tmod -> 0") {
    double prev = 0.0;
    for (double t = 1e-12; t < 0.5; t *= 10.0) {
      const double l = wolpert_length(t);
      CHECK(l > prev);
      prev = l;
    }
    CHECK(wolpert_length(1e-300) < 0.03);
  }
  SUBCASE("sqrt of the length is the u coordinate of the transform") {
    for (double t : {1e-3, 1e-6, 1e-9}) {
      auto [u, th] = node_from_plumbing(complex(t, 0.0));
      CHECK(std::sqrt(wolpert_length(t)) == Approx(u).epsilon(1e-14));
      (void)th;
    }
  }
}

TEST_CASE("pairing over the degenerating annulus") {
  SUBCASE("positive and finite") {
    const double v = wp_pairing(CollarParams(1e-6, 0.1));
    CHECK(v > 0.0);
    CHECK(std::isfinite(v));
  }
  SUBCASE("normalized value bounded above and below across the sweep") {
    double lo = 1e300, hi = 0.0;
    for (double t = 1e-12; t <= 1.0001e-4; t *= 100.0) {
      const double v = wp_pairing(CollarParams(t, 0.1));
      const double L = -std::log(t);
      const double norm = v / (t * t * L * L * L);
      lo = std::min(lo, norm);
      hi = std::max(hi, norm);
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    CHECK(hi / lo < 1.01);  // already nearly constant over the sweep
  }
  SUBCASE("monotone decreasing in tmod") {
    double prev = 1e300;
    for (double t = 1e-4; t >= 0.999e-12; t *= 1e-2) {
      const double v = wp_pairing(CollarParams(t, 0.1));
      CHECK(v < prev);
      prev = v;
    }
  }
  SUBCASE("limit constant against the 1d quadrature oracle") {
    // Exact reduction of the pairing integral: with lambda = log r / log t,
    //   value = (2 pi / pi^4) t^2 L^3 Int_{lam_delta}^{1} sin^2(pi lam) dlam,
    // and splitting the sine substitution s = sin(pi lam) over its two
    // monotone halves gives Int sin^2 -> (2/pi) Int_0^1 s^2/sqrt(1-s^2) ds.
    // The oracle integral evaluates to pi/4, so the limit constant is
    // (4/pi^4) * Int_0^1 s^2/sqrt(1-s^2) ds = 1/pi^3.
    // Quadrature after s = sin(phi), which removes the endpoint singularity.
    const double oracle = integrate_or_throw(
        [](double phi) { const double s = std::sin(phi); return s * s; }, 0.0,
        0.5 * std::numbers::pi, 1e-14, 1e-14);
    CHECK(oracle == Approx(std::numbers::pi / 4.0).epsilon(1e-12));
    const double pi4 = std::pow(std::numbers::pi, 4.0);
    const double derived_constant = 4.0 / pi4 * oracle;
    CHECK(derived_constant == Approx(1.0 / std::pow(std::numbers::pi, 3.0)).epsilon(1e-9));

    const double t = 1e-12;
    const double v = wp_pairing(CollarParams(t, 0.1));
    const double L = -std::log(t);
    CHECK(v / (t * t * L * L * L) == Approx(derived_constant).epsilon(0.02));
  }
}

TEST_CASE("asymptotic rate fitting") {
  SUBCASE("plain power law is recovered exactly") {
    std::vector<std::pair<double, double>> s;
    for (double t = 1e-10; t <= 1.1e-2; t *= 100.0) s.emplace_back(t, t * t);
    const FitReport r = asymptotic_fit(s);
    CHECK(r.alpha == Approx(2.0).epsilon(1e-10));
    CHECK(std::abs(r.beta) < 1e-10);
    CHECK(r.constant == Approx(1.0).epsilon(1e-9));
    CHECK(r.residual < 1e-10);
  }
  SUBCASE("power law with log power is recovered exactly") {
    std::vector<std::pair<double, double>> s;
    for (double t = 1e-12; t <= 1.1e-3; t *= 10.0) {
      const double L = -std::log(t);
      s.emplace_back(t, 0.7 * t * t * L * L * L);
    }
    const FitReport r = asymptotic_fit(s);
    CHECK(r.alpha == Approx(2.0).epsilon(1e-9));
    CHECK(r.beta == Approx(3.0).epsilon(1e-9));
    CHECK(r.constant == Approx(0.7).epsilon(1e-8));
    CHECK(r.residual < 1e-10);
  }
  SUBCASE("pairing sweep fits the blow-up rate (2, 3)") {
    std::vector<std::pair<double, double>> s;
    for (double t = 1e-12; t <= 1.1e-4; t *= 10.0)
      s.emplace_back(t, wp_pairing(CollarParams(t, 0.1)));
    const FitReport r = asymptotic_fit(s);
    CHECK(r.alpha == Approx(2.0).epsilon(0.025));
    CHECK(r.beta == Approx(3.0).epsilon(1.0 / 60.0));
  }
  SUBCASE("input validation") {
    std::vector<std::pair<double, double>> few = {{1e-3, 1.0}, {1e-4, 1.0}, {1e-5, 1.0}};
    CHECK_THROWS_AS(asymptotic_fit(few), std::invalid_argument);
    std::vector<std::pair<double, double>> narrow = {
        {1e-3, 1.0}, {2e-3, 1.0}, {3e-3, 1.0}, {4e-3, 1.0}};
    CHECK_THROWS_AS(asymptotic_fit(narrow), std::invalid_argument);
  }
}
