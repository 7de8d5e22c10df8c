#include <doctest.h>

#include <cmath>

#include "tailslab/geometry.hpp"
#include "tailslab/sphere.hpp"

using namespace tailslab;

TEST_CASE("sphere quadrature weights sum to 4 pi") {
  for (int lmax : {0, 1, 4, 8}) {
    const auto g = SphereGrid::make(lmax);
    double s = 0;
    for (int k = 0; k < g->nodes(); ++k) s += g->weight(k);
    CHECK(std::abs(s - 4 * M_PI) / (4 * M_PI) < 1e-12);
  }
}

TEST_CASE("band-limited fields survive values -> coefficients -> values") {
  const auto g = SphereGrid::make(6);
  const auto f = AngularField::from_function(g, [](double th, double ph) {
    return 0.3 + real_ylm(1, -1, th, ph) - 2 * real_ylm(3, 2, th, ph) + real_ylm(6, -5, th, ph);
  });
  const auto back = AngularField::from_coefficients(g, f.coefficients());
  for (int k = 0; k < g->nodes(); ++k) CHECK(std::abs(back[k] - f[k]) < 1e-10);
}

TEST_CASE("sphere_average style identities") {
  const auto g = SphereGrid::make(4);
  CHECK(AngularField(g, 2.5).average() == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(std::abs(AngularField::harmonic(g, 1, 0).average()) < 1e-14);
  const auto h = AngularField::harmonic(g, 2, 1) + 0.5 * AngularField::harmonic(g, 3, -2);
  CHECK(std::abs(h.laplacian().average()) < 1e-12);
}

TEST_CASE("flat hyperboloidal metric") {
  const auto m = build_metric(MetricKind::minkowski_hyperboloidal, 0);
  for (double r : {0.0, 0.3, 1.0, 7.0, 120.0}) {
    CHECK(m.g00(r) == doctest::Approx(-1 / (1 + r * r)).epsilon(1e-13));
    CHECK(m.g00(r) < 0);
  }
  CHECK(m.gtilde() == doctest::Approx(-1.0));
  const auto d = decompose(m, 2);
  for (int k = 0; k < d.gtilde.size(); ++k) CHECK(d.gtilde[k] == doctest::Approx(-1.0));
  // rho^-2 g00 is continuous at scri
  CHECK(m.g00_over_rho2(1e-6) == doctest::Approx(m.gtilde()).epsilon(1e-9));
}

TEST_CASE("mass-deformed metric: A -> 1 - 2 m rho with at least second-order error") {
  const double mass = 0.3;
  const auto m = build_metric(MetricKind::mass_deformed, mass);
  double prev = 0;
  for (int i = 0; i < 4; ++i) {
    const double rho = 0.01 / std::pow(2, i);
    const double err = std::abs(m.A(1 / rho) - (1 - 2 * mass * rho));
    if (i > 0) CHECK(std::log2(prev / err) >= 1.95);
    prev = err;
  }
  for (double r : {0.0, 0.5, 2.0, 50.0}) CHECK(m.g00(r) < 0);
  CHECK(m.g00_over_rho2(1e-6) == doctest::Approx(m.gtilde()).epsilon(1e-5));
}

TEST_CASE("normal form model") {
  const auto m = build_metric(MetricKind::normal_form, 1.0);
  const auto d = decompose(m, 2);
  CHECK(2 * d.mass == doctest::Approx(2.0));
  CHECK_FALSE(m.evolvable());
  // Q~ and L2 vanish identically
  RadialProfile u;
  const auto g = d.gtilde.grid();
  for (double rho : {0.5, 0.1, 0.01}) {
    u.rho.push_back(rho);
    u.u.push_back(AngularField::harmonic(g, 1, 0, rho * rho));
  }
  for (const auto& f : d.Qtilde(u).u) CHECK(f.max_abs() == 0);
  for (const auto& f : d.L2(u).u) CHECK(f.max_abs() == 0);
}

TEST_CASE("tortoise coordinate") {
  CHECK(tortoise(3, 0) == doctest::Approx(3.0));
  CHECK(tortoise(4, 1) == doctest::Approx(4 + 2 * std::log(2.0)).epsilon(1e-12));
  CHECK(tortoise(4, 1) == doctest::Approx(5.386294).epsilon(1e-6));
  CHECK(tortoise(2.5, 1) == doctest::Approx(1.113706).epsilon(1e-6));
}

TEST_CASE("box0 on simple profiles (normal form, m = 0)") {
  const auto m = build_metric(MetricKind::normal_form, 0.0);
  const auto d = decompose(m, 2);
  const auto g = d.gtilde.grid();
  auto profile = [&](auto f) {
    RadialProfile u;
    for (int i = 0; i < 200; ++i) {
      const double rho = 0.5 * std::exp(-0.05 * i);
      u.rho.push_back(rho);
      u.u.push_back(f(rho));
    }
    return u;
  };
  const int mid = 100;
  SUBCASE("u = rho gives 0") {
    const auto out = apply_box_zero(d, profile([&](double r) { return AngularField(g, r); }));
    CHECK(out.u[mid].max_abs() < 1e-10 * out.rho[mid]);
  }
  SUBCASE("u = rho^2 gives -2 rho^4") {
    const auto out = apply_box_zero(d, profile([&](double r) { return AngularField(g, r * r); }));
    const double r = out.rho[mid];
    CHECK(out.u[mid][0] == doctest::Approx(-2 * std::pow(r, 4)).epsilon(1e-6));
  }
  SUBCASE("u = rho Y1 gives 2 rho^3 Y1") {
    const auto out = apply_box_zero(
        d, profile([&](double r) { return AngularField::harmonic(g, 1, 0, r); }));
    const double r = out.rho[mid];
    const auto expect = AngularField::harmonic(g, 1, 0, 2 * r * r * r);
    for (int k = 0; k < g->nodes(); ++k)
      CHECK(out.u[mid][k] == doctest::Approx(expect[k]).epsilon(1e-6));
  }
}

TEST_CASE("volume integrals") {
  const auto flat = build_metric(MetricKind::minkowski_hyperboloidal, 0);
  CHECK(volume_integral(flat, [](double r, double, double) { return std::exp(-r * r); }) ==
        doctest::Approx(std::pow(M_PI, 1.5)).epsilon(1e-8));
  CHECK(volume_integral(flat, [](double, double, double) { return 0.0; }) == 0.0);
  CHECK_THROWS_AS(
      volume_integral(flat, [](double r, double, double) { return 1 / std::pow(1 + r, 3); }),
      NonIntegrableError);
}
