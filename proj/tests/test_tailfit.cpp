#include <doctest.h>

#include <cmath>
#include <random>

#include "tailslab/kernels.hpp"
#include "tailslab/tailfit.hpp"

using namespace tailslab;

namespace {

void sample(double a, double b, int n, const std::function<double(double)>& f,
            std::vector<double>& t, std::vector<double>& y) {
  t.clear();
  y.clear();
  for (int i = 0; i < n; ++i) {
    const double x = a * std::pow(b / a, static_cast<double>(i) / (n - 1));
    t.push_back(x);
    y.push_back(f(x));
  }
}

// Spherical trajectory whose probes carry phi(t, r) on t in [10, T].
Trajectory synthetic_trajectory(const std::vector<double>& radii, double T,
                                const std::function<double(double, double)>& phi) {
  Trajectory tr;
  tr.sphere = SphereGrid::make(0);
  tr.modes = {{0, 0}};
  tr.probe_r = radii;
  for (double t = 10; t <= T; t *= 1.01) {
    tr.probe_t.push_back(t);
    std::vector<std::vector<double>> row;
    for (double r : radii) row.push_back({phi(t, r)});
    tr.probe_phi.push_back(row);
  }
  return tr;
}

}  // namespace

TEST_CASE("exact power law") {
  std::vector<double> t, y;
  sample(10, 1000, 200, [](double x) { return 7 / (x * x); }, t, y);
  const auto f = fit_power_law(t, y, 50, 500, 2.0, "exact");
  CHECK(f.exponent == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(f.amplitude == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(f.pinned_amplitude == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(f.sign == 1);
  CHECK(f.power_law);
  CHECK(f.exponent_err >= 0);
  CHECK(f.amplitude_err >= 0);
  CHECK(f.t_b / f.t_a >= 5);
}

TEST_CASE("power law with a subleading correction") {
  std::vector<double> t, y;
  sample(10, 2000, 400, [](double x) { return 7 / (x * x) + 3 / (x * x * x); }, t, y);
  const auto f = fit_power_law(t, y, 100, 1000);
  CHECK(std::abs(f.exponent - 2.0) <= 0.02);
  CHECK(std::abs(f.amplitude / 7 - 1) <= 0.02);
}

TEST_CASE("negative tails keep their sign") {
  std::vector<double> t, y;
  sample(10, 1000, 200, [](double x) { return -0.4 / (x * x * x); }, t, y);
  const auto f = fit_power_law(t, y, 50, 500, 3.0);
  CHECK(f.sign == -1);
  CHECK(f.signed_amplitude() == doctest::Approx(-0.4).epsilon(1e-9));
}

TEST_CASE("exponential decay is flagged as not a power law") {
  std::vector<double> t, y;
  sample(1, 100, 400, [](double x) { return std::exp(-x); }, t, y);
  const auto f = fit_power_law(t, y, 5, 50);
  CHECK_FALSE(f.power_law);
  CHECK(f.exponent_drift > 0.5);
}

TEST_CASE("degenerate windows and oscillating tails are refused") {
  std::vector<double> t, y;
  sample(10, 1000, 200, [](double x) { return 1 / (x * x); }, t, y);
  CHECK_THROWS_AS(fit_power_law(t, y, 100, 300), FitError);
  sample(10, 1000, 400, [](double x) { return std::sin(x) / (x * x); }, t, y);
  CHECK_THROWS_AS(fit_power_law(t, y, 50, 500), OscillatoryTailError);
}

TEST_CASE("a sign change early in the window shifts it") {
  std::vector<double> t, y;
  // one zero crossing at t = 60, sign-definite afterwards
  sample(10, 3000, 600, [](double x) { return (x - 60) / (x * x * x); }, t, y);
  const auto f = fit_power_law(t, y, 50, 2000);
  CHECK(f.t_a > 60);
  CHECK(f.sign == 1);
}

TEST_CASE("verdict examples") {
  const double c0 = 0.5;
  TailFit fit;
  fit.exponent = 2.01;
  fit.amplitude = 2 * c0 * 1.03;
  fit.sign = 1;
  const auto v = price_verdict(fit, c0, 3, VerdictTolerance::symmetric(0.1, 0.25));
  CHECK(v.pass);
  CHECK(v.ratio == doctest::Approx(1.03));
  CHECK(v.tol.exponent == 0.1);

  TailFit quart;
  quart.exponent = 2.6;
  quart.amplitude = 1.0;
  const auto w = price_verdict(quart, 0.5, 4);
  CHECK_FALSE(w.exponent_ok);
  CHECK_FALSE(w.pass);
  CHECK(w.expected_exponent == 3.0);

  const auto z = price_verdict(fit, 0.0, 3);
  CHECK(z.indeterminate);
  CHECK_FALSE(z.pass);

  TailFit wrong = fit;
  wrong.sign = -1;
  const auto s = price_verdict(wrong, c0, 3);
  CHECK_FALSE(s.sign_ok);
  CHECK_FALSE(s.pass);
  CHECK_FALSE(v.describe().empty());
}

TEST_CASE("profile check on the exact profile and with noise") {
  const double c0 = -0.02;
  const std::vector<double> radii{20, 50, 100, 200, 500, 1000, 2000};
  const auto exact = synthetic_trajectory(radii, 2000, [&](double t, double r) {
    return iplus_profile(c0, t / r, t);
  });
  const auto rep = profile_check(exact, c0);
  CHECK(rep.samples > 100);
  CHECK(rep.sup_error < 1e-12);
  CHECK(rep.v_min <= 0.6);
  CHECK(rep.v_max >= 4.5);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto noisy = synthetic_trajectory(radii, 2000, [&](double t, double r) {
    return iplus_profile(c0, t / r, t) * (1 + 0.05 * u(rng));
  });
  const auto rn = profile_check(noisy, c0);
  const double max_profile = 5.0 / 7.0;  // v/(v+2) at v = 5
  CHECK(rn.sup_error <= 0.05 * max_profile);
  CHECK(rn.sup_error >= 0.03 * max_profile);

  const auto sparse = synthetic_trajectory({1.0}, 2000, [](double, double) { return 1.0; });
  CHECK_THROWS_AS(profile_check(sparse, c0), FitError);
}

TEST_CASE("derivative exponent is one larger") {
  std::vector<double> t, y, dy;
  sample(10, 2000, 400, [](double x) { return 7 / (x * x) + 3 / (x * x * x); }, t, y);
  for (double x : t) dy.push_back(-14 / (x * x * x) - 9 / (x * x * x * x));
  const auto a = fit_power_law(t, y, 100, 1000), b = fit_power_law(t, dy, 100, 1000);
  CHECK(std::abs(b.exponent - a.exponent - 1.0) <= 0.1);
}

TEST_CASE("window robustness") {
  std::vector<double> t, y;
  sample(10, 4000, 600, [](double x) { return 7 / (x * x) + 3 / (x * x * x); }, t, y);
  const auto w = window_shift_check(t, y, 100, 1000, 2.0);
  CHECK(w.ok);
  CHECK(w.amplitude_change < 3 * w.amplitude_err + 1e-12);
}
