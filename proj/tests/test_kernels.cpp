#include <doctest.h>

#include <cmath>

#include "tailslab/kernels.hpp"

using namespace tailslab;

namespace {

LogGridFunction power(double a, double rho_max = 1.0, double rho_min = 1e-6, int n = 1600) {
  return LogGridFunction::sample(rho_max, rho_min, n, [a](double r) { return cplx(std::pow(r, a)); });
}

double max_rel(const LogGridFunction& u, const std::function<double(double)>& exact) {
  double e = 0;
  for (int i = 0; i < u.size(); ++i) {
    const double x = exact(u.rho[i]);
    e = std::max(e, std::abs(u.value[i] - x) / std::abs(x));
  }
  return e;
}

// Independent value of F^-1(sigma^k log(sigma + i0)) t^{k+1}: sigma acts as
// i d/dt under e^{-i sigma t}, starting from the k = 1 kernel i t^-2.
cplx derivative_chain_kernel(int k) {
  cplx c(0, 1);
  for (int j = 2; j <= k; ++j) c *= cplx(0, 1) * -static_cast<double>(j);
  return c;
}

}  // namespace

TEST_CASE("log grid sampling and validation") {
  const auto f = power(2.0, 1.0, 1e-4, 41);
  CHECK(f.rho.front() == doctest::Approx(1.0));
  CHECK(f.rho.back() == doctest::Approx(1e-4));
  CHECK(f.step() == doctest::Approx(std::log(1e4) / 40));
  CHECK(tail_exponent(f) == doctest::Approx(2.0));
  LogGridFunction bad = f;
  std::swap(bad.rho[3], bad.rho[4]);
  CHECK_THROWS_AS(bad.validate(), KernelError);
  bad = f;
  bad.value[5] = NAN;
  CHECK_THROWS_AS(bad.validate(), KernelError);
}

TEST_CASE("solve_bode: analytic power cases") {
  CHECK(max_rel(solve_bode(power(2.0), 2.0), [](double r) { return r * r; }) < 1e-8);
  CHECK(max_rel(solve_bode(power(3.0), 3.0), [](double r) { return r * r * r / 2; }) < 1e-8);
  CHECK(max_rel(solve_bode(power(2.5), 2.5), [](double r) { return std::pow(r, 2.5) / 1.5; }) <
        1e-8);
  CHECK_THROWS_AS(solve_bode(power(1.5), 3.0), KernelError);
  CHECK_THROWS_AS(solve_bode(power(2.0), 1.0), KernelError);
}

TEST_CASE("solve_bode is linear and satisfies the discrete residual identity") {
  const auto f = LogGridFunction::sample(1.0, 1e-6, 1600, [](double r) {
    return cplx(r * r * std::cos(r), r * r * r * std::exp(-r));
  });
  const auto g = power(3.0);
  LogGridFunction sum = f;
  for (int i = 0; i < sum.size(); ++i) sum.value[i] = 2.0 * f.value[i] - 3.0 * g.value[i];
  const auto uf = solve_bode(f, 2.0), ug = solve_bode(g, 3.0), us = solve_bode(sum, 2.0);
  double lin = 0;
  for (int i = 0; i < us.size(); ++i)
    lin = std::max(lin, std::abs(us.value[i] - (2.0 * uf.value[i] - 3.0 * ug.value[i])));
  CHECK(lin < 1e-10);
  const auto back = apply_bode_operator(uf);
  double res = 0;
  for (int i = 0; i < f.size(); ++i)
    res = std::max(res, std::abs(back.value[i] - f.value[i]) / (f.rho[i] * f.rho[i]));
  CHECK(res < 1e-7);
}

TEST_CASE("bode_leading: Mellin value of rho^-2 f") {
  const auto fe = LogGridFunction::sample(200.0, 1e-8, 4000,
                                          [](double r) { return cplx(r * r * std::exp(-r)); });
  CHECK(std::abs(bode_leading(fe) - 1.0) < 1e-8);
  const auto zero = LogGridFunction::sample(1.0, 1e-6, 100, [](double) { return cplx(0); });
  CHECK(bode_leading(zero) == cplx(0));
  CHECK(std::abs(bode_leading(power(3.0)) - 0.5) < 1e-8);
  CHECK_THROWS_AS(bode_leading(power(1.0)), KernelError);
}

TEST_CASE("rho^1 coefficient of the outer solution equals minus the Mellin value") {
  const auto f = LogGridFunction::sample(1.0, 1e-7, 2400, [](double r) {
    return cplx(std::pow(r, 2.5) * (1 + r), -r * r * r);
  });
  const auto u = solve_bode_outer(f);
  CHECK(std::abs(rho1_coefficient(u) + bode_leading(f)) < 1e-8);
  // A^alpha data with 1 < alpha < 2: the decaying solution stays O(rho^alpha), no rho^1 term
  const auto v = solve_bode(power(1.5, 1.0, 1e-8, 2000), 1.5);
  CHECK(tail_exponent(v) == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("umod kernel: large rhat, log slope, conjugation, decay") {
  const cplx v = umod_derivative(10.0);
  CHECK(std::abs(v - cplx(0, 0.05)) < 0.05 * 0.05);
  const auto fit = umod_log_fit();
  CHECK(std::abs(fit.coefficient - 1.0) < 1e-3);
  for (double r : {0.01, 0.3, 2.0, 7.0}) {
    const cplx a = umod_derivative(r), b = umod_derivative(r, true);
    CHECK(std::abs(b - std::conj(a)) < 1e-12 * std::abs(a));
  }
  for (double r : {1.0, 10.0, 100.0, 1000.0}) {
    const double C = r * std::abs(umod_derivative(r));
    CHECK(C <= 0.6);
    if (r >= 10) CHECK(C >= 0.4);
  }
  CHECK_THROWS(umod_value(0.0));
}

TEST_CASE("umod log coefficient scales with the sphere average") {
  const auto g = SphereGrid::make(4);
  CHECK(umod_log_coefficient(AngularField(g, 1.0)) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(umod_log_coefficient(AngularField::harmonic(g, 1, 0))) < 1e-12);
  CHECK(umod_log_coefficient(AngularField(g, 2.0)) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("scri profile") {
  CHECK(iplus_profile(0.3, 2.0, 10.0) == doctest::Approx(0.5 * 2 * 0.3 / 100));
  CHECK(iplus_profile(0.3, 0.0, 10.0) == 0.0);
  CHECK(iplus_profile(0.3, 1e12, 10.0) == doctest::Approx(2 * 0.3 / 100));
  CHECK(iplus_profile(0.3, INFINITY, 10.0) == doctest::Approx(2 * 0.3 / 100));
  CHECK_THROWS(iplus_profile(0.3, -1.0, 10.0));
}

TEST_CASE("closed-form tail kernel values") {
  CHECK(std::abs(tail_kernel(1) - cplx(0, 1)) < 1e-14);
  CHECK(std::abs(tail_kernel(2) - cplx(-2, 0)) < 1e-14);
  CHECK(std::abs(tail_kernel(3) - cplx(0, -6)) < 1e-13);
  CHECK_THROWS_AS(tail_kernel(0), KernelError);
}

TEST_CASE("cutoff used by the numeric kernel") {
  CHECK(kernel_cutoff(0.0) == 1.0);
  CHECK(kernel_cutoff(0.5) == 1.0);
  CHECK(kernel_cutoff(-0.3) == 1.0);
  CHECK(kernel_cutoff(1.0) == 0.0);
  CHECK(kernel_cutoff(0.75) == doctest::Approx(kernel_cutoff(-0.75)));
  CHECK(kernel_cutoff(0.75) > 0.0);
  CHECK(kernel_cutoff(0.75) < 1.0);
}

// The cutoff's Schwartz remainder only becomes negligible for t of a few hundred.
TEST_CASE("numeric inverse Fourier transform against the derivative chain at late time") {
  const double t = 800;
  for (int k : {1, 2, 3}) {
    const cplx num = tail_kernel_numeric(k, t) * std::pow(t, k + 1);
    const cplx ref = derivative_chain_kernel(k);
    INFO("k = ", k, " numeric ", num.real(), " + ", num.imag(), "i");
    CHECK(std::abs(num - ref) < 0.02 * std::abs(ref));
  }
}

TEST_CASE("closed form and derivative chain agree for odd k") {
  for (int k : {1, 3, 5}) CHECK(std::abs(tail_kernel(k) - derivative_chain_kernel(k)) < 1e-9);
}
