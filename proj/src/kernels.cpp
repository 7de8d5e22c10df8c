#include "tailslab/kernels.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>

#include "tailslab/numerics.hpp"

namespace tailslab {

LogGridFunction LogGridFunction::sample(double rho_max, double rho_min, int n,
                                        const std::function<cplx(double)>& f) {
  if (!(rho_max > rho_min) || !(rho_min > 0) || n < 8)
    throw KernelError("LogGridFunction::sample: need rho_max > rho_min > 0 and n >= 8");
  LogGridFunction g;
  const double h = std::log(rho_max / rho_min) / (n - 1);
  for (int k = 0; k < n; ++k) {
    const double rho = rho_max * std::exp(-k * h);
    g.rho.push_back(rho);
    g.value.push_back(f(rho));
  }
  return g;
}

void LogGridFunction::validate() const {
  if (rho.size() != value.size() || rho.size() < 8)
    throw KernelError("log-grid function needs >= 8 matching samples");
  for (std::size_t i = 1; i < rho.size(); ++i)
    if (!(rho[i] < rho[i - 1]) || !(rho[i] > 0))
      throw KernelError("log-grid function: rho must be positive and strictly decreasing");
  const double h = step();
  for (std::size_t i = 1; i < rho.size(); ++i)
    if (std::abs(std::log(rho[i - 1] / rho[i]) - h) > 1e-9 * std::max(1.0, h))
      throw KernelError("log-grid function: rho must be log-spaced");
  for (const auto& v : value)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw KernelError("log-grid function: non-finite value");
}

double LogGridFunction::step() const {
  return std::log(rho.front() / rho.back()) / (static_cast<double>(rho.size()) - 1);
}

double tail_exponent(const LogGridFunction& f, int npts) {
  const int n = f.size();
  npts = std::min(npts, n);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int i = n - npts; i < n; ++i) {
    const double a = std::abs(f.value[i]);
    if (a == 0) continue;
    const double x = std::log(f.rho[i]), y = std::log(a);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::infinity();
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

namespace {

// cumulative integral from the small-rho end: J_k = int_{s_k}^{s_last} g ds
std::vector<cplx> integral_from_end(const std::vector<double>& s, const std::vector<cplx>& g) {
  const std::size_t n = s.size();
  std::vector<double> t(n), re(n), im(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = -s[n - 1 - i];
    re[i] = g[n - 1 - i].real();
    im[i] = g[n - 1 - i].imag();
  }
  const auto Ir = num::cumulative_integral(t, re), Ii = num::cumulative_integral(t, im);
  std::vector<cplx> out(n);
  for (std::size_t i = 0; i < n; ++i) out[n - 1 - i] = cplx(Ir[i], Ii[i]);
  return out;
}

std::vector<cplx> integral_from_start(const std::vector<double>& s, const std::vector<cplx>& g) {
  const std::size_t n = s.size();
  std::vector<double> re(n), im(n);
  for (std::size_t i = 0; i < n; ++i) re[i] = g[i].real(), im[i] = g[i].imag();
  const auto Ir = num::cumulative_integral(s, re), Ii = num::cumulative_integral(s, im);
  std::vector<cplx> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = cplx(Ir[i], Ii[i]);
  return out;
}

std::vector<double> s_of(const LogGridFunction& f) {
  std::vector<double> s(f.size());
  for (int i = 0; i < f.size(); ++i) s[i] = -std::log(f.rho[i]);
  return s;
}

}  // namespace

LogGridFunction solve_bode(const LogGridFunction& f, double alpha) {
  f.validate();
  if (!(alpha > 1)) throw KernelError("solve_bode: decay exponent must exceed 1");
  const double e = tail_exponent(f);
  if (e < alpha - 0.05)
    throw KernelError(
        fmt::format("solve_bode: f decays like rho^{:.4g}, expected at least rho^{:g}", e, alpha));
  const auto s = s_of(f);
  const int n = f.size();
  std::vector<cplx> g(n);
  for (int i = 0; i < n; ++i) g[i] = std::exp(s[i]) * f.value[i];
  // beyond the grid f ~ f_last (rho/rho_last)^e
  const cplx tail = std::isfinite(e) ? g[n - 1] / (e - 1) : cplx(0);
  const auto J = integral_from_end(s, g);
  LogGridFunction u = f;
  for (int i = 0; i < n; ++i) u.value[i] = std::exp(-s[i]) * (J[i] + tail);
  return u;
}

LogGridFunction apply_bode_operator(const LogGridFunction& u) {
  u.validate();
  const int n = u.size();
  const double h = u.step();
  LogGridFunction out = u;
  const auto& f = u.value;
  for (int j = 0; j < n; ++j) {
    cplx d;
    if (j >= 2 && j <= n - 3)
      d = (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / (12 * h);
    else if (j < 2)
      d = (-25.0 * f[j] + 48.0 * f[j + 1] - 36.0 * f[j + 2] + 16.0 * f[j + 3] - 3.0 * f[j + 4]) /
          (12 * h);
    else
      d = (25.0 * f[j] - 48.0 * f[j - 1] + 36.0 * f[j - 2] - 16.0 * f[j - 3] + 3.0 * f[j - 4]) /
          (12 * h);
    // rho d_rho = -d_s
    out.value[j] = -d - f[j];
  }
  return out;
}

cplx bode_leading(const LogGridFunction& f) {
  f.validate();
  const double e = tail_exponent(f);
  if (e <= 1.02)
    throw KernelError(fmt::format(
        "bode_leading: int rho^-2 f drho diverges at rho = 0 (f ~ rho^{:.4g})", e));
  const auto s = s_of(f);
  const int n = f.size();
  std::vector<cplx> g(n);
  for (int i = 0; i < n; ++i) g[i] = std::exp(s[i]) * f.value[i];
  const cplx tail = std::isfinite(e) ? g[n - 1] / (e - 1) : cplx(0);
  return integral_from_end(s, g)[0] + tail;
}

LogGridFunction solve_bode_outer(const LogGridFunction& f) {
  f.validate();
  const auto s = s_of(f);
  const int n = f.size();
  std::vector<cplx> g(n);
  for (int i = 0; i < n; ++i) g[i] = std::exp(s[i]) * f.value[i];
  const auto I = integral_from_start(s, g);
  LogGridFunction u = f;
  for (int i = 0; i < n; ++i) u.value[i] = -std::exp(-s[i]) * I[i];
  return u;
}

cplx rho1_coefficient(const LogGridFunction& u, int npts) {
  u.validate();
  const int n = u.size();
  npts = std::min(npts, n);
  Eigen::MatrixXd A(npts, 2);
  Eigen::VectorXd yr(npts), yi(npts);
  for (int i = 0; i < npts; ++i) {
    const int k = n - npts + i;
    A(i, 0) = 1;
    A(i, 1) = u.rho[k];
    const cplx q = u.value[k] / u.rho[k];
    yr(i) = q.real();
    yi(i) = q.imag();
  }
  return {num::least_squares(A, yr).coef(0), num::least_squares(A, yi).coef(0)};
}

namespace {

double half_line(const std::function<double(double)>& f) {
  boost::math::quadrature::exp_sinh<double> q;
  double err = 0;
  return q.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14, &err);
}

}  // namespace

cplx umod_derivative(double rhat, bool conjugate) {
  if (!(rhat > 0)) throw KernelError("umod_derivative: rhat must be positive");
  // 1/(t - i) = (t + i)/(t^2 + 1)
  const double re = half_line([&](double t) { return std::exp(-2 * t * rhat) * t / (t * t + 1); });
  const double im = half_line([&](double t) { return std::exp(-2 * t * rhat) / (t * t + 1); });
  return {re, conjugate ? -im : im};
}

cplx umod_value(double rhat) {
  if (!(rhat > 0)) throw KernelError("umod_value: rhat must be positive");
  // int_0^rhat e^{-2 t x} dx = (1 - e^{-2 t rhat}) / (2t)
  const double re = half_line([&](double t) { return -std::expm1(-2 * t * rhat) / (2 * (t * t + 1)); });
  const double im = half_line([&](double t) {
    if (t == 0) return rhat;
    return -std::expm1(-2 * t * rhat) / (2 * t * (t * t + 1));
  });
  return cplx(re, im) / rhat;
}

LogFit umod_log_fit(double rhat_lo, double rhat_hi, int npts) {
  Eigen::MatrixXd A(npts, 6);
  Eigen::VectorXd y(npts);
  for (int i = 0; i < npts; ++i) {
    const double x = rhat_lo * std::pow(rhat_hi / rhat_lo, static_cast<double>(i) / (npts - 1));
    const double L = std::log(1 / x);
    A(i, 0) = L;
    A(i, 1) = 1;
    A(i, 2) = x * L;
    A(i, 3) = x;
    A(i, 4) = x * x * L;
    A(i, 5) = x * x;
    y(i) = umod_value(x).real();
  }
  const auto fit = num::least_squares(A, y);
  return {fit.coef(0), fit.coef(1), fit.residual_rms};
}

double umod_log_coefficient(const AngularField& ftilde) {
  static const LogFit fit = umod_log_fit();
  if (fit.residual > 1e-8)
    throw KernelError(fmt::format("umod log fit residual {:.3g} too large", fit.residual));
  return fit.coefficient * ftilde.average();
}

double iplus_profile(double c0, double v, double t_star) {
  if (!(v >= 0) || !(t_star > 0))
    throw std::domain_error("iplus_profile: needs v >= 0 and t_* > 0");
  if (std::isinf(v)) return 2 * c0 / (t_star * t_star);
  return 2 * c0 / (t_star * t_star) * v / (v + 2);
}

cplx tail_kernel(int k) {
  if (k < 1) throw KernelError("tail_kernel: k must be >= 1");
  const double fact = std::tgamma(k + 1.0);
  const cplx phase = std::polar(1.0, -M_PI * k / 2);
  return phase * ((k % 2) ? -fact : fact);
}

double kernel_cutoff(double sigma) {
  const double x = (std::abs(sigma) - 0.5) / 0.5;
  if (x <= 0) return 1;
  if (x >= 1) return 0;
  // smooth transition a/(a+b), a = e^{-1/x}, b = e^{-1/(1-x)}
  const double a = std::exp(-1 / x), b = std::exp(-1 / (1 - x));
  return 1 - a / (a + b);
}

cplx tail_kernel_numeric(int k, double t) {
  if (k < 0) throw KernelError("tail_kernel_numeric: k must be >= 0");
  // panels: geometric towards the log singularity at 0, then uniform pieces
  // short enough to resolve the oscillation e^{-i sigma t}
  std::vector<double> edges{0.0};
  for (double e = 1e-16; e < 0.05; e *= 2) edges.push_back(e);
  const int nu = std::max(40, static_cast<int>(std::ceil(t * 0.95 / 0.5)));
  for (int i = 0; i <= nu; ++i) edges.push_back(0.05 + 0.95 * i / nu);
  cplx acc = 0;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const auto rule = num::gauss_legendre(edges[p], edges[p + 1], 1, 20);
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      const double u = rule.x[i];
      const double w = rule.w[i] * kernel_cutoff(u) * std::pow(u, k);
      if (w == 0) continue;
      const double lu = std::log(u);
      // sigma = +u: log u;  sigma = -u: log u + i pi, sigma^k = (-1)^k u^k
      acc += w * std::exp(cplx(0, -u * t)) * lu;
      acc += w * ((k % 2) ? -1.0 : 1.0) * std::exp(cplx(0, u * t)) * cplx(lu, M_PI);
    }
  }
  return acc / (2 * M_PI);
}

}  // namespace tailslab
