#pragma once
// Model objects near the boundary: the regular-singular ODE (rho d_rho - 1) u = f,
// the transition-face model solution, the profile along scri and the
// inverse-Fourier tail kernels of sigma^k log(sigma + i0).

#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include "tailslab/sphere.hpp"

namespace tailslab {

using cplx = std::complex<double>;

struct KernelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Samples on a log-spaced rho grid, rho strictly decreasing.
struct LogGridFunction {
  std::vector<double> rho;
  std::vector<cplx> value;

  int size() const { return static_cast<int>(rho.size()); }
  // rho_k = rho_max * exp(-k h), k = 0..n-1, h = log(rho_max / rho_min) / (n-1)
  static LogGridFunction sample(double rho_max, double rho_min, int n,
                                const std::function<cplx(double)>& f);
  void validate() const;
  double step() const;  // uniform step in s = -log rho
};

// Decay exponent of |f| over the last `npts` samples (small rho end).
double tail_exponent(const LogGridFunction& f, int npts = 8);

// Decaying solution u = e^{-s} int_s^inf e^t f dt of (rho d_rho - 1) u = f, s = -log rho.
LogGridFunction solve_bode(const LogGridFunction& f, double alpha);

// (rho d_rho - 1) u by 4th-order differences in s.
LogGridFunction apply_bode_operator(const LogGridFunction& u);

// int_0^inf rho^-2 f drho (f taken as zero beyond the largest sample).
cplx bode_leading(const LogGridFunction& f);

// Solution of (rho d_rho - 1) u = f vanishing at the largest rho of the grid,
// u = -rho int_rho^{rho_max} f / rho'^2; its rho^1 coefficient is -bode_leading(f).
LogGridFunction solve_bode_outer(const LogGridFunction& f);
// lim u / rho as rho -> 0, by a fit of u/rho against {1, rho} on the smallest samples.
cplx rho1_coefficient(const LogGridFunction& u, int npts = 16);

// int_0^inf e^{-2 t rhat} / (t - i) dt (conjugate kernel (t + i)^-1 if `conjugate`).
cplx umod_derivative(double rhat, bool conjugate = false);
// (1/rhat) int_0^rhat umod_derivative = u~_mod(rhat) for unit forcing.
cplx umod_value(double rhat);

struct LogFit {
  double coefficient = 0;  // of log(1/rhat)
  double constant = 0;
  double residual = 0;
};
LogFit umod_log_fit(double rhat_lo = 1e-4, double rhat_hi = 1e-2, int npts = 25);
double umod_log_coefficient(const AngularField& ftilde);

// 2 c0 t^-2 v / (v + 2)
double iplus_profile(double c0, double v, double t_star);

// d_k = e^{-i pi k/2} (-1)^k k!
cplx tail_kernel(int k);
// Fourier-inverse of psi(sigma) sigma^k log(sigma + i0) at t, with
// F^-1 g (t) = (1/2pi) int e^{-i sigma t} g(sigma) dsigma.
cplx tail_kernel_numeric(int k, double t);
// Even cutoff used above: 1 on |sigma| <= 1/2, 0 for |sigma| >= 1.
double kernel_cutoff(double sigma);

}  // namespace tailslab
