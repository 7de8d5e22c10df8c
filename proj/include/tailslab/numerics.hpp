#pragma once
// Small numerical building blocks shared by the modules.

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

namespace tailslab::num {

// 7th-order smoothstep: 0 for x<=0, 1 for x>=1, C^3 at both ends.
double smoothstep7(double x);
double smoothstep7_d1(double x);
double smoothstep7_d2(double x);

// Lagrange basis weights for nodes[0..n) evaluated at x.
void lagrange_weights(const double* nodes, int n, double x, double* w);

// Interpolate samples f_j = f(j*h), j=0..size-1, at x using an npts-point stencil.
double interp_uniform(const std::vector<double>& f, double h, double x, int npts = 6);
// Same with an explicit origin x0.
double interp_uniform(const double* f, std::size_t n, double x0, double h, double x,
                      int npts = 6);

// Interpolate on a general increasing grid with a local npts-point polynomial.
double interp_grid(const std::vector<double>& x, const std::vector<double>& f, double at,
                   int npts = 4);

// Cumulative integral I_i = int_{t_0}^{t_i} f using cubic panels through four
// neighbouring samples (trapezoid plus end corrections on uneven grids).
std::vector<double> cumulative_integral(const std::vector<double>& t,
                                        const std::vector<double>& f);
double integral(const std::vector<double>& t, const std::vector<double>& f);

// Derivative at every sample of an uneven series from the local npts-point
// interpolating polynomial (centred where possible).
std::vector<double> local_poly_derivative(const std::vector<double>& t,
                                          const std::vector<double>& f, int npts = 5);

struct LeastSquares {
  Eigen::VectorXd coef;
  Eigen::VectorXd stderr_;  // standard errors from the residual variance
  double residual_rms = 0;
};
// Weighted least squares A x ~ b (weights multiply rows; empty means uniform).
LeastSquares least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& weights = Eigen::VectorXd());

// Output cadence: uniform step `dense_dt` up to `dense_until`, then geometric with
// factor `ratio` (never coarser than `max_dt` if positive).
struct Cadence {
  double dense_dt = 0.1;
  double dense_until = 10.0;
  double ratio = 1.01;
  double max_dt = 0.0;
  double next_after(double t) const;
};

// Composite Gauss-Legendre rule: `panels` equal pieces of [a, b], npts nodes each.
struct QuadRule {
  std::vector<double> x, w;
};
QuadRule gauss_legendre(double a, double b, int panels = 1, int npts = 8);

// Hex SHA-256 digest of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace tailslab::num
