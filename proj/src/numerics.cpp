#include "tailslab/numerics.hpp"

#include <gsl/gsl_integration.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tailslab::num {

double smoothstep7(double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const double x4 = x * x * x * x;
  return x4 * (35 - 84 * x + 70 * x * x - 20 * x * x * x);
}

double smoothstep7_d1(double x) {
  if (x <= 0 || x >= 1) return 0;
  const double y = x * (1 - x);
  return 140 * y * y * y;
}

double smoothstep7_d2(double x) {
  if (x <= 0 || x >= 1) return 0;
  const double y = x * (1 - x);
  return 420 * y * y * (1 - 2 * x);
}

void lagrange_weights(const double* nodes, int n, double x, double* w) {
  for (int i = 0; i < n; ++i) {
    double v = 1;
    for (int j = 0; j < n; ++j)
      if (j != i) v *= (x - nodes[j]) / (nodes[i] - nodes[j]);
    w[i] = v;
  }
}

double interp_uniform(const double* f, std::size_t n, double x0, double h, double x,
                      int npts) {
  if (n == 0) throw std::invalid_argument("interp_uniform: empty samples");
  npts = std::min<int>(npts, static_cast<int>(n));
  const double u = (x - x0) / h;
  long start = static_cast<long>(std::floor(u)) - (npts / 2 - 1);
  start = std::clamp<long>(start, 0, static_cast<long>(n) - npts);
  double nodes[16], w[16];
  for (int k = 0; k < npts; ++k) nodes[k] = static_cast<double>(start + k);
  lagrange_weights(nodes, npts, u, w);
  double acc = 0;
  for (int k = 0; k < npts; ++k) acc += w[k] * f[start + k];
  return acc;
}

double interp_uniform(const std::vector<double>& f, double h, double x, int npts) {
  return interp_uniform(f.data(), f.size(), 0.0, h, x, npts);
}

double interp_grid(const std::vector<double>& x, const std::vector<double>& f, double at,
                   int npts) {
  const long n = static_cast<long>(x.size());
  if (n == 0) throw std::invalid_argument("interp_grid: empty samples");
  npts = std::min<int>(npts, static_cast<int>(n));
  const long hi = std::upper_bound(x.begin(), x.end(), at) - x.begin();
  long start = std::clamp<long>(hi - npts / 2, 0, n - npts);
  double w[16];
  lagrange_weights(x.data() + start, npts, at, w);
  double acc = 0;
  for (int k = 0; k < npts; ++k) acc += w[k] * f[start + k];
  return acc;
}

std::vector<double> cumulative_integral(const std::vector<double>& t,
                                        const std::vector<double>& f) {
  const long n = static_cast<long>(t.size());
  if (static_cast<long>(f.size()) != n) throw std::invalid_argument("cumulative_integral: size");
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  const int npts = static_cast<int>(std::min<long>(4, n));
  // two-point Gauss nodes integrate the local cubic exactly
  const double g = 0.5 / std::sqrt(3.0);
  double w[4];
  for (long i = 0; i + 1 < n; ++i) {
    const long start = std::clamp<long>(i - 1, 0, n - npts);
    const double a = t[i], b = t[i + 1], mid = 0.5 * (a + b), half = b - a;
    double seg = 0;
    for (double xi : {mid - g * half, mid + g * half}) {
      lagrange_weights(t.data() + start, npts, xi, w);
      double v = 0;
      for (int k = 0; k < npts; ++k) v += w[k] * f[start + k];
      seg += 0.5 * half * v;
    }
    out[i + 1] = out[i] + seg;
  }
  return out;
}

double integral(const std::vector<double>& t, const std::vector<double>& f) {
  if (t.size() < 2) return 0;
  return cumulative_integral(t, f).back();
}

std::vector<double> local_poly_derivative(const std::vector<double>& t,
                                          const std::vector<double>& f, int npts) {
  const long n = static_cast<long>(t.size());
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  npts = static_cast<int>(std::min<long>(npts, n));
  for (long i = 0; i < n; ++i) {
    const long start = std::clamp<long>(i - npts / 2, 0, n - npts);
    const double* x = t.data() + start;
    const double at = t[i];
    double d = 0;
    for (int k = 0; k < npts; ++k) {
      double wk = 0;
      for (int m = 0; m < npts; ++m) {
        if (m == k) continue;
        double prod = 1.0 / (x[k] - x[m]);
        for (int j = 0; j < npts; ++j)
          if (j != k && j != m) prod *= (at - x[j]) / (x[k] - x[j]);
        wk += prod;
      }
      d += wk * f[start + k];
    }
    out[i] = d;
  }
  return out;
}

LeastSquares least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& weights) {
  Eigen::MatrixXd Aw = A;
  Eigen::VectorXd bw = b;
  if (weights.size() == b.size()) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      Aw.row(i) *= weights(i);
      bw(i) *= weights(i);
    }
  }
  LeastSquares out;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Aw);
  out.coef = qr.solve(bw);
  const Eigen::VectorXd res = Aw * out.coef - bw;
  const double dof = std::max<double>(1.0, static_cast<double>(A.rows() - A.cols()));
  const double s2 = res.squaredNorm() / dof;
  out.residual_rms = std::sqrt(res.squaredNorm() / std::max<Eigen::Index>(1, A.rows()));
  out.stderr_ = Eigen::VectorXd::Zero(A.cols());
  if (A.rows() > A.cols()) {
    const Eigen::MatrixXd cov = (Aw.transpose() * Aw).inverse() * s2;
    for (Eigen::Index k = 0; k < A.cols(); ++k) out.stderr_(k) = std::sqrt(std::max(0.0, cov(k, k)));
  }
  return out;
}

double Cadence::next_after(double t) const {
  if (t + 1e-12 < dense_until) {
    const double k = std::floor(t / dense_dt + 1e-9) + 1;
    return std::min(k * dense_dt, std::max(dense_until, dense_dt));
  }
  double step = t * (ratio - 1);
  if (max_dt > 0) step = std::min(step, max_dt);
  step = std::max(step, dense_dt);
  return t + step;
}

QuadRule gauss_legendre(double a, double b, int panels, int npts) {
  gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(npts);
  QuadRule r;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p)
    for (int i = 0; i < npts; ++i) {
      double xi, wi;
      gsl_integration_glfixed_point(a + p * h, a + (p + 1) * h, i, &xi, &wi, tab);
      r.x.push_back(xi);
      r.w.push_back(wi);
    }
  gsl_integration_glfixed_table_free(tab);
  return r;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

}  // namespace tailslab::num
