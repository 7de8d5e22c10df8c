#include "tailslab/sphere.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace tailslab {

double real_ylm(int ell, int m, double theta, double phi) {
  const int am = std::abs(m);
  const double base = std::sph_legendre(ell, am, theta);
  if (m == 0) return base;
  if (m > 0) return std::numbers::sqrt2 * base * std::cos(am * phi);
  return std::numbers::sqrt2 * base * std::sin(am * phi);
}

void SphereGrid::mode_of(int idx, int& ell, int& m) {
  ell = static_cast<int>(std::floor(std::sqrt(static_cast<double>(idx)) + 1e-9));
  m = idx - ell * ell - ell;
}

std::shared_ptr<const SphereGrid> SphereGrid::make(int lmax) {
  if (lmax < 0) throw std::invalid_argument("SphereGrid: lmax must be >= 0");
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const SphereGrid>> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(lmax); it != cache.end()) return it->second;

  auto g = std::make_shared<SphereGrid>();
  g->lmax_ = lmax;
  g->ntheta_ = lmax + 1;
  g->nphi_ = 2 * lmax + 1;
  g->theta_.resize(g->ntheta_);
  std::vector<double> wmu(g->ntheta_);
  if (g->ntheta_ == 1) {
    g->theta_[0] = std::numbers::pi / 2;
    wmu[0] = 2.0;
  } else {
    gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(g->ntheta_);
    for (int i = 0; i < g->ntheta_; ++i) {
      double x, w;
      gsl_integration_glfixed_point(-1.0, 1.0, i, &x, &w, tab);
      g->theta_[i] = std::acos(x);
      wmu[i] = w;
    }
    gsl_integration_glfixed_table_free(tab);
  }
  g->phi_.resize(g->nphi_);
  for (int j = 0; j < g->nphi_; ++j) g->phi_[j] = 2 * std::numbers::pi * j / g->nphi_;
  g->weight_.resize(g->nodes());
  for (int k = 0; k < g->nodes(); ++k)
    g->weight_[k] = wmu[k / g->nphi_] * 2 * std::numbers::pi / g->nphi_;
  g->ylm_.resize(static_cast<std::size_t>(g->nmodes()) * g->nodes());
  for (int mode = 0; mode < g->nmodes(); ++mode) {
    int ell, m;
    mode_of(mode, ell, m);
    for (int k = 0; k < g->nodes(); ++k)
      g->ylm_[static_cast<std::size_t>(mode) * g->nodes() + k] =
          real_ylm(ell, m, g->theta(k), g->phi(k));
  }
  cache[lmax] = g;
  return g;
}

AngularField::AngularField(std::shared_ptr<const SphereGrid> grid, double value)
    : grid_(std::move(grid)), values_(grid_->nodes(), value) {}

AngularField::AngularField(std::shared_ptr<const SphereGrid> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != grid_->nodes())
    throw std::invalid_argument("AngularField: value count does not match grid");
}

AngularField AngularField::from_function(std::shared_ptr<const SphereGrid> grid,
                                         const std::function<double(double, double)>& f) {
  AngularField out(grid);
  for (int k = 0; k < grid->nodes(); ++k) out.values_[k] = f(grid->theta(k), grid->phi(k));
  return out;
}

AngularField AngularField::from_coefficients(std::shared_ptr<const SphereGrid> grid,
                                             const std::vector<double>& coef) {
  AngularField out(grid);
  const int nm = std::min<int>(grid->nmodes(), static_cast<int>(coef.size()));
  for (int mode = 0; mode < nm; ++mode) {
    if (coef[mode] == 0) continue;
    for (int k = 0; k < grid->nodes(); ++k) out.values_[k] += coef[mode] * grid->ylm(mode, k);
  }
  return out;
}

AngularField AngularField::harmonic(std::shared_ptr<const SphereGrid> grid, int ell, int m,
                                    double amplitude) {
  if (ell > grid->lmax() || std::abs(m) > ell)
    throw std::invalid_argument("AngularField::harmonic: mode outside band");
  std::vector<double> coef(grid->nmodes(), 0.0);
  coef[SphereGrid::mode_index(ell, m)] = amplitude;
  return from_coefficients(grid, coef);
}

std::vector<double> AngularField::coefficients() const {
  std::vector<double> coef(grid_->nmodes(), 0.0);
  for (int mode = 0; mode < grid_->nmodes(); ++mode) {
    double acc = 0;
    for (int k = 0; k < grid_->nodes(); ++k)
      acc += grid_->weight(k) * values_[k] * grid_->ylm(mode, k);
    coef[mode] = acc;
  }
  return coef;
}

AngularField AngularField::laplacian() const {
  auto coef = coefficients();
  for (int mode = 0; mode < grid_->nmodes(); ++mode) {
    int ell, m;
    SphereGrid::mode_of(mode, ell, m);
    coef[mode] *= ell * (ell + 1.0);
  }
  return from_coefficients(grid_, coef);
}

double AngularField::integral() const {
  double acc = 0;
  for (int k = 0; k < grid_->nodes(); ++k) acc += grid_->weight(k) * values_[k];
  return acc;
}

double AngularField::average() const { return integral() / (4 * std::numbers::pi); }

double AngularField::max_abs() const {
  double m = 0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double AngularField::l2_norm() const {
  double acc = 0;
  for (int k = 0; k < grid_->nodes(); ++k) acc += grid_->weight(k) * values_[k] * values_[k];
  return std::sqrt(acc / (4 * std::numbers::pi));
}

bool AngularField::is_constant(double tol) const {
  for (double v : values_)
    if (std::abs(v - values_[0]) > tol * std::max(1.0, std::abs(values_[0]))) return false;
  return true;
}

void AngularField::check_same(const AngularField& o) const {
  if (grid_ != o.grid_ && (grid_->lmax() != o.grid_->lmax()))
    throw std::invalid_argument("AngularField: mismatched grids");
}

AngularField& AngularField::operator+=(const AngularField& o) {
  check_same(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

AngularField& AngularField::operator-=(const AngularField& o) {
  check_same(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

AngularField& AngularField::operator*=(double c) {
  for (double& v : values_) v *= c;
  return *this;
}

AngularField operator*(const AngularField& a, const AngularField& b) {
  a.check_same(b);
  AngularField out = a;
  for (std::size_t k = 0; k < out.values_.size(); ++k) out.values_[k] *= b.values_[k];
  return out;
}

AngularField AngularField::map(const std::function<double(double)>& f) const {
  AngularField out = *this;
  for (double& v : out.values_) v = f(v);
  return out;
}

}  // namespace tailslab
