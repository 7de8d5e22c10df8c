#pragma once
// Functions on the unit sphere: Gauss-Legendre x uniform-longitude nodes with
// real orthonormal spherical harmonics up to lmax.

#include <functional>
#include <memory>
#include <vector>

namespace tailslab {

class SphereGrid {
 public:
  static std::shared_ptr<const SphereGrid> make(int lmax);

  int lmax() const { return lmax_; }
  int ntheta() const { return ntheta_; }
  int nphi() const { return nphi_; }
  int nodes() const { return ntheta_ * nphi_; }
  int nmodes() const { return (lmax_ + 1) * (lmax_ + 1); }
  static int mode_index(int ell, int m) { return ell * ell + ell + m; }
  static void mode_of(int idx, int& ell, int& m);

  // node k = itheta * nphi + iphi
  double theta(int k) const { return theta_[k / nphi_]; }
  double phi(int k) const { return phi_[k % nphi_]; }
  double weight(int k) const { return weight_[k]; }
  // Real orthonormal harmonic `mode` at node k.
  double ylm(int mode, int k) const { return ylm_[static_cast<std::size_t>(mode) * nodes() + k]; }

 private:
  int lmax_ = 0, ntheta_ = 1, nphi_ = 1;
  std::vector<double> theta_, phi_, weight_, ylm_;
};

// Real orthonormal harmonic Y_lm at (theta, phi); m<0 uses sin(|m| phi).
double real_ylm(int ell, int m, double theta, double phi);

class AngularField {
 public:
  AngularField() = default;
  explicit AngularField(std::shared_ptr<const SphereGrid> grid, double value = 0.0);
  AngularField(std::shared_ptr<const SphereGrid> grid, std::vector<double> values);

  static AngularField from_function(std::shared_ptr<const SphereGrid> grid,
                                    const std::function<double(double, double)>& f);
  static AngularField from_coefficients(std::shared_ptr<const SphereGrid> grid,
                                        const std::vector<double>& coef);
  static AngularField harmonic(std::shared_ptr<const SphereGrid> grid, int ell, int m,
                               double amplitude = 1.0);

  const std::shared_ptr<const SphereGrid>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](int k) const { return values_[k]; }
  double& operator[](int k) { return values_[k]; }
  int size() const { return static_cast<int>(values_.size()); }

  std::vector<double> coefficients() const;
  // Positive Laplacian (eigenvalue l(l+1)), exact for band-limited fields.
  AngularField laplacian() const;
  double integral() const;
  double average() const;
  double max_abs() const;
  double l2_norm() const;  // sqrt of the sphere average of the square
  bool is_constant(double tol = 1e-12) const;

  AngularField& operator+=(const AngularField& o);
  AngularField& operator-=(const AngularField& o);
  AngularField& operator*=(double c);
  friend AngularField operator+(AngularField a, const AngularField& b) { return a += b; }
  friend AngularField operator-(AngularField a, const AngularField& b) { return a -= b; }
  friend AngularField operator*(AngularField a, double c) { return a *= c; }
  friend AngularField operator*(double c, AngularField a) { return a *= c; }
  // pointwise product
  friend AngularField operator*(const AngularField& a, const AngularField& b);
  AngularField map(const std::function<double(double)>& f) const;

 private:
  void check_same(const AngularField& o) const;
  std::shared_ptr<const SphereGrid> grid_;
  std::vector<double> values_;
};

}  // namespace tailslab
