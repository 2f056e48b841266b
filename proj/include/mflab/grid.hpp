#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflab {

/// Uniform cell-centered grid on the box [-L, L]^d, n cells per axis.
/// Cell centers: x_i = -L + (i + 1/2) dx with dx = 2L/n, so the grid is
/// symmetric under x -> -x and closed under 90-degree rotations for d = 2.
struct GridSpec {
  int d = 1;
  int n = 0;
  double L = 0.0;

  double dx() const { return 2.0 * L / n; }
  double cell_volume() const {
    double v = 1.0;
    for (int k = 0; k < d; ++k) v *= dx();
    return v;
  }
  long size() const {
    long s = 1;
    for (int k = 0; k < d; ++k) s *= n;
    return s;
  }
  double center(int i) const { return -L + (i + 0.5) * dx(); }

  bool operator==(const GridSpec& o) const {
    return d == o.d && n == o.n && L == o.L;
  }
};

/// Nonnegative density values on a uniform box grid; the carrier of
/// mean-field flows. Values are stored flat, index (ix, iy) -> ix*n + iy
/// for d = 2.
struct GridDensity {
  GridSpec spec;
  double t = 0.0;
  Eigen::ArrayXd v;

  GridDensity() = default;
  GridDensity(const GridSpec& g, Eigen::ArrayXd values, double time = 0.0)
      : spec(g), t(time), v(std::move(values)) {
    if (v.size() != spec.size())
      throw std::invalid_argument("grid density: value count does not match grid");
  }

  long idx(int ix, int iy = 0) const {
    return spec.d == 1 ? ix : static_cast<long>(ix) * spec.n + iy;
  }
  double mass() const { return v.sum() * spec.cell_volume(); }
  void normalize() { v /= mass(); }

  /// Largest single-cell mass fraction on the outermost cell ring
  /// (box adequacy: should stay below 1e-6 for a well-chosen box).
  double max_boundary_cell_mass() const;
  /// Sum of mass over the outermost cell ring.
  double boundary_ring_mass() const;

  /// Second moment per axis (variance about 0 when mean is 0).
  Eigen::VectorXd axis_second_moment() const;
  Eigen::VectorXd mean() const;
};

/// Build a normalized density from samples f(x) of a nonnegative function.
GridDensity make_density(const GridSpec& g,
                         const std::function<double(const Eigen::VectorXd&)>& f,
                         double t = 0.0);

/// Normalized isotropic Gaussian N(shift, var I) sampled on the grid.
GridDensity gaussian_density(const GridSpec& g, const Eigen::VectorXd& shift,
                             double var);

/// Centered-difference gradient of a flat field along one axis
/// (one-sided at the two boundary layers).
Eigen::ArrayXd grad_axis(const GridSpec& g, const Eigen::ArrayXd& f, int axis);

/// L1 distance between two densities on the same grid.
double l1_distance(const GridDensity& a, const GridDensity& b);

/// Lp norm (p >= 1) and sup norm of a density.
double lp_norm(const GridDensity& m, double p);
double sup_norm(const GridDensity& m);

/// Bilinear (d=2) / linear (d=1) interpolation of grid values at point x;
/// returns 0 outside the box.
double interpolate(const GridDensity& m, const Eigen::VectorXd& x);

/// Inverse-CDF sampling from the grid density (marginal along the first
/// axis, then conditional). u must hold d uniforms in (0,1).
Eigen::VectorXd sample_inverse_cdf(const GridDensity& m,
                                   const Eigen::VectorXd& u);

}  // namespace mflab
