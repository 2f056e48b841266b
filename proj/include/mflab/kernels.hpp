#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mflab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Logarithmic / Riesz interaction datum: g_s(x) = -ln|x| (s = 0) or
/// |x|^{-s} (s > 0), with force K = M grad(g_s).
///
/// Construction enforces 0 <= s < d-1 and the matrix constraints: for
/// s in [d-2, d-1) the matrix must be anti-symmetric; for s < d-2 the
/// contraction M : grad^2 g(x) >= 0 is checked on a deterministic sample
/// of 100 directions x 10 radii (violations are reported, not proven
/// absent).
struct RieszKernel {
  int d;
  double s;
  MatrixXd M;

  RieszKernel(int dim, double exponent, MatrixXd m);

  double potential(double r) const;      // g_s at radius r > 0
  double potential_deriv(double r) const;  // d/dr g_s
  double potential(const VectorXd& x) const;
  VectorXd grad_potential(const VectorXd& x) const;
  VectorXd force(const VectorXd& x) const;  // M grad g_s(x)

  bool anti_symmetric() const;
};

/// Smooth radial bump of unit mass supported in B(0, eps), in dimension d.
/// Profiles are smooth functions of (r/eps)^2 so radial symmetry is exact.
struct Mollifier {
  enum class Profile { smooth_bump, poly_bump };

  int d;
  double eps;
  Profile profile = Profile::smooth_bump;

  Mollifier(int dim, double epsilon, Profile p = Profile::smooth_bump);

  /// eta^eps at radius r (0 for r >= eps).
  double density(double r) const;
  /// eta'(r)/r, smooth and finite through r = 0 (profiles are functions
  /// of r^2).
  double density_deriv_over_r(double r) const;
  /// Total mass by radial quadrature (== 1 up to quadrature tolerance).
  double total_mass() const;

 private:
  double norm_ = 0.0;  // profile normalization, computed at construction
};

/// Radial table of the mollified potential g^eps = g * eta^eps and its
/// radial derivative, built once by quadrature on a geometric radius grid
/// and evaluated by cubic Hermite interpolation. Exact at any x (including
/// x = 0); the force M grad g^eps(x) is parallel to x by construction.
class MollifiedKernelTable {
 public:
  MollifiedKernelTable(const RieszKernel& kernel, const Mollifier& mollifier,
                       double r_max, int nodes = 4096);

  double value(double r) const;   // g^eps(r)
  double deriv(double r) const;   // d/dr g^eps(r)
  /// (g^eps(x), K^eps(x)); total on R^d.
  std::pair<double, VectorXd> eval(const VectorXd& x) const;
  /// K^eps(z) written into out (allocation-free hot path).
  void force_into(const double* z, double* out) const;

  double eps() const { return eps_; }
  const RieszKernel& kernel() const { return kernel_; }

  /// Reference quadrature of g^eps(r) without the table (test oracle path
  /// uses an independent 1-D radial reduction; this is the table builder's
  /// own integrand, exposed for diagnostics).
  double direct_value(double r) const;

 private:
  RieszKernel kernel_;
  int d_;
  double eps_;
  double r0_ = 0.0, log_r0_ = 0.0, dlog_ = 0.0, r_max_ = 0.0;
  std::vector<double> r_, g_, dg_;  // nodes, values, radial derivatives
  double g_at_zero_ = 0.0;
  std::function<double(double)> eta_;
  std::function<double(double)> eta_dr_over_r_;  // eta'(R)/R as function of R^2

  double integrate_radius(double r, bool derivative) const;
};

/// Confinement potential U with gradient and Hessian.
struct ConfinementPotential {
  enum class Kind { quadratic, double_well, custom };

  Kind kind = Kind::quadratic;
  int d = 1;
  double kappa_U = 1.0;  // quadratic: U = kappa_U |x|^2 / 2
  double a = 1.0, b = 1.0;  // double well: U = a|x|^4/4 - b|x|^2/2
  // declared weak-convexity metadata (quadratic: kappa_U, R = 0)
  double weak_convexity_kappa = 0.0;
  double weak_convexity_R = 0.0;

  std::function<double(const VectorXd&)> custom_U;
  std::function<VectorXd(const VectorXd&)> custom_grad;
  std::function<MatrixXd(const VectorXd&)> custom_hess;

  static ConfinementPotential quadratic(int d, double kappa);
  static ConfinementPotential double_well(int d, double a, double b);
  static ConfinementPotential custom(
      int d, std::function<double(const VectorXd&)> U,
      std::function<VectorXd(const VectorXd&)> grad,
      std::function<MatrixXd(const VectorXd&)> hess);

  double value(const VectorXd& x) const;
  VectorXd grad(const VectorXd& x) const;
  MatrixXd hess(const VectorXd& x) const;
  /// (U, grad U, hess U) in one call.
  std::tuple<double, VectorXd, MatrixXd> eval(const VectorXd& x) const;
};

/// A time-dependent drift for the SDE engine: an explicit field b(t, x),
/// a smooth McKean pair (b0, b), or the log/Riesz + confinement composite.
struct DriftSpec {
  enum class Variant { explicit_field, mckean, log_riesz };

  Variant variant = Variant::explicit_field;
  double sigma = 1.0;  // diffusion coefficient, noise sqrt(2 sigma^2) dB

  // explicit_field
  std::function<VectorXd(double, const VectorXd&)> field;

  // mckean: b0(x) + mean_j b(x, y_j)
  std::function<VectorXd(const VectorXd&)> b0;
  std::function<VectorXd(const VectorXd&, const VectorXd&)> pair;

  // log_riesz: -grad U + mean_j K(x - y_j), optionally mollified
  std::optional<RieszKernel> kernel;
  std::shared_ptr<const MollifiedKernelTable> mollified;  // null -> raw kernel
  std::optional<ConfinementPotential> confinement;

  static DriftSpec explicit_drift(
      std::function<VectorXd(double, const VectorXd&)> b, double sigma);
  static DriftSpec mckean_drift(
      std::function<VectorXd(const VectorXd&)> b0,
      std::function<VectorXd(const VectorXd&, const VectorXd&)> pair,
      double sigma);
  static DriftSpec log_riesz_drift(
      RieszKernel kernel, std::shared_ptr<const MollifiedKernelTable> table,
      ConfinementPotential confinement, double sigma);
};

/// Empirical weak-convexity profile of a drift without measure argument:
/// for each radius r, the maximum of (b(x)-b(y)) . (x-y) / |x-y|^2 over a
/// deterministic low-discrepancy sample of pairs with |x-y| = r
/// (64 base points per radius).
std::vector<std::pair<double, double>> convexity_profile(
    const DriftSpec& drift, const std::vector<double>& radii, int dim,
    double sample_box = 6.0, int base_points = 64);

}  // namespace mflab
