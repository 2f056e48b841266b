#include "mflab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mflab/quadrature.hpp"

namespace mflab {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

// Nodes/weights for Gauss-Legendre computed once per order via Newton on
// Legendre polynomials.
struct GaussRule {
  std::vector<double> x, w;
  explicit GaussRule(int n) : x(n), w(n) {
    for (int i = 0; i < n; ++i) {
      double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        double dp = n * (t * p1 - p0) / (t * t - 1.0);
        double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-15) break;
      }
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (t * p1 - p0) / (t * t - 1.0);
      x[i] = t;
      w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

const GaussRule& gauss64() {
  static GaussRule r(64);
  return r;
}

double sphere_area(int d) {
  // |S^{d-1}|
  return 2.0 * std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0);
}
}  // namespace

double gauss_legendre(const std::function<double(double)>& f, double a,
                      double b, int n) {
  const GaussRule* rule = nullptr;
  GaussRule local(1);
  if (n == 64) {
    rule = &gauss64();
  } else {
    local = GaussRule(n);
    rule = &local;
  }
  const double c = 0.5 * (b - a), m = 0.5 * (a + b);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += rule->w[i] * f(m + c * rule->x[i]);
  return s * c;
}

double tanh_sinh(const std::function<double(double)>& f, double a, double b,
                 int levels) {
  // Sum over t_k = k*h of w(t) f(x(t)) with x = m + c*tanh(pi/2 sinh t).
  const double c = 0.5 * (b - a), m = 0.5 * (a + b);
  const double h = 3.8 / (1 << (levels - 3));
  double s = 0.0;
  const int kmax = (1 << (levels - 3)) * 4;
  for (int k = -kmax; k <= kmax; ++k) {
    const double t = k * h;
    const double u = 0.5 * kPi * std::sinh(t);
    const double x = std::tanh(u);
    const double w = 0.5 * kPi * std::cosh(t) / std::pow(std::cosh(u), 2);
    const double xx = m + c * x;
    if (xx <= a || xx >= b) continue;
    const double v = f(xx);
    if (std::isfinite(v)) s += w * v;
  }
  return s * c * h;
}

// ---------------------------------------------------------------------------
// RieszKernel

RieszKernel::RieszKernel(int dim, double exponent, MatrixXd m)
    : d(dim), s(exponent), M(std::move(m)) {
  if (d < 2) throw std::invalid_argument("riesz kernel: dimension must be >= 2");
  if (M.rows() != d || M.cols() != d)
    throw std::invalid_argument("riesz kernel: M must be d x d");
  if (!(s >= 0.0 && s < d - 1))
    throw std::invalid_argument("riesz kernel: exponent must satisfy 0 <= s < d-1");
  if (s >= d - 2) {
    if (!anti_symmetric())
      throw std::invalid_argument(
          "riesz kernel: M must be anti-symmetric for s in [d-2, d-1)");
  } else {
    // Sample M : grad^2 g over 100 directions x 10 radii. grad^2 g at x:
    // for g = |x|^{-s}: s|x|^{-s-2} ( (s+2) xx^T/|x|^2 - I ).
    for (int ir = 0; ir < 10; ++ir) {
      const double r = 0.25 * (ir + 1);
      for (int idir = 0; idir < 100; ++idir) {
        VectorXd u(d);
        for (int k = 0; k < d; ++k)
          u[k] = std::cos(2.0 * kPi * (idir * (k + 1) * 0.381966011250105 +
                                       0.137 * (k + 1)));
        u.normalize();
        const VectorXd x = r * u;
        MatrixXd H;
        if (s == 0.0) {
          H = (2.0 * x * x.transpose() / (r * r) -
               MatrixXd::Identity(d, d)) /
              (r * r);
        } else {
          H = s * std::pow(r, -s - 2.0) *
              ((s + 2.0) * x * x.transpose() / (r * r) -
               MatrixXd::Identity(d, d));
        }
        if ((M.array() * H.array()).sum() < -1e-12)
          throw std::invalid_argument(
              "riesz kernel: M : grad^2 g < 0 at a sampled point (sub-Coulombic "
              "positivity violated)");
      }
    }
  }
}

bool RieszKernel::anti_symmetric() const {
  return ((M + M.transpose()).array().abs() < 1e-14).all();
}

double RieszKernel::potential(double r) const {
  if (r <= 0.0) throw SingularityError("g_s evaluated at 0");
  return s == 0.0 ? -std::log(r) : std::pow(r, -s);
}

double RieszKernel::potential_deriv(double r) const {
  if (r <= 0.0) throw SingularityError("g_s' evaluated at 0");
  return s == 0.0 ? -1.0 / r : -s * std::pow(r, -s - 1.0);
}

double RieszKernel::potential(const VectorXd& x) const {
  return potential(x.norm());
}

VectorXd RieszKernel::grad_potential(const VectorXd& x) const {
  const double r = x.norm();
  if (r <= 0.0) throw SingularityError("grad g_s evaluated at 0");
  // grad g = x/r * g'(r); for s = 0 this is -x/|x|^2.
  return x * (potential_deriv(r) / r);
}

VectorXd RieszKernel::force(const VectorXd& x) const {
  return M * grad_potential(x);
}

// ---------------------------------------------------------------------------
// Mollifier

Mollifier::Mollifier(int dim, double epsilon, Profile p)
    : d(dim), eps(epsilon), profile(p) {
  if (eps <= 0.0) throw std::invalid_argument("mollifier: eps must be > 0");
  if (d < 1) throw std::invalid_argument("mollifier: dimension must be >= 1");
  // Normalize so the d-dimensional integral is 1:
  //   |S^{d-1}| int_0^eps f(r/eps) r^{d-1} dr * norm = 1.
  auto shape = [this](double u2) {
    if (u2 >= 1.0) return 0.0;
    return profile == Profile::smooth_bump ? std::exp(-1.0 / (1.0 - u2))
                                           : std::pow(1.0 - u2, 4.0);
  };
  const double integral = gauss_legendre(
      [&](double r) {
        return shape((r / eps) * (r / eps)) * std::pow(r, d - 1);
      },
      0.0, eps, 64);
  norm_ = 1.0 / (sphere_area(d) * integral);
}

double Mollifier::density(double r) const {
  const double u2 = (r / eps) * (r / eps);
  if (u2 >= 1.0) return 0.0;
  const double shape = profile == Profile::smooth_bump
                           ? std::exp(-1.0 / (1.0 - u2))
                           : std::pow(1.0 - u2, 4.0);
  return norm_ * shape;
}

double Mollifier::density_deriv_over_r(double r) const {
  // with F the profile as a function of w = (r/eps)^2:
  // eta'(r)/r = 2 norm F'(w) / eps^2.
  const double w = (r / eps) * (r / eps);
  if (w >= 1.0) return 0.0;
  double dF;
  if (profile == Profile::smooth_bump) {
    const double q = 1.0 - w;
    dF = -std::exp(-1.0 / q) / (q * q);
  } else {
    dF = -4.0 * std::pow(1.0 - w, 3.0);
  }
  return 2.0 * norm_ * dF / (eps * eps);
}

double Mollifier::total_mass() const {
  return sphere_area(d) *
         tanh_sinh([this](double r) { return density(r) * std::pow(r, d - 1); },
                   0.0, eps, 9);
}

// ---------------------------------------------------------------------------
// MollifiedKernelTable

// Shell reduction: g^eps(r) = int_0^{r+eps} g(t) t^{d-1} A(t, r) dt where
// A(t, r) is the angular integral of eta^eps over directions at distance t
// from x, |x| = r:
//   d = 2:  A = int_0^{2pi} eta(R) da,           R = sqrt(r^2+t^2-2rt cos a)
//   d = 3:  A = 2pi int_0^pi eta(R) sin a da.
// The radial derivative differentiates A in r under the integral:
// dA/dr integrand is eta'(R)/R * (r - t cos a), smooth through R = 0 since
// the profiles are functions of R^2.
double MollifiedKernelTable::integrate_radius(double r, bool derivative) const {
  const auto& eta = eta_;
  const auto& eta_dr = eta_dr_over_r_;
  const int d = d_;
  const double eps = eps_;
  const RieszKernel& ker = kernel_;

  if (r == 0.0 && !derivative) {
    // Angular average of g(|0 - y|) is g(|y|): pure radial integral.
    return sphere_area(d) *
           tanh_sinh(
               [&](double t) {
                 return ker.potential(t) * std::pow(t, d - 1) * eta(t);
               },
               0.0, eps, 10);
  }
  if (r == 0.0) return 0.0;  // radial derivative vanishes at the origin

  // R < eps restricts the angle to |a| < a_max with
  // cos(a_max) = (r^2 + t^2 - eps^2) / (2rt); integrating over the support
  // arc only keeps the node density independent of eps/r.
  auto arc_limit = [&](double t) -> double {
    const double c = (r * r + t * t - eps * eps) / (2.0 * r * t);
    if (c <= -1.0) return kPi;
    if (c >= 1.0) return 0.0;
    return std::acos(c);
  };

  auto angular = [&](double t) -> double {
    const double a_max = arc_limit(t);
    if (a_max == 0.0) return 0.0;
    auto f = [&](double a) -> double {
      const double c = std::cos(a);
      const double R2 = std::max(0.0, r * r + t * t - 2.0 * r * t * c);
      const double base = derivative ? eta_dr(R2) * (r - t * c)
                                     : eta(std::sqrt(R2));
      return d == 2 ? base : base * std::sin(a);
    };
    // even in a for d = 2; the d = 3 weight sin(a) is part of f
    const double val = gauss_legendre(f, 0.0, a_max, 64);
    return d == 2 ? 2.0 * val : 2.0 * kPi * val;
  };

  auto integrand = [&](double t) -> double {
    return ker.potential(t) * std::pow(t, d - 1) * angular(t);
  };

  // Support |t - r| <= eps intersected with t >= 0; g(t) is singular only
  // at t = 0, which is in range when r < eps. Split at t = r where the
  // angular factor loses smoothness.
  const double lo = std::max(0.0, r - eps), hi = r + eps;
  if (r >= eps + 1e-12 * eps) {
    // Smooth integrand away from the origin.
    return gauss_legendre(integrand, lo, r, 64) +
           gauss_legendre(integrand, r, hi, 64);
  }
  return tanh_sinh(integrand, lo, r, 9) + tanh_sinh(integrand, r, hi, 9);
}

MollifiedKernelTable::MollifiedKernelTable(const RieszKernel& kernel,
                                           const Mollifier& mollifier,
                                           double r_max, int nodes)
    : kernel_(kernel), d_(kernel.d), eps_(mollifier.eps), r_max_(r_max) {
  if (mollifier.d != kernel.d)
    throw std::invalid_argument("mollified kernel: dimension mismatch");
  if (eps_ <= 0.0)
    throw std::invalid_argument("mollified kernel: eps must be > 0");
  eta_ = [m = mollifier](double r) { return m.density(r); };
  eta_dr_over_r_ = [m = mollifier](double r2) {
    return m.density_deriv_over_r(std::sqrt(r2));
  };

  r0_ = eps_ * 1e-3;
  log_r0_ = std::log(r0_);
  dlog_ = (std::log(r_max_) - log_r0_) / (nodes - 1);
  r_.resize(nodes);
  g_.resize(nodes);
  dg_.resize(nodes);
  g_at_zero_ = integrate_radius(0.0, false);
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < nodes; ++i) {
    const double r = std::exp(log_r0_ + i * dlog_);
    r_[i] = r;
    g_[i] = integrate_radius(r, false);
    dg_[i] = integrate_radius(r, true);
  }
}

double MollifiedKernelTable::direct_value(double r) const {
  return integrate_radius(r, false);
}

namespace {
// Cubic Hermite on [x0, x1] from values/derivatives at the ends.
inline double hermite(double x, double x0, double x1, double f0, double f1,
                      double d0, double d1, bool deriv) {
  const double h = x1 - x0, u = (x - x0) / h;
  const double u2 = u * u, u3 = u2 * u;
  if (!deriv)
    return (2 * u3 - 3 * u2 + 1) * f0 + (u3 - 2 * u2 + u) * h * d0 +
           (-2 * u3 + 3 * u2) * f1 + (u3 - u2) * h * d1;
  return ((6 * u2 - 6 * u) * f0 / h + (3 * u2 - 4 * u + 1) * d0 +
          (-6 * u2 + 6 * u) * f1 / h + (3 * u2 - 2 * u) * d1);
}
}  // namespace

double MollifiedKernelTable::value(double r) const {
  if (r >= r_max_) return kernel_.potential(r);
  if (r <= r0_)
    return hermite(r, 0.0, r_[0], g_at_zero_, g_[0], 0.0, dg_[0], false);
  const int i = std::min<int>(static_cast<int>((std::log(r) - log_r0_) / dlog_),
                              static_cast<int>(r_.size()) - 2);
  return hermite(r, r_[i], r_[i + 1], g_[i], g_[i + 1], dg_[i], dg_[i + 1],
                 false);
}

double MollifiedKernelTable::deriv(double r) const {
  if (r >= r_max_) return kernel_.potential_deriv(r);
  if (r <= r0_)
    return hermite(r, 0.0, r_[0], g_at_zero_, g_[0], 0.0, dg_[0], true);
  const int i = std::min<int>(static_cast<int>((std::log(r) - log_r0_) / dlog_),
                              static_cast<int>(r_.size()) - 2);
  return hermite(r, r_[i], r_[i + 1], g_[i], g_[i + 1], dg_[i], dg_[i + 1],
                 true);
}

std::pair<double, VectorXd> MollifiedKernelTable::eval(const VectorXd& x) const {
  const double r = x.norm();
  if (r == 0.0) return {g_at_zero_, VectorXd::Zero(d_)};
  const VectorXd grad = x * (deriv(r) / r);
  return {value(r), kernel_.M * grad};
}

void MollifiedKernelTable::force_into(const double* z, double* out) const {
  double r2 = 0.0;
  for (int k = 0; k < d_; ++k) r2 += z[k] * z[k];
  if (r2 == 0.0) {
    for (int k = 0; k < d_; ++k) out[k] = 0.0;
    return;
  }
  const double r = std::sqrt(r2);
  const double fac = deriv(r) / r;
  const double* M = kernel_.M.data();  // column-major d x d
  for (int a = 0; a < d_; ++a) {
    double acc = 0.0;
    for (int b = 0; b < d_; ++b) acc += M[a + b * d_] * z[b] * fac;
    out[a] = acc;
  }
}

// ---------------------------------------------------------------------------
// ConfinementPotential

ConfinementPotential ConfinementPotential::quadratic(int d, double kappa) {
  ConfinementPotential p;
  p.kind = Kind::quadratic;
  p.d = d;
  p.kappa_U = kappa;
  p.weak_convexity_kappa = kappa;
  p.weak_convexity_R = 0.0;
  return p;
}

ConfinementPotential ConfinementPotential::double_well(int d, double a,
                                                       double b) {
  ConfinementPotential p;
  p.kind = Kind::double_well;
  p.d = d;
  p.a = a;
  p.b = b;
  return p;
}

ConfinementPotential ConfinementPotential::custom(
    int d, std::function<double(const VectorXd&)> U,
    std::function<VectorXd(const VectorXd&)> grad,
    std::function<MatrixXd(const VectorXd&)> hess) {
  ConfinementPotential p;
  p.kind = Kind::custom;
  p.d = d;
  p.custom_U = std::move(U);
  p.custom_grad = std::move(grad);
  p.custom_hess = std::move(hess);
  return p;
}

double ConfinementPotential::value(const VectorXd& x) const {
  switch (kind) {
    case Kind::quadratic:
      return 0.5 * kappa_U * x.squaredNorm();
    case Kind::double_well: {
      const double r2 = x.squaredNorm();
      return 0.25 * a * r2 * r2 - 0.5 * b * r2;
    }
    case Kind::custom:
      return custom_U(x);
  }
  return 0.0;
}

VectorXd ConfinementPotential::grad(const VectorXd& x) const {
  switch (kind) {
    case Kind::quadratic:
      return kappa_U * x;
    case Kind::double_well:
      return (a * x.squaredNorm() - b) * x;
    case Kind::custom:
      return custom_grad(x);
  }
  return VectorXd::Zero(x.size());
}

MatrixXd ConfinementPotential::hess(const VectorXd& x) const {
  switch (kind) {
    case Kind::quadratic:
      return kappa_U * MatrixXd::Identity(d, d);
    case Kind::double_well:
      return (a * x.squaredNorm() - b) * MatrixXd::Identity(d, d) +
             2.0 * a * x * x.transpose();
    case Kind::custom:
      return custom_hess(x);
  }
  return MatrixXd::Zero(d, d);
}

std::tuple<double, VectorXd, MatrixXd> ConfinementPotential::eval(
    const VectorXd& x) const {
  return {value(x), grad(x), hess(x)};
}

// ---------------------------------------------------------------------------
// DriftSpec

DriftSpec DriftSpec::explicit_drift(
    std::function<VectorXd(double, const VectorXd&)> b, double sigma) {
  DriftSpec d;
  d.variant = Variant::explicit_field;
  d.field = std::move(b);
  d.sigma = sigma;
  return d;
}

DriftSpec DriftSpec::mckean_drift(
    std::function<VectorXd(const VectorXd&)> b0,
    std::function<VectorXd(const VectorXd&, const VectorXd&)> pair,
    double sigma) {
  DriftSpec d;
  d.variant = Variant::mckean;
  d.b0 = std::move(b0);
  d.pair = std::move(pair);
  d.sigma = sigma;
  return d;
}

DriftSpec DriftSpec::log_riesz_drift(
    RieszKernel kernel, std::shared_ptr<const MollifiedKernelTable> table,
    ConfinementPotential confinement, double sigma) {
  DriftSpec d;
  d.variant = Variant::log_riesz;
  d.kernel = std::move(kernel);
  d.mollified = std::move(table);
  d.confinement = std::move(confinement);
  d.sigma = sigma;
  return d;
}

// ---------------------------------------------------------------------------
// convexity_profile

std::vector<std::pair<double, double>> convexity_profile(
    const DriftSpec& drift, const std::vector<double>& radii, int dim,
    double sample_box, int base_points) {
  if (radii.empty())
    throw std::invalid_argument("convexity profile: empty radii list");
  if (drift.variant == DriftSpec::Variant::log_riesz)
    throw std::invalid_argument(
        "convexity profile: drift must be evaluable without a measure");

  const int d = dim;
  auto eval = [&](const VectorXd& x) -> VectorXd {
    if (drift.variant == DriftSpec::Variant::explicit_field)
      return drift.field(0.0, x);
    return drift.b0(x);
  };

  // deterministic low-discrepancy base points in [-box, box]^d and unit
  // directions from the golden-ratio sequence
  std::vector<std::pair<double, double>> out;
  out.reserve(radii.size());
  const double phi = 0.6180339887498949;
  for (double r : radii) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < base_points; ++p) {
      VectorXd x(d), u(d);
      for (int k = 0; k < d; ++k) {
        const double h1 = std::fmod(phi * (p + 1) * (k + 1) + 0.123 * (k + 1), 1.0);
        x[k] = sample_box * (2.0 * h1 - 1.0);
        u[k] = std::cos(2.0 * kPi * std::fmod(phi * (p + 7) * (k + 3), 1.0));
      }
      if (u.norm() < 1e-12) u[0] = 1.0;
      u.normalize();
      const VectorXd y = x + r * u;
      const VectorXd dbx = eval(x) - eval(y);
      worst = std::max(worst, dbx.dot(x - y) / (r * r));
    }
    out.emplace_back(r, worst);
  }
  return out;
}

}  // namespace mflab
