#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "mflab/grid.hpp"
#include "mflab/kernels.hpp"

namespace mflab {

/// Relative entropy H(nu|mu) = int ln(nu/mu) dnu by grid quadrature; the
/// integrand is 0 where nu < 1e-300. Requires mu > 0 on the support of nu.
double relative_entropy(const GridDensity& nu, const GridDensity& mu);

/// Fisher information I(nu|mu) = int |grad ln(nu/mu)|^2 dnu with masked
/// centered differences.
double fisher_information(const GridDensity& nu, const GridDensity& mu);

/// A family of test functions on the grid; each member supplies h with
/// int h^2 dmu = 1 (normalized internally before ratio evaluation).
/// Members with int |grad h|^2 dmu < 1e-14 are excluded.
struct TestFunctionFamily {
  enum class Kind { hermite, exponential_tilts, compact_bumps };
  Kind kind = Kind::exponential_tilts;
  // hermite: orders 1..k_max (per axis in 2-D)
  int k_max = 4;
  // exponential tilts: h ~ exp(lambda . x / 2) for lambda in the grid below
  std::vector<double> lambdas = {-0.5, -0.25, 0.25, 0.5};
  // compact bumps: centers (per axis) and widths
  std::vector<double> centers = {-1.0, 0.0, 1.0};
  std::vector<double> widths = {0.5, 1.0};

  static TestFunctionFamily tilts(std::vector<double> lambdas);
  static TestFunctionFamily hermite(int k_max);
  static TestFunctionFamily bumps(std::vector<double> centers,
                                  std::vector<double> widths);
};

/// Lower bound on the optimal C_H in H <= C_H I: max over family members of
/// Ent_mu(h^2) / (4 int |grad h|^2 dmu). Monotone under family enlargement;
/// ties broken by member index (deterministic reduction).
double lsi_scan(const GridDensity& mu, const TestFunctionFamily& family);

/// Lower bound on the optimal Poincare constant: max of
/// Var_mu(f) / int |grad f|^2 dmu over the family.
double poincare_scan(const GridDensity& mu, const TestFunctionFamily& family);

/// C_t = e^{2Lt} C_0 + sigma^2 int_0^t e^{2Ls} ds, with the L = 0 branch
/// sigma^2 t handled exactly.
double bakry_emery_constant(double L, double C0, double sigma, double t);

struct HighTempThreshold {
  double R_star = 0.0;
  double sigma0_sq = 0.0;
};

/// R_* = R (2 + 2L/rho)^{1/d} and
/// sigma_0^2 = 2 (2L + rho) ((L + rho/4) R_*^2 + K) / (rho d).
HighTempThreshold high_temp_threshold(double rho, double L, double R, double K,
                                      int d);

struct LlfCondition {
  double gamma = 0.0;
  bool satisfied = false;
};

/// gamma = |grad_x W|_inf^2 / 2; satisfied iff sigma^4 > 8 gamma eta
/// (strict).
LlfCondition llf_condition(double grad_w_sup, double eta, double sigma);

/// Drift functional F(x, m) for the perturbation diagnostic: b0(x) +
/// int b(x, y) m(dy) evaluated against grid measures.
struct GridDriftFunctional {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> b0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      pair;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x,
                             const GridDensity& m) const;
};

struct PerturbationNorms {
  double sup_phi = 0.0;  // |phi_t|_inf on the mask
  double sup_g = 0.0;    // |g_t|_inf
};

/// phi_t = -div g_t + g_t . grad ln mu0 with g_t = F(., m_t) - F(., m_*),
/// divergence by centered differences, sup-norms on the 99.99% mass mask
/// of mu0.
PerturbationNorms perturbation_potential(const GridDensity& m_t,
                                         const GridDensity& m_star,
                                         const GridDriftFunctional& F,
                                         const GridDensity& mu0);

struct ConvolutionCheck {
  double lhs = 0.0;      // sup norm of |.|^{-s} * m   (or Holder seminorm)
  double rhs = 0.0;      // interpolation product of L1/Lp norms
  double ratio = 0.0;    // lhs / rhs
};

/// Empirical check of the Riesz convolution inequality
/// | |.|^{-s} * m |_inf <= C |m|_1^{1-qs/d} |m|_p^{qs/d}; theta > 0 switches
/// to the Holder-seminorm branch (kernel -ln|.| when s = 0).
ConvolutionCheck convolution_inequality_check(const GridDensity& m, double s,
                                              double p, double theta = 0.0);

}  // namespace mflab
