#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mflab/diagnostics.hpp"
#include "mflab/estimators.hpp"
#include "mflab/fokker_planck.hpp"

using namespace mflab;

namespace {
GridDensity gauss1(double mean, double var, int n = 512, double L = 10.0) {
  return gaussian_density(GridSpec{1, n, L},
                          Eigen::VectorXd::Constant(1, mean), var);
}
}  // namespace

TEST_CASE("relative entropy closed forms") {
  const auto mu = gauss1(0, 1);
  CHECK(relative_entropy(mu, mu) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(relative_entropy(gauss1(1, 1), mu) - 0.5) <= 1e-4);
  const double v = 2.0;
  CHECK(std::abs(relative_entropy(gauss1(0, v), mu) -
                 0.5 * (v - 1 - std::log(v))) <= 1e-4);
  // nonnegativity and the equality direction
  CHECK(relative_entropy(gauss1(0.3, 1.2), mu) >= -1e-10);
}

TEST_CASE("fisher information closed forms") {
  const auto mu = gauss1(0, 1);
  CHECK(fisher_information(mu, mu) == doctest::Approx(0.0));
  CHECK(std::abs(fisher_information(gauss1(1, 1), mu) - 1.0) <= 1e-3);
  // saturation identity H = (1/2) I for shift tilts of the standard normal
  const auto nu = gauss1(0.7, 1);
  CHECK(std::abs(relative_entropy(nu, mu) -
                 0.5 * fisher_information(nu, mu)) <= 1e-3);
}

TEST_CASE("lsi scan: Gaussian saturation and scaling") {
  const auto tilts = TestFunctionFamily::tilts({-0.4, -0.2, 0.2, 0.4});
  CHECK(std::abs(lsi_scan(gauss1(0, 1), tilts) - 0.5) <= 1e-3);
  CHECK(std::abs(lsi_scan(gauss1(0, 1.5), tilts) - 0.75) <= 1e-3);
  // monotone under family enlargement
  const auto small = TestFunctionFamily::tilts({0.2});
  const auto large = TestFunctionFamily::tilts({0.2, 0.4, -0.3});
  const auto mu = gauss1(0, 1.2);
  CHECK(lsi_scan(mu, large) >= lsi_scan(mu, small) - 1e-15);
  // entropy nonnegativity: any member yields a nonnegative ratio
  CHECK(lsi_scan(mu, TestFunctionFamily::bumps({0.0, 0.8}, {0.7, 1.2})) >=
        0.0);
}

TEST_CASE("poincare scan: spectral gap of the Gaussian") {
  CHECK(std::abs(poincare_scan(gauss1(0, 1), TestFunctionFamily::hermite(1)) -
                 1.0) <= 1e-3);
  CHECK(std::abs(poincare_scan(gauss1(0, 2), TestFunctionFamily::hermite(1)) -
                 2.0) <= 2e-3);
  // scans are monotone in family inclusion
  const auto mu = gauss1(0, 1);
  CHECK(poincare_scan(mu, TestFunctionFamily::hermite(3)) >=
        poincare_scan(mu, TestFunctionFamily::hermite(1)) - 1e-15);
}

TEST_CASE("bakry emery constant") {
  CHECK(bakry_emery_constant(0.0, 2.0, 1.0, 1.0) == doctest::Approx(3.0));
  CHECK(bakry_emery_constant(-1.0, 5.0, 2.0, 0.0) == doctest::Approx(5.0));
  // Gaussian flow identity: C_t = (1 + (v0-1) e^{-2t})/2 for L=-1, sigma=1
  for (int iv = 0; iv < 10; ++iv)
    for (int it = 0; it < 10; ++it) {
      const double v0 = 0.3 + 0.37 * iv, t = 0.1 + 0.29 * it;
      const double formula = bakry_emery_constant(-1.0, 0.5 * v0, 1.0, t);
      const double exact = 0.5 * (1.0 + (v0 - 1.0) * std::exp(-2.0 * t));
      CHECK(std::abs(formula - exact) <= 1e-12);
    }
  CHECK_THROWS(bakry_emery_constant(0.0, -1.0, 1.0, 1.0));
}

TEST_CASE("high temperature threshold formula") {
  const auto z = high_temp_threshold(1.0, 1.0, 0.0, 0.0, 2);
  CHECK(z.sigma0_sq == doctest::Approx(0.0));
  const auto a = high_temp_threshold(1.0, 1.0, 1.0, 1.0, 2);
  CHECK(a.R_star == doctest::Approx(2.0));
  CHECK(a.sigma0_sq == doctest::Approx(18.0));
  // monotone in K and R
  double prev = 0.0;
  for (double K : {0.0, 1.0, 2.0, 5.0}) {
    const double s = high_temp_threshold(1.0, 1.0, 1.0, K, 2).sigma0_sq;
    CHECK(s >= prev);
    prev = s;
  }
  prev = 0.0;
  for (double R : {0.0, 0.5, 1.0, 2.0}) {
    const double s = high_temp_threshold(1.0, 1.0, R, 1.0, 2).sigma0_sq;
    CHECK(s >= prev);
    prev = s;
  }
  CHECK_THROWS(high_temp_threshold(0.0, 1.0, 1.0, 1.0, 2));
}

TEST_CASE("llf condition") {
  const auto c = llf_condition(std::sqrt(2.0), 1.0, 2.0);
  CHECK(c.gamma == doctest::Approx(1.0));
  CHECK(c.satisfied);
  CHECK_FALSE(llf_condition(1.0, 1.0, 0.0).satisfied);
  // boundary is strict: sigma^4 = 8 gamma eta fails
  const double gamma = 0.5;
  const double sigma = std::pow(8.0 * gamma * 1.0, 0.25);
  CHECK_FALSE(llf_condition(1.0, 1.0, sigma).satisfied);
}

TEST_CASE("perturbation potential") {
  const GridSpec g{1, 512, 8.0};
  const GridDensity mstar = gaussian_density(g, Eigen::VectorXd::Zero(1), 1.0);
  GridDriftFunctional F;
  F.b0 = [](const Eigen::VectorXd& x) { return (-x).eval(); };
  F.pair = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double z = x[0] - y[0];
    const double q = 1.0 + z * z;
    return Eigen::VectorXd::Constant(1, -(-2.0 * 0.5 * z / (q * q)));
  };

  // m_t = m_*: g_t == 0 and phi_t == 0
  const auto zero = perturbation_potential(mstar, mstar, F, mstar);
  CHECK(zero.sup_phi == 0.0);
  CHECK(zero.sup_g == 0.0);

  // convolution-TV bound: |g_t|_inf <= |grad_x W|_inf |m_t - m_*|_TV
  const GridDensity m_t =
      gaussian_density(g, Eigen::VectorXd::Constant(1, 0.4), 1.1);
  const auto n = perturbation_potential(m_t, mstar, F, mstar);
  // sup |dW| for W(z) = a/(1+z^2), a = 0.5: max |a 2z/(1+z^2)^2|
  double sup_dw = 0.0;
  for (double z = 0; z < 4; z += 1e-4) {
    const double q = 1 + z * z;
    sup_dw = std::max(sup_dw, std::abs(2.0 * 0.5 * z / (q * q)));
  }
  const double tv = 0.5 * l1_distance(m_t, mstar);
  CHECK(n.sup_g <= sup_dw * 2.0 * tv + 1e-6);
}

TEST_CASE("convolution inequality: preconditions and scaling") {
  const GridSpec g{2, 64, 6.0};
  const GridDensity m = gaussian_density(g, Eigen::VectorXd::Zero(2), 1.0);
  const double inf = std::numeric_limits<double>::infinity();
  // integrability precondition violated: s/d too large for p
  CHECK_THROWS(convolution_inequality_check(m, 0.5, 1.2, 0.0));
  CHECK_THROWS(convolution_inequality_check(m, 0.0, inf, 0.0));  // sup needs s>0

  const auto a = convolution_inequality_check(m, 0.5, inf, 0.0);
  CHECK(a.ratio > 0.0);
  CHECK(a.lhs > 0.0);
  // scale invariance within 2% over lambda in {1, 2}
  const auto b = convolution_inequality_check(
      gaussian_density(g, Eigen::VectorXd::Zero(2), 0.25), 0.5, inf, 0.0);
  CHECK(std::abs(b.ratio / a.ratio - 1.0) <= 0.02);
}

TEST_CASE("marginal kl estimators on Gaussian clouds") {
  const GridSpec g{2, 128, 6.0};
  const GridDensity ref = gaussian_density(g, Eigen::VectorXd::Zero(2), 1.0);
  const GridDensity src = gaussian_density(g, Eigen::VectorXd::Constant(2, 1.0), 1.0);

  // self-KL ~ 0 within 3 stderr
  {
    ParticleEnsemble cloud = sample_iid_ensemble(10000, ref, 7);
    const auto est = marginal_kl(cloud, ref, ChaosEstimate::Estimator::knn);
    CHECK(std::abs(est.value) <= 3.0 * est.stderr_ + 0.01);
  }
  // KL(N((1,1),I) | N(0,I)) = 1, within 10% at N = 10^4
  {
    ParticleEnsemble cloud = sample_iid_ensemble(10000, src, 11);
    const auto knn = marginal_kl(cloud, ref, ChaosEstimate::Estimator::knn);
    CHECK(std::abs(knn.value - 1.0) <= 0.1);
    const auto kde = marginal_kl(cloud, ref, ChaosEstimate::Estimator::kde_grid);
    CHECK(std::abs(knn.value - kde.value) <=
          2.0 * std::hypot(knn.stderr_, kde.stderr_) + 0.05);
  }
  // too few particles
  {
    ParticleEnsemble tiny(20, 2, 3);
    CHECK_THROWS(marginal_kl(tiny, ref, ChaosEstimate::Estimator::knn));
  }
}

TEST_CASE("iid grid sampling matches the target moments") {
  const GridSpec g{2, 128, 6.0};
  const GridDensity src = gaussian_density(g, Eigen::VectorXd::Constant(2, 0.5), 0.8);
  ParticleEnsemble e = sample_iid_ensemble(40000, src, 99);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < e.N; ++i) mean += e.positions.row(i).transpose();
  mean /= e.N;
  CHECK(std::abs(mean[0] - 0.5) <= 0.02);
  CHECK(std::abs(mean[1] - 0.5) <= 0.02);
  double var = 0.0;
  for (int i = 0; i < e.N; ++i)
    var += (e.positions.row(i).transpose() - mean).squaredNorm();
  var /= (2.0 * e.N);
  CHECK(std::abs(var - 0.8) <= 0.02);
}
