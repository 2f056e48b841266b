#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mflab/kernels.hpp"
#include "mflab/quadrature.hpp"

using namespace mflab;

namespace {
Eigen::MatrixXd rot2(double a = 1.0) {
  Eigen::MatrixXd J(2, 2);
  J << 0, a, -a, 0;
  return J;
}
Eigen::VectorXd vec2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}
}  // namespace

TEST_CASE("riesz kernel construction constraints") {
  CHECK_NOTHROW(RieszKernel(2, 0.0, rot2()));
  CHECK_NOTHROW(RieszKernel(3, 1.5, [] {
    Eigen::MatrixXd m(3, 3);
    m.setZero();
    m(0, 1) = 2;
    m(1, 0) = -2;
    return m;
  }()));
  // s out of range
  CHECK_THROWS(RieszKernel(2, 1.0, rot2()));
  CHECK_THROWS(RieszKernel(2, -0.5, rot2()));
  // super-Coulombic s needs anti-symmetric M
  CHECK_THROWS(RieszKernel(2, 0.5, Eigen::MatrixXd::Identity(2, 2) * -1.0));
  // sub-Coulombic: M = I satisfies M : grad^2 g >= 0 for g = |x|^{-s}
  CHECK_NOTHROW(RieszKernel(4, 0.5, Eigen::MatrixXd::Identity(4, 4)));
  // and M = -I does not
  CHECK_THROWS(RieszKernel(4, 0.5, -Eigen::MatrixXd::Identity(4, 4)));
}

TEST_CASE("potential_eval closed forms") {
  RieszKernel log2d(2, 0.0, rot2());
  CHECK(log2d.potential(vec2(1, 0)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(log2d.potential(vec2(std::exp(1.0), 0)) ==
        doctest::Approx(-1.0).epsilon(1e-14));

  Eigen::MatrixXd A3 = Eigen::MatrixXd::Zero(3, 3);
  A3(0, 1) = 1;
  A3(1, 0) = -1;
  RieszKernel inv3d(3, 1.0, A3);
  Eigen::VectorXd z(3);
  z << 0, 0, 2;
  CHECK(inv3d.potential(z) == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(log2d.potential(vec2(0, 0)), SingularityError);
}

TEST_CASE("kernel_force closed forms and anti-symmetry") {
  RieszKernel id2(2, 0.0, Eigen::MatrixXd::Identity(2, 2));
  const Eigen::VectorXd f = id2.force(vec2(2, 0));
  CHECK(f[0] == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(f[1] == doctest::Approx(0.0).epsilon(1e-14));

  Eigen::MatrixXd A3 = Eigen::MatrixXd::Zero(3, 3);
  A3(0, 1) = 1;
  A3(1, 0) = -1;
  RieszKernel inv3d(3, 1.0, Eigen::MatrixXd::Identity(3, 3));
  Eigen::VectorXd e1(3);
  e1 << 1, 0, 0;
  const Eigen::VectorXd f3 = inv3d.force(e1);
  CHECK(f3[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(f3.tail(2).norm() == doctest::Approx(0.0));

  // x . M grad g = 0 for anti-symmetric M, 1000 pseudo-random points
  RieszKernel vortex(2, 0.0, rot2(1.7));
  for (int k = 0; k < 1000; ++k) {
    const double a = 0.1 + 0.01 * k, b = std::sin(3.0 * k) * 2.0;
    const Eigen::VectorXd x = vec2(a, b);
    const double dot = x.dot(vortex.force(x));
    CHECK(std::abs(dot) <= 1e-14 * vortex.force(x).norm() * x.norm());
  }
}

TEST_CASE("gradient relation via finite differences") {
  // centered differences of g_s match the force with M = I
  for (double s : {0.0, 0.5}) {
    RieszKernel k(2, s, Eigen::MatrixXd::Identity(2, 2));
    const double h = 1e-5;
    for (const auto& x : {vec2(0.7, -0.4), vec2(2.0, 1.0), vec2(-1.2, 0.3)}) {
      const Eigen::VectorXd g = k.force(x);
      for (int c = 0; c < 2; ++c) {
        Eigen::VectorXd xp = x, xm = x;
        xp[c] += h;
        xm[c] -= h;
        const double fd = (k.potential(xp) - k.potential(xm)) / (2 * h);
        CHECK(std::abs(fd - g[c]) <= 1e-6 * std::max(1.0, std::abs(g[c])));
      }
    }
  }
}

TEST_CASE("mollifier normalization and support") {
  for (auto profile : {Mollifier::Profile::smooth_bump,
                       Mollifier::Profile::poly_bump}) {
    for (int d : {2, 3}) {
      Mollifier eta(d, 0.25, profile);
      CHECK(std::abs(eta.total_mass() - 1.0) <= 1e-10);
      CHECK(eta.density(0.25) == 0.0);
      CHECK(eta.density(0.3) == 0.0);
      CHECK(eta.density(0.1) > 0.0);
    }
  }
  CHECK_THROWS(Mollifier(2, 0.0));
}

TEST_CASE("mollified kernel: harmonicity outside the support (d=2, s=0)") {
  RieszKernel k(2, 0.0, rot2());
  const double eps = 0.125;
  Mollifier eta(2, eps);
  MollifiedKernelTable tab(k, eta, 10.0, 2048);
  // mean value property of the harmonic -ln
  CHECK(std::abs(tab.value(2 * eps) + std::log(2 * eps)) <= 1e-8);
  for (double r : {3 * eps, 1.0, 4.0})
    CHECK(std::abs(tab.value(r) + std::log(r)) <= 1e-8);
}

TEST_CASE("mollified kernel at zero matches the radial quadrature oracle") {
  RieszKernel k(2, 0.0, rot2());
  const double eps = 0.125;
  Mollifier eta(2, eps);
  MollifiedKernelTable tab(k, eta, 10.0, 1024);
  // independent oracle: high-order radial quadrature of
  // int g(|y|) eta(y) dy = 2 pi int_0^eps (-ln t) t eta(t) dt
  const double oracle =
      2.0 * 3.14159265358979323846 *
      tanh_sinh([&](double t) { return -std::log(t) * t * eta.density(t); },
                0.0, eps, 11);
  CHECK(std::abs(tab.value(0.0) - oracle) <= 1e-10);
}

TEST_CASE("mollified kernel converges to the raw kernel as eps -> 0") {
  RieszKernel k(2, 0.5, rot2());
  const Eigen::VectorXd x = vec2(0.8, -0.3);
  double prev = 1e9;
  for (double eps : {0.2, 0.05, 0.0125}) {
    Mollifier eta(2, eps);
    MollifiedKernelTable tab(k, eta, 10.0, 1024);
    const double err = std::abs(tab.value(x.norm()) - k.potential(x));
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 1e-4);
}

TEST_CASE("mollified force is parallel to x") {
  RieszKernel k(2, 0.0, rot2());
  Mollifier eta(2, 0.2);
  MollifiedKernelTable tab(k, eta, 10.0, 1024);
  for (double a = 0.05; a < 3.0; a += 0.17) {
    const Eigen::VectorXd x = vec2(a * std::cos(5 * a), a * std::sin(5 * a));
    const auto [g, K] = tab.eval(x);
    (void)g;
    // K = M grad g^eps with grad g^eps parallel to x: the component of
    // M^{-1} K orthogonal to x must vanish
    const Eigen::VectorXd grad = rot2().inverse() * K;
    const double ortho = std::abs(grad[0] * x[1] - grad[1] * x[0]) / x.norm();
    CHECK(ortho <= 1e-10 * std::max(1e-300, K.norm()));
  }
  // finite at the origin
  const auto [g0, K0] = tab.eval(vec2(0, 0));
  CHECK(std::isfinite(g0));
  CHECK(K0.norm() == 0.0);
}

TEST_CASE("profile insensitivity at matched eps is O(eps^2)") {
  RieszKernel k(2, 0.5, rot2());
  double errs[2];
  int idx = 0;
  for (double eps : {0.2, 0.1}) {
    MollifiedKernelTable a(k, Mollifier(2, eps, Mollifier::Profile::smooth_bump),
                           6.0, 1024);
    MollifiedKernelTable b(k, Mollifier(2, eps, Mollifier::Profile::poly_bump),
                           6.0, 1024);
    double worst = 0.0;
    for (double r = 2.0 * eps; r < 3.0; r += 0.1)
      worst = std::max(worst, std::abs(a.value(r) - b.value(r)));
    errs[idx++] = worst;
  }
  // halving eps cuts the profile disagreement by about 4
  CHECK(errs[1] <= 0.4 * errs[0]);
}

TEST_CASE("confinement closed forms") {
  auto quad = ConfinementPotential::quadratic(2, 1.0);
  auto [u, g, h] = quad.eval(vec2(2, 0));
  CHECK(u == doctest::Approx(2.0));
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(0.0));
  CHECK((h - Eigen::MatrixXd::Identity(2, 2)).norm() == doctest::Approx(0.0));

  auto quad3 = ConfinementPotential::quadratic(2, 3.0);
  auto [u0, g0, h0] = quad3.eval(vec2(0, 0));
  CHECK(u0 == 0.0);
  CHECK(g0.norm() == 0.0);
  CHECK((h0 - 3.0 * Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);

  // d = 1 double well U = x^4/4 - x^2/2: critical points at +-1
  auto dw = ConfinementPotential::double_well(1, 1.0, 1.0);
  Eigen::VectorXd p(1), m(1);
  p << 1.0;
  m << -1.0;
  CHECK(dw.grad(p).norm() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(dw.grad(m).norm() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(dw.value(p) == doctest::Approx(-0.25));
}

TEST_CASE("convexity profile of reference drifts") {
  // linear drift: kappa(r) = -1 for all r
  DriftSpec lin = DriftSpec::explicit_drift(
      [](double, const Eigen::VectorXd& x) { return (-x).eval(); }, 1.0);
  const auto prof = convexity_profile(lin, {0.5, 1.0, 2.0, 4.0}, 1);
  for (const auto& [r, kap] : prof) CHECK(kap == doctest::Approx(-1.0));

  // double-well b = x - x^3 in d = 1: exact profile max is 1 - r^2/4
  DriftSpec dw = DriftSpec::explicit_drift(
      [](double, const Eigen::VectorXd& x) {
        Eigen::VectorXd v(1);
        v[0] = x[0] - x[0] * x[0] * x[0];
        return v;
      },
      1.0);
  const auto prof2 =
      convexity_profile(dw, {0.5, 1.0, 3.0, 6.0}, 1, 6.0, 256);
  for (const auto& [r, kap] : prof2) {
    CHECK(kap <= 1.0 - r * r / 4.0 + 1e-9);   // never above the true max
    CHECK(kap >= 1.0 - r * r / 4.0 - 0.15);   // and close to it
  }
  CHECK(prof2[0].second > 0.0);   // positive near the origin
  CHECK(prof2[3].second < 0.0);   // contractive at large separation

  // bounded perturbation: kappa(r) <= -1 + 2 delta / r
  const double delta = 0.3;
  DriftSpec pert = DriftSpec::explicit_drift(
      [&](double, const Eigen::VectorXd& x) {
        Eigen::VectorXd v = -x;
        v[0] += delta * std::sin(5.0 * x[0]);
        return v;
      },
      1.0);
  const auto prof3 = convexity_profile(pert, {0.5, 1.0, 2.0}, 1, 6.0, 128);
  for (const auto& [r, kap] : prof3)
    CHECK(kap <= -1.0 + 2.0 * delta / r + 1e-12);

  CHECK_THROWS(convexity_profile(lin, {}, 1));
}
