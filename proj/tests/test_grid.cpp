#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mflab/fokker_planck.hpp"

using namespace mflab;

namespace {
Eigen::MatrixXd rot2(double a = 1.0) {
  Eigen::MatrixXd J(2, 2);
  J << 0, a, -a, 0;
  return J;
}
}  // namespace

TEST_CASE("invariant gaussian: mass, variance, symmetry, box guard") {
  const GridSpec g{2, 128, 5.0};
  const GridDensity m = invariant_gaussian(1.0, g);
  CHECK(std::abs(m.mass() - 1.0) <= 1e-10);
  const Eigen::VectorXd v = m.axis_second_moment();
  CHECK(std::abs(v[0] - 1.0) <= 1e-4);
  CHECK(std::abs(v[1] - 1.0) <= 1e-4);
  // exact x -> -x symmetry on the cell-centered grid
  const int n = g.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK(m.v[m.idx(i, j)] == m.v[m.idx(n - 1 - i, n - 1 - j)]);
  // box too small
  CHECK_THROWS(invariant_gaussian(1.0, GridSpec{2, 64, 2.0}));
}

TEST_CASE("heat kernel: variance grows by 2t on a 1-D grid") {
  const GridSpec g{1, 256, 12.0};
  GridDensity m = gaussian_density(g, Eigen::VectorXd::Zero(1), 0.5);
  const FaceField f = make_face_drift(g, nullptr, nullptr, nullptr);
  const double dt = 0.5 * cfl_bound(g, f, 1.0);
  const double T = 0.5;
  const long steps = static_cast<long>(T / dt);
  for (long s = 0; s < steps; ++s) m = fp_step(m, f, 1.0, dt);
  const double var = m.axis_second_moment()[0];
  const double expected = 0.5 + 2.0 * (steps * dt);
  const double dx2 = g.dx() * g.dx();
  CHECK(std::abs(var - expected) <= 10.0 * dx2);
  // compare the whole profile against the closed-form Gaussian
  const GridDensity exact =
      gaussian_density(g, Eigen::VectorXd::Zero(1), expected);
  CHECK(l1_distance(m, exact) <= 20.0 * dx2);
}

TEST_CASE("fp_step conserves mass to rounding") {
  const GridSpec g{2, 64, 4.0};
  GridDensity m = gaussian_density(g, Eigen::VectorXd::Constant(2, 0.4), 0.5);
  ConfinementPotential U = ConfinementPotential::quadratic(2, 1.3);
  const FaceField f = make_face_drift(g, &U, nullptr, nullptr);
  const double dt = 0.8 * cfl_bound(g, f, 1.0);
  for (int s = 0; s < 200; ++s) {
    m = fp_step(m, f, 1.0, dt);
    CHECK(std::abs(m.mass() - 1.0) <= 1e-12);
  }
  CHECK(m.v.minCoeff() >= -1e-12);
}

TEST_CASE("stationary Gibbs state is a fixed point of the SG flux") {
  const GridSpec g{1, 256, 8.0};
  ConfinementPotential U = ConfinementPotential::quadratic(1, 1.0);
  GridDensity m = invariant_gaussian(1.0, GridSpec{1, 256, 8.0});
  const FaceField f = make_face_drift(g, &U, nullptr, nullptr);
  const double dt = 0.8 * cfl_bound(g, f, 1.0);
  const GridDensity m0 = m;
  for (int s = 0; s < 100; ++s) m = fp_step(m, f, 1.0, dt);
  CHECK(l1_distance(m, m0) <= 1e-8);
}

TEST_CASE("CFL violation raises an instability error") {
  const GridSpec g{1, 128, 6.0};
  GridDensity m = gaussian_density(g, Eigen::VectorXd::Zero(1), 0.5);
  const FaceField f = make_face_drift(g, nullptr, nullptr, nullptr);
  const double dt = 10.0 * cfl_bound(g, f, 1.0);
  bool threw = false;
  try {
    for (int s = 0; s < 50; ++s) m = fp_step(m, f, 1.0, dt);
  } catch (const CflError&) {
    threw = true;
  }
  CHECK(threw);
}

TEST_CASE("spectral and direct convolution agree") {
  const GridSpec g{2, 64, 4.0};
  RieszKernel k(2, 0.0, rot2());
  Mollifier eta(2, 2.0 * g.dx());
  SpectralConvolver conv(g, k, eta);
  const GridDensity m =
      gaussian_density(g, Eigen::VectorXd::Constant(2, 0.3), 0.6);
  const auto a = conv.convolve(m);
  const auto b = conv.convolve_direct(m);
  const double scale =
      std::max(a[0].abs().maxCoeff(), a[1].abs().maxCoeff());
  CHECK((a[0] - b[0]).abs().maxCoeff() <= 1e-8 * scale);
  CHECK((a[1] - b[1]).abs().maxCoeff() <= 1e-8 * scale);
}

TEST_CASE("convolution with a near-delta bump reproduces the kernel") {
  const GridSpec g{2, 128, 4.0};
  RieszKernel k(2, 0.0, rot2());
  Mollifier eta(2, 4.0 * g.dx());
  SpectralConvolver conv(g, k, eta);
  // tight bump at the origin
  const GridDensity m = make_density(g, [&](const Eigen::VectorXd& x) {
    return std::exp(-x.squaredNorm() / (2 * 0.003));
  });
  const auto A = conv.convolve(m);
  // away from the bump, K * m ~ K
  for (double r : {1.0, 2.0}) {
    const int i = static_cast<int>((r + g.L) / g.dx() - 0.5);
    const int j = g.n / 2;
    const Eigen::Vector2d Kxy =
        conv.kernel_at(i - j, 0);  // difference to the origin cell
    const long idx = static_cast<long>(i) * g.n + j;
    CHECK(std::abs(A[0][idx] - Kxy[0]) <= 5e-3);
    CHECK(std::abs(A[1][idx] - Kxy[1]) <= 5e-3);
  }
}

TEST_CASE("rotational orthogonality of the vortex field on radial data") {
  // x . (K * m)(x) vanishes in the continuum; on the grid the residual is
  // set by the second-order kernel sampling, measured here at a resolution
  // where it is comfortably small
  const GridSpec g{2, 128, 4.0};
  RieszKernel k(2, 0.0, rot2());
  Mollifier eta(2, 2.0 * g.dx());
  SpectralConvolver conv(g, k, eta);
  const GridDensity m = gaussian_density(g, Eigen::VectorXd::Zero(2), 0.7);
  const auto A = conv.convolve(m);
  double worst = 0.0, amax = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      const long idx = static_cast<long>(i) * g.n + j;
      worst = std::max(worst, std::abs(g.center(i) * A[0][idx] +
                                       g.center(j) * A[1][idx]));
      amax = std::max(amax, std::hypot(A[0][idx], A[1][idx]));
    }
  CHECK(worst <= 5e-4 * std::max(amax, 1.0));
}

TEST_CASE("under-resolved mollification is rejected") {
  const GridSpec g{2, 64, 4.0};
  RieszKernel k(2, 0.0, rot2());
  Mollifier eta(2, 0.25 * g.dx());
  CHECK_THROWS(SpectralConvolver(g, k, eta));
}

TEST_CASE("mean-field vortex run: stationarity and rotation equivariance") {
  const GridSpec g{2, 64, 4.0};
  RieszKernel k(2, 0.0, rot2());
  Mollifier eta(2, 2.0 * g.dx());
  SpectralConvolver conv(g, k, eta);
  ConfinementPotential U = ConfinementPotential::quadratic(2, 1.0);

  // stationarity of the invariant Gaussian under the pure-confinement flow
  {
    const GridDensity mstar = invariant_gaussian(1.0, g);
    PdeConfig cfg;
    cfg.dt = 5e-4;
    cfg.T = 0.5;
    auto res = run_meanfield(mstar, nullptr, U, cfg, {});
    CHECK(l1_distance(res.snapshots.back(), mstar) <= 1e-6);
  }

  // one solver step commutes with a 90-degree rotation of the data
  {
    GridDensity m = make_density(g, [&](const Eigen::VectorXd& x) {
      const double q = (x[0] - 0.4) * (x[0] - 0.4) / 0.3 + x[1] * x[1] / 0.5;
      return std::exp(-0.5 * q);
    });
    auto rotate = [&](const GridDensity& src) {
      GridDensity dst = src;
      const int n = g.n;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          // (x, y) -> (-y, x): cell (i, j) receives the value at (j, n-1-i)
          dst.v[dst.idx(i, j)] = src.v[src.idx(j, n - 1 - i)];
      return dst;
    };
    auto one_step = [&](const GridDensity& src) {
      auto A = conv.convolve(src);
      const FaceField f = make_face_drift(g, &U, &A[0], &A[1]);
      return fp_step(src, f, 1.0, 2e-4);
    };
    const GridDensity a = rotate(one_step(m));
    const GridDensity b = one_step(rotate(m));
    CHECK((a.v - b.v).abs().maxCoeff() <= 1e-10 * b.v.maxCoeff());
  }
}

TEST_CASE("log density diagnostics on Gaussian pairs") {
  const GridSpec g{2, 128, 5.0};
  const GridDensity ref = invariant_gaussian(1.0, g);

  // m = reference: all diagnostics vanish
  {
    const auto d = log_density_diagnostics(ref, ref, nullptr);
    CHECK(d.sup_grad_u == 0.0);
    CHECK(d.sup_hess_u == 0.0);
  }

  // m = shifted reference: u is linear with gradient kappa * h
  {
    const double h = 0.25;
    const GridDensity m =
        gaussian_density(g, Eigen::VectorXd::Constant(2, 0.0) +
                                h * Eigen::VectorXd::Unit(2, 0),
                         1.0);
    const auto d = log_density_diagnostics(m, ref, nullptr);
    CHECK(std::abs(d.sup_grad_u - h) <= 1e-6);
    // linear u: Hessian at the finite-difference floor
    CHECK(d.sup_hess_u <= 1e-6);
  }
}

TEST_CASE("jabin-wang functional: symmetry, fixed point, cancellation") {
  const GridSpec g{2, 128, 4.0};
  RieszKernel k(2, 0.0, rot2());
  Mollifier eta(2, 2.0 * g.dx());
  SpectralConvolver conv(g, k, eta);

  // tight anisotropic density so the box boundary carries ~no mass
  const GridDensity m = make_density(g, [&](const Eigen::VectorXd& x) {
    const double q = (x[0] - 0.3) * (x[0] - 0.3) / 0.25 + x[1] * x[1] / 0.45;
    return std::exp(-0.5 * q);
  });
  const auto jw = jabin_wang_phi(m, conv, 8);
  CHECK(jw.sample_points > 100);
  CHECK(jw.sup_phi > 0.0);
  // the marginal cancellation: quadrature residual far below sup |phi|
  CHECK(jw.max_marginal_residual <= 1e-6 * jw.sup_phi);
}
