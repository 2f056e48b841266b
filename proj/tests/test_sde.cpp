#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mflab/sde.hpp"

using namespace mflab;

namespace {
Eigen::MatrixXd rot2(double a = 1.0) {
  Eigen::MatrixXd J(2, 2);
  J << 0, a, -a, 0;
  return J;
}

DriftSpec linear_drift(double sigma) {
  return DriftSpec::explicit_drift(
      [](double, const Eigen::VectorXd& x) { return (-x).eval(); }, sigma);
}
}  // namespace

TEST_CASE("zero drift, zero noise: positions frozen, clock advances") {
  DriftSpec none = DriftSpec::explicit_drift(
      [](double, const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Zero(x.size()).eval();
      },
      0.0);
  ParticleEnsemble e(5, 2, 3);
  e.positions.setRandom();
  const Eigen::MatrixXd before = e.positions;
  SdeConfig cfg;
  cfg.dt = 0.25;
  const auto after = step_particles(e, none, cfg);
  CHECK((after.positions.array() == before.array()).all());
  CHECK(after.t == doctest::Approx(0.25));
  CHECK(after.step == 1);
}

TEST_CASE("OU stationary variance sigma^2/kappa") {
  // d = 1, b = -x, sigma = 1: Var_inf = 1; run a big ensemble to t = 10
  const int N = 100000;
  ParticleEnsemble e(N, 1, 12345);
  SdeConfig cfg;
  cfg.dt = 5e-3;
  DriftSpec drift = linear_drift(1.0);
  const long steps = static_cast<long>(10.0 / cfg.dt);
  for (long s = 0; s < steps; ++s) e = step_particles(e, drift, cfg);
  const double var = e.positions.col(0).squaredNorm() / N;
  // sample variance has stderr ~ sqrt(2/N); allow 3 SE plus O(dt) bias
  const double se = std::sqrt(2.0 / N);
  CHECK(std::abs(var - 1.0) <= 3.0 * se + 3.0 * cfg.dt);
}

TEST_CASE("two-vortex deterministic radius decay") {
  RieszKernel kernel(2, 0.0, rot2());
  ConfinementPotential U = ConfinementPotential::quadratic(2, 1.0);
  DriftSpec drift = DriftSpec::log_riesz_drift(kernel, nullptr, U, 0.0);
  ParticleEnsemble e(2, 2, 7);
  e.positions << 0.5, 0.0, -0.5, 0.0;
  SdeConfig cfg;
  cfg.dt = 1e-4;
  cfg.scheme = SdeConfig::Scheme::rk4_deterministic;
  for (int s = 0; s < 10000; ++s) e = step_particles(e, drift, cfg);
  const double r = (e.positions.row(0) - e.positions.row(1)).norm();
  CHECK(std::abs(r - std::exp(-1.0)) <= 1e-6 * std::exp(-1.0));
}

TEST_CASE("rk4 requires zero noise") {
  SdeConfig cfg;
  cfg.scheme = SdeConfig::Scheme::rk4_deterministic;
  ParticleEnsemble e(2, 1, 1);
  CHECK_THROWS(step_particles(e, linear_drift(1.0), cfg));
}

TEST_CASE("raw kernel collision raises a collision event") {
  RieszKernel kernel(2, 0.0, rot2());
  ConfinementPotential U = ConfinementPotential::quadratic(2, 1.0);
  DriftSpec drift = DriftSpec::log_riesz_drift(kernel, nullptr, U, 0.0);
  ParticleEnsemble e(2, 2, 7);
  e.positions << 1e-6, 0.0, -1e-6, 0.0;
  SdeConfig cfg;
  cfg.dt = 1e-4;
  cfg.collision_threshold = 1e-5;
  CHECK_THROWS_AS(step_particles(e, drift, cfg), CollisionEvent);
  try {
    step_particles(e, drift, cfg);
  } catch (const CollisionEvent& ev) {
    CHECK(ev.distance == doctest::Approx(2e-6));
    CHECK(ev.t == 0.0);
  }
}

TEST_CASE("synchronous coupling: identical ensembles stay identical") {
  ParticleEnsemble a(16, 2, 9);
  a.positions.setRandom();
  CoupledPair pair(a, a, CoupledPair::Coupling::synchronous);
  SdeConfig cfg;
  cfg.dt = 1e-2;
  DriftSpec drift = linear_drift(1.0);
  for (int s = 0; s < 100; ++s) pair = step_coupled(pair, drift, drift, cfg);
  CHECK((pair.first.positions.array() == pair.second.positions.array()).all());
}

TEST_CASE("synchronous coupling gap decays exactly e^{-t} per path for b=-x") {
  const int N = 64;
  ParticleEnsemble a(N, 1, 11), b(N, 1, 11);
  a.positions.setRandom();
  b.positions = a.positions.array() + 1.0;
  CoupledPair pair(a, b, CoupledPair::Coupling::synchronous);
  SdeConfig cfg;
  cfg.dt = 1e-3;
  DriftSpec drift = linear_drift(1.0);
  const int steps = 1000;
  for (int s = 0; s < steps; ++s) pair = step_coupled(pair, drift, drift, cfg);
  // Euler gap: (1 - dt)^steps, within O(dt) of e^{-t}
  const double expected = std::pow(1.0 - cfg.dt, steps);
  for (int i = 0; i < N; ++i) {
    const double gap =
        (pair.first.positions.row(i) - pair.second.positions.row(i)).norm();
    CHECK(gap == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(std::abs(expected - std::exp(-1.0)) <= 2e-3);
}

TEST_CASE("synchronous gap-squared contraction rate ~ 2 for b=-x") {
  const int N = 2000;
  ParticleEnsemble a(N, 1, 21), b(N, 1, 21);
  a.positions.setRandom();
  b.positions = a.positions.array() + 0.5;
  CoupledPair pair(a, b, CoupledPair::Coupling::synchronous);
  SdeConfig cfg;
  cfg.dt = 1e-3;
  DriftSpec drift = linear_drift(1.0);
  std::vector<std::pair<double, double>> series;
  for (int s = 0; s <= 2000; ++s) {
    if (s % 100 == 0) {
      double g2 = 0;
      for (int i = 0; i < N; ++i)
        g2 += (pair.first.positions.row(i) - pair.second.positions.row(i))
                  .squaredNorm();
      series.push_back({pair.first.t, g2 / N});
    }
    pair = step_coupled(pair, drift, drift, cfg);
  }
  const auto fit = contraction_fit(series);
  CHECK(std::abs(fit.lambda - 2.0) <= 0.05);
  CHECK(fit.r2 >= 0.999);
}

TEST_CASE("pathwise e^{Lt} bound for synchronous coupling, double-well") {
  // b = x - x^3 has one-sided Lipschitz constant L = 1
  DriftSpec dw = DriftSpec::explicit_drift(
      [](double, const Eigen::VectorXd& x) {
        Eigen::VectorXd v(1);
        v[0] = x[0] - x[0] * x[0] * x[0];
        return v;
      },
      1.0);
  const int N = 256;
  ParticleEnsemble a(N, 1, 31), b(N, 1, 31);
  a.positions.setRandom();
  b.positions = a.positions.array() + 0.1;
  CoupledPair pair(a, b, CoupledPair::Coupling::synchronous);
  SdeConfig cfg;
  cfg.dt = 1e-3;
  const double L = 1.0, g0 = 0.1;
  for (int s = 0; s < 1000; ++s) {
    pair = step_coupled(pair, dw, dw, cfg);
    const double bound = g0 * std::exp(L * pair.first.t) * (1.0 + 10 * cfg.dt);
    for (int i = 0; i < N; ++i)
      CHECK((pair.first.positions.row(i) - pair.second.positions.row(i))
                .norm() <= bound);
  }
}

TEST_CASE("reflection coupling meets and stays merged; meeting law checked") {
  // d = 1, b = -x, initial gap 1: the gap is an OU-type process
  // dr = -r dt + 2 sqrt(2) dW absorbed at 0 (sigma = 1).
  const int N = 10000;
  ParticleEnsemble a(N, 1, 41), b(N, 1, 41);
  a.positions.setZero();
  b.positions.setConstant(1.0);
  CoupledPair pair(a, b, CoupledPair::Coupling::reflection);
  SdeConfig cfg;
  cfg.dt = 1e-4;
  DriftSpec drift = linear_drift(1.0);
  const int steps = 10000;  // to t = 1
  for (int s = 0; s < steps; ++s) pair = step_coupled(pair, drift, drift, cfg);
  double merged = 0;
  for (int i = 0; i < N; ++i) merged += pair.merged[i] ? 1.0 : 0.0;
  const double p_meet = merged / N;

  // independent oracle: absorbed 1-D Fokker-Planck for the gap process,
  // generator -r f' + 4 f'' with absorbing boundary at 0
  const int n = 600;
  const double R = 12.0, dr = R / n, dtp = 0.2 * dr * dr / 8.0;
  std::vector<double> p(n, 0.0);
  p[static_cast<int>(1.0 / dr)] = 1.0 / dr;
  double t = 0;
  while (t < 1.0 - 1e-12) {
    std::vector<double> q = p;
    for (int i = 1; i < n - 1; ++i) {
      const double flux_diff =
          4.0 * (p[i + 1] - 2 * p[i] + p[i - 1]) / (dr * dr);
      const double adv =
          ((i + 1.5) * dr * p[i + 1] - (i - 0.5) * dr * p[i - 1]) / (2 * dr);
      q[i] = p[i] + dtp * (flux_diff + adv);
    }
    q[0] = 0.0;  // absorbing
    q[n - 1] = 0.0;
    p.swap(q);
    t += dtp;
  }
  double survive = 0;
  for (int i = 0; i < n; ++i) survive += p[i] * dr;
  const double p_meet_oracle = 1.0 - survive;

  // 3 Monte Carlo standard errors plus a discrete-monitoring allowance
  // (paths can cross 0 between steps without triggering the merge rule)
  const double se = std::sqrt(p_meet_oracle * (1 - p_meet_oracle) / N);
  CHECK(std::abs(p_meet - p_meet_oracle) <= 3.0 * se + 0.025);

  // merged pairs remain identical afterwards
  for (int s = 0; s < 100; ++s) pair = step_coupled(pair, drift, drift, cfg);
  for (int i = 0; i < N; ++i)
    if (pair.merged[i])
      CHECK((pair.first.positions.row(i) - pair.second.positions.row(i))
                .norm() == 0.0);
}

TEST_CASE("contraction_fit recovers log-linear data") {
  std::vector<std::pair<double, double>> exact;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.3 * k;
    exact.push_back({t, 2.0 * std::exp(-3.0 * t)});
  }
  const auto fit = contraction_fit(exact);
  CHECK(fit.M == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.lambda == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<std::pair<double, double>> flat(6, {0.0, 1.5});
  for (int k = 0; k < 6; ++k) flat[k].first = k;
  const auto fit2 = contraction_fit(flat);
  CHECK(fit2.lambda == doctest::Approx(0.0));

  CHECK_THROWS(contraction_fit({{0, 1}, {1, 0.5}}));
  CHECK_THROWS(contraction_fit(
      {{0, 1}, {1, 0.5}, {2, 0.2}, {3, -0.1}, {4, 0.05}}));
}

TEST_CASE("energy functional closed forms") {
  RieszKernel kernel(2, 0.0, rot2());
  ParticleEnsemble e(2, 2, 1);
  e.positions << 0.5, 0.0, -0.5, 0.0;
  // pair term: g(1) = 0; quadratic term: (2/2) (0.25 + 0.25) = 0.5
  CHECK(energy_functional(e, kernel) == doctest::Approx(0.5).epsilon(1e-14));

  // s > 0, far apart, no quadratic term: E -> 0
  Eigen::MatrixXd A3 = Eigen::MatrixXd::Zero(3, 3);
  A3(0, 1) = 1;
  A3(1, 0) = -1;
  RieszKernel riesz(3, 1.0, A3);
  ParticleEnsemble e3(3, 3, 1);
  e3.positions.setZero();
  e3.positions(0, 0) = 0;
  e3.positions(1, 0) = 1000.0;
  e3.positions(2, 1) = 2000.0;
  CHECK(std::abs(energy_functional(e3, riesz)) <= 1e-2);

  // blow-up as a pair distance tends to 0
  ParticleEnsemble close(2, 2, 1);
  double prev = -1e300;
  for (double d : {1e-2, 1e-4, 1e-8}) {
    close.positions << 0, 0, d, 0;
    const double E = energy_functional(close, kernel);
    CHECK(E > prev);
    prev = E;
  }
  close.positions << 0, 0, 0, 0;
  CHECK_THROWS_AS(energy_functional(close, kernel), SingularityError);
}

TEST_CASE("ensemble monitors: Gaussian pair moment and chi^2 moment") {
  const int N = 200000;
  ParticleEnsemble e(N, 1, 5150);
  for (int i = 0; i < N; ++i)
    e.positions(i, 0) = e.rng.normal(e.stream_ids[i], 0, 0);
  const auto mon = ensemble_monitors(e, 0.1, 2.0);
  // X - Y ~ N(0, 2): E exp(delta (X-Y)^2) = (1 - 4 delta)^{-1/2} ~ 1.2910
  const double expected = 1.0 / std::sqrt(1.0 - 4.0 * 0.1);
  // heavy-tailed average: 3 generous standard errors
  CHECK(std::abs(mon.exp_pair_moment - expected) <= 0.02);
  CHECK(mon.k_moment == doctest::Approx(1.0).epsilon(0.02));
  CHECK_FALSE(mon.overflow);

  ParticleEnsemble z(8, 2, 1);
  const auto mon0 = ensemble_monitors(z, 0.05, 2.0);
  CHECK(mon0.min_dist == 0.0);
  CHECK(mon0.k_moment == 0.0);

  // d-dimensional standard normal: E |X|^2 = d
  const int M = 50000;
  ParticleEnsemble g3(M, 3, 99);
  for (int i = 0; i < M; ++i)
    for (int k = 0; k < 3; ++k)
      g3.positions(i, k) = g3.rng.normal(g3.stream_ids[i], 0, k);
  CHECK(ensemble_monitors(g3, 0.01, 2.0).k_moment ==
        doctest::Approx(3.0).epsilon(0.03));

  // overflow flagged as +inf
  ParticleEnsemble wide(4, 1, 1);
  wide.positions << 0, 1000, 0, -1000;
  const auto monw = ensemble_monitors(wide, 1.0, 2.0);
  CHECK(monw.overflow);
  CHECK(std::isinf(monw.exp_pair_moment));
}

TEST_CASE("dominating radius: absorption basics") {
  auto kappa_const = [](double) { return 1000.0; };
  const auto surv = dominating_radius(kappa_const, 0.5, 1e-4, 0.1, 2000);
  CHECK(surv.back() < 0.01);
  // non-increasing
  for (std::size_t i = 1; i < surv.size(); ++i) CHECK(surv[i] <= surv[i - 1]);
  // started absorbed
  const auto zero = dominating_radius(kappa_const, 0.0, 1e-3, 0.05, 100);
  for (double s : zero) CHECK(s == 0.0);
}

TEST_CASE("determinism and exchangeability") {
  RieszKernel kernel(2, 0.0, rot2());
  Mollifier eta(2, 0.1);
  auto table = std::make_shared<MollifiedKernelTable>(kernel, eta, 8.0, 512);
  ConfinementPotential U = ConfinementPotential::quadratic(2, 1.0);
  DriftSpec drift = DriftSpec::log_riesz_drift(kernel, table, U, 1.0);
  SdeConfig cfg;
  cfg.dt = 1e-3;

  ParticleEnsemble e(17, 2, 777);
  e.positions.setRandom();

  auto advance = [&](ParticleEnsemble x, int nthreads) {
#ifdef _OPENMP
    omp_set_num_threads(nthreads);
#endif
    for (int s = 0; s < 20; ++s) x = step_particles(x, drift, cfg);
    return x;
  };
  const auto r1 = advance(e, 1);
  const auto r2 = advance(e, 2);
  CHECK((r1.positions.array() == r2.positions.array()).all());

  // permuting labels (carrying stream ids) permutes trajectories bit-exactly
  ParticleEnsemble p = e;
  std::vector<int> perm(e.N);
  for (int i = 0; i < e.N; ++i) perm[i] = (i * 5 + 3) % e.N;
  for (int i = 0; i < e.N; ++i) {
    p.positions.row(i) = e.positions.row(perm[i]);
    p.stream_ids[i] = e.stream_ids[perm[i]];
  }
  const auto rp = advance(p, 2);
  for (int i = 0; i < e.N; ++i)
    CHECK((rp.positions.row(i).array() == r2.positions.row(perm[i]).array())
              .all());
#ifdef _OPENMP
  omp_set_num_threads(omp_get_num_procs());
#endif
}

TEST_CASE("vortex pair energy conserved by rk4 at O(dt^4) per step") {
  RieszKernel kernel(2, 0.0, rot2());
  DriftSpec drift;
  drift.variant = DriftSpec::Variant::log_riesz;
  drift.kernel = kernel;
  drift.sigma = 0.0;

  auto pair_energy = [&](const ParticleEnsemble& e) {
    double s = 0;
    for (int i = 0; i < e.N; ++i)
      for (int j = i + 1; j < e.N; ++j)
        s += kernel.potential(
            (e.positions.row(i) - e.positions.row(j)).norm());
    return s;
  };

  auto drift_of = [&](double dt) {
    ParticleEnsemble e(5, 2, 3);
    e.positions << 1, 0, -1, 0.2, 0, 1, 0.3, -1, 0.5, 0.5;
    SdeConfig cfg;
    cfg.dt = dt;
    cfg.scheme = SdeConfig::Scheme::rk4_deterministic;
    const double E0 = pair_energy(e);
    const int steps = static_cast<int>(0.5 / dt);
    for (int s = 0; s < steps; ++s) e = step_particles(e, drift, cfg);
    return std::abs(pair_energy(e) - E0);
  };

  const double drift_coarse = drift_of(2e-3);
  const double drift_fine = drift_of(1e-3);
  // global drift is O(dt^3) for an rk4 integrator over fixed T... at least
  // a factor 8 reduction when halving dt
  CHECK(drift_fine <= drift_coarse / 6.0);
  CHECK(drift_coarse <= 1e-6);
}
