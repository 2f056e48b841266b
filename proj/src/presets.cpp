#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

#include "mflab/diagnostics.hpp"
#include "mflab/estimators.hpp"
#include "mflab/experiments.hpp"
#include "mflab/fokker_planck.hpp"
#include "mflab/sde.hpp"

namespace mflab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd rotation_matrix(double scale) {
  Eigen::MatrixXd J(2, 2);
  J << 0, scale, -scale, 0;
  return J;
}

// Shared vortex scenario: d = 2, s = 0, M = |M| J, quadratic confinement,
// grid on [-L, L]^2 with eps = 2 dx, anisotropic shifted Gaussian m0.
struct VortexSetup {
  GridSpec grid;
  RieszKernel kernel;
  Mollifier mollifier;
  ConfinementPotential confinement;
  GridDensity m0;
  GridDensity m_star;

  VortexSetup(int n, double L, double kappa_U, double M_norm, double eps)
      : grid{2, n, L},
        kernel(2, 0.0, rotation_matrix(M_norm)),
        mollifier(2, eps),
        confinement(ConfinementPotential::quadratic(2, kappa_U)),
        m0(make_density(grid,
                        [&](const Eigen::VectorXd& x) {
                          const double q =
                              (x[0] - 0.3) * (x[0] - 0.3) / 0.25 +
                              x[1] * x[1] / 0.45;
                          return std::exp(-0.5 * q);
                        })),
        m_star(invariant_gaussian(kappa_U, grid)) {}
};

std::vector<double> linspace_probes(double from, double to, double step) {
  std::vector<double> out;
  for (double t = from; t <= to + 1e-12; t += step) out.push_back(t);
  return out;
}

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

LineFit fit_line(const std::vector<std::pair<double, double>>& pts) {
  LineFit f;
  const int n = static_cast<int>(pts.size());
  if (n < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  const double ss_tot = syy - sy * sy / n;
  double ss_res = 0;
  for (auto [x, y] : pts) {
    const double r = y - (f.intercept + f.slope * x);
    ss_res += r * r;
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

// ---------------------------------------------------------------------------
// bakry_emery_gaussian: linear drift, Gaussian data; the closed-form
// constant against the exact Gaussian C_H on a (v0, t) lattice, and the
// grid-flow LSI scan at 512 cells.

ExperimentReport preset_bakry_emery(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  ExperimentReport rep;
  rep.name = "bakry_emery_gaussian";
  rep.seed = cfg.seed;

  // |C_t(formula) - C_H(exact Gaussian flow)| over a 10 x 10 lattice:
  // under dX = -X dt + sqrt(2) dB, variance v_t = 1 + (v0 - 1) e^{-2t} and
  // the optimal constant is v_t / 2; the formula with L = -1, sigma = 1,
  // C0 = v0/2 must reproduce it identically.
  double worst = 0.0;
  for (int iv = 0; iv < 10; ++iv)
    for (int it = 0; it < 10; ++it) {
      const double v0 = 0.25 + 0.35 * iv;
      const double t = 0.05 + 0.3 * it;
      const double formula = bakry_emery_constant(-1.0, 0.5 * v0, 1.0, t);
      const double vt = 1.0 + (v0 - 1.0) * std::exp(-2.0 * t);
      worst = std::max(worst, std::abs(formula - 0.5 * vt));
    }
  rep.verdict("formula_exactness", "max_abs_error_lattice", worst, "<=", 1e-12,
              worst <= 1e-12);

  // grid flow: 1-D OU from N(0, v0), scan at probes
  const GridSpec g{1, 512, 8.0};
  const double v0 = 2.0;
  GridDensity m = gaussian_density(g, Eigen::VectorXd::Zero(1), v0);
  ConfinementPotential U = ConfinementPotential::quadratic(1, 1.0);
  PdeConfig pcfg;
  pcfg.sigma2 = 1.0;
  pcfg.dt = 2e-5;
  pcfg.T = 1.0;
  auto res = run_meanfield(m, nullptr, U, pcfg, {0.0, 0.25, 0.5, 1.0});
  const TestFunctionFamily tilts =
      TestFunctionFamily::tilts({-0.4, -0.2, 0.2, 0.4});
  double worst_scan = 0.0;
  for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
    const double t = res.probe_times[i];
    const double exact = bakry_emery_constant(-1.0, 0.5 * v0, 1.0, t);
    const double scan = lsi_scan(res.snapshots[i], tilts);
    rep.series["lsi_scan_vs_t"].push_back({t, scan});
    rep.series["lsi_exact_vs_t"].push_back({t, exact});
    worst_scan = std::max(worst_scan, std::abs(scan - exact));
  }
  rep.verdict("grid_scan_matches", "max_abs_scan_error", worst_scan, "<=", 1e-3,
              worst_scan <= 1e-3);
  rep.dt = pcfg.dt;
  rep.grid_desc = "1d n=512 L=8";
  rep.parameters = {{"v0", v0}, {"lattice", "10x10"}, {"scan_probes", 4}};
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// vortex_two_particle: deterministic two-vortex radius decay oracle.

ExperimentReport preset_vortex_two_particle(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  ExperimentReport rep;
  rep.name = "vortex_two_particle";
  rep.seed = cfg.seed;

  RieszKernel kernel(2, 0.0, rotation_matrix(cfg.M_norm));
  ConfinementPotential U = ConfinementPotential::quadratic(2, cfg.kappa_U);
  DriftSpec drift = DriftSpec::log_riesz_drift(kernel, nullptr, U, 0.0);

  ParticleEnsemble e(2, 2, cfg.seed);
  e.positions << 0.5, 0.0, -0.5, 0.0;
  const double r0 = 1.0;

  SdeConfig scfg;
  scfg.dt = 1e-4;
  scfg.scheme = SdeConfig::Scheme::rk4_deterministic;
  scfg.collision_threshold = 1e-8;

  const double T = 1.0;
  const long steps = static_cast<long>(std::llround(T / scfg.dt));
  for (long s = 0; s < steps; ++s) e = step_particles(e, drift, scfg);

  const double rT = (e.positions.row(0) - e.positions.row(1)).norm();
  const double expected = r0 * std::exp(-cfg.kappa_U * T);
  const double rel_err = std::abs(rT / r0 - std::exp(-cfg.kappa_U * T)) /
                         std::exp(-cfg.kappa_U * T);
  rep.metrics["radius_ratio"] = rT / r0;
  rep.metrics["expected_ratio"] = expected;
  rep.verdict("radius_decay_oracle", "radius_rel_error", rel_err, "<=", 1e-6,
              rel_err <= 1e-6);
  rep.dt = scfg.dt;
  rep.parameters = {{"kappa_U", cfg.kappa_U}, {"M_norm", cfg.M_norm},
                    {"T", T}, {"r0", r0}};
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// vortex_entropy_decay: the mean-field vortex flow; entropy decay rate and
// the log-density diagnostics.

ExperimentReport preset_vortex_entropy_decay(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  ExperimentReport rep;
  rep.name = "vortex_entropy_decay";
  rep.seed = cfg.seed;

  const int n = static_cast<int>(cfg.grid_n);
  VortexSetup vs(n, cfg.L_box, cfg.kappa_U, cfg.M_norm, 2.0 * (cfg.L_box * 2 / n));
  SpectralConvolver conv(vs.grid, vs.kernel, vs.mollifier);

  PdeConfig pcfg;
  pcfg.dt = cfg.dt > 0 ? std::min(cfg.dt, 2e-4) : 2e-4;
  pcfg.T = 2.0;
  pcfg.sigma2 = 1.0;
  pcfg.eps = vs.mollifier.eps;

  const auto probes = linspace_probes(0.05, 2.0, 0.05);
  auto res = run_meanfield(vs.m0, &conv, vs.confinement, pcfg, probes);

  std::vector<std::pair<double, double>> lnH;  // on [0.2, 2]
  std::vector<std::pair<double, double>> grad_series, hess_series;
  bool H_monotone = true;
  double H_prev = relative_entropy(vs.m0, vs.m_star);
  double sup_inf_running_max = 0.0;
  bool lp_monitor_ok = true;
  for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
    const GridDensity& m = res.snapshots[i];
    const double t = res.probe_times[i];
    const double H = relative_entropy(m, vs.m_star);
    rep.series["entropy"].push_back({t, H});
    if (H > H_prev + 1e-12) H_monotone = false;
    H_prev = H;
    if (t >= 0.2 - 1e-9 && H > 0) lnH.push_back({t, std::log(H)});

    const auto ld = log_density_diagnostics(m, vs.m_star, &conv);
    rep.series["sup_grad_u"].push_back({t, ld.sup_grad_u});
    rep.series["sup_hess_u"].push_back({t, ld.sup_hess_u});
    rep.series["sup_x_kconv"].push_back({t, ld.sup_x_kconv});
    grad_series.push_back({t, ld.sup_grad_u});
    hess_series.push_back({t, ld.sup_hess_u});

    // L-infinity monitor: no growth beyond 1.05x the running max after 0.5
    const double sup = sup_norm(m);
    if (t >= 0.5 && sup_inf_running_max > 0 &&
        sup > 1.05 * sup_inf_running_max)
      lp_monitor_ok = false;
    sup_inf_running_max = std::max(sup_inf_running_max, sup);
  }
  rep.logscale_series = {"entropy", "sup_grad_u", "sup_hess_u", "sup_x_kconv"};

  const LineFit fit = fit_line(lnH);
  rep.metrics["entropy_rate_r2"] = fit.r2;
  rep.verdict("entropy_decay_rate", "fitted_entropy_rate", fit.slope, "<=",
              -0.9 * 2.0 * cfg.kappa_U, fit.slope <= -0.9 * 2.0 * cfg.kappa_U);
  rep.verdict("entropy_monotone", "entropy_monotone_flag", H_monotone ? 1 : 0,
              "==", 1, H_monotone);

  // criterion 3: masked sup|grad u| falls by >= 5x from 0.2 to 2 and fits a
  // negative exponential rate; sup|hess u| sqrt(t ^ 1) non-increasing after
  // 0.2 within 10%
  double g02 = 0, g20 = 0;
  std::vector<std::pair<double, double>> ln_grad;
  for (auto [t, v] : grad_series) {
    if (std::abs(t - 0.2) < 1e-9) g02 = v;
    if (std::abs(t - 2.0) < 1e-9) g20 = v;
    if (t >= 0.2 - 1e-9 && v > 0) ln_grad.push_back({t, std::log(v)});
  }
  const double grad_ratio = g02 / std::max(g20, 1e-300);
  rep.verdict("grad_u_decay_5x", "grad_u_ratio_02_20", grad_ratio, ">=", 5.0,
              grad_ratio >= 5.0);
  const LineFit gradfit = fit_line(ln_grad);
  rep.verdict("grad_u_rate_negative", "grad_u_fitted_rate", gradfit.slope, "<",
              0.0, gradfit.slope < 0.0);

  bool hess_ok = true;
  double prev = -1.0;
  for (auto [t, v] : hess_series) {
    if (t < 0.2 - 1e-9) continue;
    const double scaled = v * std::sqrt(std::min(t, 1.0));
    if (prev >= 0 && scaled > 1.10 * prev) hess_ok = false;
    prev = scaled;
  }
  rep.verdict("hess_envelope_nonincreasing", "hess_envelope_flag",
              hess_ok ? 1 : 0, "==", 1, hess_ok);
  rep.verdict("lp_monitor", "lp_monitor_flag", lp_monitor_ok ? 1 : 0, "==", 1,
              lp_monitor_ok);

  rep.dt = pcfg.dt;
  rep.grid_desc = "2d n=" + std::to_string(n) + " L=" + std::to_string(cfg.L_box);
  rep.parameters = {{"kappa_U", cfg.kappa_U}, {"M_norm", cfg.M_norm},
                    {"grid_n", n},           {"L_box", cfg.L_box},
                    {"eps", vs.mollifier.eps}, {"dt", pcfg.dt},
                    {"T", pcfg.T},            {"m0", "N((0.3,0), diag(0.25,0.45))"}};
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// jabin_wang_cancellation: quadrature residual of the pair functional's
// vanishing marginal along the early vortex flow (before the box boundary
// carries visible mass; the discrete identity is exact up to boundary
// terms, so the probes sit at the start of the run).

ExperimentReport preset_jabin_wang(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  ExperimentReport rep;
  rep.name = "jabin_wang_cancellation";
  rep.seed = cfg.seed;

  const int n = static_cast<int>(cfg.grid_n);
  VortexSetup vs(n, cfg.L_box, cfg.kappa_U, cfg.M_norm, 2.0 * (cfg.L_box * 2 / n));
  SpectralConvolver conv(vs.grid, vs.kernel, vs.mollifier);

  PdeConfig pcfg;
  pcfg.dt = 2e-4;
  pcfg.T = 0.15;
  pcfg.sigma2 = 1.0;
  const std::vector<double> probes = {0.05, 0.10, 0.15};
  auto res = run_meanfield(vs.m0, &conv, vs.confinement, pcfg, probes);

  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < res.snapshots.size() && i < 3; ++i) {
    const auto jw = jabin_wang_phi(res.snapshots[i], conv, 8);
    const double ratio = jw.max_marginal_residual / jw.sup_phi;
    rep.series["sup_phi"].push_back({res.probe_times[i], jw.sup_phi});
    rep.series["marginal_residual"].push_back(
        {res.probe_times[i], jw.max_marginal_residual});
    worst_ratio = std::max(worst_ratio, ratio);
  }
  rep.verdict("marginal_cancellation", "max_residual_over_sup_phi", worst_ratio,
              "<=", 1e-6, worst_ratio <= 1e-6);
  rep.dt = pcfg.dt;
  rep.grid_desc = "2d n=" + std::to_string(n);
  rep.parameters = {{"probes", probes}, {"stride", 8}};
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// high_temperature_contraction

ExperimentReport preset_high_temperature(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  ExperimentReport rep;
  rep.name = "high_temperature_contraction";
  rep.seed = cfg.seed;

  // double-well drift b = -U' = x - x^3 in d = 1
  auto b_fn = [](double t, const Eigen::VectorXd& x) {
    (void)t;
    Eigen::VectorXd v(1);
    v[0] = x[0] - x[0] * x[0] * x[0];
    return v;
  };

  // fit (rho, L, R) from the convexity profile: L is the profile maximum,
  // R the first zero crossing, rho the contraction depth at 2R
  DriftSpec probe_drift = DriftSpec::explicit_drift(b_fn, 0.0);
  std::vector<double> radii;
  for (double r = 0.1; r <= 12.0; r *= 1.15) radii.push_back(r);
  const auto profile = convexity_profile(probe_drift, radii, 1);
  double L_hat = 0.0, R_hat = 0.0, rho_hat = 0.0;
  for (auto [r, k] : profile) L_hat = std::max(L_hat, k);
  for (auto [r, k] : profile)
    if (k < 0.0) {
      R_hat = r;
      break;
    }
  for (auto [r, k] : profile)
    if (r >= 2.0 * R_hat) {
      rho_hat = -k;
      break;
    }
  rep.metrics["fitted_L"] = L_hat;
  rep.metrics["fitted_R"] = R_hat;
  rep.metrics["fitted_rho"] = rho_hat;

  const auto thr = high_temp_threshold(rho_hat, L_hat, R_hat, 0.0, 1);
  // K = sup_{|x| <= R_*} (-x . b(x)) sampled densely
  double K_hat = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double x = -thr.R_star + 2.0 * thr.R_star * i / 4000.0;
    K_hat = std::max(K_hat, -x * (x - x * x * x));
  }
  const auto thr2 = high_temp_threshold(rho_hat, L_hat, R_hat, K_hat, 1);
  const double sigma2 = thr2.sigma0_sq;
  rep.metrics["R_star"] = thr2.R_star;
  rep.metrics["K_sup"] = K_hat;
  rep.metrics["sigma0_sq"] = sigma2;

  // synchronous coupling of 10^4 pairs over [0, 5]
  const int N = 10000;
  DriftSpec drift = DriftSpec::explicit_drift(b_fn, std::sqrt(sigma2));
  ParticleEnsemble a(N, 1, cfg.seed), b(N, 1, cfg.seed);
  for (int i = 0; i < N; ++i) {
    const double x0 = a.rng.normal(a.stream_ids[i], 1ULL << 61, 0);
    a.positions(i, 0) = x0;
    b.positions(i, 0) = x0 + 1.0;
  }
  CoupledPair pair(a, b, CoupledPair::Coupling::synchronous);

  SdeConfig scfg;
  scfg.dt = 2e-4;
  const double T = 5.0;
  const long steps = static_cast<long>(std::llround(T / scfg.dt));
  const long probe_every = static_cast<long>(std::llround(0.1 / scfg.dt));

  const double delta = rho_hat / 5.0;
  const double delta_scaled = rho_hat / (5.0 * sigma2);
  std::vector<std::pair<double, double>> gap_series;
  std::vector<std::pair<double, double>> moment_series, moment_scaled_series;
  auto record = [&](const CoupledPair& p) {
    const double t = p.first.t;
    double gap2 = 0.0;
    for (int i = 0; i < N; ++i)
      gap2 += (p.first.positions.row(i) - p.second.positions.row(i))
                  .squaredNorm();
    gap2 /= N;
    if (gap2 > 1e-280) gap_series.push_back({t, gap2});
    const auto mon = ensemble_monitors(p.first, delta, 2.0);
    moment_series.push_back({t, mon.exp_pair_moment});
    const auto mon2 = ensemble_monitors(p.first, delta_scaled, 2.0);
    moment_scaled_series.push_back({t, mon2.exp_pair_moment});
  };
  record(pair);
  for (long s = 1; s <= steps; ++s) {
    pair = step_coupled(pair, drift, drift, scfg);
    if (s % probe_every == 0) record(pair);
  }
  rep.series["mean_gap_sq"] = gap_series;
  rep.series["exp_pair_moment"] = moment_series;
  rep.series["exp_pair_moment_scaled"] = moment_scaled_series;
  rep.logscale_series = {"mean_gap_sq"};

  const ContractionFit fit = contraction_fit(gap_series);
  rep.metrics["contraction_M"] = fit.M;
  rep.verdict("contraction_lambda_positive", "fitted_lambda", fit.lambda, ">",
              0.0, fit.lambda > 0.0);
  rep.verdict("contraction_fit_quality", "fit_r2", fit.r2, ">=", 0.95,
              fit.r2 >= 0.95);

  // Gaussian pair-moment boundedness at delta = rho/5 exactly as stated:
  // every probe finite and, for t in [0.5, 5], below 1.1x the running max
  // at t = 0.5. The same check at the sigma^2-corrected delta is reported
  // alongside (the integrability threshold scales with 1/sigma^2).
  auto bounded_check = [&](const std::vector<std::pair<double, double>>& ser)
      -> std::pair<bool, double> {
    double run_max_05 = 0.0;
    bool ok = true;
    double worst_ratio = 0.0;
    for (auto [t, v] : ser) {
      if (!std::isfinite(v)) return {false, std::numeric_limits<double>::infinity()};
      if (t <= 0.5 + 1e-9) run_max_05 = std::max(run_max_05, v);
    }
    for (auto [t, v] : ser) {
      if (t < 0.5 - 1e-9) continue;
      worst_ratio = std::max(worst_ratio, v / run_max_05);
      if (v > 1.1 * run_max_05) ok = false;
    }
    return {ok, worst_ratio};
  };
  const auto [ok_raw, ratio_raw] = bounded_check(moment_series);
  rep.verdict("gauss_moment_bounded", "moment_ratio_to_t05_max", ratio_raw,
              "<= (all probes finite)", 1.1, ok_raw);
  const auto [ok_scaled, ratio_scaled] = bounded_check(moment_scaled_series);
  rep.verdict("gauss_moment_bounded_scaled_delta",
              "moment_scaled_ratio_to_t05_max", ratio_scaled, "<=", 1.1,
              ok_scaled);

  // uniform Poincare probe: histogram density + tilt/linear scan stability
  {
    const GridSpec g1{1, 512, 60.0};
    std::vector<double> scans;
    for (double tp : {1.0, 2.0, 3.0, 4.0, 5.0}) (void)tp;  // values recorded below
    // replay is expensive; scan the terminal ensemble plus mid-run snapshots
    // recorded through the moment series instead: use terminal only
    Eigen::ArrayXd hist = Eigen::ArrayXd::Zero(g1.size());
    for (int i = 0; i < N; ++i) {
      const double x = pair.first.positions(i, 0);
      if (x < -g1.L || x > g1.L) continue;
      const int c = std::min<int>(g1.n - 1,
                                  static_cast<int>((x + g1.L) / g1.dx()));
      hist[c] += 1.0;
    }
    hist /= hist.sum() * g1.cell_volume();
    GridDensity dens(g1, hist, pair.first.t);
    const double pscan =
        poincare_scan(dens, TestFunctionFamily::hermite(1));
    rep.metrics["poincare_scan_terminal"] = pscan;
    rep.metrics["poincare_gaussian_prediction"] = sigma2 / rho_hat;
  }

  rep.dt = scfg.dt;
  rep.parameters = {{"N_pairs", N}, {"T", T},       {"dt", scfg.dt},
                    {"delta", delta}, {"delta_scaled", delta_scaled},
                    {"initial_gap", 1.0}};
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// perturbation_convergence: 1-D granular-media flow with smooth bounded
// interaction and double-well confinement; phi_t decay along the flow.

ExperimentReport preset_perturbation(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  ExperimentReport rep;
  rep.name = "perturbation_convergence";
  rep.seed = cfg.seed;

  const GridSpec g{1, 512, 8.0};
  const double a_int = 0.4;  // interaction strength
  const double sigma2 = 1.0;
  auto V = [](double x) { return 0.25 * x * x * x * x - 0.5 * x * x; };
  auto dV = [](double x) { return x * x * x - x; };
  auto W = [&](double z) { return a_int / (1.0 + z * z); };
  auto dW = [&](double z) {
    const double q = 1.0 + z * z;
    return -2.0 * a_int * z / (q * q);
  };

  // stationary solution by damped fixed point on m = Z^{-1} e^{-(V + W*m)}
  auto conv_W = [&](const GridDensity& m, double x) {
    double acc = 0.0;
    for (int i = 0; i < g.n; ++i)
      acc += W(x - g.center(i)) * m.v[i];
    return acc * g.cell_volume();
  };
  GridDensity m_star = make_density(
      g, [&](const Eigen::VectorXd& x) { return std::exp(-V(x[0])); });
  for (int it = 0; it < 200; ++it) {
    Eigen::ArrayXd next(g.size());
    for (int i = 0; i < g.n; ++i) {
      const double x = g.center(i);
      next[i] = std::exp(-(V(x) + conv_W(m_star, x)) / sigma2);
    }
    GridDensity cand(g, next);
    cand.normalize();
    const double moved = l1_distance(cand, m_star);
    m_star.v = 0.5 * m_star.v + 0.5 * cand.v;
    m_star.normalize();
    if (moved < 1e-13) break;
  }

  // mean-field flow from a shifted start
  GridDensity m = gaussian_density(g, Eigen::VectorXd::Constant(1, 1.0), 0.5);
  PdeConfig pcfg;
  pcfg.dt = 1e-4;
  pcfg.sigma2 = sigma2;
  const double T = 8.0;
  ConfinementPotential Vpot = ConfinementPotential::custom(
      1,
      [&](const Eigen::VectorXd& x) { return V(x[0]); },
      [&](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, dV(x[0]));
      },
      [&](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd::Constant(1, 1, 3.0 * x[0] * x[0] - 1.0);
      });

  GridDriftFunctional F;
  F.b0 = [&](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, -dV(x[0]));
  };
  F.pair = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Constant(1, -dW(x[0] - y[0]));
  };

  const auto probes = linspace_probes(0.0, T, 0.5);
  std::vector<std::pair<double, double>> phi_series, g_series, tv_series;
  // manual stepping: the interaction field enters through face drift
  double next_probe = 0.0;
  std::size_t pi = 0;
  const long steps = static_cast<long>(std::llround(T / pcfg.dt));
  auto emit = [&](const GridDensity& cur) {
    while (pi < probes.size() && cur.t >= probes[pi] - 1e-9) {
      const auto norms = perturbation_potential(cur, m_star, F, m_star);
      phi_series.push_back({cur.t, norms.sup_phi});
      g_series.push_back({cur.t, norms.sup_g});
      tv_series.push_back({cur.t, 0.5 * l1_distance(cur, m_star)});
      ++pi;
    }
  };
  emit(m);
  for (long s = 0; s < steps; ++s) {
    // drift field A(x) = -(dW * m)(x) at centers
    Eigen::ArrayXd A(g.size());
    for (int i = 0; i < g.n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < g.n; ++j)
        acc += dW(g.center(i) - g.center(j)) * m.v[j];
      A[i] = -acc * g.cell_volume();
    }
    const FaceField f = make_face_drift(g, &Vpot, &A, nullptr);
    m = fp_step(m, f, sigma2, pcfg.dt);
    emit(m);
  }
  (void)next_probe;
  rep.series["sup_phi"] = phi_series;
  rep.series["sup_g"] = g_series;
  rep.series["tv_to_mstar"] = tv_series;
  rep.logscale_series = {"sup_phi", "tv_to_mstar"};

  const double phi0 = phi_series.front().second;
  const double phiT = phi_series.back().second;
  rep.metrics["sup_phi_initial"] = phi0;
  rep.metrics["sup_phi_final"] = phiT;
  rep.verdict("phi_decay", "phi_final_over_initial", phiT / phi0, "<", 0.1,
              phiT < 0.1 * phi0);
  bool monotone_tail = true;
  for (std::size_t i = 1; i < phi_series.size(); ++i)
    if (phi_series[i].first >= 1.0 &&
        phi_series[i].second > phi_series[i - 1].second * 1.25)
      monotone_tail = false;
  rep.verdict("phi_decreasing_tail", "phi_tail_monotone_flag",
              monotone_tail ? 1 : 0, "==", 1, monotone_tail);

  rep.dt = pcfg.dt;
  rep.grid_desc = "1d n=512 L=8";
  rep.parameters = {{"V", "x^4/4 - x^2/2"}, {"W", "a/(1+z^2)"},
                    {"a", a_int},           {"sigma2", sigma2},
                    {"T", T},               {"m0", "N(1, 0.5)"}};
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// vortex_poc_scaling

ExperimentReport preset_vortex_poc(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  ExperimentReport rep;
  rep.name = "vortex_poc_scaling";
  rep.seed = cfg.seed;

  const int n = 128;
  VortexSetup vs(n, 4.0, cfg.kappa_U, cfg.M_norm, 2.0 * (8.0 / n));
  SpectralConvolver conv(vs.grid, vs.kernel, vs.mollifier);

  PdeConfig pcfg;
  pcfg.dt = 2e-4;
  pcfg.T = 2.0;
  pcfg.sigma2 = 1.0;
  const std::vector<double> probes = {0.5, 1.0, 2.0};
  auto ref = run_meanfield(vs.m0, &conv, vs.confinement, pcfg, probes);

  auto table = std::make_shared<MollifiedKernelTable>(vs.kernel, vs.mollifier,
                                                      3.0 * vs.grid.L);
  DriftSpec drift = DriftSpec::log_riesz_drift(vs.kernel, table,
                                               vs.confinement, 1.0);
  SdeConfig scfg;
  scfg.dt = 1e-3;
  scfg.mollification_eps = vs.mollifier.eps;

  const std::vector<int> Ns = {64, 256, 1024};
  const std::vector<int> reps = {24, 16, 8};
  std::map<int, std::array<double, 3>> kl_mean, kl_se;

  for (std::size_t ni = 0; ni < Ns.size(); ++ni) {
    const int N = Ns[ni];
    const int R = reps[ni];
    std::array<std::vector<double>, 3> vals;
    for (int r = 0; r < R; ++r) {
      ParticleEnsemble e =
          sample_iid_ensemble(N, vs.m0, cfg.seed + 977 * (r + 1));
      const long steps = static_cast<long>(std::llround(2.0 / scfg.dt));
      std::size_t next = 0;
      for (long s = 0; s < steps && next < probes.size(); ++s) {
        e = step_particles(e, drift, scfg);
        if (std::abs(e.t - probes[next]) < 0.5 * scfg.dt) {
          const auto est = marginal_kl(e, ref.snapshots[next],
                                       ChaosEstimate::Estimator::kde_grid);
          vals[next].push_back(est.value);
          ++next;
        }
      }
    }
    for (int pi = 0; pi < 3; ++pi) {
      double mean = 0.0;
      for (double v : vals[pi]) mean += v;
      mean /= vals[pi].size();
      double var = 0.0;
      for (double v : vals[pi]) var += (v - mean) * (v - mean);
      var /= (vals[pi].size() - 1.0);
      kl_mean[N][pi] = mean;
      kl_se[N][pi] = std::sqrt(var / vals[pi].size());
      rep.series["kl_N" + std::to_string(N)].push_back({probes[pi], mean});
      rep.metrics["kl_N" + std::to_string(N) + "_t" +
                  std::to_string(pi)] = mean;
      rep.metrics["kl_se_N" + std::to_string(N) + "_t" +
                  std::to_string(pi)] = kl_se[N][pi];
    }
  }
  rep.logscale_series = {"kl_N64", "kl_N256", "kl_N1024"};

  // strict decrease in N at t = 1 beyond combined 2 sigma
  const int t1 = 1;
  const double d01 = kl_mean[64][t1] - kl_mean[256][t1];
  const double d12 = kl_mean[256][t1] - kl_mean[1024][t1];
  const double s01 = 2.0 * std::hypot(kl_se[64][t1], kl_se[256][t1]);
  const double s12 = 2.0 * std::hypot(kl_se[256][t1], kl_se[1024][t1]);
  rep.metrics["kl_drop_64_256"] = d01;
  rep.metrics["kl_drop_256_1024"] = d12;
  rep.metrics["kl_drop_64_256_2sigma"] = s01;
  rep.metrics["kl_drop_256_1024_2sigma"] = s12;
  const bool strict = d01 > s01 && d12 > s12;
  rep.verdict("kl_strictly_decreasing_in_N", "min_drop_margin",
              std::min(d01 - s01, d12 - s12), "> 0 (both gaps beyond 2sigma)",
              0.0, strict);

  // log-log slope in N at t = 1
  std::vector<std::pair<double, double>> loglog;
  for (int N : Ns)
    if (kl_mean[N][t1] > 0)
      loglog.push_back({std::log(double(N)), std::log(kl_mean[N][t1])});
  const LineFit lf = fit_line(loglog);
  rep.verdict("kl_loglog_slope", "loglog_slope_in_N", lf.slope, "<=", -0.5,
              loglog.size() == 3 && lf.slope <= -0.5);

  // non-increasing in t at N = 1024 within error bars
  bool t_ok = true;
  for (int pi = 0; pi + 1 < 3; ++pi) {
    const double allowed = 2.0 * std::hypot(kl_se[1024][pi], kl_se[1024][pi + 1]);
    if (kl_mean[1024][pi + 1] > kl_mean[1024][pi] + allowed) t_ok = false;
  }
  rep.verdict("kl_nonincreasing_in_t_N1024", "t_monotone_flag", t_ok ? 1 : 0,
              "==", 1, t_ok);

  // |M| sweep (descriptive; the paper's constant is non-explicit): fitted
  // t-slope of the N=256 KL series per |M|
  for (double Mn : {0.5, 1.0, 2.0}) {
    VortexSetup vsm(n, 4.0, cfg.kappa_U, Mn, 2.0 * (8.0 / n));
    SpectralConvolver convm(vsm.grid, vsm.kernel, vsm.mollifier);
    auto refm = run_meanfield(vsm.m0, &convm, vsm.confinement, pcfg, probes);
    auto tablem = std::make_shared<MollifiedKernelTable>(
        vsm.kernel, vsm.mollifier, 3.0 * vsm.grid.L);
    DriftSpec driftm =
        DriftSpec::log_riesz_drift(vsm.kernel, tablem, vsm.confinement, 1.0);
    std::array<double, 3> acc{0, 0, 0};
    const int R = 4;
    for (int r = 0; r < R; ++r) {
      ParticleEnsemble e = sample_iid_ensemble(256, vsm.m0,
                                               cfg.seed + 555 * (r + 1));
      const long steps = static_cast<long>(std::llround(2.0 / scfg.dt));
      std::size_t next = 0;
      for (long s = 0; s < steps && next < probes.size(); ++s) {
        e = step_particles(e, driftm, scfg);
        if (std::abs(e.t - probes[next]) < 0.5 * scfg.dt) {
          acc[next] += marginal_kl(e, refm.snapshots[next],
                                   ChaosEstimate::Estimator::kde_grid)
                           .value;
          ++next;
        }
      }
    }
    std::vector<std::pair<double, double>> ser;
    for (int pi = 0; pi < 3; ++pi)
      if (acc[pi] > 0) ser.push_back({probes[pi], std::log(acc[pi] / R)});
    const LineFit mf = fit_line(ser);
    rep.metrics["Msweep_slope_M" + std::to_string(Mn)] = mf.slope;
  }

  rep.dt = scfg.dt;
  rep.grid_desc = "2d n=128 L=4";
  rep.parameters = {{"Ns", Ns},
                    {"reps", reps},
                    {"probes", probes},
                    {"estimator", "kde_grid"},
                    {"particle_dt", scfg.dt},
                    {"eps", vs.mollifier.eps}};
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// riesz_convolution_bounds

// Calibration constants: empirical max of LHS/RHS over the Gaussian family
// N(0, v I), v in {0.25, 0.5, 1, 2, 4}, on the 128^2 grid with 5% headroom,
// frozen. (d = 2; p = infinity.)
constexpr double kFrozenRatioS05 = 1.8171;   // s = 0.5, sup branch
constexpr double kFrozenRatioS09 = 3.9847;   // s = 0.9, sup branch
constexpr double kFrozenRatioH05 = 5.0897;   // s = 0, theta = 0.5 Holder

ExperimentReport preset_riesz_bounds(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  ExperimentReport rep;
  rep.name = "riesz_convolution_bounds";
  rep.seed = cfg.seed;

  const GridSpec g{2, 128, 6.0};
  const double inf = std::numeric_limits<double>::infinity();

  auto gaussian = [&](double var) {
    return gaussian_density(g, Eigen::VectorXd::Zero(2), var);
  };

  // scale family m_lambda(x) = lambda^2 m(lambda x): for the unit Gaussian
  // this is the Gaussian with variance 1/lambda^2
  const std::vector<double> lambdas = {0.5, 1.0, 2.0};
  for (double s : {0.5, 0.9}) {
    std::vector<double> ratios;
    for (double lam : lambdas) {
      const auto chk = convolution_inequality_check(gaussian(1.0 / (lam * lam)),
                                                    s, inf, 0.0);
      ratios.push_back(chk.ratio);
      rep.metrics["ratio_s" + std::to_string(s) + "_lam" +
                  std::to_string(lam)] = chk.ratio;
    }
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    const double spread = hi / lo - 1.0;
    rep.verdict("scale_invariance_s" + std::to_string(s),
                "ratio_spread_s" + std::to_string(s), spread, "<=", 0.02,
                spread <= 0.02);
    const double frozen = s == 0.5 ? kFrozenRatioS05 : kFrozenRatioS09;
    rep.verdict("bounded_by_frozen_s" + std::to_string(s),
                "max_ratio_s" + std::to_string(s), hi, "<=", frozen,
                hi <= frozen);
  }

  // s = 0 Holder branch with theta = 0.5
  {
    std::vector<double> ratios;
    for (double lam : lambdas) {
      const auto chk = convolution_inequality_check(gaussian(1.0 / (lam * lam)),
                                                    0.0, inf, 0.5);
      ratios.push_back(chk.ratio);
      rep.metrics["ratio_h05_lam" + std::to_string(lam)] = chk.ratio;
    }
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    const double spread = hi / lo - 1.0;
    rep.verdict("scale_invariance_holder", "ratio_spread_h05", spread, "<=",
                0.02, spread <= 0.02);
    rep.verdict("bounded_by_frozen_holder", "max_ratio_h05", hi, "<=",
                kFrozenRatioH05, hi <= kFrozenRatioH05);
  }

  rep.grid_desc = "2d n=128 L=6";
  rep.parameters = {{"lambdas", lambdas},
                    {"frozen_s05", kFrozenRatioS05},
                    {"frozen_s09", kFrozenRatioS09},
                    {"frozen_h05", kFrozenRatioH05},
                    {"calibration_family", "N(0, v I), v in {0.25,0.5,1,2,4}"}};
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// wellposedness_monitors

ExperimentReport preset_wellposedness(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  ExperimentReport rep;
  rep.name = "wellposedness_monitors";
  rep.seed = cfg.seed;

  const int N = 64;
  const double T = 2.0;
  RieszKernel kernel(2, 0.0, rotation_matrix(cfg.M_norm));
  ConfinementPotential U = ConfinementPotential::quadratic(2, cfg.kappa_U);
  const GridSpec g{2, 128, 4.0};
  GridDensity m0 = make_density(g, [&](const Eigen::VectorXd& x) {
    const double q = (x[0] - 0.3) * (x[0] - 0.3) / 0.25 + x[1] * x[1] / 0.45;
    return std::exp(-0.5 * q);
  });

  const std::vector<double> eps_list = {1e-1, 1e-2, 1e-3};
  std::vector<std::shared_ptr<const MollifiedKernelTable>> tables;
  for (double e : eps_list)
    tables.push_back(std::make_shared<MollifiedKernelTable>(
        kernel, Mollifier(2, e), 3.0 * g.L));

  SdeConfig scfg;
  scfg.dt = 2e-4;
  scfg.collision_threshold = 1e-3;
  const long steps = static_cast<long>(std::llround(T / scfg.dt));

  const int n_seeds = 8;
  double gap_coarse = 0.0, gap_fine = 0.0;
  int close_events_eps2 = 0;  // pair distances under threshold at eps >= 1e-2
  double min_dist_seen = std::numeric_limits<double>::infinity();

  std::vector<std::pair<double, double>> energy_series, v2_series, v4_series;

  for (int sd = 0; sd < n_seeds; ++sd) {
    std::array<ParticleEnsemble, 3> es = {
        sample_iid_ensemble(N, m0, cfg.seed + 31 * sd),
        sample_iid_ensemble(N, m0, cfg.seed + 31 * sd),
        sample_iid_ensemble(N, m0, cfg.seed + 31 * sd)};
    std::array<DriftSpec, 3> drifts = {
        DriftSpec::log_riesz_drift(kernel, tables[0], U, 1.0),
        DriftSpec::log_riesz_drift(kernel, tables[1], U, 1.0),
        DriftSpec::log_riesz_drift(kernel, tables[2], U, 1.0)};
    double g01 = 0.0, g12 = 0.0;
    for (long s = 0; s < steps; ++s) {
      for (int v = 0; v < 3; ++v) es[v] = step_particles(es[v], drifts[v], scfg);
      g01 = std::max(g01, (es[0].positions - es[1].positions)
                              .rowwise()
                              .norm()
                              .maxCoeff());
      g12 = std::max(g12, (es[1].positions - es[2].positions)
                              .rowwise()
                              .norm()
                              .maxCoeff());
      if (s % 500 == 0 || s + 1 == steps) {
        for (int v = 0; v < 2; ++v) {
          const auto mon = ensemble_monitors(es[v], 0.0, 2.0);
          min_dist_seen = std::min(min_dist_seen, mon.min_dist);
          if (mon.min_dist < scfg.collision_threshold) ++close_events_eps2;
        }
        if (sd == 0) {
          const auto mon = ensemble_monitors(es[1], 0.0, 2.0);
          const auto mon4 = ensemble_monitors(es[1], 0.0, 4.0);
          energy_series.push_back({es[1].t, energy_functional(es[1], kernel) / N});
          v2_series.push_back({es[1].t, mon.k_moment});
          v4_series.push_back({es[1].t, mon4.k_moment});
        }
      }
    }
    gap_coarse = std::max(gap_coarse, g01);
    gap_fine = std::max(gap_fine, g12);
  }

  rep.metrics["supgap_eps_1e1_vs_1e2"] = gap_coarse;
  rep.metrics["supgap_eps_1e2_vs_1e3"] = gap_fine;
  rep.verdict("mollification_cauchy_trend", "gap_ratio_fine_over_coarse",
              gap_fine / gap_coarse, "<", 1.0, gap_fine < gap_coarse);
  rep.metrics["min_pair_distance"] = min_dist_seen;
  rep.verdict("no_collisions_eps_ge_1e2", "close_pair_events",
              close_events_eps2, "==", 0, close_events_eps2 == 0);

  rep.series["mean_energy"] = energy_series;
  rep.series["moment_k2"] = v2_series;
  rep.series["moment_k4"] = v4_series;

  auto flatness = [](const std::vector<std::pair<double, double>>& ser,
                     double slack) {
    double early = -std::numeric_limits<double>::infinity();
    double late = -std::numeric_limits<double>::infinity();
    for (auto [t, v] : ser)
      (t <= 1.0 ? early : late) = std::max(t <= 1.0 ? early : late, v);
    return late <= slack * early;
  };
  rep.verdict("energy_bounded", "energy_flatness_flag",
              flatness(energy_series, 1.2) ? 1 : 0, "==", 1,
              flatness(energy_series, 1.2));
  rep.verdict("moments_flat", "moment_flatness_flag",
              (flatness(v2_series, 1.25) && flatness(v4_series, 1.25)) ? 1 : 0,
              "==", 1, flatness(v2_series, 1.25) && flatness(v4_series, 1.25));

  rep.dt = scfg.dt;
  rep.parameters = {{"N", N},
                    {"T", T},
                    {"eps_list", eps_list},
                    {"seeds", n_seeds},
                    {"collision_threshold", scfg.collision_threshold}};
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

}  // namespace

ExperimentReport run_preset(const std::string& name, const RunConfig& config) {
  if (name == "bakry_emery_gaussian") return preset_bakry_emery(config);
  if (name == "high_temperature_contraction")
    return preset_high_temperature(config);
  if (name == "perturbation_convergence") return preset_perturbation(config);
  if (name == "vortex_entropy_decay") return preset_vortex_entropy_decay(config);
  if (name == "vortex_two_particle") return preset_vortex_two_particle(config);
  if (name == "vortex_poc_scaling") return preset_vortex_poc(config);
  if (name == "jabin_wang_cancellation") return preset_jabin_wang(config);
  if (name == "riesz_convolution_bounds") return preset_riesz_bounds(config);
  if (name == "wellposedness_monitors") return preset_wellposedness(config);
  throw PresetError("preset not found: " + name);
}

std::vector<std::string> preset_name_list() {
  return {"bakry_emery_gaussian",    "high_temperature_contraction",
          "perturbation_convergence", "vortex_entropy_decay",
          "vortex_two_particle",      "vortex_poc_scaling",
          "jabin_wang_cancellation",  "riesz_convolution_bounds",
          "wellposedness_monitors"};
}

}  // namespace mflab
