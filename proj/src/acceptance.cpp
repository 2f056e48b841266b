#include "mflab/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mflab/checkpoint.hpp"
#include "mflab/diagnostics.hpp"
#include "mflab/estimators.hpp"
#include "mflab/experiments.hpp"
#include "mflab/fokker_planck.hpp"
#include "mflab/records.hpp"

namespace mflab {

namespace {

using Clock = std::chrono::steady_clock;

struct Runner {
  std::vector<CriterionResult>& out;
  std::ostream& log;

  void record(int number, const std::string& name, bool pass,
              const std::string& detail, double runtime) {
    out.push_back({number, name, pass, detail, runtime});
    log << "criterion " << (number < 10 ? "0" : "") << number << " ["
        << (pass ? "PASS" : "FAIL") << "] " << name << " -- " << detail
        << " (" << static_cast<int>(runtime) << " s)\n";
    log.flush();
  }
};

std::string verdict_summary(const ExperimentReport& rep,
                            const std::vector<std::string>& names) {
  std::ostringstream ss;
  ss.precision(6);
  bool first = true;
  for (const auto& n : names) {
    const auto it = rep.verdicts.find(n);
    if (it == rep.verdicts.end()) continue;
    if (!first) ss << ", ";
    first = false;
    ss << n << "=" << (it->second.pass ? "ok" : "FAIL") << " ("
       << it->second.value << " " << it->second.relation << " "
       << it->second.tolerance << ")";
  }
  return ss.str();
}

bool verdicts_pass(const ExperimentReport& rep,
                   const std::vector<std::string>& names) {
  for (const auto& n : names) {
    const auto it = rep.verdicts.find(n);
    if (it == rep.verdicts.end() || !it->second.pass) return false;
  }
  return true;
}

// criterion 10: Gaussian closed-form estimator suite
bool criterion_estimator_sanity(std::string& detail, std::uint64_t seed) {
  std::ostringstream ss;
  ss.precision(6);
  bool ok = true;
  auto check = [&](const std::string& name, double value, double expected,
                   double tol) {
    const bool pass = std::abs(value - expected) <= tol;
    ok = ok && pass;
    ss << name << "=" << value << (pass ? " ok" : " FAIL") << "; ";
  };

  const GridSpec g1{1, 512, 10.0};
  const GridDensity mu = gaussian_density(g1, Eigen::VectorXd::Zero(1), 1.0);
  const GridDensity nu_shift =
      gaussian_density(g1, Eigen::VectorXd::Constant(1, 1.0), 1.0);
  const GridDensity nu_wide = gaussian_density(g1, Eigen::VectorXd::Zero(1), 2.0);
  const GridDensity mu_v = gaussian_density(g1, Eigen::VectorXd::Zero(1), 1.5);

  check("kl_shift", relative_entropy(nu_shift, mu), 0.5, 1e-4);
  check("kl_wide", relative_entropy(nu_wide, mu),
        0.5 * (2.0 - 1.0 - std::log(2.0)), 1e-4);
  check("kl_self", relative_entropy(mu, mu), 0.0, 1e-12);
  check("fisher_shift", fisher_information(nu_shift, mu), 1.0, 1e-3);
  const TestFunctionFamily tilts =
      TestFunctionFamily::tilts({-0.4, -0.2, 0.2, 0.4});
  check("lsi_std", lsi_scan(mu, tilts), 0.5, 1e-3);
  check("lsi_v", lsi_scan(mu_v, tilts), 0.75, 1e-3);
  check("poincare_std", poincare_scan(mu, TestFunctionFamily::hermite(1)), 1.0,
        1e-3);
  check("poincare_v", poincare_scan(mu_v, TestFunctionFamily::hermite(1)), 1.5,
        1e-3);

  // Gaussian saturation H = (1/2) I for the shift pair
  const double H = relative_entropy(nu_shift, mu);
  const double I = fisher_information(nu_shift, mu);
  check("saturation", H - 0.5 * I, 0.0, 1e-3);

  // marginal KL on Gaussian clouds in d = 2
  const GridSpec g2{2, 128, 6.0};
  const GridDensity ref2 = gaussian_density(g2, Eigen::VectorXd::Zero(2), 1.0);
  const GridDensity src2 =
      gaussian_density(g2, Eigen::VectorXd::Constant(2, 1.0), 1.0);
  ParticleEnsemble cloud = sample_iid_ensemble(10000, src2, seed);
  const auto knn = marginal_kl(cloud, ref2, ChaosEstimate::Estimator::knn);
  const auto kde = marginal_kl(cloud, ref2, ChaosEstimate::Estimator::kde_grid);
  // KL(N((1,1), I) | N(0, I)) = |shift|^2 / 2 = 1
  const bool knn_ok = std::abs(knn.value - 1.0) <= 0.1;
  const bool agree = std::abs(knn.value - kde.value) <=
                     2.0 * std::hypot(knn.stderr_, kde.stderr_) + 0.05;
  ok = ok && knn_ok && agree;
  ss << "knn_gauss=" << knn.value << (knn_ok ? " ok" : " FAIL") << "; "
     << "kde_gauss=" << kde.value << (agree ? " ok" : " agree-FAIL");
  detail = ss.str();
  return ok;
}

// criterion 11: determinism across worker counts plus exact round-trips
bool criterion_infrastructure(std::string& detail, std::uint64_t seed) {
  std::ostringstream ss;
  bool ok = true;

  // worker-count determinism on a mollified vortex run
  Eigen::MatrixXd J(2, 2);
  J << 0, 1, -1, 0;
  RieszKernel kernel(2, 0.0, J);
  Mollifier eta(2, 0.1);
  auto table = std::make_shared<MollifiedKernelTable>(kernel, eta, 10.0, 1024);
  ConfinementPotential U = ConfinementPotential::quadratic(2, 1.0);
  DriftSpec drift = DriftSpec::log_riesz_drift(kernel, table, U, 1.0);
  SdeConfig cfg;
  cfg.dt = 1e-3;
  cfg.mollification_eps = 0.1;

  auto run_with = [&](int workers) {
#ifdef _OPENMP
    omp_set_num_threads(workers);
#else
    (void)workers;
#endif
    const GridSpec g{2, 64, 4.0};
    GridDensity m0 = gaussian_density(g, Eigen::VectorXd::Zero(2), 0.5);
    ParticleEnsemble e = sample_iid_ensemble(33, m0, seed);
    for (int s = 0; s < 50; ++s) e = step_particles(e, drift, cfg);
    return e.positions;
  };
  const Eigen::MatrixXd p1 = run_with(1);
  const Eigen::MatrixXd p2 = run_with(2);
  const Eigen::MatrixXd p8 = run_with(8);
#ifdef _OPENMP
  omp_set_num_threads(omp_get_num_procs());
#endif
  const bool det = (p1.array() == p2.array()).all() &&
                   (p1.array() == p8.array()).all();
  ok = ok && det;
  ss << "worker_determinism=" << (det ? "ok" : "FAIL") << "; ";

  // config round-trip
  bool cfg_ok = true;
  for (int k = 0; k < 20; ++k) {
    RunConfig c;
    c.scenario = "vortex_entropy_decay";
    c.N = 1 + (k * 37) % 5000;
    c.dt = std::ldexp(1.0, -(k % 20) - 1) * (1 + 0.001 * k);
    c.T = 0.5 + 0.25 * k;
    c.seed = 0x9e3779b97f4a7c15ULL * (k + 1);
    c.eps = k % 3 == 0 ? 0.0 : 0.1 / (k + 1);
    c.emit_plots = k % 2 == 0;
    const RunConfig back = parse_config_text(serialize_config(c));
    if (!(back == c)) cfg_ok = false;
  }
  ok = ok && cfg_ok;
  ss << "config_roundtrip=" << (cfg_ok ? "ok" : "FAIL") << "; ";

  // checkpoint round-trip (ensemble and grid), bit-exact
  bool ck_ok = true;
  {
    ParticleEnsemble e(17, 3, seed);
    for (int i = 0; i < e.N; ++i)
      for (int k = 0; k < 3; ++k)
        e.positions(i, k) = std::sin(1000.0 * i + k) * 1e3;
    e.t = 0.125;
    e.step = 99;
    const auto bytes = encode_checkpoint(e);
    const auto dec = decode_checkpoint(bytes);
    ck_ok = ck_ok && dec.kind == 1 &&
            (dec.ensemble.positions.array() == e.positions.array()).all() &&
            dec.ensemble.t == e.t && dec.ensemble.step == e.step &&
            dec.ensemble.rng.seed == e.rng.seed;
    const auto bytes2 = encode_checkpoint(dec.ensemble);
    ck_ok = ck_ok && bytes2 == bytes;

    const GridSpec g{2, 32, 3.0};
    GridDensity m = gaussian_density(g, Eigen::VectorXd::Zero(2), 0.7);
    m.t = 2.5;
    const auto gb = encode_checkpoint(m);
    const auto gd = decode_checkpoint(gb);
    ck_ok = ck_ok && gd.kind == 2 && (gd.density.v == m.v).all() &&
            gd.density.t == m.t;
    // corrupted magic must be rejected
    auto bad = gb;
    bad[0] = 'X';
    try {
      decode_checkpoint(bad);
      ck_ok = false;
    } catch (const CheckpointError&) {
    }
  }
  ok = ok && ck_ok;
  ss << "checkpoint_roundtrip=" << (ck_ok ? "ok" : "FAIL") << "; ";

  // CSV double round-trip
  bool csv_ok = true;
  const double specials[] = {0.1,
                             1.0 / 3.0,
                             -2.5e-300,
                             1.7976931348623157e308,
                             4.9406564584124654e-324,
                             -0.0,
                             123456789.123456789,
                             std::exp(1.0)};
  for (double v : specials) {
    const double back = parse_double(format_double(v));
    if (std::memcmp(&back, &v, 8) != 0) csv_ok = false;
  }
  ok = ok && csv_ok;
  ss << "csv_roundtrip=" << (csv_ok ? "ok" : "FAIL");

  detail = ss.str();
  return ok;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(std::uint64_t seed,
                                            std::ostream& log) {
  std::vector<CriterionResult> results;
  Runner r{results, log};
  RunConfig cfg;
  cfg.scenario = "acceptance";
  cfg.seed = seed;

  {
    const auto t0 = Clock::now();
    const auto rep = run_experiment("bakry_emery_gaussian", cfg);
    const std::vector<std::string> v = {"formula_exactness", "grid_scan_matches"};
    r.record(1, "bakry_emery_exactness", verdicts_pass(rep, v),
             verdict_summary(rep, v),
             std::chrono::duration<double>(Clock::now() - t0).count());
  }
  {
    const auto t0 = Clock::now();
    const auto rep = run_experiment("vortex_entropy_decay", cfg);
    const double rt = std::chrono::duration<double>(Clock::now() - t0).count();
    const std::vector<std::string> v2 = {"entropy_decay_rate",
                                         "entropy_monotone"};
    r.record(2, "vortex_entropy_decay", verdicts_pass(rep, v2),
             verdict_summary(rep, v2), rt);
    const std::vector<std::string> v3 = {"grad_u_decay_5x",
                                         "grad_u_rate_negative",
                                         "hess_envelope_nonincreasing"};
    r.record(3, "log_density_bounds", verdicts_pass(rep, v3),
             verdict_summary(rep, v3), 0.0);
  }
  {
    const auto t0 = Clock::now();
    const auto rep = run_experiment("vortex_two_particle", cfg);
    const std::vector<std::string> v = {"radius_decay_oracle"};
    r.record(4, "two_vortex_oracle", verdicts_pass(rep, v),
             verdict_summary(rep, v),
             std::chrono::duration<double>(Clock::now() - t0).count());
  }
  {
    const auto t0 = Clock::now();
    const auto rep = run_experiment("high_temperature_contraction", cfg);
    const std::vector<std::string> v = {"contraction_lambda_positive",
                                        "contraction_fit_quality",
                                        "gauss_moment_bounded"};
    r.record(5, "high_temperature_contraction", verdicts_pass(rep, v),
             verdict_summary(rep, v),
             std::chrono::duration<double>(Clock::now() - t0).count());
  }
  {
    const auto t0 = Clock::now();
    const auto rep = run_experiment("vortex_poc_scaling", cfg);
    const std::vector<std::string> v = {"kl_strictly_decreasing_in_N",
                                        "kl_loglog_slope",
                                        "kl_nonincreasing_in_t_N1024"};
    r.record(6, "poc_monotonicity_and_decay", verdicts_pass(rep, v),
             verdict_summary(rep, v),
             std::chrono::duration<double>(Clock::now() - t0).count());
  }
  {
    const auto t0 = Clock::now();
    const auto rep = run_experiment("jabin_wang_cancellation", cfg);
    const std::vector<std::string> v = {"marginal_cancellation"};
    r.record(7, "jabin_wang_cancellation", verdicts_pass(rep, v),
             verdict_summary(rep, v),
             std::chrono::duration<double>(Clock::now() - t0).count());
  }
  {
    const auto t0 = Clock::now();
    const auto rep = run_experiment("riesz_convolution_bounds", cfg);
    const std::vector<std::string> v = {
        "scale_invariance_s0.500000",   "bounded_by_frozen_s0.500000",
        "scale_invariance_s0.900000",   "bounded_by_frozen_s0.900000",
        "scale_invariance_holder",      "bounded_by_frozen_holder"};
    r.record(8, "riesz_convolution_bounds", verdicts_pass(rep, v),
             verdict_summary(rep, v),
             std::chrono::duration<double>(Clock::now() - t0).count());
  }
  {
    const auto t0 = Clock::now();
    const auto rep = run_experiment("wellposedness_monitors", cfg);
    const std::vector<std::string> v = {"mollification_cauchy_trend",
                                        "no_collisions_eps_ge_1e2"};
    r.record(9, "wellposedness_monitors", verdicts_pass(rep, v),
             verdict_summary(rep, v),
             std::chrono::duration<double>(Clock::now() - t0).count());
  }
  {
    const auto t0 = Clock::now();
    std::string detail;
    const bool ok = criterion_estimator_sanity(detail, seed);
    r.record(10, "estimator_sanity", ok, detail,
             std::chrono::duration<double>(Clock::now() - t0).count());
  }
  {
    const auto t0 = Clock::now();
    std::string detail;
    const bool ok = criterion_infrastructure(detail, seed);
    r.record(11, "infrastructure", ok, detail,
             std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return results;
}

}  // namespace mflab
