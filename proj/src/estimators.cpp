#include "mflab/estimators.hpp"

#include <cmath>
#include <limits>

namespace mflab {

namespace {
constexpr double kEuler = 0.57721566490153286;
constexpr double kPi = 3.141592653589793238462643383;

double unit_ball_volume(int d) {
  return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

// bootstrap standard error of the mean of xi over 32 resamples
double bootstrap_stderr(const std::vector<double>& xi, std::uint64_t seed) {
  const int B = 32;
  const int n = static_cast<int>(xi.size());
  const CounterRng rng{seed};
  double mean_of_means = 0.0, msq = 0.0;
  for (int b = 0; b < B; ++b) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::uint64_t r = rng.bits(b, i, 0) % n;
      acc += xi[r];
    }
    acc /= n;
    mean_of_means += acc;
    msq += acc * acc;
  }
  mean_of_means /= B;
  return std::sqrt(std::max(0.0, msq / B - mean_of_means * mean_of_means) *
                   B / (B - 1.0));
}
}  // namespace

ParticleEnsemble sample_iid_ensemble(int N, const GridDensity& m0,
                                     std::uint64_t seed) {
  ParticleEnsemble e(N, m0.spec.d, seed);
  Eigen::VectorXd u(m0.spec.d);
  const std::uint64_t init_step = 1ULL << 62;
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < m0.spec.d; ++k)
      u[k] = e.rng.uniform(e.stream_ids[i], init_step, k);
    e.positions.row(i) = sample_inverse_cdf(m0, u).transpose();
  }
  return e;
}

ChaosEstimate marginal_kl(const ParticleEnsemble& ensemble,
                          const GridDensity& reference,
                          ChaosEstimate::Estimator estimator, int k) {
  if (ensemble.N < 50)
    throw std::invalid_argument("marginal_kl: need at least 50 particles");
  if (k != 1 && k != 2)
    throw std::invalid_argument("marginal_kl: marginal order k in {1, 2}");
  if (ensemble.d != reference.spec.d)
    throw std::invalid_argument("marginal_kl: dimension mismatch");

  ChaosEstimate out;
  out.N = ensemble.N;
  out.k = k;
  out.estimator = estimator;

  const int d = ensemble.d * k;

  if (estimator == ChaosEstimate::Estimator::knn) {
    // samples in R^{dk}: particles (k=1) or disjoint pairs (k=2)
    const int n = k == 1 ? ensemble.N : ensemble.N / 2;
    Eigen::MatrixXd pts(n, d);
    for (int i = 0; i < n; ++i) {
      if (k == 1) {
        pts.row(i) = ensemble.positions.row(i);
      } else {
        pts.block(i, 0, 1, ensemble.d) = ensemble.positions.row(2 * i);
        pts.block(i, ensemble.d, 1, ensemble.d) =
            ensemble.positions.row(2 * i + 1);
      }
    }

    // H(p|q) = -h(p) - E_p ln q with the Kozachenko-Leonenko entropy
    // estimator: h ~= (d/n) sum ln r_i + ln V_d + ln(n-1) + gamma
    std::vector<double> lnr(n), lnq(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double r2 = (pts.row(i) - pts.row(j)).squaredNorm();
        if (r2 < best) best = r2;
      }
      lnr[i] = 0.5 * std::log(std::max(best, 1e-280));
      double q;
      if (k == 1) {
        q = interpolate(reference, pts.row(i).transpose());
      } else {
        q = interpolate(reference,
                        pts.row(i).head(ensemble.d).transpose()) *
            interpolate(reference, pts.row(i).tail(ensemble.d).transpose());
      }
      lnq[i] = std::log(std::max(q, 1e-280));
    }

    std::vector<double> xi(n);
    const double c = std::log(unit_ball_volume(d)) + std::log(double(n - 1)) +
                     kEuler;
    for (int i = 0; i < n; ++i) xi[i] = -d * lnr[i] - c - lnq[i];
    double mean = 0.0;
    for (double v : xi) mean += v;
    out.value = mean / n;
    out.stderr_ = bootstrap_stderr(xi, ensemble.rng.seed ^ 0x9e3779b9ULL);
    return out;
  }

  // kde_grid: bin with cloud-in-cell weights, smooth histogram and
  // reference with the same discrete Gaussian, compare on the grid.
  if (k != 1)
    throw std::invalid_argument("marginal_kl: kde_grid supports k = 1 only");
  const GridSpec& g = reference.spec;
  const int n = g.n;
  Eigen::ArrayXd hist = Eigen::ArrayXd::Zero(g.size());
  const double dx = g.dx();
  for (int i = 0; i < ensemble.N; ++i) {
    const Eigen::VectorXd x = ensemble.positions.row(i);
    bool inside = true;
    for (int c = 0; c < g.d; ++c)
      if (x[c] < -g.L || x[c] > g.L) inside = false;
    if (!inside) continue;
    auto locate = [&](double coord) {
      double u = (coord + g.L) / dx - 0.5;
      int idx = static_cast<int>(std::floor(u));
      double w = u - idx;
      if (idx < 0) { idx = 0; w = 0.0; }
      if (idx > n - 2) { idx = n - 2; w = 1.0; }
      return std::pair<int, double>(idx, w);
    };
    if (g.d == 1) {
      auto [i0, w0] = locate(x[0]);
      hist[i0] += 1.0 - w0;
      hist[i0 + 1] += w0;
    } else {
      auto [i0, w0] = locate(x[0]);
      auto [j0, w1] = locate(x[1]);
      hist[static_cast<long>(i0) * n + j0] += (1 - w0) * (1 - w1);
      hist[static_cast<long>(i0) * n + j0 + 1] += (1 - w0) * w1;
      hist[static_cast<long>(i0 + 1) * n + j0] += w0 * (1 - w1);
      hist[static_cast<long>(i0 + 1) * n + j0 + 1] += w0 * w1;
    }
  }
  hist /= hist.sum() * g.cell_volume();

  // bandwidth: Silverman-type N^{-1/(d+4)} scaled by the sample spread
  double spread = 0.0;
  {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(g.d);
    for (int i = 0; i < ensemble.N; ++i) mu += ensemble.positions.row(i).transpose();
    mu /= ensemble.N;
    for (int i = 0; i < ensemble.N; ++i)
      spread += (ensemble.positions.row(i).transpose() - mu).squaredNorm();
    spread = std::sqrt(spread / (ensemble.N * g.d));
  }
  const double bw =
      std::max(dx, spread * std::pow(double(ensemble.N), -1.0 / (g.d + 4.0)));

  // separable discrete Gaussian filter, truncated at 4 bandwidths
  const int half = std::max(1, static_cast<int>(std::ceil(4.0 * bw / dx)));
  Eigen::ArrayXd kernel1d(2 * half + 1);
  for (int o = -half; o <= half; ++o)
    kernel1d[o + half] = std::exp(-0.5 * (o * dx) * (o * dx) / (bw * bw));
  kernel1d /= kernel1d.sum();

  auto smooth = [&](const Eigen::ArrayXd& f) {
    Eigen::ArrayXd tmp = Eigen::ArrayXd::Zero(f.size());
    Eigen::ArrayXd outp = Eigen::ArrayXd::Zero(f.size());
    if (g.d == 1) {
      for (int i = 0; i < n; ++i)
        for (int o = -half; o <= half; ++o) {
          int j = std::clamp(i + o, 0, n - 1);
          tmp[i] += kernel1d[o + half] * f[j];
        }
      return tmp;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int o = -half; o <= half; ++o) {
          int jj = std::clamp(j + o, 0, n - 1);
          acc += kernel1d[o + half] * f[static_cast<long>(i) * n + jj];
        }
        tmp[static_cast<long>(i) * n + j] = acc;
      }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int o = -half; o <= half; ++o) {
          int ii = std::clamp(i + o, 0, n - 1);
          acc += kernel1d[o + half] * tmp[static_cast<long>(ii) * n + j];
        }
        outp[static_cast<long>(i) * n + j] = acc;
      }
    return outp;
  };

  const Eigen::ArrayXd p_hat = smooth(hist);
  Eigen::ArrayXd q_s = smooth(reference.v);
  const double w = g.cell_volume();
  double kl = 0.0;
  std::vector<double> cell_terms;
  cell_terms.reserve(g.size());
  for (long i = 0; i < p_hat.size(); ++i) {
    if (p_hat[i] < 1e-300) continue;
    if (q_s[i] < 1e-300)
      throw std::invalid_argument("marginal_kl: reference vanishes on sample");
    kl += p_hat[i] * (std::log(p_hat[i]) - std::log(q_s[i])) * w;
  }
  out.value = kl;

  // bootstrap over particles, re-binning is expensive; use a light proxy:
  // per-particle contribution ln(p_hat/q_s) at the particle location
  std::vector<double> xi(ensemble.N);
  GridDensity ph(g, p_hat), qh(g, q_s);
  for (int i = 0; i < ensemble.N; ++i) {
    const double pv = std::max(interpolate(ph, ensemble.positions.row(i).transpose()), 1e-280);
    const double qv = std::max(interpolate(qh, ensemble.positions.row(i).transpose()), 1e-280);
    xi[i] = std::log(pv) - std::log(qv);
  }
  out.stderr_ = bootstrap_stderr(xi, ensemble.rng.seed ^ 0x51ed2701ULL);
  return out;
}

}  // namespace mflab
