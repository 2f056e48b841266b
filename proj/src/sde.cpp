#include "mflab/sde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace mflab {

ParticleEnsemble::ParticleEnsemble(int N_, int d_, std::uint64_t seed)
    : N(N_), d(d_), positions(Eigen::MatrixXd::Zero(N_, d_)), rng{seed},
      stream_ids(N_) {
  if (N < 1) throw std::invalid_argument("ensemble: N must be >= 1");
  for (int i = 0; i < N; ++i) stream_ids[i] = static_cast<std::uint64_t>(i);
}

namespace {

// Particle indices sorted by canonical stream id; interaction sums run in
// this order so relabeling permutes trajectories bit-exactly.
std::vector<int> canonical_order(const ParticleEnsemble& e) {
  std::vector<int> idx(e.N);
  for (int i = 0; i < e.N; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return e.stream_ids[a] < e.stream_ids[b];
  });
  return idx;
}

// Interaction term of particle i: mean over j != i with the 1/(N-1)
// weight, accumulated in canonical order.
Eigen::VectorXd interaction(const ParticleEnsemble& e, const DriftSpec& b,
                            const SdeConfig& config,
                            const std::vector<int>& order, int i) {
  const int N = e.N;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(e.d);
  if (N < 2) return acc;
  const Eigen::VectorXd xi = e.positions.row(i);
  for (int jr = 0; jr < N; ++jr) {
    const int j = order[jr];
    if (j == i) continue;
    const Eigen::VectorXd xj = e.positions.row(j);
    if (b.variant == DriftSpec::Variant::mckean) {
      acc += b.pair(xi, xj);
    } else {  // log_riesz
      const Eigen::VectorXd z = xi - xj;
      if (b.mollified) {
        acc += b.mollified->eval(z).second;
      } else {
        const double r = z.norm();
        if (r <= config.collision_threshold)
          throw CollisionEvent(i, j, r, e.t);
        acc += b.kernel->force(z);
      }
    }
  }
  return acc / (N - 1);
}

}  // namespace

Eigen::MatrixXd ensemble_drift(const ParticleEnsemble& e, const DriftSpec& b,
                               const SdeConfig& config, double t) {
  Eigen::MatrixXd out(e.N, e.d);
  switch (b.variant) {
    case DriftSpec::Variant::explicit_field: {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < e.N; ++i)
        out.row(i) = b.field(t, e.positions.row(i)).transpose();
      break;
    }
    case DriftSpec::Variant::mckean: {
      const auto order = canonical_order(e);
#pragma omp parallel for schedule(static)
      for (int i = 0; i < e.N; ++i)
        out.row(i) = (b.b0(e.positions.row(i)) +
                      interaction(e, b, config, order, i))
                         .transpose();
      break;
    }
    case DriftSpec::Variant::log_riesz: {
      // The kernel force is odd, so each unordered pair is evaluated once.
      // Pairs follow round-robin rounds (disjoint matchings) over the
      // canonical rank order; rounds run serially and accumulate in a fixed
      // order, so sums are bit-identical for any worker count and
      // equivariant under particle relabeling.
      const int N = e.N;
      out.setZero();
      const auto order = canonical_order(e);
      std::exception_ptr error;
      if (N >= 2) {
        const int d = e.d;
        if (d > 16)
          throw std::invalid_argument("log_riesz drift: d must be <= 16");
        const double* P = e.positions.data();  // column-major N x d
        const MollifiedKernelTable* table = b.mollified.get();
        const Eigen::MatrixXd& Mmat = b.kernel->M;
        const double s_exp = b.kernel->s;

        // Unordered pairs (over canonical ranks) are split into a fixed
        // number of contiguous chunks; each chunk accumulates serially into
        // its own buffer and the buffers are reduced in chunk order. The
        // result is independent of the worker count and equivariant under
        // relabeling.
        const long total_pairs = static_cast<long>(N) * (N - 1) / 2;
        const int chunks = 32;
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<long>(N) * chunks, d);
        std::atomic<bool> collided{false};

        auto eval_pair = [&](int ri, int rj, double* buf) {
          const int i = order[ri], j = order[rj];
          double z[16], f[16];
          double r2 = 0.0;
          for (int c = 0; c < d; ++c) {
            z[c] = P[i + c * N] - P[j + c * N];
            r2 += z[c] * z[c];
          }
          if (table) {
            table->force_into(z, f);
          } else {
            const double r = std::sqrt(r2);
            if (r <= config.collision_threshold) {
              collided.store(true, std::memory_order_relaxed);
              return;
            }
            // K = M grad g_s with grad g_s = -s z |z|^{-s-2} (or -z/|z|^2)
            const double fac = s_exp == 0.0
                                   ? -1.0 / r2
                                   : -s_exp * std::pow(r, -s_exp - 2.0);
            const double* Md = Mmat.data();
            for (int a = 0; a < d; ++a) {
              double v = 0.0;
              for (int c = 0; c < d; ++c) v += Md[a + c * d] * z[c];
              f[a] = v * fac;
            }
          }
          for (int c = 0; c < d; ++c) {
            buf[i + c * N * chunks] += f[c];
            buf[j + c * N * chunks] -= f[c];
          }
        };

#pragma omp parallel for schedule(dynamic, 1) if (N >= 256)
        for (int ch = 0; ch < chunks; ++ch) {
          const long lo = total_pairs * ch / chunks;
          const long hi = total_pairs * (ch + 1) / chunks;
          double* buf = acc.data() + static_cast<long>(ch) * N;
          // map the flat pair index to (ri, rj), ri < rj
          long p = lo;
          // find the row of the lo-th pair: pairs before row r: r*N - r(r+1)/2
          int ri = 0;
          {
            long before = 0;
            while (before + (N - 1 - ri) <= p) {
              before += N - 1 - ri;
              ++ri;
            }
            int rj = ri + 1 + static_cast<int>(p - before);
            while (p < hi) {
              eval_pair(ri, rj, buf);
              ++p;
              ++rj;
              if (rj >= N) {
                ++ri;
                rj = ri + 1;
              }
            }
          }
        }

        if (collided.load()) {
          // locate the first colliding pair in canonical order
          for (int ri = 0; ri < N && !error; ++ri)
            for (int rj = ri + 1; rj < N && !error; ++rj) {
              const int i = order[ri], j = order[rj];
              double r2 = 0.0;
              for (int c = 0; c < d; ++c) {
                const double zc = P[i + c * N] - P[j + c * N];
                r2 += zc * zc;
              }
              const double r = std::sqrt(r2);
              if (r <= config.collision_threshold)
                error = std::make_exception_ptr(CollisionEvent(i, j, r, e.t));
            }
          if (error) std::rethrow_exception(error);
        }

        // deterministic reduction in chunk order
        double* O = out.data();
        for (int ch = 0; ch < chunks; ++ch) {
          const double* buf = acc.data() + static_cast<long>(ch) * N;
          for (int c = 0; c < d; ++c)
            for (int i = 0; i < N; ++i)
              O[i + c * N] += buf[i + c * N * chunks];
        }
        out /= (N - 1);
      }
      if (b.confinement) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < e.N; ++i)
          out.row(i) -= b.confinement->grad(e.positions.row(i)).transpose();
      }
      break;
    }
  }
  return out;
}

ParticleEnsemble step_particles(const ParticleEnsemble& e, const DriftSpec& b,
                                const SdeConfig& config) {
  if (config.dt <= 0.0) throw std::invalid_argument("step: dt must be > 0");
  ParticleEnsemble out = e;
  const double dt = config.dt;

  if (config.scheme == SdeConfig::Scheme::rk4_deterministic) {
    if (b.sigma != 0.0)
      throw std::invalid_argument("rk4_deterministic requires sigma = 0");
    ParticleEnsemble tmp = e;
    const Eigen::MatrixXd k1 = ensemble_drift(e, b, config, e.t);
    tmp.positions = e.positions + 0.5 * dt * k1;
    const Eigen::MatrixXd k2 = ensemble_drift(tmp, b, config, e.t + 0.5 * dt);
    tmp.positions = e.positions + 0.5 * dt * k2;
    const Eigen::MatrixXd k3 = ensemble_drift(tmp, b, config, e.t + 0.5 * dt);
    tmp.positions = e.positions + dt * k3;
    const Eigen::MatrixXd k4 = ensemble_drift(tmp, b, config, e.t + dt);
    out.positions = e.positions + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  } else {
    const Eigen::MatrixXd drift = ensemble_drift(e, b, config, e.t);
    const double noise = std::sqrt(2.0 * b.sigma * b.sigma * dt);
    out.positions = e.positions + dt * drift;
    if (noise > 0.0) {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < e.N; ++i)
        for (int k = 0; k < e.d; ++k)
          out.positions(i, k) +=
              noise * e.rng.normal(e.stream_ids[i], e.step, k);
    }
  }
  out.t = e.t + dt;
  out.step = e.step + 1;
  return out;
}

// ---------------------------------------------------------------------------
// coupling

CoupledPair::CoupledPair(ParticleEnsemble a, ParticleEnsemble b, Coupling c)
    : first(std::move(a)), second(std::move(b)), coupling(c) {
  if (first.N != second.N || first.d != second.d)
    throw std::invalid_argument("coupled pair: shape mismatch");
  merged.assign(first.N, 0);
  double gap0 = 0.0;
  for (int i = 0; i < first.N; ++i)
    gap0 = std::max(gap0,
                    (first.positions.row(i) - second.positions.row(i)).norm());
  merge_threshold = 1e-4 * gap0;
}

CoupledPair step_coupled(const CoupledPair& pair, const DriftSpec& b,
                         const DriftSpec& b2, const SdeConfig& config) {
  const int N = pair.first.N, d = pair.first.d;
  const double dt = config.dt;
  CoupledPair out = pair;

  const Eigen::MatrixXd drift1 =
      ensemble_drift(pair.first, b, config, pair.first.t);
  const Eigen::MatrixXd drift2 =
      ensemble_drift(pair.second, b2, config, pair.second.t);

  const double noise1 = std::sqrt(2.0 * b.sigma * b.sigma * dt);
  const double noise2 = std::sqrt(2.0 * b2.sigma * b2.sigma * dt);

#pragma omp parallel for schedule(static)
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd xi = pair.first.positions.row(i);
    Eigen::VectorXd yi = pair.second.positions.row(i);
    Eigen::VectorXd xi_new = xi + dt * drift1.row(i).transpose();
    Eigen::VectorXd yi_new = yi + dt * drift2.row(i).transpose();

    Eigen::VectorXd xi_noise(d);
    for (int k = 0; k < d; ++k)
      xi_noise[k] =
          pair.first.rng.normal(pair.first.stream_ids[i], pair.first.step, k);

    switch (pair.coupling) {
      case CoupledPair::Coupling::synchronous:
        xi_new += noise1 * xi_noise;
        yi_new += noise2 * xi_noise;
        break;
      case CoupledPair::Coupling::reflection: {
        xi_new += noise1 * xi_noise;
        if (out.merged[i]) {
          yi_new = xi_new;
        } else {
          const Eigen::VectorXd diff = yi - xi;
          const double dist = diff.norm();
          if (dist < out.merge_threshold) {
            out.merged[i] = 1;
            yi_new = xi_new;
          } else {
            const Eigen::VectorXd e_dir = diff / dist;
            const Eigen::VectorXd reflected =
                xi_noise - 2.0 * e_dir.dot(xi_noise) * e_dir;
            yi_new += noise2 * reflected;
          }
        }
        break;
      }
      case CoupledPair::Coupling::independent: {
        xi_new += noise1 * xi_noise;
        for (int k = 0; k < d; ++k)
          yi_new += noise2 * pair.second.rng.normal(
                                 pair.second.stream_ids[i] ^ 0x8000000000000000ULL,
                                 pair.second.step, k) *
                    Eigen::VectorXd::Unit(d, k);
        break;
      }
    }
    out.first.positions.row(i) = xi_new.transpose();
    out.second.positions.row(i) = yi_new.transpose();
  }
  out.first.t += dt;
  out.second.t += dt;
  out.first.step += 1;
  out.second.step += 1;
  return out;
}

ContractionFit contraction_fit(
    const std::vector<std::pair<double, double>>& gap_series) {
  if (gap_series.size() < 5)
    throw std::invalid_argument("contraction_fit: need >= 5 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const int n = static_cast<int>(gap_series.size());
  for (const auto& [t, gap] : gap_series) {
    if (!(gap > 0.0))
      throw std::invalid_argument("contraction_fit: nonpositive gap");
    const double y = std::log(gap);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    syy += y * y;
  }
  const double denom = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  ContractionFit fit;
  fit.M = std::exp(intercept);
  fit.lambda = -slope;
  const double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (const auto& [t, gap] : gap_series) {
    const double r = std::log(gap) - (intercept + slope * t);
    ss_res += r * r;
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

double energy_functional(const ParticleEnsemble& e, const RieszKernel& kernel) {
  double pair_term = 0.0;
  for (int i = 0; i < e.N; ++i)
    for (int j = i + 1; j < e.N; ++j) {
      const double r = (e.positions.row(i) - e.positions.row(j)).norm();
      if (r <= 0.0) throw SingularityError("energy: coincident particles");
      pair_term += kernel.potential(r);
    }
  double quad = 0.0;
  if (kernel.s == 0.0)
    quad = 0.5 * e.N * e.positions.squaredNorm();
  return pair_term + quad;  // pair_term counted once per unordered pair = 1/2 sum_{i!=j}
}

EnsembleMonitors ensemble_monitors(const ParticleEnsemble& e, double delta,
                                   double k) {
  EnsembleMonitors mon;
  mon.min_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < e.N; ++i)
    for (int j = i + 1; j < e.N; ++j)
      mon.min_dist = std::min(
          mon.min_dist, (e.positions.row(i) - e.positions.row(j)).norm());
  if (e.N < 2) mon.min_dist = 0.0;

  double km = 0.0;
  for (int i = 0; i < e.N; ++i)
    km += std::pow(e.positions.row(i).norm(), k);
  mon.k_moment = km / e.N;

  double acc = 0.0;
  int count = 0;
  for (int i = 0; i + 1 < e.N; i += 2) {
    const double g2 = (e.positions.row(i) - e.positions.row(i + 1)).squaredNorm();
    const double v = std::exp(delta * g2);
    if (!std::isfinite(v)) {
      mon.overflow = true;
      mon.exp_pair_moment = std::numeric_limits<double>::infinity();
      return mon;
    }
    acc += v;
    ++count;
  }
  mon.exp_pair_moment = count ? acc / count : 0.0;
  if (!std::isfinite(mon.exp_pair_moment)) {
    mon.overflow = true;
    mon.exp_pair_moment = std::numeric_limits<double>::infinity();
  }
  return mon;
}

std::vector<double> dominating_radius(const std::function<double(double)>& kappa,
                                      double r0, double dt, double T,
                                      int paths, std::uint64_t seed) {
  if (r0 < 0.0) throw std::invalid_argument("dominating_radius: r0 must be >= 0");
  if (dt <= 0.0 || T <= 0.0 || paths < 1)
    throw std::invalid_argument("dominating_radius: bad parameters");
  const int steps = static_cast<int>(std::round(T / dt));
  std::vector<long> alive_count(steps, 0);
  const CounterRng rng{seed};
  const double noise = 2.0 * std::sqrt(2.0) * std::sqrt(dt);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < paths; ++p) {
    double r = r0;
    bool alive = r > 0.0;
    for (int s = 0; s < steps; ++s) {
      if (alive) {
        r += -r * kappa(r) * dt + noise * rng.normal(p, s, 0);
        if (r <= 0.0) alive = false;
      }
      if (alive)
#pragma omp atomic
        ++alive_count[s];
    }
  }
  std::vector<double> survival(steps);
  for (int s = 0; s < steps; ++s)
    survival[s] = static_cast<double>(alive_count[s]) / paths;
  return survival;
}

}  // namespace mflab
