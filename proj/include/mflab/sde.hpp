#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mflab/kernels.hpp"
#include "mflab/rng.hpp"

namespace mflab {

/// Raised when a raw-kernel trajectory reaches a pair distance below the
/// collision threshold; the trajectory halts and the caller decides.
struct CollisionEvent : std::runtime_error {
  int i = 0, j = 0;
  double distance = 0.0;
  double t = 0.0;
  CollisionEvent(int i_, int j_, double dist, double time)
      : std::runtime_error("collision"), i(i_), j(j_), distance(dist),
        t(time) {}
};

/// N particle positions with simulation clock and a reproducible
/// counter-based noise stream. Streams are keyed by (seed, stream_id, step),
/// so the draw schedule is independent of worker count and particle order;
/// stream ids travel with the particles under relabeling.
struct ParticleEnsemble {
  int N = 0, d = 1;
  Eigen::MatrixXd positions;  // N x d
  double t = 0.0;
  CounterRng rng;
  std::uint64_t step = 0;
  std::vector<std::uint64_t> stream_ids;

  ParticleEnsemble() = default;
  ParticleEnsemble(int N_, int d_, std::uint64_t seed);

  Eigen::VectorXd particle(int i) const { return positions.row(i); }
};

struct SdeConfig {
  double dt = 1e-3;
  enum class Scheme { euler_maruyama, rk4_deterministic } scheme =
      Scheme::euler_maruyama;
  double mollification_eps = 0.0;  // 0 = raw kernel
  double collision_threshold = 1e-8;
  bool monitor_energy = false;
  int workers = 0;  // 0 = library default
};

/// Drift of particle i given all positions (the McKean interaction uses the
/// 1/(N-1) weight over j != i).
Eigen::MatrixXd ensemble_drift(const ParticleEnsemble& e, const DriftSpec& b,
                               const SdeConfig& config, double t);

/// One step of the particle system. Euler-Maruyama for sigma >= 0;
/// rk4_deterministic requires sigma = 0.
ParticleEnsemble step_particles(const ParticleEnsemble& e, const DriftSpec& b,
                                const SdeConfig& config);

struct CoupledPair {
  enum class Coupling { synchronous, reflection, independent };
  ParticleEnsemble first, second;
  Coupling coupling = Coupling::synchronous;
  double merge_threshold = 0.0;  // reflection only; default 1e-4 initial gap
  std::vector<char> merged;      // per particle, reflection only

  CoupledPair(ParticleEnsemble a, ParticleEnsemble b, Coupling c);
};

/// Advance both ensembles one step. Synchronous coupling reuses the first
/// ensemble's Gaussian increments; reflection mirrors them across the pair
/// difference direction until the pair merges; independent uses disjoint
/// streams.
CoupledPair step_coupled(const CoupledPair& pair, const DriftSpec& b,
                         const DriftSpec& b2, const SdeConfig& config);

struct ContractionFit {
  double M = 0.0;       // exp(intercept)
  double lambda = 0.0;  // -slope
  double r2 = 0.0;
};

/// Least-squares line through (t, ln gap); gaps must be positive.
ContractionFit contraction_fit(
    const std::vector<std::pair<double, double>>& gap_series);

/// E(x) = 1/2 sum_{i != j} g_s(x^i - x^j) + (N 1_{s=0}/2) sum_i |x^i|^2.
double energy_functional(const ParticleEnsemble& e, const RieszKernel& kernel);

struct EnsembleMonitors {
  double min_dist = 0.0;
  double k_moment = 0.0;        // (1/N) sum |X^i|^k
  double exp_pair_moment = 0.0;  // mean of exp(delta |X^i - X^j|^2), +inf on overflow
  bool overflow = false;
};

/// Monitors over a deterministic sample of floor(N/2) disjoint pairs
/// (1,2), (3,4), ...; overflow in the exponential moment is flagged rather
/// than silently saturated.
EnsembleMonitors ensemble_monitors(const ParticleEnsemble& e, double delta,
                                   double k);

/// Survival curve of dr = -r kappa(r) dt + 2 sqrt(2) dW absorbed at 0,
/// from r0, on the time grid {dt, 2dt, ..., T}.
std::vector<double> dominating_radius(const std::function<double(double)>& kappa,
                                      double r0, double dt, double T,
                                      int paths, std::uint64_t seed = 7);

}  // namespace mflab
