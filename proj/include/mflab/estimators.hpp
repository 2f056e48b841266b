#pragma once

#include <Eigen/Dense>

#include "mflab/grid.hpp"
#include "mflab/sde.hpp"

namespace mflab {

struct ChaosEstimate {
  int N = 0;
  int k = 1;  // marginal order
  enum class Estimator { knn, kde_grid } estimator = Estimator::knn;
  double value = 0.0;   // estimated KL
  double stderr_ = 0.0;  // 32-resample bootstrap spread
};

/// KL divergence of the particle ensemble's k-marginal against the grid
/// reference density. knn differences first-nearest-neighbor log densities
/// against exact reference values; kde_grid bins the particles and compares
/// against the identically smoothed reference (matched smoothing cancels
/// the leading kernel bias). Requires N >= 50. Small negative estimates
/// are normal estimator bias; values below -0.05 flag a failure.
ChaosEstimate marginal_kl(const ParticleEnsemble& ensemble,
                          const GridDensity& reference,
                          ChaosEstimate::Estimator estimator, int k = 1);

/// i.i.d. initial ensemble sampled from the grid density by inverse CDF,
/// using the ensemble's own counter stream (step 2^62 reserved for
/// initialization draws).
ParticleEnsemble sample_iid_ensemble(int N, const GridDensity& m0,
                                     std::uint64_t seed);

}  // namespace mflab
