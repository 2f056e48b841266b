#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <vector>

#include "mflab/grid.hpp"
#include "mflab/kernels.hpp"

namespace mflab {

struct CflError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PdeConfig {
  double dt = 1e-3;
  double T = 1.0;
  double eps = 0.0;  // mollification radius; the grid solver requires eps >= dx
  enum class Conv { spectral, direct } conv = Conv::spectral;
  enum class Flux { central, upwind_hybrid } flux = Flux::upwind_hybrid;
  double sigma2 = 1.0;
};

/// Drift at cell faces, one array per axis. For d = 2, faces.x has
/// (n+1) x n entries (face i sits between cell rows i-1 and i) and faces.y
/// has n x (n+1); boundary faces carry zero flux regardless of the stored
/// value. For d = 1 only x is used with n+1 entries.
struct FaceField {
  Eigen::ArrayXd x, y;
};

/// Drift b = -grad U + A with A given at cell centers (per-axis arrays) and
/// the confinement entering through exact potential differences across
/// faces, which makes the Gibbs state exactly stationary under the
/// upwind-hybrid flux.
FaceField make_face_drift(const GridSpec& g, const ConfinementPotential* U,
                          const Eigen::ArrayXd* Ax, const Eigen::ArrayXd* Ay);

/// One conservative finite-volume step of dm/dt = div(sigma^2 grad m - b m)
/// with zero-flux boundary faces. Total mass is conserved to rounding.
/// Throws CflError when negative values beyond -1e-12 appear.
GridDensity fp_step(const GridDensity& m, const FaceField& drift, double sigma2,
                    double dt, PdeConfig::Flux flux = PdeConfig::Flux::upwind_hybrid);

/// Advertised stability bound: 0.4 min(dx^2/(2 sigma^2 d), dx/max|b|).
double cfl_bound(const GridSpec& g, const FaceField& drift, double sigma2);

/// Discrete free-space convolution with the mollified interaction force on
/// a 2-D grid, via circulant (zero-padded) FFT embedding.
///
/// The kernel samples are the centered differences of the tabulated
/// g^eps values on the padded difference lattice, multiplied by M. With
/// this construction the discrete divergence of the kernel vanishes
/// identically for anti-symmetric M, which the Jabin-Wang marginal
/// cancellation check relies on.
class SpectralConvolver {
 public:
  SpectralConvolver(const GridSpec& g, const RieszKernel& kernel,
                    const Mollifier& mollifier);

  /// K^eps * m at cell centers, one array per axis component.
  std::array<Eigen::ArrayXd, 2> convolve(const GridDensity& m) const;
  /// Same sum evaluated directly in O(n^4); oracle for the spectral path.
  std::array<Eigen::ArrayXd, 2> convolve_direct(const GridDensity& m) const;

  /// Kernel table value at the grid difference (di, dj) in cells.
  Eigen::Vector2d kernel_at(int di, int dj) const;
  /// g^eps table value at the grid difference (di, dj).
  double potential_at(int di, int dj) const;

  const GridSpec& grid() const { return grid_; }
  double eps() const { return table_->eps(); }
  const MollifiedKernelTable& table() const { return *table_; }

 private:
  GridSpec grid_;
  int N_ = 0;  // padded extent 2n
  std::shared_ptr<const MollifiedKernelTable> table_;
  Eigen::ArrayXd gtab_;    // g^eps on the padded difference lattice
  Eigen::ArrayXd kx_, ky_;  // kernel components on the padded lattice
  Eigen::MatrixXcd khatx_, khaty_;

  long pidx(int p, int q) const { return static_cast<long>(p) * N_ + q; }
};

std::array<Eigen::ArrayXd, 2> convolve_field(const GridDensity& m,
                                             const SpectralConvolver& conv,
                                             PdeConfig::Conv mode);

/// Normalized exp(-kappa_U |x|^2 / 2) on the grid; rejects boxes whose
/// boundary cells are too massive (max single-cell mass fraction >= 1e-6).
GridDensity invariant_gaussian(double kappa_U, const GridSpec& g);

struct MeanFieldResult {
  std::vector<GridDensity> snapshots;  // at probe times (plus the final time)
  std::vector<double> probe_times;
  int steps = 0;
};

/// Iterate convolve + fp_step to time T, collecting snapshots at the probe
/// schedule. conv may be null when the interaction is absent.
MeanFieldResult run_meanfield(const GridDensity& m0,
                              const SpectralConvolver* conv,
                              const ConfinementPotential& confinement,
                              const PdeConfig& config,
                              const std::vector<double>& probe_times);

struct LogDensityDiagnostics {
  double sup_grad_u = 0.0;   // sup |grad u| on the mask, u = -ln(m/ref)
  double sup_hess_u = 0.0;   // sup spectral norm of grad^2 u
  double sup_x_kconv = 0.0;  // sup |x . K^eps * (m - ref)|
};

/// Masked log-density diagnostics against a reference density; the mask
/// holds the cells carrying 99.99% of the reference mass. conv may be null
/// (third field then 0).
LogDensityDiagnostics log_density_diagnostics(const GridDensity& m,
                                              const GridDensity& reference,
                                              const SpectralConvolver* conv);

struct JabinWangResult {
  double sup_phi = 0.0;
  double max_marginal_residual = 0.0;
  int sample_points = 0;
};

/// Evaluates the symmetrized pair functional phi(x, y) built from
/// K^eps(x-y), K^eps * m and the grid log-density gradient on a
/// deterministic sub-lattice of the mask, and the quadrature residual
/// max_x | int phi(x, y) m(dy) |.
JabinWangResult jabin_wang_phi(const GridDensity& m,
                               const SpectralConvolver& conv, int stride = 8);

}  // namespace mflab
