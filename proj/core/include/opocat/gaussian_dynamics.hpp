#pragma once

// Linear Fokker-Planck dynamics of the Gaussian Wigner function:
//   dz/dt = -gamma z,   cov' = 2D - gamma cov - cov gamma^t.

#include "opocat/phase_space.hpp"

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

namespace opocat {

enum class DynamicsConfig {
  /// Modes 1, 2, 3 of one polarization group, z = (x1, y1, x2, y2, x3, y3).
  full6,
  /// Modes 2, 3 only; chi1 is ignored.
  opo4,
};

struct DriftDiffusion {
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd diffusion;
};

DriftDiffusion build_drift_diffusion(const SystemParams& p, DynamicsConfig config);

/// Integration horizon: a finite time or the explicit infinite-time limit.
class Horizon {
 public:
  /// Throws InvalidArgument for negative or non-finite t.
  static Horizon finite(double t);
  static Horizon infinite() noexcept { return Horizon(0.0, true); }

  bool is_infinite() const noexcept { return infinite_; }
  /// Only meaningful for finite horizons.
  double time() const noexcept { return t_; }

 private:
  Horizon(double t, bool inf) : t_(t), infinite_(inf) {}
  double t_;
  bool infinite_;
};

/// exp(A) by Pade-13 scaling and squaring.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a);

/// G(t) = exp(-gamma t).
Eigen::MatrixXd propagator(const DriftDiffusion& dd, double t);

/// sigma(t) = 2 int_0^t G D G^t, integrated as the Lyapunov ODE with
/// Dormand-Prince 5(4) steps. The infinite horizon solves
/// gamma sigma + sigma gamma^t = 2D directly and throws UnstableAtInfinity
/// unless every eigenvalue of gamma has positive real part.
Eigen::MatrixXd noise_covariance(const DriftDiffusion& dd, Horizon t);

/// Evolves a 3-mode (full6) or 2-mode (opo4) state.
GaussianWignerState evolve(const GaussianWignerState& s0, const SystemParams& p, double t);

/// Evolves the listed modes of a larger state under `config`, leaving the
/// others untouched. `modes` must name 3 modes for full6 and 2 for opo4.
GaussianWignerState evolve_modes(const GaussianWignerState& s0, std::span<const int> modes,
                                 const SystemParams& p, DynamicsConfig config, double t);

struct SteadyState {
  GaussianWignerState state;
  /// <n> of mode 2
  double nbar;
  /// <n> of mode 3; equals nbar when kappa2 == kappa3
  double nbar_mode3;
};

/// Below-threshold equilibrium of modes 2, 3. chi1 plays no role. Throws
/// AboveThreshold when chi2^2 >= kappa2 kappa3.
SteadyState steady_state(const SystemParams& p);

/// Mean photon number of the equal-damping equilibrium, chi2^2/(2(kappa^2-chi2^2)).
double equilibrium_nbar(double ratio);
/// Inverse of equilibrium_nbar: r = sqrt(2N/(2N+1)).
double ratio_for_nbar(double nbar);

struct StabilityReport {
  DynamicsConfig config;
  /// Eigenvalues of gamma; growth rates of the linearized amplitudes are -Re.
  std::vector<std::complex<double>> eigenvalues;
  bool stable = false;
  /// kappa2 kappa3 - chi2^2
  double threshold_margin = 0.0;
  /// Analytic roots: lambda_+- for opo4, roots of the characteristic cubic
  /// for full6. Each is a doubly degenerate eigenvalue of gamma.
  std::vector<std::complex<double>> analytic_roots;
  /// Product of the analytic roots (full6: -kappa3 chi1^2).
  double root_product = 0.0;
  /// Largest distance from an eigenvalue of gamma to the nearest analytic root.
  double max_root_mismatch = 0.0;
};

/// Uses opo4 when chi1 == 0 and full6 otherwise.
StabilityReport stability(const SystemParams& p);

}  // namespace opocat
