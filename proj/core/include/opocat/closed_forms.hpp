#pragma once

// Analytic results used as the formula side of every oracle comparison:
// small-time heralded blocks, photocount and correlator formulas, the d+
// conditional Wigner function, the OPA reference state and lab scales.

#include "opocat/detection.hpp"
#include "opocat/fock_oracle.hpp"
#include "opocat/phase_space.hpp"

#include <Eigen/Dense>

namespace opocat::closed_form {

/// Dimensionless products chi1*t, chi2*t, kappa*t and the initial N.
struct SmallTimeRegime {
  double nbar = 0.0;
  double chi1_t = 0.0;
  double chi2_t = 0.0;
  double kappa_t = 0.0;
};

/// Largest product for which the lowest-order expansion is accepted.
inline constexpr double kSmallTimeBound = 0.05;

/// rho0 ~ rho(0), rho1 ~ (chi1 t)^2 a2^dagger rho(0) a2, rho_int ~ chi1 t a2^dagger rho(0).
struct SmallTimeBlocks {
  double trace0 = 1.0;
  double trace1 = 0.0;
  /// <n2> on the normalized rho0 and rho1 blocks.
  double n2_rho0 = 0.0;
  double n2_rho1 = 0.0;
  /// <a2e>^(int) = Tr[rho_int a2]; the conjugate pairings vanish.
  double a2e_int = 0.0;
};

/// Throws RegimeViolation when a product exceeds kSmallTimeBound or is
/// negative, InvalidParams for a negative nbar.
SmallTimeBlocks smalltime_blocks(const SmallTimeRegime& regime);

/// n (N/(1+N))^(n-1) / (1+N)^2, the photon statistics of a2^dagger rho_th a2.
double shifted_thermal_pmf(double nbar, int n);
/// N^n / (1+N)^(n+1).
double thermal_pmf(double nbar, int n);

struct DetectionFormulas {
  double mix_counts = 0.0;
  double cat_counts = 0.0;
  double visibility = 0.0;
  double cc2 = 0.0;
  double dd2 = 0.0;
  double ccdd = 0.0;
  double corr_visibility = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
};

/// Lowest-order photocounts and correlators at the analyzer phase phi.
DetectionFormulas detection_formulas(double nbar, double phi);

/// Unnormalized d+ Wigner function after projecting d- on alpha|0> + beta|1>,
/// with r = chi2 / kappa in [0, 1).
double dplus_wigner(double r, const ComplexAmplitudePair& amps, double x, double y);
/// The same function as a Gaussian times a quadratic, scaled to unit integral.
QuadraticWignerForm dplus_wigner_form(double r, const ComplexAmplitudePair& amps);
/// Sign-carrying value of dplus_wigner at the origin.
double dplus_origin(double r, const ComplexAmplitudePair& amps);
/// Origin value of the normalized four-mode cat Wigner function.
double four_mode_origin(double nbar);

/// Normalized marginal of the d+ Wigner function along `axis`, from the
/// exact Gaussian integrals.
double dplus_marginal(double r, const ComplexAmplitudePair& amps, Axis axis, double q);

struct OpaReference {
  /// alpha* S|1> + beta*/cosh(chi2 t) S|0> with S = exp(chi2 t / 2 (a^dagger^2 - a^2)),
  /// truncated at 20 photons.
  Eigen::VectorXcd unnormalized;
  /// |alpha|^2 + |beta|^2 / cosh^2(chi2 t).
  double expected_norm_squared = 0.0;
  FockDensityMatrix state;
  Eigen::VectorXd photon_distribution;
  double mean_photon_number = 0.0;
};

inline constexpr int kOpaCutoff = 20;

/// Throws InvalidArgument for a negative chi2_t.
OpaReference opa_reference(double chi2_t, const ComplexAmplitudePair& amps);

/// Squeezed number state exp(z/2 (a^dagger^2 - a^2)) |n>, truncated at `cutoff`.
Eigen::VectorXd squeezed_number_state(double z, int n, int cutoff);

struct ExperimentScales {
  double crystal_length = 0.0;  // m
  double refractive_index = 0.0;
  double wavelength = 0.0;  // m
  double pump_power = 0.0;  // W
  double flight_time = 0.0;  // s
  double kappa = 0.0;  // 1/s
  double chi2 = 0.0;  // 1/s
  double kappa_over_chi2 = 0.0;
  double chi2_t = 0.0;
  double kappa_t = 0.0;
  /// 2 pi c / (lambda kappa).
  double q_factor = 0.0;
  /// The order of magnitude usually quoted for such a cavity.
  double quoted_q_factor = 1e5;
};

inline constexpr double kSpeedOfLight = 299792458.0;

/// Throws InvalidParams unless all inputs are positive.
ExperimentScales experiment_scales(double length, double index, double wavelength, double kappa,
                                   double nbar_target, double pump_power = 0.3);

}  // namespace opocat::closed_form
