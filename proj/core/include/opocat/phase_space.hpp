#pragma once

// Phase-space types shared by every module.
//
// Conventions: a mode amplitude is a = x + i y, quadratures are stored
// interleaved as (x1, y1, x2, y2, ...), and the vacuum has variance 1/4 per
// quadrature so that W_vac(z) = (2/pi)^n exp(-2|z|^2).

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace opocat {

inline constexpr double kVacuumVariance = 0.25;

/// Couplings and cavity decay rates of the coupled oscillator, in rad/s or as
/// dimensionless products with the interaction time.
struct SystemParams {
  double chi1 = 0.0;
  double chi2 = 0.0;
  double kappa2 = 1.0;
  double kappa3 = 1.0;
};

struct ValidatedParams {
  SystemParams params;
  /// chi2 / sqrt(kappa2 kappa3)
  double ratio = 0.0;
  /// chi2^2 > kappa2 kappa3. Not an error: transient evolution is still allowed.
  bool above_threshold = false;
};

/// Rejects non-finite or negative rates and non-positive decay rates.
ValidatedParams validate_params(const SystemParams& p);

enum class Direction { k1, k2, k3 };
enum class Polarization { e, o, plus45, minus45, dplus, dminus };
enum class ModeBasis { eo, pm45, dpm };

struct ModeLabel {
  Direction direction = Direction::k1;
  Polarization polarization = Polarization::e;

  friend bool operator==(const ModeLabel&, const ModeLabel&) = default;
};

/// e/o labels live in the eo basis, +-45 labels after the 45 degree rotation,
/// d+- labels (direction k2 by convention) after the d+- transform.
bool is_valid_in(const ModeLabel& label, ModeBasis basis) noexcept;
std::string to_string(const ModeLabel& label);

class GaussianWignerState {
 public:
  /// Throws InvalidState when sizes disagree, cov is not symmetric, or a
  /// symplectic eigenvalue falls below 1/4.
  GaussianWignerState(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  int n_modes() const noexcept { return static_cast<int>(mean_.size() / 2); }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& cov() const noexcept { return cov_; }

  /// Moduli of the eigenvalues of i*Omega*cov, one per mode, ascending.
  std::vector<double> symplectic_eigenvalues() const;

  /// Wigner function value at z (length 2 n_modes).
  double wigner(const Eigen::VectorXd& z) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

/// Block-diagonal product state; modes of `a` come first.
GaussianWignerState tensor(const GaussianWignerState& a, const GaussianWignerState& b);

struct Vacuum {
  int n_modes = 1;
};
struct Thermal {
  double nbar = 0.0;
  int n_modes = 1;
};
/// Two-mode equilibrium of the below-threshold oscillator with equal damping,
/// ratio r = chi2 / kappa.
struct OpoEquilibrium {
  double ratio = 0.0;
};
using StandardStateKind = std::variant<Vacuum, Thermal, OpoEquilibrium>;

GaussianWignerState standard_state(const StandardStateKind& kind);

inline GaussianWignerState vacuum(int n_modes = 1) { return standard_state(Vacuum{n_modes}); }
inline GaussianWignerState thermal(double nbar, int n_modes = 1) {
  return standard_state(Thermal{nbar, n_modes});
}
inline GaussianWignerState opo_equilibrium(double ratio) {
  return standard_state(OpoEquilibrium{ratio});
}

/// (1/4)^n / sqrt(det cov). Throws SingularCovariance when det cov <= 0.
double purity(const GaussianWignerState& s);

/// <a^dagger a> of one mode, including the coherent part of the mean.
double mean_photon_number(const GaussianWignerState& s, int mode);

/// Sub-block for the listed modes, in the listed order.
GaussianWignerState marginalize(const GaussianWignerState& s, std::span<const int> keep);

/// Passive linear-optics transform a'_i = sum_j U_ij a_j, stored as the real
/// 2n x 2n quadrature matrix acting on (x1, y1, ...).
class ModeTransform {
 public:
  /// a'_e = (a_e + a_o)/sqrt2 (the +45 mode), a'_o = (a_e - a_o)/sqrt2 (-45).
  static ModeTransform rot45(int n_modes, int mode_e, int mode_o);
  /// d+ = (a_p + a_q)/sqrt2 replaces mode_p, d- = (a_p - a_q)/sqrt2 replaces mode_q.
  static ModeTransform dpm(int n_modes, int mode_p, int mode_q);
  /// a' = exp(i phi) a on one mode.
  static ModeTransform phase(int n_modes, int mode, double phi);
  static ModeTransform from_unitary(const Eigen::MatrixXcd& u);
  /// Throws NonSymplectic unless T is orthogonal and symplectic within 1e-10.
  static ModeTransform from_quadrature_matrix(Eigen::MatrixXd t);

  int n_modes() const noexcept { return static_cast<int>(t_.rows() / 2); }
  const Eigen::MatrixXd& quadrature_matrix() const noexcept { return t_; }

 private:
  explicit ModeTransform(Eigen::MatrixXd t) : t_(std::move(t)) {}
  Eigen::MatrixXd t_;
};

/// mean -> T mean, cov -> T cov T^t.
GaussianWignerState apply_mode_transform(const GaussianWignerState& s, const ModeTransform& t);

/// Interleaved symplectic form for n modes.
Eigen::MatrixXd symplectic_form(int n_modes);

/// W(z) = (z^t Q z + l^t z + c) * G(z), with G the normalized Gaussian of
/// `gaussian`. Used for the Wigner functions of one-photon-conditioned states.
class QuadraticWignerForm {
 public:
  QuadraticWignerForm(GaussianWignerState gaussian, Eigen::MatrixXd quadratic,
                      Eigen::VectorXd linear, double constant);

  const GaussianWignerState& gaussian() const noexcept { return gaussian_; }
  const Eigen::MatrixXd& quadratic() const noexcept { return quadratic_; }
  const Eigen::VectorXd& linear() const noexcept { return linear_; }
  double constant() const noexcept { return constant_; }

  double operator()(const Eigen::VectorXd& z) const;
  /// Exact phase-space integral.
  double integral() const;
  /// Same form scaled to unit integral. Throws InvalidState if the integral vanishes.
  QuadraticWignerForm normalized() const;

 private:
  GaussianWignerState gaussian_;
  Eigen::MatrixXd quadratic_;
  Eigen::VectorXd linear_;
  double constant_;
};

/// Normalized amplitudes of alpha|0> + beta|1>.
class ComplexAmplitudePair {
 public:
  /// Throws InvalidArgument unless |alpha|^2 + |beta|^2 = 1 within 1e-12.
  ComplexAmplitudePair(std::complex<double> alpha, std::complex<double> beta);
  /// Rescales (alpha, beta) to unit norm.
  static ComplexAmplitudePair normalized(std::complex<double> alpha, std::complex<double> beta);

  std::complex<double> alpha() const noexcept { return alpha_; }
  std::complex<double> beta() const noexcept { return beta_; }

 private:
  std::complex<double> alpha_;
  std::complex<double> beta_;
};

}  // namespace opocat
