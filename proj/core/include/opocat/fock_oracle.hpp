#pragma once

// Truncated Fock-space representation of the coupled oscillator: density
// matrices, the master-equation Liouvillian, RK4 integration, conversion from
// Gaussian states, Wigner evaluation and moments.

#include "opocat/fock_basis.hpp"
#include "opocat/phase_space.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <filesystem>
#include <span>
#include <vector>

namespace opocat {

class FockDensityMatrix {
 public:
  /// `declared_trace` is the normalization the matrix is supposed to carry;
  /// truncated states and conditional blocks carry less than one.
  FockDensityMatrix(FockBasis basis, Eigen::MatrixXcd data, double declared_trace);
  /// Declared trace taken from the data.
  FockDensityMatrix(FockBasis basis, Eigen::MatrixXcd data);

  static FockDensityMatrix pure(FockBasis basis, const Eigen::VectorXcd& psi);
  static FockDensityMatrix number_state(FockBasis basis, std::span<const int> occupations);

  const FockBasis& basis() const noexcept { return basis_; }
  const Eigen::MatrixXcd& data() const noexcept { return data_; }
  double declared_trace() const noexcept { return declared_trace_; }

  double trace() const;
  /// max |rho - rho^dagger|
  double hermiticity_error() const;
  double min_eigenvalue() const;

  /// Throws InvalidState when Hermiticity, trace or positivity are off by
  /// more than 1e-10, 1e-8 and 1e-8.
  void validate() const;

  /// Unit-trace copy. Throws InvalidState for a vanishing trace.
  FockDensityMatrix normalized() const;

 private:
  FockBasis basis_;
  Eigen::MatrixXcd data_;
  double declared_trace_;
};

/// Reduced state on the listed modes, in the listed order.
FockDensityMatrix partial_trace(const FockDensityMatrix& rho, std::span<const int> keep);
/// Same operation on an arbitrary (possibly non-Hermitian) matrix.
Eigen::MatrixXcd partial_trace(const Eigen::MatrixXcd& m, const FockBasis& basis, std::span<const int> keep);

/// Product state; modes of `a` come first.
FockDensityMatrix tensor(const FockDensityMatrix& a, const FockDensityMatrix& b);
Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

/// H = i chi (a^dagger b^dagger - a b) on a pair of modes; chi may be negative.
struct PairCoupling {
  int mode_a = 0;
  int mode_b = 0;
  double chi = 0.0;
};
struct Damping {
  int mode = 0;
  double kappa = 0.0;
};

/// rho -> K rho + rho K^dagger + sum_k 2 kappa_k a_k rho a_k^dagger with
/// K = sum chi (a^dagger b^dagger - a b) - sum kappa_k a_k^dagger a_k.
/// The operators are sparse D x D matrices; no superoperator is formed.
class Liouvillian {
 public:
  using SparseOp = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  Liouvillian(FockBasis basis, std::vector<PairCoupling> couplings, std::vector<Damping> damping);

  const FockBasis& basis() const noexcept { return basis_; }
  const std::vector<PairCoupling>& couplings() const noexcept { return couplings_; }
  const std::vector<Damping>& damping() const noexcept { return damping_; }

  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const;
  /// Skips the adjoint product by assuming rho is Hermitian.
  Eigen::MatrixXcd apply_hermitian(const Eigen::MatrixXcd& rho) const;

  /// Upper bound on the operator norm of the map, for step-size control.
  double norm_bound() const noexcept { return norm_bound_; }
  /// max(|chi|, kappa) over all terms.
  double max_rate() const noexcept { return max_rate_; }

  const SparseOp& k_operator() const noexcept { return k_; }
  const std::vector<std::pair<double, SparseOp>>& jumps() const noexcept { return jumps_; }

 private:
  FockBasis basis_;
  std::vector<PairCoupling> couplings_;
  std::vector<Damping> damping_;
  SparseOp k_;
  std::vector<std::pair<double, SparseOp>> jumps_;  // (2 kappa, a)
  double norm_bound_ = 0.0;
  double max_rate_ = 0.0;
};

/// Three modes (1, 2, 3): couplings chi1 on (1,2) and chi2 on (2,3), damping
/// on modes 2 and 3. A two-mode basis gives the (2,3) oscillator alone.
Liouvillian build_liouvillian(const SystemParams& p, const FockBasis& basis);

/// Fixed-step RK4. dt must not exceed 0.05 / max rate; the step actually used
/// is also capped by the stability bound of RK4 and divides t evenly. Throws
/// TraceDrift when the trace moves by more than 1e-6.
FockDensityMatrix evolve_rho(const FockDensityMatrix& rho0, const Liouvillian& l, double t, double dt);
FockDensityMatrix evolve_rho(const FockDensityMatrix& rho0, const SystemParams& p, double t, double dt);

/// Stationary state of a two-mode Liouvillian with a unique fixed point,
/// solved directly (sparse LU on the conserved-charge sector that contains
/// the vacuum) instead of by time stepping.
FockDensityMatrix stationary_state(const Liouvillian& l);

/// Zero-mean Gaussian states whose covariance splits into isotropic thermal
/// modes and equal-variance correlated pairs (the oscillator equilibrium).
/// Pairs come from the stationary state of the pair Liouvillian on a padded
/// basis, truncated to `basis`. Throws TruncationLeak when the kept trace is
/// below 0.999 or the pair moments miss the covariance by more than 1e-3, and
/// UnsupportedState for other covariance structures.
FockDensityMatrix gaussian_to_rho(const GaussianWignerState& s, const FockBasis& basis);

/// Wigner function of the reduced state on `modes` at the given points, each
/// of length 2 * modes.size() in (x1, y1, x2, y2, ...) order.
std::vector<double> rho_to_wigner(const FockDensityMatrix& rho, std::span<const int> modes,
                                  std::span<const Eigen::VectorXd> points);
/// Wigner function of a matrix on its full basis (non-Hermitian blocks allowed;
/// returns the real part).
double wigner_at(const Eigen::MatrixXcd& m, const FockBasis& basis, const Eigen::VectorXd& point);

/// <m|D(beta)|n> for 0 <= m, n <= cutoff.
Eigen::MatrixXcd displacement_matrix(int cutoff, std::complex<double> beta);

/// Diagonal of the reduced state of one mode; sums to Tr[rho].
Eigen::VectorXd photon_distribution(const FockDensityMatrix& rho, int mode);

/// Tr[rho w]; words longer than four operators are rejected.
std::complex<double> moment(const FockDensityMatrix& rho, std::span<const Ladder> word);
inline std::complex<double> moment(const FockDensityMatrix& rho, std::initializer_list<Ladder> word) {
  return moment(rho, std::span<const Ladder>(word.begin(), word.size()));
}

/// First and second moments of the quadratures, reported in the Gaussian
/// convention: mean = <z>, cov = <{z_i - m_i, z_j - m_j}>/2.
struct QuadratureMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
QuadratureMoments quadrature_moments(const FockDensityMatrix& rho);

/// Binary dump: uint32 little-endian header length, a JSON header with the
/// cutoffs, then row-major complex128 little-endian entries.
void write_density_matrix(const std::filesystem::path& path, const FockDensityMatrix& rho);
FockDensityMatrix read_density_matrix(const std::filesystem::path& path);

}  // namespace opocat
