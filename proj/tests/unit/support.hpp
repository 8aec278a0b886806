#pragma once

// Fixed-seed generators shared by the property tests.

#include "opocat/fock_oracle.hpp"
#include "opocat/phase_space.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>

namespace opocat::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  std::complex<double> cnormal() { return {normal(), normal()}; }

  Eigen::MatrixXcd complex_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = cnormal();
    return m;
  }

  /// Random density matrix G G^dagger / Tr of the given rank.
  FockDensityMatrix density(const FockBasis& basis, Eigen::Index rank = 3) {
    const Eigen::MatrixXcd g = complex_matrix(basis.dimension(), rank);
    Eigen::MatrixXcd rho = g * g.adjoint();
    rho /= rho.trace().real();
    return {basis, rho};
  }

  Eigen::MatrixXcd hermitian(Eigen::Index dim) {
    const Eigen::MatrixXcd g = complex_matrix(dim, dim);
    return 0.5 * (g + g.adjoint());
  }

  /// Haar-ish unitary from the QR of a complex Gaussian matrix.
  Eigen::MatrixXcd unitary(Eigen::Index n) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(complex_matrix(n, n));
    return qr.householderQ();
  }

  /// Real matrix whose eigenvalues all have real part >= margin.
  Eigen::MatrixXd stable_matrix(Eigen::Index n, double margin = 0.1) {
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = normal();
    const double lo = m.eigenvalues().real().minCoeff();
    m.diagonal().array() += margin - lo;
    return m;
  }

  /// Valid Gaussian state: thermal-ish diagonal pushed through a random
  /// passive transform, plus a random mean.
  GaussianWignerState gaussian(int n_modes) {
    Eigen::VectorXd mean(2 * n_modes);
    for (auto& v : mean) v = 0.5 * normal();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
    for (int k = 0; k < 2 * n_modes; k += 2) {
      const double nu = 0.25 * (1.0 + uniform(0.0, 2.0));
      const double sq = uniform(0.6, 1.6);
      cov(k, k) = nu * sq;
      cov(k + 1, k + 1) = nu / sq;
    }
    const Eigen::MatrixXd t = ModeTransform::from_unitary(unitary(n_modes)).quadrature_matrix();
    return {mean, t * cov * t.transpose()};
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace opocat::testing
