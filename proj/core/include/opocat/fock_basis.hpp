#pragma once

// Truncated multimode Fock space. Mode 0 is the most significant digit of a
// flat basis index, so |n0, n1, n2> sits at n0*d1*d2 + n1*d2 + n2.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace opocat {

struct FockBasisConfig {
  /// Largest photon number kept per mode.
  std::vector<int> cutoffs;
  /// Upper bound on the product of (cutoff + 1).
  std::size_t max_dimension = 2500;
};

class FockBasis {
 public:
  /// Throws InvalidArgument for an empty list or a cutoff < 1, DimensionCap
  /// when the product dimension exceeds max_dimension.
  explicit FockBasis(FockBasisConfig config);
  FockBasis(std::initializer_list<int> cutoffs) : FockBasis(FockBasisConfig{cutoffs}) {}

  const FockBasisConfig& config() const noexcept { return config_; }
  int n_modes() const noexcept { return static_cast<int>(config_.cutoffs.size()); }
  int cutoff(int mode) const { return config_.cutoffs.at(static_cast<std::size_t>(mode)); }
  Eigen::Index dimension() const noexcept { return dim_; }
  Eigen::Index stride(int mode) const { return strides_.at(static_cast<std::size_t>(mode)); }

  int occupation(Eigen::Index index, int mode) const {
    return static_cast<int>((index / stride(mode)) % (cutoff(mode) + 1));
  }
  std::vector<int> occupations(Eigen::Index index) const;
  /// Flat index, or -1 when an occupation is outside [0, cutoff].
  Eigen::Index index(std::span<const int> occupations) const;

  /// Basis over the listed modes, in the listed order.
  FockBasis subset(std::span<const int> modes) const;

  friend bool operator==(const FockBasis& a, const FockBasis& b) {
    return a.config_.cutoffs == b.config_.cutoffs;
  }

 private:
  FockBasisConfig config_;
  std::vector<Eigen::Index> strides_;
  Eigen::Index dim_ = 0;
};

/// One creation or annihilation operator on a given mode.
struct Ladder {
  int mode = 0;
  bool dagger = false;
};
inline Ladder create(int mode) { return {mode, true}; }
inline Ladder annihilate(int mode) { return {mode, false}; }

/// Tr[m * w1 w2 ... wk] for any square matrix on `basis`, including
/// non-Hermitian blocks. The word acts on untruncated occupations, so only
/// its final image has to fall inside the cutoffs.
std::complex<double> expectation(const Eigen::MatrixXcd& m, const FockBasis& basis,
                                 std::span<const Ladder> word);

/// Matrix of the word restricted to the truncated space.
Eigen::MatrixXcd operator_matrix(const FockBasis& basis, std::span<const Ladder> word);

}  // namespace opocat
