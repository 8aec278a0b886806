#include "opocat/fock_basis.hpp"

#include "opocat/errors.hpp"

#include <cmath>

namespace opocat {

FockBasis::FockBasis(FockBasisConfig config) : config_(std::move(config)) {
  if (config_.cutoffs.empty()) throw Error(ErrorCode::InvalidArgument, "Fock basis needs at least one mode");
  strides_.assign(config_.cutoffs.size(), 1);
  std::size_t dim = 1;
  for (std::size_t k = config_.cutoffs.size(); k-- > 0;) {
    const int c = config_.cutoffs[k];
    if (c < 1) throw Error(ErrorCode::InvalidArgument, "Fock cutoffs must be >= 1");
    strides_[k] = static_cast<Eigen::Index>(dim);
    dim *= static_cast<std::size_t>(c + 1);
    if (dim > config_.max_dimension)
      throw Error(ErrorCode::DimensionCap, "Fock dimension " + std::to_string(dim) +
                                               " exceeds cap " + std::to_string(config_.max_dimension));
  }
  dim_ = static_cast<Eigen::Index>(dim);
}

std::vector<int> FockBasis::occupations(Eigen::Index index) const {
  std::vector<int> occ(config_.cutoffs.size());
  for (int k = 0; k < n_modes(); ++k) occ[static_cast<std::size_t>(k)] = occupation(index, k);
  return occ;
}

Eigen::Index FockBasis::index(std::span<const int> occ) const {
  if (static_cast<int>(occ.size()) != n_modes())
    throw Error(ErrorCode::InvalidArgument, "occupation list has wrong length");
  Eigen::Index idx = 0;
  for (int k = 0; k < n_modes(); ++k) {
    const int n = occ[static_cast<std::size_t>(k)];
    if (n < 0 || n > cutoff(k)) return -1;
    idx += n * stride(k);
  }
  return idx;
}

FockBasis FockBasis::subset(std::span<const int> modes) const {
  FockBasisConfig cfg;
  cfg.max_dimension = config_.max_dimension;
  for (int m : modes) {
    if (m < 0 || m >= n_modes()) throw Error(ErrorCode::InvalidArgument, "subset: mode out of range");
    cfg.cutoffs.push_back(cutoff(m));
  }
  return FockBasis(std::move(cfg));
}

namespace {

// Applies the word right-to-left to |occ>, returning the amplitude; occ is
// updated to the image. Zero amplitude means the image vanished.
double apply_word(std::span<const Ladder> word, std::vector<int>& occ) {
  double amp = 1.0;
  for (std::size_t w = word.size(); w-- > 0;) {
    const auto& op = word[w];
    int& n = occ[static_cast<std::size_t>(op.mode)];
    if (op.dagger) {
      amp *= std::sqrt(static_cast<double>(n + 1));
      ++n;
    } else {
      if (n == 0) return 0.0;
      amp *= std::sqrt(static_cast<double>(n));
      --n;
    }
  }
  return amp;
}

void check_word(const FockBasis& basis, std::span<const Ladder> word) {
  for (const auto& op : word)
    if (op.mode < 0 || op.mode >= basis.n_modes())
      throw Error(ErrorCode::InvalidArgument, "ladder operator on a mode outside the basis");
}

}  // namespace

std::complex<double> expectation(const Eigen::MatrixXcd& m, const FockBasis& basis,
                                 std::span<const Ladder> word) {
  if (m.rows() != basis.dimension() || m.cols() != basis.dimension())
    throw Error(ErrorCode::InvalidArgument, "matrix does not match basis dimension");
  check_word(basis, word);
  // Tr[m W] = sum_i <i|m W|i> = sum_i amp_i * m(i, j(i)) where W|i> = amp_i |j(i)>
  std::complex<double> acc = 0.0;
  std::vector<int> occ;
  for (Eigen::Index i = 0; i < basis.dimension(); ++i) {
    occ = basis.occupations(i);
    const double amp = apply_word(word, occ);
    if (amp == 0.0) continue;
    const Eigen::Index j = basis.index(occ);
    if (j < 0) continue;
    acc += amp * m(i, j);
  }
  return acc;
}

Eigen::MatrixXcd operator_matrix(const FockBasis& basis, std::span<const Ladder> word) {
  check_word(basis, word);
  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(basis.dimension(), basis.dimension());
  std::vector<int> occ;
  for (Eigen::Index i = 0; i < basis.dimension(); ++i) {
    occ = basis.occupations(i);
    const double amp = apply_word(word, occ);
    if (amp == 0.0) continue;
    const Eigen::Index j = basis.index(occ);
    if (j >= 0) w(j, i) = amp;
  }
  return w;
}

}  // namespace opocat
