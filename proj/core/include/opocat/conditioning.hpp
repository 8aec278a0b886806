#pragma once

// Heralding on mode 1, cat/mixture assembly and the d+- conditional
// measurement.
//
// Each polarization group is a 3-mode system (1, 2, 3). Group o holds modes
// (1o, 2e, 3o) and group e holds (1e, 2o, 3e); both evolve under the same
// parameters. After heralding, the cat lives on the four modes
// (2e, 3o | 2o, 3e), group o first.

#include "opocat/fock_oracle.hpp"
#include "opocat/phase_space.hpp"

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace opocat {

struct ConditionalBlocks {
  /// <0|rho|0> on mode 1, unnormalized (declared trace = trace0).
  FockDensityMatrix rho0;
  /// <1|rho|1> on mode 1, unnormalized (declared trace = trace1).
  FockDensityMatrix rho1;
  /// <1|rho|0> on mode 1. Not a state.
  Eigen::MatrixXcd rho_int;
  double trace0 = 0.0;
  double trace1 = 0.0;

  const FockBasis& basis() const noexcept { return rho0.basis(); }
};

/// Slices a 3-mode state on mode 0 (the heralded mode). Needs cutoff(0) >= 1.
ConditionalBlocks conditional_blocks(const FockDensityMatrix& rho123);

struct CatAssembly {
  ConditionalBlocks blocks;
  /// Herald probability trace1 * trace0 (photon found at +45 degrees).
  double p_success = 0.0;
  /// Probability that a single photon passes the 45 degree polarizer.
  double polarization_factor = 0.5;
  ModeBasis mode_basis = ModeBasis::eo;
  /// Four-mode states on (2e, 3o, 2o, 3e), only when the dimension fits the cap.
  std::optional<FockDensityMatrix> cat;
  std::optional<FockDensityMatrix> mixture;
};

/// Throws ZeroHeraldProbability when trace1 or trace0 vanishes.
CatAssembly assemble_cat_and_mixture(const ConditionalBlocks& blocks, std::size_t max_dimension = 2500);

enum class Group { o, e };
enum class CatBranch { cat, mixture };

/// Ladder operator on one mode of the cat; `mode` 0 is direction 2 and 1 is
/// direction 3 within the group.
struct CatLadder {
  Group group = Group::o;
  int mode = 0;
  bool dagger = false;
};
using CatWord = std::vector<CatLadder>;

struct CatTerm {
  std::complex<double> coeff;
  CatWord word;
};

/// Polynomial in the cat ladder operators.
class CatOperator {
 public:
  CatOperator() = default;
  explicit CatOperator(CatLadder l) : terms_{{1.0, {l}}} {}
  static CatOperator identity() {
    CatOperator o;
    o.terms_.push_back({1.0, {}});
    return o;
  }

  /// Annihilation operator of an e/o, +-45 or d+- mode of directions 2, 3,
  /// written in the e/o basis. Direction 1 is rejected.
  static CatOperator annihilation(const ModeLabel& label);

  const std::vector<CatTerm>& terms() const noexcept { return terms_; }
  CatOperator adjoint() const;

  friend CatOperator operator+(const CatOperator& a, const CatOperator& b);
  friend CatOperator operator-(const CatOperator& a, const CatOperator& b);
  friend CatOperator operator*(const CatOperator& a, const CatOperator& b);
  friend CatOperator operator*(std::complex<double> s, const CatOperator& a);

 private:
  std::vector<CatTerm> terms_;
};

/// Read-only view of a cat or mixture for expectation values. Borrows the
/// assembly or matrix it was built from.
class CatStateView {
 public:
  /// Factor-wise evaluation from the conditional blocks.
  CatStateView(const CatAssembly& assembly, CatBranch branch) : assembly_(&assembly), branch_(branch) {}
  /// Evaluation on an assembled four-mode state (2e, 3o, 2o, 3e).
  explicit CatStateView(const FockDensityMatrix& four_mode);

  std::complex<double> expectation(const CatOperator& op) const;

 private:
  const CatAssembly* assembly_ = nullptr;
  CatBranch branch_ = CatBranch::cat;
  const FockDensityMatrix* four_mode_ = nullptr;
};

/// Normalized <1|rho|1> on mode 0 of a 3-mode state written in the +-45
/// basis: the (+45, 2; +45, 3) state after a photon is found in (+45, 1).
FockDensityMatrix herald_45basis(const FockDensityMatrix& rho_plus123);

struct DplusConditioned {
  /// Normalized d+ state.
  FockDensityMatrix dplus;
  /// Probability that d- is found in alpha|0> + beta|1>.
  double probability = 0.0;
};

/// Applies the 50/50 beam splitter d+- = (a2 +- a3)/sqrt2 to a state on
/// (+45, 2; +45, 3) and projects d- onto alpha|0> + beta|1>. The d+ cutoff
/// is the sum of the input cutoffs, so no amplitude is lost.
DplusConditioned to_dpm_and_condition(const FockDensityMatrix& rho45, const ComplexAmplitudePair& amps);

/// Fock matrix of the beam splitter restricted to d- occupations 0..max_minus.
/// Row K * (max_minus + 1) + l holds d+ occupation K (0..c2+c3) and d-
/// occupation l; columns are the input states |n2, n3>.
Eigen::MatrixXd beam_splitter_rows(int cutoff2, int cutoff3, int max_minus);

/// End-to-end cat generation for one parameter set.
struct CatRunSpec {
  SystemParams params;
  double t = 1.0;
  FockBasis basis{2, 10, 10};
  /// 0 picks the largest step allowed by evolve_rho.
  double dt = 0.0;
};
struct CatRun {
  FockDensityMatrix initial;
  FockDensityMatrix evolved;
  ConditionalBlocks blocks;
};

/// Starts from vacuum on mode 1 times the below-threshold equilibrium of
/// modes 2, 3 and evolves with chi1 switched on.
CatRun run_cat_generation(const CatRunSpec& spec);

}  // namespace opocat
