#include "opocat/fock_oracle.hpp"

#include "opocat/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace opocat {

using cd = std::complex<double>;

// ---------------------------------------------------------------------------
// density matrix

FockDensityMatrix::FockDensityMatrix(FockBasis basis, Eigen::MatrixXcd data, double declared_trace)
    : basis_(std::move(basis)), data_(std::move(data)), declared_trace_(declared_trace) {
  if (data_.rows() != basis_.dimension() || data_.cols() != basis_.dimension())
    throw Error(ErrorCode::InvalidState, "density matrix does not match basis dimension");
  if (!data_.allFinite()) throw Error(ErrorCode::InvalidState, "density matrix has non-finite entries");
}

FockDensityMatrix::FockDensityMatrix(FockBasis basis, Eigen::MatrixXcd data)
    : FockDensityMatrix(std::move(basis), std::move(data), 0.0) {
  declared_trace_ = trace();
}

FockDensityMatrix FockDensityMatrix::pure(FockBasis basis, const Eigen::VectorXcd& psi) {
  Eigen::MatrixXcd m = psi * psi.adjoint();
  return {std::move(basis), std::move(m)};
}

FockDensityMatrix FockDensityMatrix::number_state(FockBasis basis, std::span<const int> occupations) {
  const Eigen::Index i = basis.index(occupations);
  if (i < 0) throw Error(ErrorCode::InvalidArgument, "number state outside the truncated basis");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(basis.dimension(), basis.dimension());
  m(i, i) = 1.0;
  return {std::move(basis), std::move(m), 1.0};
}

double FockDensityMatrix::trace() const { return data_.trace().real(); }

double FockDensityMatrix::hermiticity_error() const {
  return (data_ - data_.adjoint()).cwiseAbs().maxCoeff();
}

double FockDensityMatrix::min_eigenvalue() const {
  const Eigen::MatrixXcd h = 0.5 * (data_ + data_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void FockDensityMatrix::validate() const {
  if (hermiticity_error() > 1e-10) throw Error(ErrorCode::InvalidState, "density matrix is not Hermitian");
  if (std::abs(trace() - declared_trace_) > 1e-8)
    throw Error(ErrorCode::InvalidState, "trace differs from declared normalization");
  if (min_eigenvalue() < -1e-8) throw Error(ErrorCode::InvalidState, "density matrix is not positive");
}

FockDensityMatrix FockDensityMatrix::normalized() const {
  const double tr = trace();
  if (!(tr > 0.0)) throw Error(ErrorCode::InvalidState, "cannot normalize a state with zero trace");
  return {basis_, data_ / tr, 1.0};
}

namespace {

// Flat offsets of the sub-basis `modes` inside `basis`.
std::vector<Eigen::Index> embedded_offsets(const FockBasis& basis, std::span<const int> modes) {
  const FockBasis sub = basis.subset(modes);
  std::vector<Eigen::Index> off(static_cast<std::size_t>(sub.dimension()));
  for (Eigen::Index s = 0; s < sub.dimension(); ++s) {
    Eigen::Index o = 0;
    for (std::size_t k = 0; k < modes.size(); ++k)
      o += sub.occupation(s, static_cast<int>(k)) * basis.stride(modes[k]);
    off[static_cast<std::size_t>(s)] = o;
  }
  return off;
}

std::vector<int> complement(int n_modes, std::span<const int> keep) {
  std::vector<int> rest;
  for (int m = 0; m < n_modes; ++m)
    if (std::find(keep.begin(), keep.end(), m) == keep.end()) rest.push_back(m);
  return rest;
}

void check_modes(const FockBasis& basis, std::span<const int> modes) {
  if (modes.empty()) throw Error(ErrorCode::InvalidArgument, "empty mode list");
  for (std::size_t a = 0; a < modes.size(); ++a) {
    if (modes[a] < 0 || modes[a] >= basis.n_modes())
      throw Error(ErrorCode::InvalidArgument, "mode index out of range");
    for (std::size_t b = 0; b < a; ++b)
      if (modes[a] == modes[b]) throw Error(ErrorCode::InvalidArgument, "duplicate mode index");
  }
}

}  // namespace

Eigen::MatrixXcd partial_trace(const Eigen::MatrixXcd& m, const FockBasis& basis, std::span<const int> keep) {
  check_modes(basis, keep);
  const auto rest = complement(basis.n_modes(), keep);
  const auto ko = embedded_offsets(basis, keep);
  std::vector<Eigen::Index> to{0};
  if (!rest.empty()) to = embedded_offsets(basis, rest);
  const auto dk = static_cast<Eigen::Index>(ko.size());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dk, dk);
  for (Eigen::Index i = 0; i < dk; ++i)
    for (Eigen::Index j = 0; j < dk; ++j) {
      cd acc = 0.0;
      for (Eigen::Index t : to) acc += m(ko[i] + t, ko[j] + t);
      out(i, j) = acc;
    }
  return out;
}

FockDensityMatrix partial_trace(const FockDensityMatrix& rho, std::span<const int> keep) {
  Eigen::MatrixXcd m = partial_trace(rho.data(), rho.basis(), keep);
  return {rho.basis().subset(keep), std::move(m), rho.declared_trace()};
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

FockDensityMatrix tensor(const FockDensityMatrix& a, const FockDensityMatrix& b) {
  FockBasisConfig cfg = a.basis().config();
  cfg.max_dimension = std::max(cfg.max_dimension, b.basis().config().max_dimension);
  for (int c : b.basis().config().cutoffs) cfg.cutoffs.push_back(c);
  return {FockBasis(std::move(cfg)), kron(a.data(), b.data()), a.declared_trace() * b.declared_trace()};
}

// ---------------------------------------------------------------------------
// Liouvillian

namespace {

using SparseOp = Liouvillian::SparseOp;

SparseOp lowering_operator(const FockBasis& basis, int mode) {
  std::vector<Eigen::Triplet<double>> tr;
  for (Eigen::Index i = 0; i < basis.dimension(); ++i) {
    const int n = basis.occupation(i, mode);
    if (n > 0) tr.emplace_back(i - basis.stride(mode), i, std::sqrt(static_cast<double>(n)));
  }
  SparseOp a(basis.dimension(), basis.dimension());
  a.setFromTriplets(tr.begin(), tr.end());
  return a;
}

double sparse_norm_bound(const SparseOp& m) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows());
  Eigen::VectorXd cols = Eigen::VectorXd::Zero(m.cols());
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SparseOp::InnerIterator it(m, k); it; ++it) {
      rows(it.row()) += std::abs(it.value());
      cols(it.col()) += std::abs(it.value());
    }
  return std::sqrt(rows.maxCoeff() * cols.maxCoeff());
}

}  // namespace

Liouvillian::Liouvillian(FockBasis basis, std::vector<PairCoupling> couplings, std::vector<Damping> damping)
    : basis_(std::move(basis)), couplings_(std::move(couplings)), damping_(std::move(damping)) {
  const auto d = basis_.dimension();
  std::vector<Eigen::Triplet<double>> tr;
  for (const auto& c : couplings_) {
    if (c.mode_a < 0 || c.mode_a >= basis_.n_modes() || c.mode_b < 0 || c.mode_b >= basis_.n_modes() ||
        c.mode_a == c.mode_b)
      throw Error(ErrorCode::InvalidArgument, "pair coupling needs two distinct modes of the basis");
    if (!std::isfinite(c.chi)) throw Error(ErrorCode::InvalidParams, "coupling must be finite");
    max_rate_ = std::max(max_rate_, std::abs(c.chi));
    for (Eigen::Index i = 0; i < d; ++i) {
      const int na = basis_.occupation(i, c.mode_a), nb = basis_.occupation(i, c.mode_b);
      if (na < basis_.cutoff(c.mode_a) && nb < basis_.cutoff(c.mode_b))
        tr.emplace_back(i + basis_.stride(c.mode_a) + basis_.stride(c.mode_b), i,
                        c.chi * std::sqrt(static_cast<double>((na + 1) * (nb + 1))));
      if (na > 0 && nb > 0)
        tr.emplace_back(i - basis_.stride(c.mode_a) - basis_.stride(c.mode_b), i,
                        -c.chi * std::sqrt(static_cast<double>(na * nb)));
    }
  }
  double jump_bound = 0.0;
  for (const auto& dm : damping_) {
    if (dm.mode < 0 || dm.mode >= basis_.n_modes())
      throw Error(ErrorCode::InvalidArgument, "damping on a mode outside the basis");
    if (!std::isfinite(dm.kappa) || dm.kappa < 0.0)
      throw Error(ErrorCode::InvalidParams, "damping rate must be finite and >= 0");
    if (dm.kappa == 0.0) continue;
    max_rate_ = std::max(max_rate_, dm.kappa);
    for (Eigen::Index i = 0; i < d; ++i)
      tr.emplace_back(i, i, -dm.kappa * basis_.occupation(i, dm.mode));
    jumps_.emplace_back(2.0 * dm.kappa, lowering_operator(basis_, dm.mode));
    jump_bound += 2.0 * dm.kappa * basis_.cutoff(dm.mode);
  }
  k_.resize(d, d);
  k_.setFromTriplets(tr.begin(), tr.end());
  norm_bound_ = 2.0 * sparse_norm_bound(k_) + jump_bound;
}

Eigen::MatrixXcd Liouvillian::apply(const Eigen::MatrixXcd& rho) const {
  const Eigen::MatrixXcd rho_dag = rho.adjoint();
  Eigen::MatrixXcd out = k_ * rho;
  const Eigen::MatrixXcd right = k_ * rho_dag;  // (rho K^dagger)^dagger
  out += right.adjoint();
  for (const auto& [rate, a] : jumps_) {
    const Eigen::MatrixXcd x = a * rho_dag;  // (rho a^dagger)^dagger
    out += rate * (a * x.adjoint());
  }
  return out;
}

Eigen::MatrixXcd Liouvillian::apply_hermitian(const Eigen::MatrixXcd& rho) const {
  const Eigen::MatrixXcd kr = k_ * rho;
  Eigen::MatrixXcd out = kr + kr.adjoint();
  for (const auto& [rate, a] : jumps_) {
    const Eigen::MatrixXcd x = a * rho;
    out += rate * (a * x.adjoint());
  }
  return out;
}

Liouvillian build_liouvillian(const SystemParams& p, const FockBasis& basis) {
  const auto v = validate_params(p);
  if (basis.n_modes() == 3)
    return Liouvillian(basis, {{0, 1, v.params.chi1}, {1, 2, v.params.chi2}},
                       {{1, v.params.kappa2}, {2, v.params.kappa3}});
  if (basis.n_modes() == 2)
    return Liouvillian(basis, {{0, 1, v.params.chi2}}, {{0, v.params.kappa2}, {1, v.params.kappa3}});
  throw Error(ErrorCode::InvalidArgument, "Liouvillian needs a 3-mode (or 2-mode) basis");
}

FockDensityMatrix evolve_rho(const FockDensityMatrix& rho0, const Liouvillian& l, double t, double dt) {
  if (!(rho0.basis() == l.basis()))
    throw Error(ErrorCode::InvalidArgument, "state and Liouvillian use different bases");
  if (!std::isfinite(t) || t < 0.0) throw Error(ErrorCode::InvalidArgument, "t must be finite and >= 0");
  if (!std::isfinite(dt) || dt <= 0.0) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (l.max_rate() > 0.0 && dt > 0.05 / l.max_rate() * (1.0 + 1e-12))
    throw Error(ErrorCode::InvalidArgument, "dt exceeds 0.05 / max rate");
  if (rho0.hermiticity_error() > 1e-10 * std::max(1.0, rho0.data().cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::InvalidState, "evolve_rho needs a Hermitian state");
  if (t == 0.0) return rho0;

  double h_max = dt;
  if (l.norm_bound() > 0.0) h_max = std::min(h_max, 2.5 / l.norm_bound());
  const auto steps = static_cast<long>(std::ceil(t / h_max - 1e-12));
  const double h = t / static_cast<double>(steps);

  Eigen::MatrixXcd rho = rho0.data();
  const double tr0 = rho.trace().real();
  for (long s = 0; s < steps; ++s) {
    const Eigen::MatrixXcd k1 = l.apply_hermitian(rho);
    const Eigen::MatrixXcd k2 = l.apply_hermitian(rho + 0.5 * h * k1);
    const Eigen::MatrixXcd k3 = l.apply_hermitian(rho + 0.5 * h * k2);
    const Eigen::MatrixXcd k4 = l.apply_hermitian(rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = 0.5 * (rho + rho.adjoint()).eval();
  }
  const double drift = std::abs(rho.trace().real() - tr0);
  if (drift > 1e-6) throw Error(ErrorCode::TraceDrift, "trace drifted by " + std::to_string(drift));
  return {rho0.basis(), std::move(rho), rho0.declared_trace()};
}

FockDensityMatrix evolve_rho(const FockDensityMatrix& rho0, const SystemParams& p, double t, double dt) {
  return evolve_rho(rho0, build_liouvillian(p, rho0.basis()), t, dt);
}

// ---------------------------------------------------------------------------
// stationary state

FockDensityMatrix stationary_state(const Liouvillian& l) {
  const auto& basis = l.basis();
  if (basis.n_modes() != 2 || l.couplings().size() > 1)
    throw Error(ErrorCode::InvalidArgument, "stationary_state supports a two-mode pair Liouvillian");
  const auto d = basis.dimension();

  // n0 - n1 is conserved by the pair Hamiltonian and by the jumps acting on
  // both sides, so the vacuum's steady state lives where Q(i) == Q(j).
  auto charge = [&](Eigen::Index i) { return basis.occupation(i, 0) - basis.occupation(i, 1); };
  std::vector<Eigen::Index> id(static_cast<std::size_t>(d * d), -1);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> entries;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (charge(i) == charge(j)) {
        id[static_cast<std::size_t>(i * d + j)] = static_cast<Eigen::Index>(entries.size());
        entries.emplace_back(i, j);
      }
  const auto nu = static_cast<Eigen::Index>(entries.size());
  auto uid = [&](Eigen::Index i, Eigen::Index j) { return id[static_cast<std::size_t>(i * d + j)]; };

  // The map is real in the Fock basis; build its columns L(E_kl).
  using ColOp = Eigen::SparseMatrix<double, Eigen::ColMajor>;
  const ColOp kc = l.k_operator();
  std::vector<std::pair<double, ColOp>> jc;
  for (const auto& [rate, a] : l.jumps()) jc.emplace_back(rate, a);

  const Eigen::Index trace_row = uid(0, 0);
  std::vector<Eigen::Triplet<double>> tr;
  for (Eigen::Index c = 0; c < nu; ++c) {
    const auto [k, lcol] = entries[static_cast<std::size_t>(c)];
    auto add = [&](Eigen::Index i, Eigen::Index j, double v) {
      const Eigen::Index r = uid(i, j);
      if (r < 0) throw Error(ErrorCode::InvalidState, "Liouvillian leaves the conserved sector");
      if (r != trace_row) tr.emplace_back(r, c, v);
    };
    for (ColOp::InnerIterator it(kc, k); it; ++it) add(it.row(), lcol, it.value());
    for (ColOp::InnerIterator it(kc, lcol); it; ++it) add(k, it.row(), it.value());
    for (const auto& [rate, a] : jc)
      for (ColOp::InnerIterator ik(a, k); ik; ++ik)
        for (ColOp::InnerIterator il(a, lcol); il; ++il) add(ik.row(), il.row(), rate * ik.value() * il.value());
    if (k == lcol) tr.emplace_back(trace_row, c, 1.0);
  }
  Eigen::SparseMatrix<double> a(nu, nu);
  a.setFromTriplets(tr.begin(), tr.end());
  a.makeCompressed();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu);
  rhs(trace_row) = 1.0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorCode::InvalidState, "stationary system is singular (no unique steady state)");
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw Error(ErrorCode::InvalidState, "stationary solve failed");

  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  for (Eigen::Index c = 0; c < nu; ++c) {
    const auto [i, j] = entries[static_cast<std::size_t>(c)];
    rho(i, j) = x(c);
  }
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return {basis, std::move(rho), 1.0};
}

// ---------------------------------------------------------------------------
// Gaussian -> Fock

namespace {

constexpr int kStationaryPadding = 12;

Eigen::Matrix2d block(const Eigen::MatrixXd& cov, int p, int q) { return cov.block<2, 2>(2 * p, 2 * q); }

Eigen::MatrixXcd thermal_block(double nbar, int cutoff) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
  const double q = nbar / (1.0 + nbar);
  double pn = 1.0 / (1.0 + nbar);
  for (int n = 0; n <= cutoff; ++n) {
    m(n, n) = pn;
    pn *= q;
  }
  return m;
}

Eigen::MatrixXcd pair_block(double s, double c, int cutoff_p, int cutoff_q) {
  const double r = c / s;
  const int pad = std::max(cutoff_p, cutoff_q) + kStationaryPadding;
  FockBasisConfig cfg{{pad, pad}, static_cast<std::size_t>((pad + 1) * (pad + 1))};
  const FockBasis padded(cfg);
  const Liouvillian l(padded, {{0, 1, r}}, {{0, 1.0}, {1, 1.0}});
  const FockDensityMatrix full = stationary_state(l);

  const FockBasis target({cutoff_p, cutoff_q});
  Eigen::MatrixXcd m(target.dimension(), target.dimension());
  for (Eigen::Index i = 0; i < target.dimension(); ++i)
    for (Eigen::Index j = 0; j < target.dimension(); ++j) {
      const int oi[2] = {target.occupation(i, 0), target.occupation(i, 1)};
      const int oj[2] = {target.occupation(j, 0), target.occupation(j, 1)};
      m(i, j) = full.data()(padded.index(oi), padded.index(oj));
    }

  // the truncated pair must still carry the covariance it came from
  const FockDensityMatrix t(target, m);
  const double nbar = 2.0 * s - 0.5;
  const double n0 = moment(t, {create(0), annihilate(0)}).real();
  const double n1 = moment(t, {create(1), annihilate(1)}).real();
  const cd ab = moment(t, {annihilate(0), annihilate(1)});
  const double err = std::max({std::abs(n0 - nbar), std::abs(n1 - nbar), std::abs(ab - cd(2.0 * c, 0.0))});
  if (err > 1e-3)
    throw Error(ErrorCode::TruncationLeak,
                "truncated pair misses the covariance by " + std::to_string(err) + "; raise the cutoffs");
  return m;
}

}  // namespace

FockDensityMatrix gaussian_to_rho(const GaussianWignerState& s, const FockBasis& basis) {
  const int n = s.n_modes();
  if (basis.n_modes() != n) throw Error(ErrorCode::InvalidArgument, "basis and state mode counts differ");
  const auto& cov = s.cov();
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  const double tol = 1e-10 * scale;
  if (s.mean().cwiseAbs().maxCoeff() > tol)
    throw Error(ErrorCode::UnsupportedState, "gaussian_to_rho supports zero-mean states only");

  // connected components of the mode coupling graph
  std::vector<int> comp(static_cast<std::size_t>(n));
  std::iota(comp.begin(), comp.end(), 0);
  auto find = [&](int x) {
    while (comp[static_cast<std::size_t>(x)] != x) x = comp[static_cast<std::size_t>(x)];
    return x;
  };
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q)
      if (block(cov, p, q).cwiseAbs().maxCoeff() > tol) comp[static_cast<std::size_t>(find(q))] = find(p);

  struct Factor {
    std::vector<int> modes;
    Eigen::MatrixXcd rho;
  };
  std::vector<Factor> factors;
  for (int p = 0; p < n; ++p) {
    if (find(p) != p) continue;
    std::vector<int> modes;
    for (int q = 0; q < n; ++q)
      if (find(q) == p) modes.push_back(q);

    if (modes.size() == 1) {
      const Eigen::Matrix2d b = block(cov, p, p);
      if (std::abs(b(0, 0) - b(1, 1)) > tol || std::abs(b(0, 1)) > tol)
        throw Error(ErrorCode::UnsupportedState, "single-mode factor is not an isotropic thermal state");
      const double nbar = std::max(0.0, 2.0 * b(0, 0) - 0.5);
      factors.push_back({modes, thermal_block(nbar, basis.cutoff(p))});
    } else if (modes.size() == 2) {
      const int q = modes[1];
      const Eigen::Matrix2d bp = block(cov, p, p), bq = block(cov, q, q), x = block(cov, p, q);
      const double sv = bp(0, 0);
      const bool equal = std::abs(bp(1, 1) - sv) < tol && std::abs(bq(0, 0) - sv) < tol &&
                         std::abs(bq(1, 1) - sv) < tol && std::abs(bp(0, 1)) < tol && std::abs(bq(0, 1)) < tol;
      const bool pattern = std::abs(x(0, 1)) < tol && std::abs(x(1, 0)) < tol && std::abs(x(0, 0) + x(1, 1)) < tol;
      const double c = x(0, 0);
      if (!equal || !pattern || std::abs(sv * sv - c * c - sv * kVacuumVariance) > 1e-9 * scale * scale)
        throw Error(ErrorCode::UnsupportedState, "correlated pair is not an oscillator equilibrium");
      factors.push_back({modes, pair_block(sv, c, basis.cutoff(p), basis.cutoff(q))});
    } else {
      throw Error(ErrorCode::UnsupportedState, "gaussian_to_rho supports factors of at most two modes");
    }
  }

  // rho(i, j) = prod over factors of rho_f(i_f, j_f)
  const auto d = basis.dimension();
  std::vector<std::vector<Eigen::Index>> sub(factors.size(), std::vector<Eigen::Index>(static_cast<std::size_t>(d)));
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const FockBasis fb = basis.subset(factors[f].modes);
    for (Eigen::Index i = 0; i < d; ++i) {
      Eigen::Index o = 0;
      for (std::size_t k = 0; k < factors[f].modes.size(); ++k)
        o += basis.occupation(i, factors[f].modes[k]) * fb.stride(static_cast<int>(k));
      sub[f][static_cast<std::size_t>(i)] = o;
    }
  }
  Eigen::MatrixXcd rho(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      cd v = 1.0;
      for (std::size_t f = 0; f < factors.size() && v != 0.0; ++f)
        v *= factors[f].rho(sub[f][static_cast<std::size_t>(i)], sub[f][static_cast<std::size_t>(j)]);
      rho(i, j) = v;
    }
  FockDensityMatrix out(basis, std::move(rho));
  if (out.trace() < 0.999)
    throw Error(ErrorCode::TruncationLeak,
                "truncated trace " + std::to_string(out.trace()) + " < 0.999; raise the cutoffs");
  return out;
}

// ---------------------------------------------------------------------------
// Wigner function

Eigen::MatrixXcd displacement_matrix(int cutoff, cd beta) {
  if (cutoff < 0) throw Error(ErrorCode::InvalidArgument, "cutoff must be >= 0");
  const double x = std::norm(beta);
  const double env = std::exp(-0.5 * x);
  const int dim = cutoff + 1;
  Eigen::MatrixXcd out(dim, dim);
  std::vector<cd> bpow(static_cast<std::size_t>(dim)), mbpow(static_cast<std::size_t>(dim));
  bpow[0] = mbpow[0] = 1.0;
  for (int k = 1; k < dim; ++k) {
    bpow[static_cast<std::size_t>(k)] = bpow[static_cast<std::size_t>(k - 1)] * beta;
    mbpow[static_cast<std::size_t>(k)] = mbpow[static_cast<std::size_t>(k - 1)] * (-std::conj(beta));
  }
  std::vector<double> lag(static_cast<std::size_t>(dim));
  for (int a = 0; a < dim; ++a) {
    // L_n^(a)(x) for n = 0 .. dim-1-a
    const int nmax = dim - 1 - a;
    lag[0] = 1.0;
    if (nmax >= 1) lag[1] = 1.0 + a - x;
    for (int k = 1; k < nmax; ++k)
      lag[static_cast<std::size_t>(k + 1)] =
          ((2.0 * k + 1.0 + a - x) * lag[static_cast<std::size_t>(k)] - (k + a) * lag[static_cast<std::size_t>(k - 1)]) / (k + 1.0);
    for (int n = 0; n <= nmax; ++n) {
      const int m = n + a;
      const double fac = std::exp(0.5 * (std::lgamma(n + 1.0) - std::lgamma(m + 1.0)));
      const double base = fac * env * lag[static_cast<std::size_t>(n)];
      out(m, n) = base * bpow[static_cast<std::size_t>(a)];
      if (a > 0) out(n, m) = base * mbpow[static_cast<std::size_t>(a)];
    }
  }
  return out;
}

double wigner_at(const Eigen::MatrixXcd& m, const FockBasis& basis, const Eigen::VectorXd& point) {
  const int k = basis.n_modes();
  if (point.size() != 2 * k) throw Error(ErrorCode::InvalidArgument, "Wigner point has wrong dimension");
  if (m.rows() != basis.dimension()) throw Error(ErrorCode::InvalidArgument, "matrix/basis mismatch");
  // W = (2/pi)^k Tr[m (x)_k D(2 alpha_k) Pi]
  std::vector<Eigen::MatrixXcd> dp;
  for (int q = 0; q < k; ++q) {
    Eigen::MatrixXcd d = displacement_matrix(basis.cutoff(q), 2.0 * cd(point(2 * q), point(2 * q + 1)));
    for (int n = 1; n < d.cols(); n += 2) d.col(n) *= -1.0;
    dp.push_back(std::move(d));
  }
  const auto dim = basis.dimension();
  std::vector<std::vector<int>> occ(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < dim; ++i) occ[static_cast<std::size_t>(i)] = basis.occupations(i);
  cd acc = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) {
      const cd v = m(i, j);
      if (v == 0.0) continue;
      cd o = 1.0;
      for (int q = 0; q < k; ++q)
        o *= dp[static_cast<std::size_t>(q)](occ[static_cast<std::size_t>(j)][static_cast<std::size_t>(q)],
                                             occ[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)]);
      acc += v * o;
    }
  return std::pow(2.0 / std::numbers::pi, k) * acc.real();
}

std::vector<double> rho_to_wigner(const FockDensityMatrix& rho, std::span<const int> modes,
                                  std::span<const Eigen::VectorXd> points) {
  const FockDensityMatrix red = partial_trace(rho, modes);
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(wigner_at(red.data(), red.basis(), p));
  return out;
}

Eigen::VectorXd photon_distribution(const FockDensityMatrix& rho, int mode) {
  const int keep[1] = {mode};
  return partial_trace(rho.data(), rho.basis(), keep).diagonal().real();
}

std::complex<double> moment(const FockDensityMatrix& rho, std::span<const Ladder> word) {
  if (word.size() > 4) throw Error(ErrorCode::InvalidArgument, "moment words are limited to four operators");
  return expectation(rho.data(), rho.basis(), word);
}

QuadratureMoments quadrature_moments(const FockDensityMatrix& rho) {
  const int n = rho.basis().n_modes();
  const double tr = rho.trace();
  std::vector<cd> a(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) a[static_cast<std::size_t>(k)] = moment(rho, {annihilate(k)}) / tr;
  QuadratureMoments qm{Eigen::VectorXd(2 * n), Eigen::MatrixXd(2 * n, 2 * n)};
  for (int k = 0; k < n; ++k) {
    qm.mean(2 * k) = a[static_cast<std::size_t>(k)].real();
    qm.mean(2 * k + 1) = a[static_cast<std::size_t>(k)].imag();
  }
  for (int p = 0; p < n; ++p) {
    const cd aa = moment(rho, {annihilate(p), annihilate(p)}) / tr;
    const double nn = moment(rho, {create(p), annihilate(p)}).real() / tr;
    qm.cov(2 * p, 2 * p) = (2.0 * aa.real() + 2.0 * nn + 1.0) / 4.0;
    qm.cov(2 * p + 1, 2 * p + 1) = (-2.0 * aa.real() + 2.0 * nn + 1.0) / 4.0;
    qm.cov(2 * p, 2 * p + 1) = qm.cov(2 * p + 1, 2 * p) = aa.imag() / 2.0;
    for (int q = p + 1; q < n; ++q) {
      const cd ab = moment(rho, {annihilate(p), annihilate(q)}) / tr;
      const cd adb = moment(rho, {create(p), annihilate(q)}) / tr;
      qm.cov(2 * p, 2 * q) = (ab.real() + adb.real()) / 2.0;
      qm.cov(2 * p, 2 * q + 1) = (ab.imag() + adb.imag()) / 2.0;
      qm.cov(2 * p + 1, 2 * q) = (ab.imag() - adb.imag()) / 2.0;
      qm.cov(2 * p + 1, 2 * q + 1) = (adb.real() - ab.real()) / 2.0;
      for (int u = 0; u < 2; ++u)
        for (int v = 0; v < 2; ++v) qm.cov(2 * q + v, 2 * p + u) = qm.cov(2 * p + u, 2 * q + v);
    }
  }
  qm.cov -= qm.mean * qm.mean.transpose();
  return qm;
}

}  // namespace opocat
