#include "opocat/conditioning.hpp"

#include "opocat/errors.hpp"
#include "opocat/gaussian_dynamics.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace opocat {

using cd = std::complex<double>;

ConditionalBlocks conditional_blocks(const FockDensityMatrix& rho123) {
  const auto& b = rho123.basis();
  if (b.n_modes() != 3) throw Error(ErrorCode::InvalidArgument, "conditional_blocks needs a 3-mode state");
  if (b.cutoff(0) < 1) throw Error(ErrorCode::InvalidArgument, "heralded mode needs cutoff >= 1");
  const int rest[2] = {1, 2};
  FockBasis sub = b.subset(rest);
  const auto d = sub.dimension();  // == stride of mode 0
  const auto& m = rho123.data();
  Eigen::MatrixXcd r0 = m.block(0, 0, d, d);
  Eigen::MatrixXcd r1 = m.block(d, d, d, d);
  Eigen::MatrixXcd ri = m.block(d, 0, d, d);
  const double t0 = r0.trace().real();
  const double t1 = r1.trace().real();
  return {FockDensityMatrix(sub, std::move(r0), t0), FockDensityMatrix(sub, std::move(r1), t1), std::move(ri),
          t0, t1};
}

CatAssembly assemble_cat_and_mixture(const ConditionalBlocks& blocks, std::size_t max_dimension) {
  if (!(blocks.trace1 > 0.0) || !(blocks.trace0 > 0.0))
    throw Error(ErrorCode::ZeroHeraldProbability, "no one-photon (or zero-photon) component in mode 1");
  CatAssembly a{blocks, blocks.trace1 * blocks.trace0, 0.5, ModeBasis::eo, std::nullopt, std::nullopt};

  const auto d = blocks.basis().dimension();
  if (static_cast<std::size_t>(d * d) <= max_dimension) {
    FockBasisConfig cfg = blocks.basis().config();
    for (int c : blocks.basis().config().cutoffs) cfg.cutoffs.push_back(c);
    cfg.max_dimension = std::max(max_dimension, static_cast<std::size_t>(d * d));
    const FockBasis four(cfg);
    const double norm = 2.0 * blocks.trace1 * blocks.trace0;
    const auto& r0 = blocks.rho0.data();
    const auto& r1 = blocks.rho1.data();
    const Eigen::MatrixXcd ri_dag = blocks.rho_int.adjoint();
    Eigen::MatrixXcd mix = (kron(r1, r0) + kron(r0, r1)) / norm;
    Eigen::MatrixXcd cat = mix + (kron(blocks.rho_int, ri_dag) + kron(ri_dag, blocks.rho_int)) / norm;
    a.mixture.emplace(four, std::move(mix), 1.0);
    a.cat.emplace(four, std::move(cat), 1.0);
  }
  return a;
}

// ---------------------------------------------------------------------------
// cat operator algebra

CatOperator CatOperator::annihilation(const ModeLabel& label) {
  const double h = std::numbers::sqrt2 / 2.0;
  auto eo = [](Direction dir, Polarization pol) {
    if (dir == Direction::k2) return CatOperator(CatLadder{pol == Polarization::e ? Group::o : Group::e, 0, false});
    return CatOperator(CatLadder{pol == Polarization::o ? Group::o : Group::e, 1, false});
  };
  auto plus = [&](Direction dir) { return h * (eo(dir, Polarization::e) + eo(dir, Polarization::o)); };

  if (label.direction == Direction::k1 && label.polarization != Polarization::dplus &&
      label.polarization != Polarization::dminus)
    throw Error(ErrorCode::InvalidArgument, "direction 1 is traced out by the herald");
  switch (label.polarization) {
    case Polarization::e:
    case Polarization::o:
      return eo(label.direction, label.polarization);
    case Polarization::plus45:
      return plus(label.direction);
    case Polarization::minus45:
      return h * (eo(label.direction, Polarization::e) - eo(label.direction, Polarization::o));
    case Polarization::dplus:
      return h * (plus(Direction::k2) + plus(Direction::k3));
    case Polarization::dminus:
      return h * (plus(Direction::k2) - plus(Direction::k3));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown polarization");
}

CatOperator CatOperator::adjoint() const {
  CatOperator out;
  for (const auto& t : terms_) {
    CatWord w(t.word.rbegin(), t.word.rend());
    for (auto& l : w) l.dagger = !l.dagger;
    out.terms_.push_back({std::conj(t.coeff), std::move(w)});
  }
  return out;
}

CatOperator operator+(const CatOperator& a, const CatOperator& b) {
  CatOperator out = a;
  out.terms_.insert(out.terms_.end(), b.terms_.begin(), b.terms_.end());
  return out;
}

CatOperator operator-(const CatOperator& a, const CatOperator& b) { return a + cd(-1.0) * b; }

CatOperator operator*(const CatOperator& a, const CatOperator& b) {
  CatOperator out;
  for (const auto& ta : a.terms_)
    for (const auto& tb : b.terms_) {
      CatWord w = ta.word;
      w.insert(w.end(), tb.word.begin(), tb.word.end());
      out.terms_.push_back({ta.coeff * tb.coeff, std::move(w)});
    }
  return out;
}

CatOperator operator*(cd s, const CatOperator& a) {
  CatOperator out = a;
  for (auto& t : out.terms_) t.coeff *= s;
  return out;
}

CatStateView::CatStateView(const FockDensityMatrix& four_mode) : four_mode_(&four_mode) {
  if (four_mode.basis().n_modes() != 4)
    throw Error(ErrorCode::InvalidArgument, "assembled cat view needs a 4-mode state");
}

std::complex<double> CatStateView::expectation(const CatOperator& op) const {
  cd acc = 0.0;
  if (four_mode_ != nullptr) {
    std::vector<Ladder> w;
    for (const auto& t : op.terms()) {
      w.clear();
      for (const auto& l : t.word) w.push_back({(l.group == Group::o ? 0 : 2) + l.mode, l.dagger});
      acc += t.coeff * opocat::expectation(four_mode_->data(), four_mode_->basis(), w);
    }
    return acc / four_mode_->trace();
  }

  const auto& b = assembly_->blocks;
  const Eigen::MatrixXcd ri_dag = b.rho_int.adjoint();
  std::vector<Ladder> wo, we;
  for (const auto& t : op.terms()) {
    wo.clear();
    we.clear();
    // operators on different groups commute, so each group keeps its own order
    for (const auto& l : t.word) (l.group == Group::o ? wo : we).push_back({l.mode, l.dagger});
    const auto& basis = b.basis();
    const cd t1o = opocat::expectation(b.rho1.data(), basis, wo);
    const cd t0o = opocat::expectation(b.rho0.data(), basis, wo);
    const cd t1e = opocat::expectation(b.rho1.data(), basis, we);
    const cd t0e = opocat::expectation(b.rho0.data(), basis, we);
    cd v = t1o * t0e + t0o * t1e;
    if (branch_ == CatBranch::cat) {
      const cd tio = opocat::expectation(b.rho_int, basis, wo);
      const cd tdo = opocat::expectation(ri_dag, basis, wo);
      const cd tie = opocat::expectation(b.rho_int, basis, we);
      const cd tde = opocat::expectation(ri_dag, basis, we);
      v += tio * tde + tdo * tie;
    }
    acc += t.coeff * v;
  }
  return acc / (2.0 * b.trace1 * b.trace0);
}

// ---------------------------------------------------------------------------
// 45 degree herald and d+- conditioning

FockDensityMatrix herald_45basis(const FockDensityMatrix& rho_plus123) {
  const auto blocks = conditional_blocks(rho_plus123);
  if (!(blocks.trace1 > 0.0)) throw Error(ErrorCode::ZeroHeraldProbability, "no photon in (+45, 1)");
  return blocks.rho1.normalized();
}

Eigen::MatrixXd beam_splitter_rows(int cutoff2, int cutoff3, int max_minus) {
  if (cutoff2 < 0 || cutoff3 < 0 || max_minus < 0)
    throw Error(ErrorCode::InvalidArgument, "beam splitter cutoffs must be >= 0");
  const int kmax = cutoff2 + cutoff3;
  const int lrows = max_minus + 1;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero((kmax + 1) * lrows, (cutoff2 + 1) * (cutoff3 + 1));
  auto lbinom = [](int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); };
  for (int n2 = 0; n2 <= cutoff2; ++n2)
    for (int n3 = 0; n3 <= cutoff3; ++n3) {
      const int col = n2 * (cutoff3 + 1) + n3;
      for (int l = 0; l <= std::min(max_minus, n2 + n3); ++l) {
        const int k = n2 + n3 - l;
        const double lnorm = 0.5 * (std::lgamma(k + 1.0) + std::lgamma(l + 1.0) - std::lgamma(n2 + 1.0) -
                                    std::lgamma(n3 + 1.0) - (n2 + n3) * std::numbers::ln2);
        double amp = 0.0;
        for (int j = std::max(0, l - n3); j <= std::min(n2, l); ++j) {
          const int i = l - j;
          const double mag = std::exp(lbinom(n2, j) + lbinom(n3, i) + lnorm);
          amp += (i % 2 == 0 ? mag : -mag);
        }
        v(k * lrows + l, col) = amp;
      }
    }
  return v;
}

namespace {

// (d+ row block for l = 0, l = 1) per input cutoff pair
const std::pair<Eigen::MatrixXd, Eigen::MatrixXd>& cached_splitter(int c2, int c3) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({c2, c3});
  if (it == cache.end()) {
    const Eigen::MatrixXd rows = beam_splitter_rows(c2, c3, 1);
    const int kdim = c2 + c3 + 1;
    Eigen::MatrixXd v0(kdim, rows.cols()), v1(kdim, rows.cols());
    for (int k = 0; k < kdim; ++k) {
      v0.row(k) = rows.row(2 * k);
      v1.row(k) = rows.row(2 * k + 1);
    }
    it = cache.emplace(std::make_pair(c2, c3), std::make_pair(std::move(v0), std::move(v1))).first;
  }
  return it->second;
}

}  // namespace

DplusConditioned to_dpm_and_condition(const FockDensityMatrix& rho45, const ComplexAmplitudePair& amps) {
  const auto& b = rho45.basis();
  if (b.n_modes() != 2) throw Error(ErrorCode::InvalidArgument, "d+- conditioning needs a 2-mode state");
  const double tr = rho45.trace();
  if (!(tr > 0.0)) throw Error(ErrorCode::InvalidState, "input state has zero trace");
  const auto& [v0, v1] = cached_splitter(b.cutoff(0), b.cutoff(1));
  // <phi| = conj(alpha) <0| + conj(beta) <1| on d-
  const Eigen::MatrixXcd p = std::conj(amps.alpha()) * v0.cast<cd>() + std::conj(amps.beta()) * v1.cast<cd>();
  Eigen::MatrixXcd out = p * (rho45.data() / tr) * p.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  const double prob = out.trace().real();
  if (!(prob > 1e-300)) throw Error(ErrorCode::ZeroHeraldProbability, "d- projection has zero probability");
  FockBasisConfig cfg{{b.cutoff(0) + b.cutoff(1)}, b.config().max_dimension};
  return {FockDensityMatrix(FockBasis(cfg), out / prob, 1.0), prob};
}

CatRun run_cat_generation(const CatRunSpec& spec) {
  const auto v = validate_params(spec.params);
  if (spec.basis.n_modes() != 3) throw Error(ErrorCode::InvalidArgument, "cat generation needs a 3-mode basis");
  const auto steady = steady_state(v.params);
  const GaussianWignerState s0 = tensor(vacuum(1), steady.state);
  FockDensityMatrix rho0 = gaussian_to_rho(s0, spec.basis);
  const Liouvillian l = build_liouvillian(v.params, spec.basis);
  double dt = spec.dt;
  if (dt <= 0.0) dt = l.max_rate() > 0.0 ? 0.05 / l.max_rate() : std::max(spec.t, 1.0);
  FockDensityMatrix rho = evolve_rho(rho0, l, spec.t, dt);
  auto blocks = conditional_blocks(rho);
  return {std::move(rho0), std::move(rho), std::move(blocks)};
}

}  // namespace opocat
