#include "opocat/phase_space.hpp"

#include "opocat/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace opocat {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void require_mode(int mode, int n_modes, const char* what) {
  if (mode < 0 || mode >= n_modes)
    throw Error(ErrorCode::InvalidArgument, std::string(what) + ": mode index out of range");
}

}  // namespace

ValidatedParams validate_params(const SystemParams& p) {
  if (!finite_nonneg(p.chi1) || !finite_nonneg(p.chi2))
    throw Error(ErrorCode::InvalidParams, "couplings must be finite and non-negative");
  if (!std::isfinite(p.kappa2) || !std::isfinite(p.kappa3) || p.kappa2 <= 0.0 || p.kappa3 <= 0.0)
    throw Error(ErrorCode::InvalidParams, "decay rates must be finite and positive");
  ValidatedParams v;
  v.params = p;
  v.ratio = p.chi2 / std::sqrt(p.kappa2 * p.kappa3);
  v.above_threshold = p.chi2 * p.chi2 > p.kappa2 * p.kappa3;
  return v;
}

bool is_valid_in(const ModeLabel& label, ModeBasis basis) noexcept {
  switch (label.polarization) {
    case Polarization::e:
    case Polarization::o:
      return basis == ModeBasis::eo;
    case Polarization::plus45:
    case Polarization::minus45:
      return basis == ModeBasis::pm45 || basis == ModeBasis::dpm;
    case Polarization::dplus:
    case Polarization::dminus:
      return basis == ModeBasis::dpm && label.direction == Direction::k2;
  }
  return false;
}

std::string to_string(const ModeLabel& label) {
  std::string s;
  switch (label.direction) {
    case Direction::k1: s = "1"; break;
    case Direction::k2: s = "2"; break;
    case Direction::k3: s = "3"; break;
  }
  switch (label.polarization) {
    case Polarization::e: return s + "e";
    case Polarization::o: return s + "o";
    case Polarization::plus45: return s + "+45";
    case Polarization::minus45: return s + "-45";
    case Polarization::dplus: return "d+";
    case Polarization::dminus: return "d-";
  }
  return s;
}

Eigen::MatrixXd symplectic_form(int n_modes) {
  Eigen::MatrixXd om = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    om(2 * k, 2 * k + 1) = 1.0;
    om(2 * k + 1, 2 * k) = -1.0;
  }
  return om;
}

GaussianWignerState::GaussianWignerState(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  const auto n = mean_.size();
  if (n == 0 || n % 2 != 0 || cov_.rows() != n || cov_.cols() != n)
    throw Error(ErrorCode::InvalidState, "mean/cov dimensions must be 2n and 2n x 2n");
  if (!mean_.allFinite() || !cov_.allFinite())
    throw Error(ErrorCode::InvalidState, "non-finite entries");
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorCode::InvalidState, "covariance is not symmetric");
  cov_ = 0.5 * (cov_ + cov_.transpose());
  const auto nu = symplectic_eigenvalues();
  if (nu.front() < kVacuumVariance - 1e-9)
    throw Error(ErrorCode::InvalidState, "covariance violates the uncertainty bound");
}

std::vector<double> GaussianWignerState::symplectic_eigenvalues() const {
  const int n = n_modes();
  const Eigen::MatrixXcd m =
      std::complex<double>(0.0, 1.0) * (symplectic_form(n) * cov_).cast<std::complex<double>>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  std::vector<double> all;
  all.reserve(2 * n);
  for (int i = 0; i < 2 * n; ++i) all.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(all.begin(), all.end());
  // eigenvalues come in +-nu pairs
  std::vector<double> nu;
  nu.reserve(n);
  for (int i = 0; i < 2 * n; i += 2) nu.push_back(0.5 * (all[i] + all[i + 1]));
  return nu;
}

double GaussianWignerState::wigner(const Eigen::VectorXd& z) const {
  if (z.size() != mean_.size())
    throw Error(ErrorCode::InvalidArgument, "wigner: point dimension mismatch");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov_);
  const Eigen::VectorXd d = z - mean_;
  const double q = d.dot(ldlt.solve(d));
  const double det = cov_.determinant();
  const double norm = std::pow(2.0 * std::numbers::pi, -static_cast<double>(n_modes())) / std::sqrt(det);
  return norm * std::exp(-0.5 * q);
}

GaussianWignerState tensor(const GaussianWignerState& a, const GaussianWignerState& b) {
  const auto na = a.mean().size();
  const auto nb = b.mean().size();
  Eigen::VectorXd mean(na + nb);
  mean << a.mean(), b.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  return {std::move(mean), std::move(cov)};
}

GaussianWignerState standard_state(const StandardStateKind& kind) {
  struct Visitor {
    GaussianWignerState operator()(const Vacuum& v) const {
      if (v.n_modes < 1) throw Error(ErrorCode::InvalidArgument, "vacuum: n_modes must be >= 1");
      const int d = 2 * v.n_modes;
      return {Eigen::VectorXd::Zero(d), kVacuumVariance * Eigen::MatrixXd::Identity(d, d)};
    }
    GaussianWignerState operator()(const Thermal& t) const {
      if (!finite_nonneg(t.nbar)) throw Error(ErrorCode::InvalidArgument, "thermal: nbar must be >= 0");
      if (t.n_modes < 1) throw Error(ErrorCode::InvalidArgument, "thermal: n_modes must be >= 1");
      const int d = 2 * t.n_modes;
      const double var = (2.0 * t.nbar + 1.0) * kVacuumVariance;
      return {Eigen::VectorXd::Zero(d), var * Eigen::MatrixXd::Identity(d, d)};
    }
    GaussianWignerState operator()(const OpoEquilibrium& o) const {
      const double r = o.ratio;
      if (!std::isfinite(r) || r < 0.0)
        throw Error(ErrorCode::InvalidArgument, "opo_equilibrium: ratio must be >= 0");
      if (r >= 1.0)
        throw Error(ErrorCode::RequiresBelowThreshold, "opo_equilibrium needs r < 1");
      // cov = C^{-1}/4 with C having x-coupling -r and y-coupling +r
      const double s = kVacuumVariance / (1.0 - r * r);
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
      cov(0, 0) = cov(1, 1) = cov(2, 2) = cov(3, 3) = s;
      cov(0, 2) = cov(2, 0) = r * s;
      cov(1, 3) = cov(3, 1) = -r * s;
      return {Eigen::VectorXd::Zero(4), std::move(cov)};
    }
  };
  return std::visit(Visitor{}, kind);
}

double purity(const GaussianWignerState& s) {
  const double det = s.cov().determinant();
  if (!(det > 0.0)) throw Error(ErrorCode::SingularCovariance, "det cov <= 0");
  return std::pow(kVacuumVariance, s.n_modes()) / std::sqrt(det);
}

double mean_photon_number(const GaussianWignerState& s, int mode) {
  require_mode(mode, s.n_modes(), "mean_photon_number");
  const int i = 2 * mode;
  const auto& m = s.mean();
  const auto& c = s.cov();
  return c(i, i) + c(i + 1, i + 1) + m(i) * m(i) + m(i + 1) * m(i + 1) - 2.0 * kVacuumVariance;
}

GaussianWignerState marginalize(const GaussianWignerState& s, std::span<const int> keep) {
  if (keep.empty()) throw Error(ErrorCode::InvalidArgument, "marginalize: empty mode set");
  std::vector<int> idx;
  idx.reserve(2 * keep.size());
  for (int k : keep) {
    require_mode(k, s.n_modes(), "marginalize");
    if (std::find(idx.begin(), idx.end(), 2 * k) != idx.end())
      throw Error(ErrorCode::InvalidArgument, "marginalize: duplicate mode");
    idx.push_back(2 * k);
    idx.push_back(2 * k + 1);
  }
  const auto d = static_cast<Eigen::Index>(idx.size());
  Eigen::VectorXd mean(d);
  Eigen::MatrixXd cov(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    mean(a) = s.mean()(idx[a]);
    for (Eigen::Index b = 0; b < d; ++b) cov(a, b) = s.cov()(idx[a], idx[b]);
  }
  return {std::move(mean), std::move(cov)};
}

ModeTransform ModeTransform::from_unitary(const Eigen::MatrixXcd& u) {
  if (u.rows() != u.cols() || u.rows() == 0)
    throw Error(ErrorCode::InvalidArgument, "mode transform must be square");
  const auto n = u.rows();
  Eigen::MatrixXd t(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = u(i, j).real(), im = u(i, j).imag();
      t(2 * i, 2 * j) = re;
      t(2 * i, 2 * j + 1) = -im;
      t(2 * i + 1, 2 * j) = im;
      t(2 * i + 1, 2 * j + 1) = re;
    }
  return from_quadrature_matrix(std::move(t));
}

ModeTransform ModeTransform::from_quadrature_matrix(Eigen::MatrixXd t) {
  if (t.rows() != t.cols() || t.rows() == 0 || t.rows() % 2 != 0)
    throw Error(ErrorCode::InvalidArgument, "quadrature matrix must be 2n x 2n");
  const auto d = t.rows();
  const int n = static_cast<int>(d / 2);
  const Eigen::MatrixXd om = symplectic_form(n);
  const double orth = (t.transpose() * t - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
  const double symp = (t * om * t.transpose() - om).cwiseAbs().maxCoeff();
  if (orth > 1e-10 || symp > 1e-10)
    throw Error(ErrorCode::NonSymplectic, "transform is not orthogonal-symplectic within 1e-10");
  return ModeTransform(std::move(t));
}

ModeTransform ModeTransform::rot45(int n_modes, int mode_e, int mode_o) {
  require_mode(mode_e, n_modes, "rot45");
  require_mode(mode_o, n_modes, "rot45");
  if (mode_e == mode_o) throw Error(ErrorCode::InvalidArgument, "rot45: modes must differ");
  const double h = std::numbers::sqrt2 / 2.0;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(n_modes, n_modes);
  u(mode_e, mode_e) = h;
  u(mode_e, mode_o) = h;
  u(mode_o, mode_e) = h;
  u(mode_o, mode_o) = -h;
  return from_unitary(u);
}

ModeTransform ModeTransform::dpm(int n_modes, int mode_p, int mode_q) {
  return rot45(n_modes, mode_p, mode_q);
}

ModeTransform ModeTransform::phase(int n_modes, int mode, double phi) {
  require_mode(mode, n_modes, "phase");
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(n_modes, n_modes);
  u(mode, mode) = std::polar(1.0, phi);
  return from_unitary(u);
}

GaussianWignerState apply_mode_transform(const GaussianWignerState& s, const ModeTransform& t) {
  if (t.n_modes() != s.n_modes())
    throw Error(ErrorCode::InvalidArgument, "transform dimension does not match state");
  const auto& T = t.quadrature_matrix();
  Eigen::MatrixXd cov = T * s.cov() * T.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  return {T * s.mean(), std::move(cov)};
}

QuadraticWignerForm::QuadraticWignerForm(GaussianWignerState gaussian, Eigen::MatrixXd quadratic,
                                         Eigen::VectorXd linear, double constant)
    : gaussian_(std::move(gaussian)),
      quadratic_(std::move(quadratic)),
      linear_(std::move(linear)),
      constant_(constant) {
  const auto d = gaussian_.mean().size();
  if (quadratic_.rows() != d || quadratic_.cols() != d || linear_.size() != d)
    throw Error(ErrorCode::InvalidArgument, "polynomial dimensions do not match the Gaussian");
  quadratic_ = 0.5 * (quadratic_ + quadratic_.transpose()).eval();
}

double QuadraticWignerForm::operator()(const Eigen::VectorXd& z) const {
  return (z.dot(quadratic_ * z) + linear_.dot(z) + constant_) * gaussian_.wigner(z);
}

double QuadraticWignerForm::integral() const {
  const auto& m = gaussian_.mean();
  return (quadratic_ * gaussian_.cov()).trace() + m.dot(quadratic_ * m) + linear_.dot(m) + constant_;
}

QuadraticWignerForm QuadraticWignerForm::normalized() const {
  const double z = integral();
  if (!(std::abs(z) > 0.0) || !std::isfinite(z))
    throw Error(ErrorCode::InvalidState, "quadratic Wigner form has zero integral");
  return {gaussian_, quadratic_ / z, linear_ / z, constant_ / z};
}

ComplexAmplitudePair::ComplexAmplitudePair(std::complex<double> alpha, std::complex<double> beta)
    : alpha_(alpha), beta_(beta) {
  const double n = std::norm(alpha) + std::norm(beta);
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidArgument, "|alpha|^2 + |beta|^2 must equal 1");
}

ComplexAmplitudePair ComplexAmplitudePair::normalized(std::complex<double> alpha,
                                                      std::complex<double> beta) {
  const double n = std::sqrt(std::norm(alpha) + std::norm(beta));
  if (!(n > 0.0) || !std::isfinite(n))
    throw Error(ErrorCode::InvalidArgument, "amplitudes must not both vanish");
  return {alpha / n, beta / n};
}

}  // namespace opocat
