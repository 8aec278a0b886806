#include "opocat/gaussian_dynamics.hpp"

#include "opocat/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace opocat {

DriftDiffusion build_drift_diffusion(const SystemParams& p, DynamicsConfig config) {
  const auto v = validate_params(p);
  const double c1 = v.params.chi1, c2 = v.params.chi2;
  const double k2 = v.params.kappa2, k3 = v.params.kappa3;

  if (config == DynamicsConfig::opo4) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 4);
    g(0, 0) = g(1, 1) = k2;
    g(2, 2) = g(3, 3) = k3;
    g(0, 2) = g(2, 0) = -c2;
    g(1, 3) = g(3, 1) = c2;
    Eigen::VectorXd d(4);
    d << k2 / 4, k2 / 4, k3 / 4, k3 / 4;
    return {std::move(g), d.asDiagonal().toDenseMatrix()};
  }

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(6, 6);
  g(2, 2) = g(3, 3) = k2;
  g(4, 4) = g(5, 5) = k3;
  // x quadratures couple with -chi, y quadratures with +chi
  g(0, 2) = g(2, 0) = -c1;
  g(1, 3) = g(3, 1) = c1;
  g(2, 4) = g(4, 2) = -c2;
  g(3, 5) = g(5, 3) = c2;
  Eigen::VectorXd d(6);
  d << 0, 0, k2 / 4, k2 / 4, k3 / 4, k3 / 4;
  return {std::move(g), d.asDiagonal().toDenseMatrix()};
}

Horizon Horizon::finite(double t) {
  if (!std::isfinite(t) || t < 0.0)
    throw Error(ErrorCode::InvalidArgument, "time must be finite and non-negative");
  return Horizon(t, false);
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::InvalidArgument, "expm of non-square matrix");
  const auto n = a.rows();
  if (n == 0) return a;
  if (!a.allFinite()) throw Error(ErrorCode::InvalidArgument, "expm of non-finite matrix");

  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13) s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Eigen::MatrixXd A = a / std::ldexp(1.0, s);

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd A2 = A * A;
  const Eigen::MatrixXd A4 = A2 * A2;
  const Eigen::MatrixXd A6 = A4 * A2;
  const Eigen::MatrixXd U =
      A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  const Eigen::MatrixXd V =
      A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  Eigen::MatrixXd r = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < s; ++k) r = (r * r).eval();
  return r;
}

Eigen::MatrixXd propagator(const DriftDiffusion& dd, double t) {
  if (!std::isfinite(t) || t < 0.0)
    throw Error(ErrorCode::InvalidArgument, "propagator: t must be finite and >= 0");
  return matrix_exponential(-t * dd.gamma);
}

namespace {

Eigen::MatrixXd lyapunov_rhs(const DriftDiffusion& dd, const Eigen::MatrixXd& s) {
  return 2.0 * dd.diffusion - dd.gamma * s - s * dd.gamma.transpose();
}

Eigen::MatrixXd integrate_lyapunov(const DriftDiffusion& dd, double t_end) {
  // Dormand-Prince 5(4), FSAL. The system is autonomous so the c_i nodes are unused.
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  constexpr double atol = 1e-12, rtol = 1e-10;
  const auto n = dd.gamma.rows();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n);
  if (t_end == 0.0) return y;

  const double rate = std::max(dd.gamma.cwiseAbs().rowwise().sum().maxCoeff(), 1e-300);
  double h = std::min(t_end, 0.01 / rate);
  double t = 0.0;
  Eigen::MatrixXd k1 = lyapunov_rhs(dd, y);
  int rejected_in_a_row = 0;

  while (t < t_end) {
    if (t + h > t_end) h = t_end - t;
    const Eigen::MatrixXd k2 = lyapunov_rhs(dd, y + h * a21 * k1);
    const Eigen::MatrixXd k3 = lyapunov_rhs(dd, y + h * (a31 * k1 + a32 * k2));
    const Eigen::MatrixXd k4 = lyapunov_rhs(dd, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Eigen::MatrixXd k5 = lyapunov_rhs(dd, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Eigen::MatrixXd k6 =
        lyapunov_rhs(dd, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Eigen::MatrixXd y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Eigen::MatrixXd k7 = lyapunov_rhs(dd, y5);
    const Eigen::MatrixXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double en = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double sc = atol + rtol * std::max(std::abs(y(i, j)), std::abs(y5(i, j)));
        en = std::max(en, std::abs(err(i, j)) / sc);
      }

    if (en <= 1.0) {
      t = (t_end - t - h <= 1e-15 * t_end) ? t_end : t + h;
      y = 0.5 * (y5 + y5.transpose());
      k1 = k7;
      rejected_in_a_row = 0;
    } else if (++rejected_in_a_row > 60) {
      throw Error(ErrorCode::InvalidState, "noise_covariance: step size underflow");
    }
    const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    h *= fac;
  }
  return y;
}

Eigen::MatrixXd solve_lyapunov(const DriftDiffusion& dd) {
  const auto n = dd.gamma.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  // column-major vec: vec(G S + S G^t) = (I (x) G + G (x) I) vec S
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) += I(i, j) * dd.gamma;
      k.block(i * n, j * n, n, n) += dd.gamma(i, j) * I;
    }
  const Eigen::MatrixXd rhs = 2.0 * dd.diffusion;
  const Eigen::VectorXd v = k.fullPivLu().solve(rhs.reshaped());
  Eigen::MatrixXd s = v.reshaped(n, n);
  return 0.5 * (s + s.transpose());
}

DynamicsConfig config_for_modes(int n_modes) {
  if (n_modes == 3) return DynamicsConfig::full6;
  if (n_modes == 2) return DynamicsConfig::opo4;
  throw Error(ErrorCode::InvalidArgument, "evolve: state must have 2 (opo4) or 3 (full6) modes");
}

}  // namespace

Eigen::MatrixXd noise_covariance(const DriftDiffusion& dd, Horizon t) {
  if (!t.is_infinite()) return integrate_lyapunov(dd, t.time());
  Eigen::EigenSolver<Eigen::MatrixXd> es(dd.gamma, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i).real() <= 0.0)
      throw Error(ErrorCode::UnstableAtInfinity, "gamma has an eigenvalue with Re <= 0");
  return solve_lyapunov(dd);
}

GaussianWignerState evolve(const GaussianWignerState& s0, const SystemParams& p, double t) {
  const auto config = config_for_modes(s0.n_modes());
  const std::array<int, 3> all = {0, 1, 2};
  return evolve_modes(s0, std::span<const int>(all.data(), static_cast<std::size_t>(s0.n_modes())),
                      p, config, t);
}

GaussianWignerState evolve_modes(const GaussianWignerState& s0, std::span<const int> modes,
                                 const SystemParams& p, DynamicsConfig config, double t) {
  const std::size_t need = config == DynamicsConfig::full6 ? 3 : 2;
  if (modes.size() != need)
    throw Error(ErrorCode::InvalidArgument, "evolve_modes: wrong number of modes for config");
  const auto h = Horizon::finite(t);
  const auto dd = build_drift_diffusion(p, config);
  const Eigen::MatrixXd g = propagator(dd, t);
  const Eigen::MatrixXd sig = noise_covariance(dd, h);

  const auto d = s0.mean().size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  std::vector<Eigen::Index> idx;
  for (int m : modes) {
    if (m < 0 || m >= s0.n_modes()) throw Error(ErrorCode::InvalidArgument, "evolve_modes: bad mode");
    idx.push_back(2 * m);
    idx.push_back(2 * m + 1);
  }
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) {
      G(idx[a], idx[b]) = g(a, b);
      S(idx[a], idx[b]) = sig(a, b);
    }
  Eigen::MatrixXd cov = G * s0.cov() * G.transpose() + S;
  cov = 0.5 * (cov + cov.transpose()).eval();
  return {G * s0.mean(), std::move(cov)};
}

double equilibrium_nbar(double ratio) {
  if (!std::isfinite(ratio) || ratio < 0.0)
    throw Error(ErrorCode::InvalidArgument, "ratio must be >= 0");
  if (ratio >= 1.0) throw Error(ErrorCode::AboveThreshold, "no equilibrium for r >= 1");
  const double r2 = ratio * ratio;
  return r2 / (2.0 * (1.0 - r2));
}

double ratio_for_nbar(double nbar) {
  if (!std::isfinite(nbar) || nbar < 0.0)
    throw Error(ErrorCode::InvalidArgument, "nbar must be finite and >= 0");
  return std::sqrt(2.0 * nbar / (2.0 * nbar + 1.0));
}

SteadyState steady_state(const SystemParams& p) {
  const auto v = validate_params(p);
  if (v.params.chi2 * v.params.chi2 >= v.params.kappa2 * v.params.kappa3)
    throw Error(ErrorCode::AboveThreshold, "steady state needs chi2^2 < kappa2 kappa3");
  const auto dd = build_drift_diffusion(v.params, DynamicsConfig::opo4);
  GaussianWignerState s(Eigen::VectorXd::Zero(4), noise_covariance(dd, Horizon::infinite()));
  const double n2 = mean_photon_number(s, 0);
  const double n3 = mean_photon_number(s, 1);
  return {std::move(s), n2, n3};
}

StabilityReport stability(const SystemParams& p) {
  const auto v = validate_params(p);
  const double c1 = v.params.chi1, c2 = v.params.chi2;
  const double k2 = v.params.kappa2, k3 = v.params.kappa3;

  StabilityReport rep;
  rep.config = c1 == 0.0 ? DynamicsConfig::opo4 : DynamicsConfig::full6;
  rep.threshold_margin = k2 * k3 - c2 * c2;

  const auto dd = build_drift_diffusion(v.params, rep.config);
  // gamma is symmetric for this coupling layout, so its spectrum is real
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dd.gamma, Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    rep.eigenvalues.emplace_back(es.eigenvalues()(i), 0.0);

  rep.stable = std::all_of(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                           [](const std::complex<double>& l) { return l.real() > -1e-12; });

  if (rep.config == DynamicsConfig::opo4) {
    const double mid = 0.5 * (k2 + k3);
    const double rad = std::sqrt(0.25 * (k2 - k3) * (k2 - k3) + c2 * c2);
    rep.analytic_roots = {{mid - rad, 0.0}, {mid + rad, 0.0}};
  } else {
    // lambda^3 - (k2+k3) lambda^2 + (k2 k3 - c1^2 - c2^2) lambda + k3 c1^2
    Eigen::Matrix3d comp = Eigen::Matrix3d::Zero();
    comp(0, 0) = k2 + k3;
    comp(0, 1) = -(k2 * k3 - c1 * c1 - c2 * c2);
    comp(0, 2) = -k3 * c1 * c1;
    comp(1, 0) = 1.0;
    comp(2, 1) = 1.0;
    Eigen::EigenSolver<Eigen::Matrix3d> ces(comp, false);
    for (int i = 0; i < 3; ++i) rep.analytic_roots.push_back(ces.eigenvalues()(i));
    std::sort(rep.analytic_roots.begin(), rep.analytic_roots.end(),
              [](auto a, auto b) { return a.real() < b.real(); });
  }

  std::complex<double> prod = 1.0;
  for (auto r : rep.analytic_roots) prod *= r;
  rep.root_product = prod.real();

  for (auto l : rep.eigenvalues) {
    double best = std::numeric_limits<double>::infinity();
    for (auto r : rep.analytic_roots) best = std::min(best, std::abs(l - r));
    rep.max_root_mismatch = std::max(rep.max_root_mismatch, best);
  }
  return rep;
}

}  // namespace opocat
