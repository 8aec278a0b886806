#include "opocat/closed_forms.hpp"

#include "opocat/errors.hpp"
#include "opocat/gaussian_dynamics.hpp"

#include <cmath>
#include <numbers>

namespace opocat::closed_form {

using cd = std::complex<double>;

SmallTimeBlocks smalltime_blocks(const SmallTimeRegime& g) {
  if (!(g.nbar >= 0.0) || !std::isfinite(g.nbar)) throw Error(ErrorCode::InvalidParams, "nbar must be >= 0");
  for (double p : {g.chi1_t, g.chi2_t, g.kappa_t})
    if (!(p >= 0.0 && p <= kSmallTimeBound))
      throw Error(ErrorCode::RegimeViolation, "small-time expansion needs products in [0, 0.05]");
  SmallTimeBlocks b;
  b.trace0 = 1.0;
  b.trace1 = g.chi1_t * g.chi1_t * (g.nbar + 1.0);
  b.n2_rho0 = g.nbar;
  b.n2_rho1 = 2.0 * g.nbar + 1.0;
  b.a2e_int = g.chi1_t * (g.nbar + 1.0);
  return b;
}

double shifted_thermal_pmf(double nbar, int n) {
  if (n <= 0) return 0.0;
  const double q = nbar / (1.0 + nbar);
  return n * std::pow(q, n - 1) / ((1.0 + nbar) * (1.0 + nbar));
}

double thermal_pmf(double nbar, int n) {
  if (n < 0) return 0.0;
  return std::pow(nbar / (1.0 + nbar), n) / (1.0 + nbar);
}

DetectionFormulas detection_formulas(double N, double phi) {
  const double c = std::cos(phi);
  DetectionFormulas f;
  f.mix_counts = (1.0 + 3.0 * N) / 2.0;
  f.cat_counts = f.mix_counts + 0.5 * (N + 1.0) * c;
  f.visibility = (1.0 + N) / (1.0 + 3.0 * N);
  const double even = 16.0 * N * N + 14.0 * N + 2.0;
  const double odd = 2.0 * (4.0 * N * N + 5.0 * N + 1.0);
  f.cc2 = (even + odd * c) / 4.0;
  f.dd2 = (even - odd * c) / 4.0;
  f.ccdd = N * (2.0 * N + 1.0);
  f.corr_visibility = (4.0 * N * N + 5.0 * N + 1.0) / (8.0 * N * N + 7.0 * N + 1.0);
  f.g1 = f.cat_counts;
  f.g2 = 2.0 * N * (1.0 + 2.0 * N + (N + 1.0) * c);
  return f;
}

namespace {

void check_ratio(double r) {
  if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorCode::InvalidParams, "d+ Wigner needs 0 <= r < 1");
}

struct DplusCoeffs {
  double A, b2, re, im;
};

DplusCoeffs coeffs(double r, const ComplexAmplitudePair& amps) {
  const double a2 = std::norm(amps.alpha());
  const double b2 = std::norm(amps.beta());
  const cd ab = std::conj(amps.alpha()) * amps.beta();
  return {a2 + b2 * r * r / (4.0 - r * r), b2, ab.real(), ab.imag()};
}

}  // namespace

double dplus_wigner(double r, const ComplexAmplitudePair& amps, double x, double y) {
  check_ratio(r);
  const auto k = coeffs(r, amps);
  const double poly = k.A * (x * x * (2.0 - r) * (2.0 - r) + y * y * (2.0 + r) * (2.0 + r) - 1.0) + k.b2 +
                      2.0 * (2.0 - r) * x * k.re + 2.0 * (2.0 + r) * y * k.im;
  return std::exp(-2.0 * (1.0 - r) * x * x - 2.0 * (1.0 + r) * y * y) * poly;
}

QuadraticWignerForm dplus_wigner_form(double r, const ComplexAmplitudePair& amps) {
  check_ratio(r);
  const auto k = coeffs(r, amps);
  Eigen::Matrix2d cov = Eigen::Vector2d(0.25 / (1.0 - r), 0.25 / (1.0 + r)).asDiagonal();
  Eigen::Matrix2d q = Eigen::Vector2d(k.A * (2.0 - r) * (2.0 - r), k.A * (2.0 + r) * (2.0 + r)).asDiagonal();
  Eigen::Vector2d l(2.0 * (2.0 - r) * k.re, 2.0 * (2.0 + r) * k.im);
  return QuadraticWignerForm(GaussianWignerState(Eigen::Vector2d::Zero(), cov), q, l, k.b2 - k.A).normalized();
}

double dplus_origin(double r, const ComplexAmplitudePair& amps) {
  check_ratio(r);
  const double a2 = std::norm(amps.alpha());
  const double b2 = std::norm(amps.beta());
  return 2.0 * b2 * (2.0 - r * r) / (4.0 - r * r) - a2;
}

double four_mode_origin(double nbar) {
  if (!(nbar >= 0.0)) throw Error(ErrorCode::InvalidParams, "nbar must be >= 0");
  return -4.0 / (std::numbers::pi * std::numbers::pi * (2.0 * nbar + 1.0) * (nbar + 1.0));
}

double dplus_marginal(double r, const ComplexAmplitudePair& amps, Axis axis, double q) {
  check_ratio(r);
  const auto k = coeffs(r, amps);
  const double a = 2.0 * (1.0 - r), b = 2.0 * (1.0 + r);
  const double sx = (2.0 - r) * (2.0 - r), sy = (2.0 + r) * (2.0 + r);
  const double pi = std::numbers::pi;
  const double z = pi / std::sqrt(a * b) * (k.A * (sx / (2.0 * a) + sy / (2.0 * b) - 1.0) + k.b2);
  double p;
  if (axis == Axis::x)
    p = std::exp(-a * q * q) * std::sqrt(pi / b) *
        (k.A * (sx * q * q + sy / (2.0 * b) - 1.0) + k.b2 + 2.0 * (2.0 - r) * q * k.re);
  else
    p = std::exp(-b * q * q) * std::sqrt(pi / a) *
        (k.A * (sx / (2.0 * a) + sy * q * q - 1.0) + k.b2 + 2.0 * (2.0 + r) * q * k.im);
  return p / z;
}

Eigen::VectorXd squeezed_number_state(double z, int n, int cutoff) {
  if (n < 0 || cutoff < n) throw Error(ErrorCode::InvalidArgument, "squeezed state needs 0 <= n <= cutoff");
  // pad well past the cutoff; the truncated generator is only wrong at the top edge
  const int dim = 2 * cutoff + 61 + static_cast<int>(std::ceil(40.0 * std::abs(z)));
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k + 2 < dim; ++k) {
    const double v = 0.5 * z * std::sqrt((k + 1.0) * (k + 2.0));
    g(k + 2, k) = v;
    g(k, k + 2) = -v;
  }
  const Eigen::MatrixXd u = matrix_exponential(g);
  return u.col(n).head(cutoff + 1);
}

OpaReference opa_reference(double chi2_t, const ComplexAmplitudePair& amps) {
  if (!(chi2_t >= 0.0) || !std::isfinite(chi2_t)) throw Error(ErrorCode::InvalidArgument, "chi2 t must be >= 0");
  // the squeezer is exp(chi2 t / 2 (a^dagger^2 - a^2)), labelled zeta = chi2 t / 2
  const double z = chi2_t;
  const double ch = std::cosh(chi2_t);
  const Eigen::VectorXd s1 = squeezed_number_state(z, 1, kOpaCutoff);
  const Eigen::VectorXd s0 = squeezed_number_state(z, 0, kOpaCutoff);
  Eigen::VectorXcd psi = std::conj(amps.alpha()) * s1.cast<cd>() + (std::conj(amps.beta()) / ch) * s0.cast<cd>();

  const double nrm = psi.norm();
  if (nrm == 0.0) throw Error(ErrorCode::InvalidState, "OPA reference vector vanishes");
  OpaReference out{psi, std::norm(amps.alpha()) + std::norm(amps.beta()) / (ch * ch),
                   FockDensityMatrix::pure(FockBasis{kOpaCutoff}, psi / nrm), {}, 0.0};
  out.photon_distribution = (psi / nrm).cwiseAbs2();
  for (int k = 0; k <= kOpaCutoff; ++k) out.mean_photon_number += k * out.photon_distribution(k);
  return out;
}

ExperimentScales experiment_scales(double length, double index, double wavelength, double kappa,
                                   double nbar_target, double pump_power) {
  for (double v : {length, index, wavelength, kappa, nbar_target, pump_power})
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidParams, "lab scales need positive inputs");
  ExperimentScales s;
  s.crystal_length = length;
  s.refractive_index = index;
  s.wavelength = wavelength;
  s.pump_power = pump_power;
  s.flight_time = length * index / kSpeedOfLight;
  s.kappa = kappa;
  s.kappa_over_chi2 = std::sqrt(1.0 + 1.0 / (2.0 * nbar_target));
  s.chi2 = kappa / s.kappa_over_chi2;
  s.chi2_t = s.chi2 * s.flight_time;
  s.kappa_t = kappa * s.flight_time;
  s.q_factor = 2.0 * std::numbers::pi * kSpeedOfLight / (wavelength * kappa);
  return s;
}

}  // namespace opocat::closed_form
