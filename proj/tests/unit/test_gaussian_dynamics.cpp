#include "opocat/errors.hpp"
#include "opocat/gaussian_dynamics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

using namespace opocat;
using doctest::Approx;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an opocat::Error");
  return ErrorCode::InvalidArgument;
}

// sigma(t) = 2 int_0^t G D G^t by composite Simpson, independent of the ODE route
Eigen::MatrixXd sigma_by_quadrature(const DriftDiffusion& dd, double t, int n = 400) {
  const double h = t / n;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dd.gamma.rows(), dd.gamma.cols());
  for (int k = 0; k <= n; ++k) {
    const Eigen::MatrixXd g = (-dd.gamma * (k * h)).exp();
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * g * dd.diffusion * g.transpose();
  }
  return 2.0 * acc * h / 3.0;
}

}  // namespace

TEST_CASE("drift and diffusion layout") {
  auto dd = build_drift_diffusion({0.0, 0.0, 1.0, 2.0}, DynamicsConfig::full6);
  Eigen::VectorXd diag(6);
  diag << 0, 0, 1, 1, 2, 2;
  CHECK((dd.gamma - Eigen::MatrixXd(diag.asDiagonal())).norm() == 0.0);
  diag << 0, 0, 0.25, 0.25, 0.5, 0.5;
  CHECK((dd.diffusion - Eigen::MatrixXd(diag.asDiagonal())).norm() == 0.0);

  dd = build_drift_diffusion({0.1, 0.5, 1.0, 1.0}, DynamicsConfig::full6);
  CHECK(dd.gamma(0, 2) == -0.1);
  CHECK(dd.gamma(1, 3) == 0.1);
  CHECK(dd.gamma(2, 4) == -0.5);
  CHECK(dd.gamma(3, 5) == 0.5);
  CHECK((dd.gamma - dd.gamma.transpose()).norm() == 0.0);

  const auto d4 = build_drift_diffusion({0.7, 0.5, 1.0, 1.0}, DynamicsConfig::opo4);
  CHECK(d4.gamma.rows() == 4);
  CHECK((d4.gamma - dd.gamma.bottomRightCorner(4, 4)).norm() == 0.0);
  CHECK((d4.diffusion - 0.25 * Eigen::Matrix4d::Identity()).norm() == 0.0);
}

TEST_CASE("propagator") {
  const auto dd = build_drift_diffusion({0.1, 0.5, 1.0, 1.0}, DynamicsConfig::full6);
  CHECK((propagator(dd, 0.0) - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-15);

  DriftDiffusion one{Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 0.25)};
  CHECK(propagator(one, 0.001)(0, 0) == Approx(0.999000499833375).epsilon(1e-15));

  const double chi = 0.8, t = 1.3;
  DriftDiffusion gain{Eigen::Matrix2d{{0.0, -chi}, {-chi, 0.0}}, Eigen::Matrix2d::Zero()};
  const auto g = propagator(gain, t);
  CHECK(g(0, 0) == Approx(std::cosh(chi * t)).epsilon(1e-14));
  CHECK(g(0, 1) == Approx(std::sinh(chi * t)).epsilon(1e-14));

  // against Eigen's exponential on a large-norm matrix that needs squaring
  testing::Gen gen(5);
  const Eigen::MatrixXd m = gen.stable_matrix(6);
  const Eigen::MatrixXd ref = (-m * 7.0).exp();
  CHECK((propagator({m, Eigen::MatrixXd::Zero(6, 6)}, 7.0) - ref).norm() < 1e-12 * std::max(1.0, ref.norm()));
}

TEST_CASE("noise covariance") {
  DriftDiffusion one{Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 0.25)};
  CHECK(noise_covariance(one, Horizon::finite(0.0)).norm() == 0.0);
  for (double t : {0.001, 0.5, 3.0})
    CHECK(noise_covariance(one, Horizon::finite(t))(0, 0) == Approx((1.0 - std::exp(-2.0 * t)) / 4.0).epsilon(1e-10));

  const double r = 0.6;
  const auto d4 = build_drift_diffusion({0.0, r, 1.0, 1.0}, DynamicsConfig::opo4);
  CHECK((noise_covariance(d4, Horizon::infinite()) - opo_equilibrium(r).cov()).norm() < 1e-12);

  const auto up = build_drift_diffusion({0.0, 1.2, 1.0, 1.0}, DynamicsConfig::opo4);
  CHECK(code_of([&] { noise_covariance(up, Horizon::infinite()); }) == ErrorCode::UnstableAtInfinity);
  // finite horizons are fine above threshold
  CHECK_NOTHROW(noise_covariance(up, Horizon::finite(1.0)));
  CHECK(code_of([] { Horizon::finite(-1.0); }) == ErrorCode::InvalidArgument);

  // ODE route against direct quadrature, including a transiently unstable drift
  for (const SystemParams& p : {SystemParams{0.1, 0.5, 1.0, 1.0}, SystemParams{0.8, 0.4, 1.0, 0.5}}) {
    const auto dd = build_drift_diffusion(p, DynamicsConfig::full6);
    const auto ode = noise_covariance(dd, Horizon::finite(2.0));
    const auto quad = sigma_by_quadrature(dd, 2.0);
    CHECK((ode - quad).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("evolve") {
  const double r = 0.5;
  const auto s0 = tensor(vacuum(1), opo_equilibrium(r));
  const SystemParams p{0.2, r, 1.0, 1.0};
  const auto same = evolve(s0, p, 0.0);
  CHECK((same.cov() - s0.cov()).norm() < 1e-15);

  // chi1 = 0: the equilibrium is a fixed point
  const auto still = evolve(opo_equilibrium(r), {0.0, r, 1.0, 1.0}, 3.7);
  CHECK((still.cov() - opo_equilibrium(r).cov()).norm() < 1e-10);

  // damping into the vacuum bath keeps the vacuum
  const auto vac = evolve(vacuum(3), {0.0, 0.0, 1.0, 1.0}, 1.0);
  CHECK((vac.cov() - vacuum(3).cov()).norm() < 1e-10);

  // a displaced mode decays as exp(-kappa t)
  const GaussianWignerState coh(Eigen::Vector4d(0.4, -0.2, 0.0, 0.0), vacuum(2).cov());
  const auto decayed = evolve(coh, {0.0, 0.0, 1.0, 1.0}, 0.7);
  CHECK(decayed.mean()(0) == Approx(0.4 * std::exp(-0.7)).epsilon(1e-12));
  CHECK(code_of([&] { evolve(vacuum(4), p, 1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("steady state") {
  auto ss = steady_state({0.0, 0.0, 1.0, 1.0});
  CHECK(ss.nbar == Approx(0.0));
  CHECK((ss.state.cov() - vacuum(2).cov()).norm() < 1e-12);

  ss = steady_state({0.0, 1.0 / std::sqrt(2.0), 1.0, 1.0});
  CHECK(ss.nbar == Approx(0.5).epsilon(1e-12));
  CHECK(ss.nbar_mode3 == Approx(0.5).epsilon(1e-12));

  // unequal damping has no closed form here; check the fixed point directly
  const SystemParams uneq{0.0, 0.5, 1.0, 2.0};
  const auto su = steady_state(uneq);
  const auto dd = build_drift_diffusion(uneq, DynamicsConfig::opo4);
  const Eigen::MatrixXd res = 2.0 * dd.diffusion - dd.gamma * su.state.cov() - su.state.cov() * dd.gamma.transpose();
  CHECK(res.norm() < 1e-12);

  CHECK(ratio_for_nbar(14.94) * ratio_for_nbar(14.94) == Approx(29.88 / 30.88).epsilon(1e-14));
  CHECK(equilibrium_nbar(ratio_for_nbar(2.93)) == Approx(2.93).epsilon(1e-12));
  CHECK(code_of([] { steady_state({0.0, 1.0, 1.0, 1.0}); }) == ErrorCode::AboveThreshold);
}

TEST_CASE("stability") {
  auto rep = stability({0.0, 0.5, 1.0, 1.0});
  CHECK(rep.config == DynamicsConfig::opo4);
  CHECK(rep.stable);
  REQUIRE(rep.eigenvalues.size() == 4);
  std::vector<double> re;
  for (auto v : rep.eigenvalues) re.push_back(v.real());
  std::sort(re.begin(), re.end());
  CHECK(re[0] == Approx(0.5));
  CHECK(re[1] == Approx(0.5));
  CHECK(re[2] == Approx(1.5));
  CHECK(re[3] == Approx(1.5));

  rep = stability({0.0, 1.2, 1.0, 1.0});
  CHECK_FALSE(rep.stable);
  CHECK(rep.threshold_margin == Approx(-0.44));

  rep = stability({0.1, 0.5, 1.0, 1.0});
  CHECK(rep.config == DynamicsConfig::full6);
  CHECK(rep.root_product == Approx(-0.01).epsilon(1e-12));
  CHECK_FALSE(rep.stable);
  CHECK(rep.max_root_mismatch < 1e-9);

  rep = stability({0.0, 1.0, 1.0, 1.0});
  double lo = 1e9;
  for (auto v : rep.eigenvalues) lo = std::min(lo, v.real());
  CHECK(std::abs(lo) < 1e-9);
}

TEST_CASE("property: propagator semigroup") {
  testing::Gen g(77);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 * g.integer(1, 3);
    const DriftDiffusion dd{g.stable_matrix(n), Eigen::MatrixXd::Zero(n, n)};
    const double t1 = g.uniform(0.0, 2.0), t2 = g.uniform(0.0, 2.0);
    const Eigen::MatrixXd lhs = propagator(dd, t1 + t2);
    CHECK((lhs - propagator(dd, t1) * propagator(dd, t2)).norm() < 1e-10 * std::max(1.0, lhs.norm()));
  }
}

TEST_CASE("property: evolution composes and sigma stays PSD") {
  testing::Gen g(78);
  for (int trial = 0; trial < 12; ++trial) {
    const double kappa = g.uniform(0.5, 2.0);
    const SystemParams p{g.uniform(0.0, 0.5), g.uniform(0.0, 0.9) * kappa, kappa, kappa};
    const double r = g.uniform(0.0, 0.8);
    const auto s0 = tensor(vacuum(1), opo_equilibrium(r));
    const double t1 = g.uniform(0.0, 1.0), t2 = g.uniform(0.0, 1.0);
    const auto a = evolve(evolve(s0, p, t1), p, t2);
    const auto b = evolve(s0, p, t1 + t2);
    CHECK((a.cov() - b.cov()).norm() < 1e-9);

    const auto sig = noise_covariance(build_drift_diffusion(p, DynamicsConfig::full6), Horizon::finite(t1 + t2));
    CHECK((sig - sig.transpose()).norm() < 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sig).eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("property: the two polarization groups decouple") {
  testing::Gen g(79);
  for (int trial = 0; trial < 6; ++trial) {
    const SystemParams p{g.uniform(0.0, 0.4), g.uniform(0.0, 0.8), 1.0, 1.0};
    const double r = g.uniform(0.0, 0.8);
    const auto group = tensor(vacuum(1), opo_equilibrium(r));
    const auto joint = tensor(group, group);  // (1o 2e 3o | 1e 2o 3e)
    const int o[] = {0, 1, 2}, e[] = {3, 4, 5};
    const double t = g.uniform(0.1, 1.5);
    const auto oe = evolve_modes(evolve_modes(joint, o, p, DynamicsConfig::full6, t), e, p, DynamicsConfig::full6, t);
    const auto eo = evolve_modes(evolve_modes(joint, e, p, DynamicsConfig::full6, t), o, p, DynamicsConfig::full6, t);
    CHECK((oe.cov() - eo.cov()).norm() < 1e-13);
    // stays block diagonal across the groups
    CHECK(oe.cov().topRightCorner(6, 6).norm() == 0.0);
    // each block is the single-group evolution
    CHECK((oe.cov().topLeftCorner(6, 6) - evolve(group, p, t).cov()).norm() < 1e-13);
  }
}
