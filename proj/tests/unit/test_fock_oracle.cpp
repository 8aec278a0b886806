#include "opocat/errors.hpp"
#include "opocat/fock_oracle.hpp"
#include "opocat/gaussian_dynamics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace opocat;
using doctest::Approx;
using cd = std::complex<double>;

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

double tr_n(const Eigen::MatrixXcd& m, const FockBasis& b, int mode) {
  const Ladder w[] = {create(mode), annihilate(mode)};
  return expectation(m, b, w).real();
}

}  // namespace

TEST_CASE("basis indexing") {
  const FockBasis b{2, 3, 4};
  CHECK(b.dimension() == 60);
  CHECK(b.stride(0) == 20);
  CHECK(b.stride(2) == 1);
  const int occ[] = {1, 2, 3};
  const auto i = b.index(occ);
  CHECK(i == 1 * 20 + 2 * 5 + 3);
  CHECK(b.occupations(i) == std::vector<int>{1, 2, 3});
  const int out[] = {3, 0, 0};
  CHECK(b.index(out) == -1);
  CHECK(code_of([] { FockBasis{0, 2}; }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { FockBasis(FockBasisConfig{{60, 60}}); }) == ErrorCode::DimensionCap);
  const int keep[] = {2, 0};
  CHECK(b.subset(keep) == FockBasis{4, 2});
}

TEST_CASE("ladder words act on untruncated occupations") {
  const FockBasis b{3};
  const auto top = FockDensityMatrix::number_state(b, std::vector<int>{3});
  // a a^dagger |3> = 4 |3> even though |4> is outside the cutoff
  const Ladder aad[] = {annihilate(0), create(0)};
  CHECK(expectation(top.data(), b, aad).real() == Approx(4.0));
  CHECK((top.data() * operator_matrix(b, aad)).trace().real() == Approx(4.0));
  // multiplying truncated single operators loses it
  const Ladder a[] = {annihilate(0)}, ad[] = {create(0)};
  CHECK(std::abs((top.data() * operator_matrix(b, a) * operator_matrix(b, ad)).trace()) < 1e-15);
  const Ladder n[] = {create(0), annihilate(0)};
  CHECK(expectation(top.data(), b, n).real() == Approx(3.0));
}

TEST_CASE("density matrix validation and normalization") {
  const FockBasis b{3};
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 4);
  m(0, 0) = 0.5;
  const FockDensityMatrix half(b, m);
  CHECK(half.declared_trace() == Approx(0.5));
  CHECK_NOTHROW(half.validate());
  CHECK(half.normalized().trace() == Approx(1.0));
  CHECK(code_of([&] { FockDensityMatrix(b, m, 1.0).validate(); }) == ErrorCode::InvalidState);
  m(0, 1) = 0.1;
  CHECK(code_of([&] { FockDensityMatrix(b, m).validate(); }) == ErrorCode::InvalidState);
  CHECK(code_of([&] { FockDensityMatrix(b, Eigen::MatrixXcd::Zero(4, 4)).normalized(); }) ==
        ErrorCode::InvalidState);
  CHECK(code_of([&] { FockDensityMatrix(b, Eigen::MatrixXcd::Zero(3, 3)); }) == ErrorCode::InvalidState);
}

TEST_CASE("partial trace and tensor") {
  testing::Gen g(21);
  const auto a = g.density(FockBasis{2}), c = g.density(FockBasis{3});
  const auto ac = tensor(a, c);
  CHECK(ac.basis() == FockBasis{2, 3});
  const int first[] = {0}, second[] = {1};
  CHECK((partial_trace(ac, first).data() - a.data()).norm() < 1e-14);
  CHECK((partial_trace(ac, second).data() - c.data()).norm() < 1e-14);
  const int swapped[] = {1, 0};
  CHECK((partial_trace(ac, swapped).data() - tensor(c, a).data()).norm() < 1e-14);
  const int dup[] = {0, 0};
  CHECK(code_of([&] { partial_trace(ac, dup); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("Liouvillian: rates and generator identities") {
  const FockBasis b{3, 3};
  const Liouvillian l(b, {{0, 1, 0.7}}, {{0, 1.0}, {1, 0.5}});
  CHECK(l.max_rate() == Approx(1.0));
  testing::Gen g(4);

  // from the vacuum: d<a b>/dt = chi and d<n>/dt = 0
  const auto vac = FockDensityMatrix::number_state(b, std::vector<int>{0, 0});
  const Ladder ab[] = {annihilate(0), annihilate(1)};
  CHECK(expectation(l.apply(vac.data()), b, ab).real() == Approx(0.7).epsilon(1e-14));
  CHECK(std::abs(tr_n(l.apply(vac.data()), b, 0)) < 1e-14);

  // damping alone: d<n>/dt = -2 kappa <n>
  const Liouvillian damp(b, {}, {{0, 1.0}, {1, 0.5}});
  for (int trial = 0; trial < 5; ++trial) {
    const auto rho = g.density(b);
    const auto dr = damp.apply(rho.data());
    CHECK(tr_n(dr, b, 0) == Approx(-2.0 * tr_n(rho.data(), b, 0)).epsilon(1e-12));
    CHECK(tr_n(dr, b, 1) == Approx(-1.0 * tr_n(rho.data(), b, 1)).epsilon(1e-12));
  }
  CHECK(code_of([&] { Liouvillian(b, {{0, 0, 1.0}}, {}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { Liouvillian(b, {}, {{0, -1.0}}); }) == ErrorCode::InvalidParams);
}

TEST_CASE("property: the Liouvillian is trace-free and Hermiticity-preserving") {
  testing::Gen g(31);
  for (int trial = 0; trial < 20; ++trial) {
    const FockBasis b{g.integer(1, 3), g.integer(1, 4), g.integer(1, 4)};
    const SystemParams p{g.uniform(0.0, 1.0), g.uniform(0.0, 1.0), g.uniform(0.1, 2.0), g.uniform(0.1, 2.0)};
    const auto l = build_liouvillian(p, b);
    const auto rho = g.density(b, 2);
    const auto dr = l.apply(rho.data());
    // truncated a^dagger b^dagger and a b stay adjoint, so the trace survives truncation
    CHECK(std::abs(dr.trace()) < 1e-12);
    CHECK((dr - dr.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((l.apply_hermitian(rho.data()) - dr).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("evolve_rho") {
  const FockBasis b{12};
  const auto th = gaussian_to_rho(thermal(0.5), b);
  const Liouvillian l(b, {}, {{0, 1.0}});
  const auto out = evolve_rho(th, l, 0.1, 0.01);
  const double n0 = moment(th, {create(0), annihilate(0)}).real();
  CHECK(n0 == Approx(0.5).epsilon(1e-4));
  CHECK(moment(out, {create(0), annihilate(0)}).real() == Approx(n0 * std::exp(-0.2)).epsilon(1e-9));
  CHECK(out.trace() == Approx(th.trace()).epsilon(1e-12));

  CHECK(code_of([&] { evolve_rho(th, l, 0.1, 0.06); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { evolve_rho(th, l, -1.0, 0.01); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { evolve_rho(th, Liouvillian(FockBasis{5}, {}, {}), 0.1, 0.01); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("evolve_rho agrees with the Gaussian route") {
  // small rates, mode 1 starts in vacuum, modes 2,3 in the equilibrium
  const double r = ratio_for_nbar(0.3);
  const SystemParams p{0.05, r * 0.2, 0.2, 0.2};
  const FockBasis b{3, 8, 8};
  const auto g0 = tensor(vacuum(1), opo_equilibrium(r));
  const auto rho = evolve_rho(gaussian_to_rho(g0, b), p, 0.5, 0.05);
  const auto gt = evolve(g0, p, 0.5);
  const auto qm = quadrature_moments(rho);
  CHECK((qm.cov - gt.cov()).cwiseAbs().maxCoeff() < 2e-3);
  CHECK(qm.mean.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("stationary state of the pair") {
  const double nbar = 0.4, r = ratio_for_nbar(nbar);
  const FockBasis b{14, 14};
  const Liouvillian l(b, {{0, 1, r}}, {{0, 1.0}, {1, 1.0}});
  const auto ss = stationary_state(l);
  // each mode on its own is thermal
  const auto pn = photon_distribution(ss, 0);
  for (int n = 0; n < 6; ++n) CHECK(pn(n) == Approx(std::pow(nbar, n) / std::pow(1 + nbar, n + 1)).epsilon(1e-6));
  // n0 - n1 is conserved by the coupling, so coherences across sectors vanish
  const auto& d = ss.data();
  for (Eigen::Index i = 0; i < b.dimension(); ++i)
    for (Eigen::Index j = 0; j < b.dimension(); ++j)
      if (b.occupation(i, 0) - b.occupation(i, 1) != b.occupation(j, 0) - b.occupation(j, 1))
        CHECK(std::abs(d(i, j)) < 1e-12);
  CHECK(l.apply(d).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(code_of([] { stationary_state(Liouvillian(FockBasis{3}, {}, {{0, 1.0}})); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("gaussian_to_rho") {
  const FockBasis one{10};
  const auto v = gaussian_to_rho(vacuum(1), one);
  CHECK(std::abs(v.data()(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(v.trace() - 1.0) < 1e-15);

  const auto th = gaussian_to_rho(thermal(0.5), FockBasis{20});
  for (int n = 0; n < 5; ++n) CHECK(th.data()(n, n).real() == Approx(std::pow(1.0 / 3.0, n) * 2.0 / 3.0).epsilon(1e-12));

  const double r = 0.6;
  const auto pair = gaussian_to_rho(opo_equilibrium(r), FockBasis{16, 16});
  const auto qm = quadrature_moments(pair.normalized());
  CHECK((qm.cov - opo_equilibrium(r).cov()).cwiseAbs().maxCoeff() < 1e-3);

  // three modes: vacuum x pair
  const auto three = gaussian_to_rho(tensor(vacuum(1), opo_equilibrium(r)), FockBasis{2, 16, 16});
  const int keep[] = {1, 2};
  CHECK((partial_trace(three, keep).data() - pair.data()).cwiseAbs().maxCoeff() < 1e-14);

  Eigen::Matrix2d sq;
  sq << 0.5, 0.0, 0.0, 0.125;
  CHECK(code_of([&] { gaussian_to_rho(GaussianWignerState(Eigen::Vector2d::Zero(), sq), one); }) ==
        ErrorCode::UnsupportedState);
  CHECK(code_of([&] { gaussian_to_rho(GaussianWignerState(Eigen::Vector2d(0.1, 0.0), vacuum(1).cov()), one); }) ==
        ErrorCode::UnsupportedState);
  CHECK(code_of([&] { gaussian_to_rho(thermal(3.0), FockBasis{5}); }) == ErrorCode::TruncationLeak);
  CHECK(code_of([&] { gaussian_to_rho(opo_equilibrium(0.9), FockBasis{4, 4}); }) == ErrorCode::TruncationLeak);
  CHECK(code_of([&] { gaussian_to_rho(vacuum(2), one); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("Wigner function") {
  const FockBasis b{6};
  const Eigen::VectorXd origin = Eigen::Vector2d::Zero();
  const auto vac = FockDensityMatrix::number_state(b, std::vector<int>{0});
  const auto one = FockDensityMatrix::number_state(b, std::vector<int>{1});
  CHECK(wigner_at(vac.data(), b, origin) == Approx(2.0 / std::numbers::pi).epsilon(1e-13));
  CHECK(wigner_at(one.data(), b, origin) == Approx(-2.0 / std::numbers::pi).epsilon(1e-13));

  // |1>: W = (2/pi)(4|z|^2 - 1) exp(-2|z|^2)
  const Eigen::VectorXd z = Eigen::Vector2d(0.4, -0.3);
  const double q = z.squaredNorm();
  CHECK(wigner_at(one.data(), b, z) == Approx(2.0 / std::numbers::pi * (4 * q - 1) * std::exp(-2 * q)).epsilon(1e-12));

  // thermal against the Gaussian formula
  const auto th = gaussian_to_rho(thermal(0.3), FockBasis{25});
  for (double x : {0.0, 0.5, 1.2}) {
    const Eigen::VectorXd pt = Eigen::Vector2d(x, 0.2);
    CHECK(wigner_at(th.data(), th.basis(), pt) == Approx(thermal(0.3).wigner(pt)).epsilon(1e-8));
  }

  // normalization on a grid
  testing::Gen g(8);
  const auto rho = g.density(b);
  const int n = 120;
  const double h = 12.0 / n;
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pts.push_back(Eigen::Vector2d(-6 + (i + 0.5) * h, -6 + (j + 0.5) * h));
  const int m0[] = {0};
  const auto w = rho_to_wigner(rho, m0, pts);
  double acc = 0.0;
  for (double v : w) acc += v;
  CHECK(acc * h * h == Approx(1.0).epsilon(1e-8));

  // two-mode reduction agrees with single-mode Wigner of the partial trace
  const auto ab = tensor(rho, g.density(FockBasis{3}));
  const Eigen::VectorXd p1 = Eigen::Vector2d(0.2, 0.1);
  const std::vector<Eigen::VectorXd> single{p1};
  CHECK(rho_to_wigner(ab, m0, single)[0] == Approx(wigner_at(rho.data(), b, p1)).epsilon(1e-12));
  CHECK(code_of([&] { wigner_at(rho.data(), b, Eigen::Vector4d::Zero()); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("displacement matrix") {
  const cd beta(0.3, -0.4);
  const auto d = displacement_matrix(30, beta);
  CHECK(std::abs(d(0, 0) - std::exp(-0.5 * std::norm(beta))) < 1e-14);
  // coherent amplitudes <n|beta>
  for (int n = 1; n < 5; ++n) {
    double fact = 1.0;
    for (int k = 2; k <= n; ++k) fact *= k;
    const cd c = std::exp(-0.5 * std::norm(beta)) * std::pow(beta, n) / std::sqrt(fact);
    CHECK(std::abs(d(n, 0) - c) < 1e-13);
  }
  // unitary away from the truncation edge
  const Eigen::MatrixXcd u = d.topLeftCorner(10, 31) * d.topLeftCorner(10, 31).adjoint();
  CHECK((u - Eigen::MatrixXcd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("photon distribution and moments") {
  testing::Gen g(12);
  const FockBasis b{3, 4};
  const auto rho = g.density(b);
  const auto p1 = photon_distribution(rho, 1);
  CHECK(p1.size() == 5);
  CHECK(p1.sum() == Approx(rho.trace()).epsilon(1e-13));
  double n1 = 0.0;
  for (int k = 0; k < 5; ++k) n1 += k * p1(k);
  CHECK(moment(rho, {create(1), annihilate(1)}).real() == Approx(n1).epsilon(1e-12));

  const auto s = FockDensityMatrix::number_state(b, std::vector<int>{2, 3});
  CHECK(moment(s, {create(0), create(0), annihilate(0), annihilate(0)}).real() == Approx(2.0));
  CHECK(code_of([&] { moment(s, {create(0), create(0), create(0), annihilate(0), annihilate(0)}); }) ==
        ErrorCode::InvalidArgument);

  const auto qm = quadrature_moments(FockDensityMatrix::number_state(FockBasis{3}, std::vector<int>{1}));
  CHECK(qm.cov(0, 0) == Approx(0.75));
  CHECK(qm.cov(1, 1) == Approx(0.75));
}

TEST_CASE("binary dump round trip") {
  testing::Gen g(13);
  const auto rho = g.density(FockBasis{2, 3});
  const auto path = std::filesystem::temp_directory_path() / "opocat_rho_roundtrip.bin";
  write_density_matrix(path, rho);
  const auto back = read_density_matrix(path);
  CHECK(back.basis() == rho.basis());
  CHECK((back.data().array() == rho.data().array()).all());
  std::filesystem::remove(path);
}

TEST_CASE("property: relabelling modes commutes with evolution") {
  testing::Gen g(41);
  for (int trial = 0; trial < 4; ++trial) {
    const auto a = g.density(FockBasis{3}), c = g.density(FockBasis{4});
    const double chi = g.uniform(0.0, 0.2), k = g.uniform(0.1, 1.0);
    const auto ac = evolve_rho(tensor(a, c), Liouvillian(FockBasis{3, 4}, {{0, 1, chi}}, {{0, k}}), 0.2, 0.01);
    const auto ca = evolve_rho(tensor(c, a), Liouvillian(FockBasis{4, 3}, {{1, 0, chi}}, {{1, k}}), 0.2, 0.01);
    const int swap[] = {1, 0};
    CHECK((partial_trace(ac, swap).data() - ca.data()).cwiseAbs().maxCoeff() < 1e-13);
  }
}
