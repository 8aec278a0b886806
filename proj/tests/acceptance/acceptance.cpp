// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include "opocat/closed_forms.hpp"
#include "opocat/conditioning.hpp"
#include "opocat/detection.hpp"
#include "opocat/errors.hpp"
#include "opocat/fock_oracle.hpp"
#include "opocat/gaussian_dynamics.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

using namespace opocat;
namespace cf = opocat::closed_form;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kScale = 1e-3;  // chi1 t = kappa t in the small-time runs

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// thermal tail (N/(N+1))^(c+1) below 1e-5, never under the 6 that the
// Gaussian-to-Fock conversion needs at small N
int cutoff_for(double nbar) {
  if (nbar <= 0.0) return 6;
  const double q = nbar / (nbar + 1.0);
  return std::max(6, static_cast<int>(std::ceil(std::log(1e-5) / std::log(q))) - 1);
}

const CatRun& small_time_run(double nbar) {
  static std::map<double, CatRun> cache;
  auto it = cache.find(nbar);
  if (it == cache.end()) {
    const double s = kScale;
    const int c = cutoff_for(nbar);
    it = cache.emplace(nbar, run_cat_generation({{s, ratio_for_nbar(nbar) * s, s, s}, 1.0, FockBasis{2, c, c}})).first;
  }
  return it->second;
}

const CatAssembly& small_time_assembly(double nbar) {
  static std::map<double, CatAssembly> cache;
  auto it = cache.find(nbar);
  if (it == cache.end()) it = cache.emplace(nbar, assemble_cat_and_mixture(small_time_run(nbar).blocks, 0)).first;
  return it->second;
}

double mean_n(const FockDensityMatrix& rho, int mode) {
  const auto p = photon_distribution(rho, mode);
  double m = 0.0;
  for (Eigen::Index n = 0; n < p.size(); ++n) m += static_cast<double>(n) * p(n);
  return m / p.sum();
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// -------------------------------------------------------------------------

void steady_state_values(Outcome& o) {
  const double r = 1.0 / std::sqrt(2.0);
  const auto st = steady_state({0.0, r, 1.0, 1.0});
  const double p = purity(st.state);
  o.detail << "nbar=" << st.nbar << " purity=" << p;
  o.require(std::abs(st.nbar - 0.5) < 1e-9, "nbar");
  o.require(std::abs(p - 0.5) < 1e-9, "purity");
}

void threshold(Outcome& o) {
  const auto at = stability({0.0, 1.0, 1.0, 1.0});
  double min_re = 1e300;
  for (const auto& e : at.eigenvalues) min_re = std::min(min_re, e.real());
  const auto cubic = stability({0.1, 0.5, 1.0, 1.0});
  o.detail << "min Re at threshold=" << min_re << " root product=" << cubic.root_product
           << " unstable=" << !cubic.stable;
  o.require(std::abs(min_re) < 1e-9, "threshold eigenvalue");
  o.require(std::abs(cubic.root_product + 0.01) < 1e-9, "root product");
  o.require(!cubic.stable, "instability flag");
}

void gaussian_oracle_equivalence(Outcome& o) {
  const double r = ratio_for_nbar(0.5), t = 1e-2;
  const SystemParams p{1.0, r, 1.0, 1.0};
  const auto run = run_cat_generation({p, t, FockBasis{2, 10, 10}});
  const auto gauss = evolve(tensor(vacuum(1), opo_equilibrium(r)), p, t);
  const auto fock = quadrature_moments(run.evolved);
  const double dmean = (fock.mean - gauss.mean()).cwiseAbs().maxCoeff();
  const double dcov = max_abs(fock.cov - gauss.cov());
  const double drift = std::abs(run.evolved.trace() - run.initial.trace());
  o.detail << "max |d mean|=" << dmean << " max |d cov|=" << dcov << " trace drift=" << drift;
  o.require(dmean < 1e-4 && dcov < 1e-4, "moments");
  o.require(drift < 1e-6 && run.evolved.hermiticity_error() < 1e-10, "trace/Hermiticity");
}

void herald_blocks(Outcome& o) {
  for (double n : {0.1, 0.5, 1.0}) {
    const auto& b = small_time_run(n).blocks;
    const double n0 = mean_n(b.rho0, 0), n1 = mean_n(b.rho1, 0);
    o.detail << "N=" << n << ": <n2>0=" << n0 << " <n2>1=" << n1 << "; ";
    o.require(rel(n0, n) < 0.02, "rho0 at N=" + std::to_string(n));
    o.require(rel(n1, 2 * n + 1) < 0.02, "rho1 at N=" + std::to_string(n));
  }
}

void fringes(Outcome& o) {
  const double n = 0.5;
  const CatStateView cat(small_time_assembly(n), CatBranch::cat), mix(small_time_assembly(n), CatBranch::mixture);
  const auto rec = detection_record(cat, 32);
  const double amp = (n + 1) / 2;

  // least squares A + B cos + C sin, then residuals against the fit and the formula
  Eigen::MatrixXd design(32, 3);
  Eigen::VectorXd y(32);
  for (int i = 0; i < 32; ++i) {
    const double phi = rec.phi_grid[i];
    design.row(i) << 1.0, std::cos(phi), std::sin(phi);
    y(i) = rec.counts_c[i];
  }
  const Eigen::Vector3d fit = design.colPivHouseholderQr().solve(y);
  const double fit_residual = (design * fit - y).cwiseAbs().maxCoeff();
  double formula_residual = 0.0;
  for (int i = 0; i < 32; ++i)
    formula_residual = std::max(formula_residual,
                                std::abs(y(i) - ((1 + 3 * n) / 2 + amp * std::cos(rec.phi_grid[i]))));

  const auto mrec = detection_record(mix, 32);
  const auto [lo, hi] = std::minmax_element(mrec.counts_c.begin(), mrec.counts_c.end());
  o.detail << "fit A=" << fit(0) << " B=" << fit(1) << " residual/amp=" << formula_residual / amp
           << " V=" << rec.visibility << " mixture variation=" << *hi - *lo;
  o.require(fit_residual < 0.02 * amp && formula_residual < 0.02 * amp, "fit residual");
  o.require(std::abs(rec.visibility - 0.6) <= 0.01, "visibility");
  o.require(*hi - *lo < 1e-6, "mixture variation");
}

void photodetection(Outcome& o) {
  const double n = 0.5;
  const auto pd = photon_distributions(small_time_assembly(n));
  double tv = 0.0, covered = 0.0;
  for (Eigen::Index k = 0; k < pd.p_h.size(); ++k) {
    const double q = cf::shifted_thermal_pmf(n, static_cast<int>(k));
    tv += std::abs(pd.p_h(k) - q);
    covered += q;
  }
  tv = 0.5 * (tv + (1.0 - covered));

  // P on the assembled four-mode cat against the block average; a smaller
  // point keeps the four-mode matrix dense-sized
  const double s = kScale;
  const auto run = run_cat_generation({{s, ratio_for_nbar(0.2) * s, s, s}, 1.0, FockBasis{2, 6, 6}});
  const auto as = assemble_cat_and_mixture(run.blocks);
  const auto small = photon_distributions(as);
  const auto p_cat = photon_distribution(*as.cat, 0);
  const double gap = (p_cat - small.p).cwiseAbs().maxCoeff();
  const double avg_gap = (small.p - 0.5 * (small.p_h + small.p_v)).cwiseAbs().maxCoeff();
  o.detail << "TV=" << tv << " max|P_cat - (P_H+P_V)/2|=" << gap;
  o.require(tv < 1e-2, "total variation");
  o.require(gap < 1e-14 && avg_gap == 0.0, "P = (P_H + P_V)/2");
}

void coherence_boundary(Outcome& o) {
  for (double n : {0.5, 1.0}) {
    const auto g = coherence_g1_g2(CatStateView(small_time_assembly(n), CatBranch::cat), 0.0);
    const auto f = cf::detection_formulas(n, 0.0);
    o.detail << "N=" << n << ": G2=" << g.g2 << " G1^2=" << g.g1 * g.g1 << "; ";
    o.require(rel(g.g1, f.g1) < 0.02 && rel(g.g2, f.g2) < 0.02, "formulas at N=" + std::to_string(n));
    o.require(g.subpoissonian == (n < 0.7), "sub-Poissonian flag at N=" + std::to_string(n));
  }
  // oracle scan over [0.6, 0.8]: the flag flips once
  int flips = 0;
  double where = 0.0;
  bool prev = true;
  for (int i = 0; i <= 10; ++i) {
    const double n = 0.6 + 0.02 * i;
    const bool sub = coherence_g1_g2(CatStateView(small_time_assembly(n), CatBranch::cat), 0.0).subpoissonian;
    if (i > 0 && sub != prev) {
      ++flips;
      where = n - 0.01;
    }
    prev = sub;
  }
  o.detail << "flip at " << where << " (" << flips << " flip)";
  o.require(flips == 1 && std::abs(where - 1.0 / std::sqrt(2.0)) <= 0.02, "flip location");
}

void wigner_negativity(Outcome& o) {
  const double n = 0.5;
  const ComplexAmplitudePair amps({1.0, 0.0}, {0.0, 0.0});
  const auto dp = to_dpm_and_condition(herald_45basis(small_time_run(n).evolved), amps);
  const double w00 = wigner_source(dp.dplus)(0.0, 0.0);
  o.detail << "d+ W(0,0)=" << w00 << "; ";
  o.require(w00 < 0.0, "d+ origin sign");

  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(4);
  const std::vector<Eigen::VectorXd> pts{origin};
  const int modes[] = {0, 1};
  auto w0 = [&](double nbar) { return rho_to_wigner(small_time_run(nbar).blocks.rho1.normalized(), modes, pts)[0]; };
  const double base = w0(0.0);
  o.require(base < 0.0, "origin sign at N=0");
  for (double nbar : {0.25, 0.5, 1.0}) {
    const double ratio = w0(nbar) / base, expect = 1.0 / ((2 * nbar + 1) * (nbar + 1));
    o.detail << "N=" << nbar << ": ratio=" << ratio << " vs " << expect << "; ";
    o.require(rel(ratio, expect) < 0.05, "origin ratio at N=" + std::to_string(nbar));
  }
}

void fringe_decay(Outcome& o) {
  const ComplexAmplitudePair amps({1.0, 0.0}, {0.0, 0.0});
  const auto grid = linspace(-3.0, 3.0, 1201);
  double prev = 1e300;
  for (double n : {0.5, 2.93, 14.94}) {
    const double r = ratio_for_nbar(n);
    std::vector<double> py;
    for (double y : grid) py.push_back(cf::dplus_marginal(r, amps, Axis::y, y));
    const double c = fringe_contrast(py);
    o.detail << "N=" << n << ": contrast=" << c << "; ";
    o.require(c <= prev, "monotone at N=" + std::to_string(n));
    prev = c;
  }
  o.require(prev < 0.05, "contrast at N=14.94");
}

void property_suite(Outcome& o) {
  testing::Gen g(2024);
  int checks = 0;

  // trace and Hermiticity along the master equation
  for (int trial = 0; trial < 4; ++trial) {
    const FockBasis b{2, 3, 3};
    const auto rho = g.density(b, 4);
    const double k = g.uniform(0.5, 1.5);
    const SystemParams p{g.uniform(0.0, 0.3), g.uniform(0.0, 0.8) * k, k, k};
    const auto out = evolve_rho(rho, p, 0.5, 0.01);
    o.require(std::abs(out.trace() - rho.trace()) < 1e-10 && out.hermiticity_error() < 1e-12, "trace/Hermiticity");
    ++checks;
  }

  // semigroup law of the Gaussian flow
  for (int trial = 0; trial < 4; ++trial) {
    const SystemParams p{g.uniform(0.0, 0.5), g.uniform(0.0, 0.9), g.uniform(0.8, 1.2), g.uniform(0.8, 1.2)};
    const auto dd = build_drift_diffusion(p, DynamicsConfig::full6);
    const double s = g.uniform(0.0, 1.0), t = g.uniform(0.0, 1.0);
    o.require(max_abs(propagator(dd, s) * propagator(dd, t) - propagator(dd, s + t)) < 1e-12, "propagator semigroup");
    const auto s0 = tensor(vacuum(1), opo_equilibrium(0.5));
    const auto two = evolve(evolve(s0, p, s), p, t), one = evolve(s0, p, s + t);
    o.require(max_abs(two.cov() - one.cov()) < 1e-8, "evolve semigroup");
    checks += 2;
  }

  // decoupling: without chi1, mode 1 stays a factor; the two groups stay independent
  {
    const SystemParams p{0.0, 0.6, 1.0, 1.0};
    const auto a = g.density(FockBasis{2}, 2), bc = g.density(FockBasis{3, 3}, 3);
    const auto out = evolve_rho(tensor(a, bc), p, 0.4, 0.01);
    const int keep0[] = {0}, keep12[] = {1, 2};
    const auto product = tensor(partial_trace(out, keep0), partial_trace(out, keep12));
    o.require((out.data() - product.data()).cwiseAbs().maxCoeff() < 1e-12, "Fock factorization");

    const SystemParams q{0.3, 0.6, 1.0, 1.0};
    const auto group = tensor(vacuum(1), opo_equilibrium(0.6));
    const int first[] = {0, 1, 2}, second[] = {3, 4, 5};
    auto both = evolve_modes(tensor(group, group), first, q, DynamicsConfig::full6, 0.7);
    both = evolve_modes(both, second, q, DynamicsConfig::full6, 0.7);
    const auto single = evolve(group, q, 0.7);
    o.require(max_abs(both.cov().block(0, 6, 6, 6)) == 0.0 &&
                  max_abs(both.cov().block(0, 0, 6, 6) - single.cov()) < 1e-14,
              "Gaussian group decoupling");
    checks += 2;
  }

  // passive transforms keep purity: Gaussian unitaries and the Fock beam splitter
  for (int trial = 0; trial < 4; ++trial) {
    const auto s = apply_mode_transform(opo_equilibrium(g.uniform(0.0, 0.9)),
                                        ModeTransform::from_unitary(g.unitary(2)));
    const auto t = apply_mode_transform(s, ModeTransform::from_unitary(g.unitary(2)));
    o.require(std::abs(purity(t) - purity(s)) < 1e-10, "Gaussian purity");

    const auto rho = g.density(FockBasis{3, 3}, 2);
    const Eigen::MatrixXd w = beam_splitter_rows(3, 3, 6);
    const Eigen::MatrixXcd out = w * rho.data() * w.transpose();
    const double pin = (rho.data() * rho.data()).trace().real(), pout = (out * out).trace().real();
    o.require(std::abs(pin - pout) < 1e-12, "beam splitter purity");
    checks += 2;
  }

  // the interference block is traceless
  for (int trial = 0; trial < 3; ++trial) {
    const double s = kScale, nbar = g.uniform(0.02, 0.1);
    const auto run = run_cat_generation({{s * g.uniform(0.5, 2.0), ratio_for_nbar(nbar) * s, s, s}, 1.0, FockBasis{2, 6, 6}});
    o.require(std::abs(run.blocks.rho_int.trace()) < 1e-15, "Tr rho_int");
    ++checks;
  }
  o.detail << checks << " property checks";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"steady state", steady_state_values},
      {"threshold", threshold},
      {"Gaussian-oracle equivalence", gaussian_oracle_equivalence},
      {"herald blocks", herald_blocks},
      {"fringes and visibility", fringes},
      {"photodetection", photodetection},
      {"coherence boundary", coherence_boundary},
      {"Wigner negativity", wigner_negativity},
      {"fringe decay with size", fringe_decay},
      {"property suites", property_suite},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("criterion %zu (%s): %s  %s (%.1f s)\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
