#include "opocat/detection.hpp"

#include "opocat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace opocat {

using cd = std::complex<double>;

PhotonDistributions photon_distributions(const CatAssembly& assembly) {
  const auto& b = assembly.blocks;
  if (!(b.trace1 > 0.0) || !(b.trace0 > 0.0))
    throw Error(ErrorCode::ZeroHeraldProbability, "empty conditional block");
  PhotonDistributions d;
  d.p_h = photon_distribution(b.rho1.normalized(), 0);
  d.p_v = photon_distribution(b.rho0.normalized(), 0);
  d.p = 0.5 * (d.p_h + d.p_v);
  return d;
}

namespace {

const CatOperator& a2o() {
  static const CatOperator op(CatLadder{Group::e, 0, false});
  return op;
}
const CatOperator& a2e() {
  static const CatOperator op(CatLadder{Group::o, 0, false});
  return op;
}

CatOperator number(const CatOperator& a) { return a.adjoint() * a; }

}  // namespace

CatOperator port_c(double phi) {
  return cd(std::numbers::sqrt2 / 2.0) * (a2o() + std::polar(1.0, phi) * a2e());
}

CatOperator port_d(double phi) {
  return cd(std::numbers::sqrt2 / 2.0) * (a2o() - std::polar(1.0, phi) * a2e());
}

PortCounts interference_counts(const CatStateView& state, double phi) {
  return {state.expectation(number(port_c(phi))).real(), state.expectation(number(port_d(phi))).real()};
}

double fringe_visibility(std::span<const double> counts) {
  if (counts.size() < 8) throw Error(ErrorCode::InvalidArgument, "visibility needs at least 8 phase samples");
  const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
  const double den = *mx + *mn;
  if (den == 0.0) throw Error(ErrorCode::DegenerateCounts, "max + min of the counts is zero");
  return (*mx - *mn) / den;
}

Correlators second_order_correlators(const CatStateView& state, double phi) {
  const CatOperator nc = number(port_c(phi));
  const CatOperator nd = number(port_d(phi));
  return {state.expectation(nc * nc).real(), state.expectation(nd * nd).real(), state.expectation(nc * nd).real()};
}

Coherence coherence_g1_g2(const CatStateView& state, double phi) {
  const CatOperator nc = number(port_c(phi));
  Coherence c;
  c.g1 = state.expectation(nc).real();
  c.g2 = state.expectation(nc * nc).real() - c.g1;
  c.subpoissonian = c.g2 < c.g1 * c.g1;
  return c;
}

std::vector<double> phi_grid(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "phi grid needs at least one point");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = 2.0 * std::numbers::pi * k / n;
  return g;
}

DetectionRecord detection_record(const CatStateView& state, int phi_points) {
  DetectionRecord r;
  r.phi_grid = phi_grid(phi_points);
  for (double phi : r.phi_grid) {
    const auto counts = interference_counts(state, phi);
    const auto corr = second_order_correlators(state, phi);
    r.counts_c.push_back(counts.c);
    r.counts_d.push_back(counts.d);
    r.correlators.push_back(corr);
    // g1 and g2 reuse the counts and correlators computed above
    const double g2 = corr.cc2 - counts.c;
    r.g1.push_back(counts.c);
    r.g2.push_back(g2);
    r.subpoissonian.push_back(g2 < counts.c * counts.c);
  }
  r.visibility = fringe_visibility(r.counts_c);
  return r;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

void write_detection_csv(std::ostream& out, const DetectionRecord& rec, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "phi,counts_c,counts_d,cc2,dd2,ccdd,g1,g2,subpoissonian\n";
  for (std::size_t i = 0; i < rec.phi_grid.size(); ++i) {
    const auto& c = rec.correlators[i];
    out << format_number(rec.phi_grid[i]) << ',' << format_number(rec.counts_c[i]) << ','
        << format_number(rec.counts_d[i]) << ',' << format_number(c.cc2) << ',' << format_number(c.dd2) << ','
        << format_number(c.ccdd) << ',' << format_number(rec.g1[i]) << ',' << format_number(rec.g2[i]) << ','
        << (rec.subpoissonian[i] ? "true" : "false") << '\n';
  }
}

WignerSource wigner_source(const GaussianWignerState& s) {
  if (s.n_modes() != 1) throw Error(ErrorCode::InvalidArgument, "Wigner source must be single-mode");
  return [s](double x, double y) { return s.wigner(Eigen::Vector2d(x, y)); };
}

WignerSource wigner_source(const QuadraticWignerForm& w) {
  if (w.gaussian().n_modes() != 1) throw Error(ErrorCode::InvalidArgument, "Wigner source must be single-mode");
  return [w](double x, double y) { return w(Eigen::Vector2d(x, y)); };
}

WignerSource wigner_source(const FockDensityMatrix& rho) {
  if (rho.basis().n_modes() != 1) throw Error(ErrorCode::InvalidArgument, "Wigner source must be single-mode");
  return [m = rho.data(), b = rho.basis()](double x, double y) { return wigner_at(m, b, Eigen::Vector2d(x, y)); };
}

MarginalOptions marginal_options_for(double nbar) {
  MarginalOptions o;
  o.half_width = 3.0 + 2.0 * std::sqrt(std::max(0.0, nbar));
  return o;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
  // a few fixed panels first so narrow features are not stepped over
  constexpr int panels = 16;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * h, hi = lo + h;
    const double flo = f(lo), fmid = f(0.5 * (lo + hi)), fhi = f(hi);
    const double whole = h / 6.0 * (flo + 4.0 * fmid + fhi);
    total += simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol / panels, max_depth);
  }
  return total;
}

std::vector<double> quadrature_marginals(const WignerSource& w, Axis axis, std::span<const double> grid,
                                         const MarginalOptions& opts) {
  if (!(opts.half_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "half width must be positive");
  std::vector<double> out;
  out.reserve(grid.size());
  for (double q : grid) {
    std::function<double(double)> f;
    if (axis == Axis::x)
      f = [&](double y) { return w(q, y); };
    else
      f = [&](double x) { return w(x, q); };
    out.push_back(adaptive_simpson(f, -opts.half_width, opts.half_width, opts.tolerance, opts.max_depth));
  }
  return out;
}

double fringe_contrast(std::span<const double> s) {
  double best = 0.0;
  const std::size_t n = s.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(s[i] < s[i - 1] && s[i] <= s[i + 1])) continue;
    const double left = *std::max_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(i));
    const double right = *std::max_element(s.begin() + static_cast<std::ptrdiff_t>(i) + 1, s.end());
    const double peak = std::min(left, right);
    if (peak + s[i] <= 0.0 || peak <= s[i]) continue;
    best = std::max(best, (peak - s[i]) / (peak + s[i]));
  }
  return best;
}

WignerGrid sample_wigner(const WignerSource& w, std::span<const double> xs, std::span<const double> ys) {
  WignerGrid g{{xs.begin(), xs.end()}, {ys.begin(), ys.end()}, {}};
  g.w.reserve(xs.size() * ys.size());
  for (double x : xs)
    for (double y : ys) g.w.push_back(w(x, y));
  return g;
}

void write_wigner_csv(std::ostream& out, const WignerGrid& g, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "x,y,w\n";
  for (std::size_t i = 0; i < g.x.size(); ++i)
    for (std::size_t j = 0; j < g.y.size(); ++j)
      out << format_number(g.x[i]) << ',' << format_number(g.y[j]) << ',' << format_number(g.w[i * g.y.size() + j])
          << '\n';
}

void write_marginal_csv(std::ostream& out, std::span<const double> q, std::span<const double> density,
                        const std::string& comment) {
  if (q.size() != density.size()) throw Error(ErrorCode::InvalidArgument, "marginal grid/density size mismatch");
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "q,p_density\n";
  for (std::size_t i = 0; i < q.size(); ++i) out << format_number(q[i]) << ',' << format_number(density[i]) << '\n';
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "linspace needs at least two points");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
  return v;
}

}  // namespace opocat
