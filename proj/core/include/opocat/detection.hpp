#pragma once

// Photodetection diagnostics on cat and mixture states: photon-number
// distributions, interference fringes, second-order correlators, coherence
// functions and quadrature marginals of single-mode Wigner functions.

#include "opocat/conditioning.hpp"
#include "opocat/fock_oracle.hpp"
#include "opocat/phase_space.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace opocat {

struct PhotonDistributions {
  /// Mode 2 of the heralded group (the rho1 branch).
  Eigen::VectorXd p_h;
  /// Mode 2 of the unheralded group (the rho0 branch).
  Eigen::VectorXd p_v;
  /// Mode 2e (or 2o) of the cat: (p_h + p_v) / 2.
  Eigen::VectorXd p;
};

PhotonDistributions photon_distributions(const CatAssembly& assembly);

/// Output ports c = (a2o + e^{i phi} a2e)/sqrt2 and d = (a2o - e^{i phi} a2e)/sqrt2.
CatOperator port_c(double phi);
CatOperator port_d(double phi);

struct PortCounts {
  double c = 0.0;
  double d = 0.0;
};
PortCounts interference_counts(const CatStateView& state, double phi);

/// (max - min) / (max + min). Needs at least 8 samples; throws
/// DegenerateCounts when max + min vanishes.
double fringe_visibility(std::span<const double> counts);

struct Correlators {
  double cc2 = 0.0;   // <(c^dagger c)^2>
  double dd2 = 0.0;   // <(d^dagger d)^2>
  double ccdd = 0.0;  // <c^dagger c d^dagger d>
};
Correlators second_order_correlators(const CatStateView& state, double phi);

struct Coherence {
  /// <c^dagger c>
  double g1 = 0.0;
  /// <(c^dagger c)^2> - <c^dagger c>
  double g2 = 0.0;
  /// g2 < g1^2
  bool subpoissonian = false;
};
Coherence coherence_g1_g2(const CatStateView& state, double phi);

/// Uniform grid of n points on [0, 2 pi).
std::vector<double> phi_grid(int n);

struct DetectionRecord {
  std::vector<double> phi_grid;
  std::vector<double> counts_c;
  std::vector<double> counts_d;
  double visibility = 0.0;
  std::vector<Correlators> correlators;
  std::vector<double> g1;
  std::vector<double> g2;
  std::vector<bool> subpoissonian;
};

DetectionRecord detection_record(const CatStateView& state, int phi_points = 32);

/// CSV with a leading "# <comment>" line when the comment is non-empty.
void write_detection_csv(std::ostream& out, const DetectionRecord& rec, const std::string& comment = {});

/// W(x, y) of a single mode.
using WignerSource = std::function<double(double, double)>;

WignerSource wigner_source(const GaussianWignerState& s);
WignerSource wigner_source(const QuadraticWignerForm& w);
/// Single-mode Fock state; the matrix is copied into the source.
WignerSource wigner_source(const FockDensityMatrix& rho);

enum class Axis { x, y };

struct MarginalOptions {
  /// Integration range of the conjugate variable is [-half_width, half_width].
  double half_width = 3.0;
  double tolerance = 1e-10;
  int max_depth = 40;
};
/// Default half width 3 + 2 sqrt(nbar).
MarginalOptions marginal_options_for(double nbar);

/// P(q) = integral of W over the conjugate quadrature, adaptive Simpson.
std::vector<double> quadrature_marginals(const WignerSource& w, Axis axis, std::span<const double> grid,
                                         const MarginalOptions& opts = {});

/// Adaptive Simpson integral of f over [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth);

/// Interference contrast of a sampled density: the largest
/// (peak - dip) / (peak + dip) over interior local minima, with `peak` the
/// lower of the two flanking maxima. Zero for a unimodal curve.
double fringe_contrast(std::span<const double> samples);

struct WignerGrid {
  std::vector<double> x;
  std::vector<double> y;
  /// w[i * y.size() + j] = W(x[i], y[j])
  std::vector<double> w;
};
WignerGrid sample_wigner(const WignerSource& w, std::span<const double> xs, std::span<const double> ys);

void write_wigner_csv(std::ostream& out, const WignerGrid& g, const std::string& comment = {});
void write_marginal_csv(std::ostream& out, std::span<const double> q, std::span<const double> density,
                        const std::string& comment = {});

/// Uniform grid of n points on [lo, hi] (n >= 2).
std::vector<double> linspace(double lo, double hi, int n);

/// %.12g formatting used by every CSV writer.
std::string format_number(double v);

}  // namespace opocat
