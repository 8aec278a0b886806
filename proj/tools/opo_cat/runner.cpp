#include "runner.hpp"

#include "opocat/closed_forms.hpp"
#include "opocat/detection.hpp"
#include "opocat/errors.hpp"
#include "opocat/fock_oracle.hpp"
#include "opocat/gaussian_dynamics.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace opocat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// config

namespace {

double get_number(const json& v, const char* key) {
  if (!v.is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(std::string("config key '") + key + "' must be finite");
  return x;
}

int get_int(const json& v, const char* key) {
  if (!v.is_number_integer()) throw ConfigError(std::string("config key '") + key + "' must be an integer");
  return v.get<int>();
}

std::optional<double> get_optional(const json& v, const char* key) {
  if (v.is_null()) return std::nullopt;
  return get_number(v, key);
}

}  // namespace

RunConfig parse_config(const json& doc, RunConfig cfg) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {"chi1_t",   "chi2_t",   "kappa_t",  "nbar",    "cutoffs",
                                              "phi_points", "alpha_re", "alpha_im", "beta_re", "beta_im",
                                              "grid",     "sweep_nbar"};
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

  if (doc.contains("chi1_t")) cfg.chi1_t = get_number(doc["chi1_t"], "chi1_t");
  if (doc.contains("chi2_t")) cfg.chi2_t = get_optional(doc["chi2_t"], "chi2_t");
  if (doc.contains("kappa_t")) cfg.kappa_t = get_number(doc["kappa_t"], "kappa_t");
  if (doc.contains("nbar")) cfg.nbar = get_optional(doc["nbar"], "nbar");
  if (doc.contains("cutoffs")) {
    const auto& c = doc["cutoffs"];
    if (!c.is_array() || c.size() != 3) throw ConfigError("config key 'cutoffs' must be [m1, m2, m3]");
    cfg.cutoffs.clear();
    for (const auto& v : c) cfg.cutoffs.push_back(get_int(v, "cutoffs"));
  }
  if (doc.contains("phi_points")) cfg.phi_points = get_int(doc["phi_points"], "phi_points");
  if (doc.contains("alpha_re")) cfg.alpha_re = get_number(doc["alpha_re"], "alpha_re");
  if (doc.contains("alpha_im")) cfg.alpha_im = get_number(doc["alpha_im"], "alpha_im");
  if (doc.contains("beta_re")) cfg.beta_re = get_number(doc["beta_re"], "beta_re");
  if (doc.contains("beta_im")) cfg.beta_im = get_number(doc["beta_im"], "beta_im");
  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    if (!g.is_object()) throw ConfigError("config key 'grid' must be an object");
    for (const auto& [key, value] : g.items())
      if (key != "xmin" && key != "xmax" && key != "n") throw ConfigError("unknown grid key '" + key + "'");
    if (g.contains("xmin")) cfg.grid.xmin = get_number(g["xmin"], "grid.xmin");
    if (g.contains("xmax")) cfg.grid.xmax = get_number(g["xmax"], "grid.xmax");
    if (g.contains("n")) cfg.grid.n = get_int(g["n"], "grid.n");
  }
  if (doc.contains("sweep_nbar")) {
    const auto& s = doc["sweep_nbar"];
    if (!s.is_array()) throw ConfigError("config key 'sweep_nbar' must be an array");
    cfg.sweep_nbar.clear();
    for (const auto& v : s) cfg.sweep_nbar.push_back(get_number(v, "sweep_nbar"));
  }
  return cfg;
}

RunConfig load_config(const fs::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc, std::move(base));
}

namespace {

void check_common(const RunConfig& cfg) {
  if (cfg.phi_points < 8) throw ConfigError("phi_points must be at least 8");
  if (cfg.grid.n < 2 || !(cfg.grid.xmax > cfg.grid.xmin)) throw ConfigError("grid needs xmin < xmax and n >= 2");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (cfg.cutoffs.size() != 3) throw ConfigError("cutoffs must list three modes");
}

}  // namespace

Resolved resolve(const RunConfig& cfg) {
  check_common(cfg);
  if (cfg.chi2_t && cfg.nbar) throw ConfigError("give exactly one of chi2_t and nbar, not both");
  if (!cfg.chi2_t && !cfg.nbar) throw ConfigError("give exactly one of chi2_t and nbar");
  if (!(cfg.kappa_t > 0.0)) throw ConfigError("kappa_t must be positive");
  Resolved r;
  if (cfg.nbar) {
    if (!(*cfg.nbar >= 0.0)) throw ConfigError("nbar must be >= 0");
    r.nbar = *cfg.nbar;
    r.ratio = ratio_for_nbar(r.nbar);
  } else {
    r.ratio = *cfg.chi2_t / cfg.kappa_t;
    r.nbar = (r.ratio >= 0.0 && r.ratio < 1.0) ? equilibrium_nbar(r.ratio) : INFINITY;
  }
  r.params = SystemParams{cfg.chi1_t, r.ratio * cfg.kappa_t, cfg.kappa_t, cfg.kappa_t};
  validate_params(r.params);
  const std::complex<double> a(cfg.alpha_re, cfg.alpha_im), b(cfg.beta_re, cfg.beta_im);
  if (std::norm(a) + std::norm(b) == 0.0) throw ConfigError("alpha and beta cannot both vanish");
  r.amps = ComplexAmplitudePair::normalized(a, b);
  return r;
}

SystemParams resolve_params_lenient(const RunConfig& cfg) {
  if (cfg.chi2_t && cfg.nbar) throw ConfigError("give at most one of chi2_t and nbar");
  double chi2 = cfg.chi2_t.value_or(0.0);
  if (cfg.nbar) chi2 = ratio_for_nbar(*cfg.nbar) * cfg.kappa_t;
  SystemParams p{cfg.chi1_t, chi2, cfg.kappa_t, cfg.kappa_t};
  validate_params(p);
  return p;
}

json canonical_json(const RunConfig& cfg) {
  json j;
  j["chi1_t"] = cfg.chi1_t;
  j["chi2_t"] = cfg.chi2_t ? json(*cfg.chi2_t) : json(nullptr);
  j["kappa_t"] = cfg.kappa_t;
  j["nbar"] = cfg.nbar ? json(*cfg.nbar) : json(nullptr);
  j["cutoffs"] = cfg.cutoffs;
  j["phi_points"] = cfg.phi_points;
  j["alpha_re"] = cfg.alpha_re;
  j["alpha_im"] = cfg.alpha_im;
  j["beta_re"] = cfg.beta_re;
  j["beta_im"] = cfg.beta_im;
  j["grid"] = {{"xmin", cfg.grid.xmin}, {"xmax", cfg.grid.xmax}, {"n", cfg.grid.n}};
  j["sweep_nbar"] = cfg.sweep_nbar;
  j["mixture_only"] = cfg.mixture_only;
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string s = canonical_json(cfg).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// reports

bool ComparisonReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
}

ReportRow make_row(std::string quantity, double closed_form, double oracle, double tolerance) {
  const double diff = std::abs(oracle - closed_form);
  const double rel = std::abs(closed_form) > 1e-12 ? diff / std::abs(closed_form) : diff;
  return {std::move(quantity), closed_form, oracle, rel, tolerance, rel <= tolerance};
}

namespace {

// Numbers in JSON outputs go through the same %.12g rounding as the CSVs.
json num(double v) { return std::stod(format_number(v)); }

std::vector<ReportRow> sorted_rows(const ComparisonReport& r) {
  auto rows = r.rows;
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ReportRow& a, const ReportRow& b) { return a.quantity < b.quantity; });
  return rows;
}

}  // namespace

std::string emit_report(const ComparisonReport& report, const std::string& format, const std::string& hash) {
  const auto rows = sorted_rows(report);
  const auto passed = std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
  const auto failed = static_cast<long>(rows.size()) - passed;
  std::ostringstream out;
  if (format == "csv") {
    if (!hash.empty()) out << "# config_hash=" << hash << '\n';
    out << "quantity,closed_form,oracle,rel_error,tolerance,pass\n";
    for (const auto& r : rows)
      out << r.quantity << ',' << format_number(r.closed_form) << ',' << format_number(r.oracle) << ','
          << format_number(r.rel_error) << ',' << format_number(r.tolerance) << ',' << (r.pass ? "true" : "false")
          << '\n';
  } else if (format == "json") {
    json j;
    if (!hash.empty()) j["config_hash"] = hash;
    j["rows"] = json::array();
    for (const auto& r : rows)
      j["rows"].push_back({{"quantity", r.quantity},
                           {"closed_form", num(r.closed_form)},
                           {"oracle", num(r.oracle)},
                           {"rel_error", num(r.rel_error)},
                           {"tolerance", num(r.tolerance)},
                           {"pass", r.pass}});
    j["passed"] = passed;
    j["failed"] = failed;
    out << j.dump(2) << '\n';
  } else if (format == "text") {
    if (!hash.empty()) out << "config " << hash << '\n';
    char line[256];
    std::snprintf(line, sizeof line, "%-28s %18s %18s %12s %10s  %s\n", "quantity", "closed_form", "oracle",
                  "rel_error", "tolerance", "result");
    out << line;
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line, "%-28s %18s %18s %12s %10s  %s\n", r.quantity.c_str(),
                    format_number(r.closed_form).c_str(), format_number(r.oracle).c_str(),
                    format_number(r.rel_error).c_str(), format_number(r.tolerance).c_str(),
                    r.pass ? "PASS" : "FAIL");
      out << line;
    }
    out << "summary: " << passed << " passed, " << failed << " failed\n";
  } else {
    throw ConfigError("unknown report format '" + format + "' (csv, json, text)");
  }
  return out.str();
}

void write_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// pipelines

namespace {

std::string hash_comment(const RunConfig& cfg) { return "config_hash=" + config_hash(cfg); }

CatRun cat_run(const Resolved& r, const std::vector<int>& cutoffs) {
  CatRunSpec spec;
  spec.params = r.params;
  spec.t = 1.0;
  spec.basis = FockBasis(FockBasisConfig{cutoffs});
  return run_cat_generation(spec);
}

double n2(const FockDensityMatrix& block) {
  return moment(block.normalized(), {create(0), annihilate(0)}).real();
}

double a2_int(const ConditionalBlocks& b) {
  const Ladder a[] = {annihilate(0)};
  return expectation(b.rho_int, b.basis(), a).real();
}

// Smallest cutoff with the thermal tail (N/(N+1))^(c+1) below 1e-5.
int cutoff_for(double nbar) {
  if (nbar <= 0.0) return 1;
  const double q = nbar / (nbar + 1.0);
  return std::max(1, static_cast<int>(std::ceil(std::log(1e-5) / std::log(q))) - 1);
}

}  // namespace

int run_stability(const RunConfig& cfg) {
  check_common(cfg);
  const auto p = resolve_params_lenient(cfg);
  const auto rep = stability(p);
  const char* config = rep.config == DynamicsConfig::full6 ? "full6" : "opo4";
  std::ostringstream out;
  out << "# " << hash_comment(cfg) << '\n';
  out << "config,kind,index,re,im,unstable,threshold_margin,root_product\n";
  auto row = [&](const char* kind, std::size_t i, std::complex<double> v) {
    out << config << ',' << kind << ',' << i << ',' << format_number(v.real()) << ',' << format_number(v.imag())
        << ',' << (rep.stable ? "false" : "true") << ',' << format_number(rep.threshold_margin) << ','
        << format_number(rep.root_product) << '\n';
  };
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) row("eigenvalue", i, rep.eigenvalues[i]);
  for (std::size_t i = 0; i < rep.analytic_roots.size(); ++i) row("root", i, rep.analytic_roots[i]);
  write_atomic(cfg.out / "stability.csv", out.str());
  std::cout << "stability: " << config << " unstable=" << (rep.stable ? "false" : "true")
            << " threshold_margin=" << format_number(rep.threshold_margin) << '\n';
  return kOk;
}

int run_steady(const RunConfig& cfg) {
  const auto r = resolve(cfg);
  const auto ss = steady_state(r.params);
  json j;
  j["config_hash"] = config_hash(cfg);
  j["ratio"] = num(r.ratio);
  j["nbar"] = num(ss.nbar);
  j["nbar_mode3"] = num(ss.nbar_mode3);
  j["purity"] = num(purity(ss.state));
  j["mean"] = json::array();
  for (Eigen::Index i = 0; i < ss.state.mean().size(); ++i) j["mean"].push_back(num(ss.state.mean()(i)));
  j["cov"] = json::array();
  for (Eigen::Index i = 0; i < ss.state.cov().rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < ss.state.cov().cols(); ++k) row.push_back(num(ss.state.cov()(i, k)));
    j["cov"].push_back(row);
  }
  write_atomic(cfg.out / "steady.json", j.dump(2) + "\n");
  std::cout << "steady: nbar=" << format_number(ss.nbar) << " purity=" << format_number(purity(ss.state)) << '\n';
  return kOk;
}

int run_cat(const RunConfig& cfg) {
  const auto r = resolve(cfg);
  const auto run = cat_run(r, cfg.cutoffs);
  const auto as = assemble_cat_and_mixture(run.blocks);
  const auto& b = run.blocks;
  const std::vector<std::pair<std::string, double>> fields = {
      {"trace0", b.trace0},
      {"trace1", b.trace1},
      {"p_success", as.p_success},
      {"polarization_factor", as.polarization_factor},
      {"n2_rho0", n2(b.rho0)},
      {"n2_rho1", n2(b.rho1)},
      {"a2e_int", a2_int(b)},
      {"trace_rho_int", std::abs(b.rho_int.trace())},
  };
  json j;
  j["config_hash"] = config_hash(cfg);
  std::ostringstream csv;
  csv << "# " << hash_comment(cfg) << "\nquantity,value\n";
  for (const auto& [k, v] : fields) {
    j[k] = num(v);
    csv << k << ',' << format_number(v) << '\n';
  }
  write_atomic(cfg.out / "cat.json", j.dump(2) + "\n");
  write_atomic(cfg.out / "cat.csv", csv.str());
  if (cfg.dump_rho) {
    write_density_matrix(cfg.out / "rho0.bin", b.rho0);
    write_density_matrix(cfg.out / "rho1.bin", b.rho1);
  }
  std::cout << "cat: trace1=" << format_number(b.trace1) << " p_success=" << format_number(as.p_success) << '\n';
  return kOk;
}

int run_detect(const RunConfig& cfg) {
  const auto r = resolve(cfg);
  const auto run = cat_run(r, cfg.cutoffs);
  const auto as = assemble_cat_and_mixture(run.blocks);
  auto emit = [&](CatBranch branch, const char* name) {
    const auto rec = detection_record(CatStateView(as, branch), cfg.phi_points);
    std::ostringstream out;
    write_detection_csv(out, rec, hash_comment(cfg));
    write_atomic(cfg.out / (std::string("detect_") + name + ".csv"), out.str());
    std::cout << "detect " << name << ": visibility=" << format_number(rec.visibility) << '\n';
  };
  if (!cfg.mixture_only) emit(CatBranch::cat, "cat");
  emit(CatBranch::mixture, "mixture");
  return kOk;
}

int run_wigner(const RunConfig& cfg) {
  const auto r = resolve(cfg);
  const auto run = cat_run(r, cfg.cutoffs);
  const auto rho45 = herald_45basis(run.evolved);
  const auto dplus = to_dpm_and_condition(rho45, r.amps);
  const auto xs = linspace(cfg.grid.xmin, cfg.grid.xmax, cfg.grid.n);
  const std::string comment = hash_comment(cfg);

  const auto oracle = wigner_source(dplus.dplus);
  const auto closed = wigner_source(closed_form::dplus_wigner_form(r.ratio, r.amps));
  auto grid_file = [&](const WignerSource& w, const std::string& name) {
    std::ostringstream out;
    write_wigner_csv(out, sample_wigner(w, xs, xs), comment);
    write_atomic(cfg.out / name, out.str());
  };
  grid_file(oracle, "wigner_dplus.csv");
  grid_file(closed, "wigner_dplus_closed_form.csv");

  const auto opts = marginal_options_for(r.nbar);
  for (Axis axis : {Axis::x, Axis::y}) {
    const std::string tag = axis == Axis::x ? "x" : "y";
    const auto p = quadrature_marginals(oracle, axis, xs, opts);
    std::vector<double> pc;
    for (double q : xs) pc.push_back(closed_form::dplus_marginal(r.ratio, r.amps, axis, q));
    std::ostringstream a, b;
    write_marginal_csv(a, xs, p, comment);
    write_marginal_csv(b, xs, pc, comment);
    write_atomic(cfg.out / ("marginal_" + tag + ".csv"), a.str());
    write_atomic(cfg.out / ("marginal_" + tag + "_closed_form.csv"), b.str());
  }
  std::cout << "wigner: W(0,0)=" << format_number(oracle(0.0, 0.0))
            << " closed_form=" << format_number(closed(0.0, 0.0))
            << " p_dminus=" << format_number(dplus.probability) << '\n';
  return kOk;
}

namespace {

const char* kSweepHeader =
    "nbar,chi2_t,cutoff,trace1,p_success,n2_rho0,n2_rho1,visibility,visibility_closed_form,g1,g1_closed_form,g2,"
    "g2_closed_form,subpoissonian\n";

std::string sweep_row(const RunConfig& cfg, double nbar) {
  RunConfig point = cfg;
  point.chi2_t.reset();
  point.nbar = nbar;
  const int c = std::max(cutoff_for(nbar), std::max(cfg.cutoffs[1], cfg.cutoffs[2]));
  point.cutoffs = {cfg.cutoffs[0], c, c};
  const auto r = resolve(point);
  const auto run = cat_run(r, point.cutoffs);
  const auto as = assemble_cat_and_mixture(run.blocks);
  const CatStateView view(as, CatBranch::cat);
  const auto rec = detection_record(view, cfg.phi_points);
  const auto coh = coherence_g1_g2(view, 0.0);
  const auto f = closed_form::detection_formulas(nbar, 0.0);
  std::ostringstream out;
  out << format_number(nbar) << ',' << format_number(r.params.chi2) << ',' << c << ','
      << format_number(run.blocks.trace1) << ',' << format_number(as.p_success) << ','
      << format_number(n2(run.blocks.rho0)) << ',' << format_number(n2(run.blocks.rho1)) << ','
      << format_number(rec.visibility) << ',' << format_number(f.visibility) << ',' << format_number(coh.g1) << ','
      << format_number(f.g1) << ',' << format_number(coh.g2) << ',' << format_number(f.g2) << ','
      << (coh.subpoissonian ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace

int run_sweep(const RunConfig& cfg) {
  check_common(cfg);
  std::vector<double> values = cfg.sweep_nbar;
  if (values.empty())
    for (int k = 1; k <= 10; ++k) values.push_back(0.1 * k);
  const std::string comment = "# " + hash_comment(cfg) + "\n";
  const fs::path dir = cfg.out / "sweep";

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      try {
        char name[32];
        std::snprintf(name, sizeof name, "point_%03zu.csv", i);
        write_atomic(dir / name, comment + kSweepHeader + sweep_row(cfg, values[i]));
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(std::min<std::size_t>(cfg.workers, values.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  // merge in point order
  std::string merged = comment + kSweepHeader;
  for (std::size_t i = 0; i < values.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "point_%03zu.csv", i);
    std::ifstream in(dir / name);
    if (!in) throw std::runtime_error("missing sweep point file " + (dir / name).string());
    std::string line;
    int k = 0;
    while (std::getline(in, line))
      if (++k == 3) merged += line + "\n";
  }
  write_atomic(cfg.out / "sweep.csv", merged);
  std::cout << "sweep: " << values.size() << " points\n";
  return kOk;
}

ComparisonReport build_check_report(const RunConfig& cfg) {
  const auto r = resolve(cfg);
  const double N = r.nbar;
  const auto st = closed_form::smalltime_blocks({N, r.params.chi1, r.params.chi2, r.params.kappa2});
  const auto run = cat_run(r, cfg.cutoffs);
  const auto as = assemble_cat_and_mixture(run.blocks);
  const auto& b = run.blocks;
  const CatStateView cat(as, CatBranch::cat), mix(as, CatBranch::mixture);
  const auto f0 = closed_form::detection_formulas(N, 0.0);
  const auto fpi = closed_form::detection_formulas(N, std::numbers::pi);

  ComparisonReport rep;
  auto add = [&](std::string q, double c, double o, double t = 0.02) {
    rep.rows.push_back(make_row(std::move(q), c, o, t));
  };
  add("trace0", st.trace0, b.trace0);
  add("trace1", st.trace1, b.trace1);
  add("n2_rho0", st.n2_rho0, n2(b.rho0));
  add("n2_rho1", st.n2_rho1, n2(b.rho1));
  add("a2e_int", st.a2e_int, a2_int(b));

  const auto rec = detection_record(cat, cfg.phi_points);
  const auto mrec = detection_record(mix, cfg.phi_points);
  add("mix_counts", f0.mix_counts, mrec.counts_c.front());
  const auto [mmin, mmax] = std::minmax_element(mrec.counts_c.begin(), mrec.counts_c.end());
  add("mix_phi_variation", 0.0, *mmax - *mmin, 1e-6);
  add("cat_counts_phi0", f0.cat_counts, rec.counts_c.front());
  add("cat_counts_phipi", fpi.cat_counts, interference_counts(cat, std::numbers::pi).c);
  add("visibility", f0.visibility, rec.visibility);

  const auto corr = second_order_correlators(cat, 0.0);
  add("cc2_phi0", f0.cc2, corr.cc2);
  add("dd2_phi0", f0.dd2, corr.dd2);
  add("ccdd_phi0", f0.ccdd, corr.ccdd);
  std::vector<double> cc2;
  for (const auto& c : rec.correlators) cc2.push_back(c.cc2);
  add("corr_visibility", f0.corr_visibility, fringe_visibility(cc2));
  const auto coh = coherence_g1_g2(cat, 0.0);
  add("g1_phi0", f0.g1, coh.g1);
  add("g2_phi0", f0.g2, coh.g2);

  const auto pd = photon_distributions(as);
  double tv = 0.0, covered = 0.0;
  for (Eigen::Index n = 0; n < pd.p_h.size(); ++n) {
    const double q = closed_form::shifted_thermal_pmf(N, static_cast<int>(n));
    tv += std::abs(pd.p_h(n) - q);
    covered += q;
  }
  tv = 0.5 * (tv + std::max(0.0, 1.0 - covered));
  add("photon_tv_shifted_thermal", 0.0, tv, 1e-2);

  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(4);
  const std::vector<Eigen::VectorXd> pts{origin};
  const int modes[] = {0, 1};
  add("four_mode_origin", closed_form::four_mode_origin(N), rho_to_wigner(b.rho1.normalized(), modes, pts)[0], 0.05);
  return rep;
}

int run_check(const RunConfig& cfg) {
  const auto rep = build_check_report(cfg);
  const std::string hash = config_hash(cfg);
  const std::string ext = cfg.format == "text" ? "txt" : cfg.format;
  write_atomic(cfg.out / ("check." + ext), emit_report(rep, cfg.format, hash));
  std::cout << emit_report(rep, "text", hash);
  return rep.all_pass() ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------
// command line

int run_main(int argc, char** argv) {
  CLI::App app{"Cat-state generation in a two-crystal OPO: Gaussian dynamics, Fock oracle and detection."};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  RunConfig flags;
  std::optional<double> chi1, chi2, kappa, nbar, are, aim, bre, bim;
  std::vector<int> cutoffs;
  std::vector<double> sweep_values;
  int phi_points = 0;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--workers", flags.workers, "Concurrent sweep points")->check(CLI::PositiveNumber);
  app.add_option("--format", flags.format, "Report format for check: csv, json or text");
  app.add_option("--chi1", chi1, "chi1 t");
  app.add_option("--chi2", chi2, "chi2 t (exclusive with --nbar)");
  app.add_option("--kappa", kappa, "kappa t");
  app.add_option("--nbar", nbar, "Equilibrium photon number (exclusive with --chi2)");
  app.add_option("--cutoffs", cutoffs, "Fock cutoffs m1 m2 m3")->expected(3);
  app.add_option("--phi-points", phi_points, "Analyzer phase samples");
  app.add_option("--alpha-re", are);
  app.add_option("--alpha-im", aim);
  app.add_option("--beta-re", bre);
  app.add_option("--beta-im", bim);
  app.add_option("--sweep-nbar", sweep_values, "nbar values for sweep");
  app.add_flag("--mixture-only", flags.mixture_only, "detect: only the mixture");
  app.add_flag("--dump-rho", flags.dump_rho, "cat: also write the conditional blocks as binary dumps");

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"stability", "Drift eigenvalues and threshold"},
      {"steady", "Below-threshold steady state"},
      {"cat", "Herald probabilities and block moments"},
      {"detect", "Interference counts and correlators for cat and mixture"},
      {"wigner", "Conditioned d+ Wigner grid and marginals"},
      {"sweep", "Detection summary over a grid of nbar"},
      {"check", "Closed forms versus the Fock oracle"},
  };
  for (const auto& [name, help] : subs) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    cfg.out = flags.out;
    cfg.workers = flags.workers;
    cfg.format = flags.format;
    cfg.mixture_only = flags.mixture_only;
    cfg.dump_rho = flags.dump_rho;
    if (chi1) cfg.chi1_t = *chi1;
    if (kappa) cfg.kappa_t = *kappa;
    // a flag for one of the pair replaces whatever the config gave for the other
    if (chi2) {
      cfg.chi2_t = *chi2;
      if (!nbar) cfg.nbar.reset();
    }
    if (nbar) {
      cfg.nbar = *nbar;
      if (!chi2) cfg.chi2_t.reset();
    }
    if (!cutoffs.empty()) cfg.cutoffs = cutoffs;
    if (phi_points) cfg.phi_points = phi_points;
    if (are) cfg.alpha_re = *are;
    if (aim) cfg.alpha_im = *aim;
    if (bre) cfg.beta_re = *bre;
    if (bim) cfg.beta_im = *bim;
    if (!sweep_values.empty()) cfg.sweep_nbar = sweep_values;

    const std::string sub = app.get_subcommands().front()->get_name();
    int code = kOk;
    if (sub == "stability") code = run_stability(cfg);
    else if (sub == "steady") code = run_steady(cfg);
    else if (sub == "cat") code = run_cat(cfg);
    else if (sub == "detect") code = run_detect(cfg);
    else if (sub == "wigner") code = run_wigner(cfg);
    else if (sub == "sweep") code = run_sweep(cfg);
    else code = run_check(cfg);
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_domain_error(e.code()) ? kDomain : kValidation;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const std::runtime_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kCheckFailed;
  }
}

}  // namespace opocat::cli
