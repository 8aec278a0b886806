#pragma once

// Orchestration behind the opo-cat executable. Kept out of main.cpp so the
// tests can drive every subcommand without spawning a process.

#include "opocat/conditioning.hpp"
#include "opocat/phase_space.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace opocat::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kValidation = 2,
  kDomain = 3,
  kIo = 4,
};

/// Thrown for schema violations and inconsistent flags; maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  double xmin = -3.0;
  double xmax = 3.0;
  int n = 61;
};

/// Rates are dimensionless products with the interaction time set to 1.
struct RunConfig {
  double chi1_t = 1e-3;
  std::optional<double> chi2_t;
  double kappa_t = 1e-3;
  std::optional<double> nbar;
  std::vector<int> cutoffs{2, 10, 10};
  int phi_points = 32;
  double alpha_re = 1.0;
  double alpha_im = 0.0;
  double beta_re = 0.0;
  double beta_im = 0.0;
  GridSpec grid;
  /// Sweep values of nbar; empty means the default 0.1, 0.2, ..., 1.0.
  std::vector<double> sweep_nbar;

  std::filesystem::path out = ".";
  int workers = 1;
  std::string format = "csv";
  bool mixture_only = false;
  /// cat: also write rho0.bin and rho1.bin
  bool dump_rho = false;
};

/// Parses a config document. Unknown keys and wrong types throw ConfigError.
RunConfig parse_config(const nlohmann::json& doc, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Resolved physics inputs: exactly one of chi2_t and nbar fixes the other.
struct Resolved {
  SystemParams params;
  double nbar = 0.0;
  double ratio = 0.0;
  ComplexAmplitudePair amps{1.0, 0.0};
};
/// Throws ConfigError for a missing or doubly given chi2_t/nbar.
Resolved resolve(const RunConfig& cfg);
/// Variant used by `stability`, which accepts any chi2 (and defaults it to 0).
SystemParams resolve_params_lenient(const RunConfig& cfg);

/// Canonical JSON of the physics part of the config (no output paths).
nlohmann::json canonical_json(const RunConfig& cfg);
/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

struct ReportRow {
  std::string quantity;
  double closed_form = 0.0;
  double oracle = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};
struct ComparisonReport {
  std::vector<ReportRow> rows;
  bool all_pass() const;
};

/// rel_error = |oracle - closed| / |closed|, or the absolute difference when
/// the closed form is below 1e-12.
ReportRow make_row(std::string quantity, double closed_form, double oracle, double tolerance);

/// Rows are emitted sorted by quantity. csv, json or text; anything else
/// throws ConfigError.
std::string emit_report(const ComparisonReport& report, const std::string& format,
                        const std::string& hash = {});

/// Oracle-vs-formula comparison at the configured point.
ComparisonReport build_check_report(const RunConfig& cfg);

/// Writes via a temporary file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// Each returns the exit code and writes its files under cfg.out.
int run_stability(const RunConfig& cfg);
int run_steady(const RunConfig& cfg);
int run_cat(const RunConfig& cfg);
int run_detect(const RunConfig& cfg);
int run_wigner(const RunConfig& cfg);
int run_sweep(const RunConfig& cfg);
int run_check(const RunConfig& cfg);

/// Full command line entry point, including error-to-exit-code mapping.
int run_main(int argc, char** argv);

}  // namespace opocat::cli
