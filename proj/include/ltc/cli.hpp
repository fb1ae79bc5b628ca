#pragma once

// Config ingestion, experiment orchestration and result-bundle emission.

#include "ltc/chern.hpp"
#include "ltc/common.hpp"
#include "ltc/io.hpp"
#include "ltc/lattice.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ltc::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Configuration problem; the message starts with the offending field.
class ConfigError : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

enum class Experiment { marker, gwb, dichotomy, stability };

const char* to_string(Experiment e);

enum class MatrixExport { none, binary, triplet };

struct GwbConfig {
  std::optional<double> cluster_tol;
  std::vector<double> s_grid{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<double> alpha_grid{0.05, 0.1, 0.25, 0.5};
};

struct ChernConfig {
  int k_grid = 24;
  chern::SwitchProfile profile = chern::SwitchProfile::step;
  double steepness = 1.0;
};

struct RunConfig {
  Experiment experiment = Experiment::marker;
  lattice::ModelSpec model;
  Boundary boundary = Boundary::open;
  std::vector<int> sizes;
  std::vector<double> l_values;
  GwbConfig gwb;
  ChernConfig chern;
  double gap_tol = 0.5;
  int band = 0;
  std::vector<double> lambda_grid{0.0, 0.1, 0.2};
  double stability_tolerance = 0.1;
  double growth_threshold = 0.1;
  double marker_tolerance = 0.05;
  double theorem_s = 5.0;
  double conjecture_s = 1.0;
  MatrixExport export_matrices = MatrixExport::none;
  std::optional<std::string> output_dir;
  std::uint64_t seed = 0;
};

/// Parses and validates a JSON config. Unknown keys are rejected. Throws
/// ConfigError naming the field.
RunConfig parse_config(const std::string& text);

/// Checks grids, size ordering, parameters and that every L is interior to the
/// smallest sample.
void validate_config(const RunConfig& cfg);

struct ResultBundle {
  nlohmann::json manifest = nlohmann::json::object();
  std::map<std::string, io::Table> tables;
  std::map<std::string, nlohmann::json> reports;
  /// Raw files (matrix dumps), keyed by path relative to the bundle root.
  std::map<std::string, std::string> blobs;
};

enum ExitCode { kOk = 0, kViolation = 1, kConfigError = 2, kNumericalError = 3 };

struct RunOutcome {
  int exit_code = kOk;
  ResultBundle bundle;
  std::string summary;
};

/// Runs the configured experiment. `config_bytes` is the exact file content
/// hashed into the manifest.
RunOutcome run_experiment(const RunConfig& cfg, const std::string& config_bytes, int threads);

/// Writes manifest.json, tables/*.csv with tables/schema.json, reports/*.json
/// and any blobs. Returns the written paths in write order.
std::vector<std::filesystem::path> emit_report(const ResultBundle& bundle,
                                               const std::filesystem::path& dir);

struct CommandResult {
  int exit_code = kOk;
  std::optional<ResultBundle> bundle;
};

/// Entry point behind the executable: `run --config <path> --out <dir>
/// [--threads N] [--verbose]` or `validate --config <path>`. The default
/// thread count comes from LTC_THREADS. Diagnostics go to stderr.
CommandResult run_command(const std::vector<std::string>& args);

/// Thread count from LTC_THREADS (1 when unset or invalid).
int default_threads();

}  // namespace ltc::cli
