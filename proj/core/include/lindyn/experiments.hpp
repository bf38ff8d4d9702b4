#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lindyn/collapse.hpp"
#include "lindyn/emergence.hpp"
#include "lindyn/grokking.hpp"
#include "lindyn/integrator.hpp"
#include "lindyn/model.hpp"
#include "lindyn/regimes.hpp"

// Experiment runner: strict JSON configs in, CSV/SVG artifacts plus a hashed
// manifest out. Identical config and seed produce byte-identical artifacts.

namespace lindyn {

enum class Command { kSimulate, kSweep, kCollapse, kEmerge, kGrok, kValidate };
enum class OutputFormat { kCsv, kCsvSvg };

std::string command_name(Command command);
Command parse_command(const std::string& name);

struct SimulateSettings {
  // elementwise | one-layer | dense | wide-scalar
  std::string family = "elementwise";
  int d = 4, p = 4, c = 4;
  double z = 1.0;
  std::vector<double> scales;     // per-mode targets; family default if empty
  std::vector<double> variances;  // input variances; ones if empty
  double u0 = 1e-6;               // initial mode product (elementwise/wide)
  double lambda = 0.0;            // dense-family layer imbalance at init
  double init_scale = 1e-3;       // dense-family initial mode product
  double t_end = 0.0;             // 0 = five times the slowest timescale
  double rel_tol = 1e-10, abs_tol = 1e-12;
  int points = 200;               // recording grid resolution
};

struct SweepSettings {
  // lambda-scale | funnel | anti-funnel | imbalance-ratio
  std::string grid = "lambda-scale";
  int d = 10, p = 10, c = 10;          // square and ratio grids
  int wide = 20, mid = 10, narrow = 4; // funnel shape
  double base_norm = 4.0;              // ratio grid init norm
  std::vector<double> lambdas, scales, imbalances, ratios;
  GridTrainConfig train;
};

struct EmergeSettings {
  std::string mode = "time";  // time | data | params
  int p_star = 64, p = 64;
  double alpha = 2.0, s = 1.0, u0 = 1e-6;
  int points = 120;  // time-grid resolution
  int trials = 200;  // Monte-Carlo trials per dataset size
  int shots = 1;     // samples required before a skill counts as covered
  std::vector<double> sizes;   // dataset sizes; default log-spaced
  std::vector<double> widths;  // model widths; default powers of two
};

struct GrokSettings {
  // default | weight-downscale | target-upscale | input-downscale |
  // output-downscale; the preset fixes the four scale knobs, explicit keys
  // then override.
  std::string preset = "default";
  GrokConfig cfg;
  int n_train = 1000, n_test = 1000;
  double margin = 4.0;  // synthetic-fallback class separation
};

struct ExperimentConfig {
  Command command = Command::kValidate;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  OutputFormat format = OutputFormat::kCsv;
  SimulateSettings simulate;
  SweepSettings sweep;
  CollapseConfig collapse;
  EmergeSettings emerge;
  GrokSettings grok;
};

/// Strict parse: unknown keys and type mismatches raise ConfigError naming
/// the JSON pointer; defaults are resolved into concrete values. A nonempty
/// command_override must agree with any "command" key in the text.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::string& command_override = "");
ExperimentConfig load_config(const std::string& path,
                             const std::string& command_override = "");

/// Canonical JSON echo of a resolved config; parse_config of this string
/// reproduces the config exactly.
std::string resolved_config_json(const ExperimentConfig& cfg);

struct ArtifactEntry {
  std::string name;  // path relative to output_dir
  std::uint64_t hash = 0;
};

struct RunResult {
  std::vector<ArtifactEntry> artifacts;
  std::string summary;
};

/// Executes the experiment, writes artifacts plus manifest.json into
/// output_dir, and returns the artifact hashes with a short text summary.
RunResult run_experiment(const ExperimentConfig& cfg);

struct ValidationRow {
  std::string check;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double seconds = 0.0;
};

/// Closed-form-versus-integrator suite: sigmoidal, exponential and
/// singular-mode trajectories, the scalar-model gamma solution, and both
/// solved imbalance-transition limits.
std::vector<ValidationRow> run_validation(std::uint64_t seed);

}  // namespace lindyn
