#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shadow/builtin.hpp"
#include "shadow/response.hpp"

namespace shadow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;

struct SystemSpec {
  /// expanding_circle, perturbed_cat_map, solenoid or block_hyperbolic_linear
  std::string name = "expanding_circle";
  SolenoidParams solenoid;
  BlockHyperbolicParams block;
};

struct ExperimentConfig {
  SystemSpec system;
  double s = 0.0;
  Index K = 10000;
  Index spinup = kDefaultSpinup;
  Index tangent_spinup = kDefaultTangentSpinup;
  Index adjoint_spinup = kDefaultAdjointSpinup;
  /// Declared unstable dimension; the system's own value when absent.
  std::optional<Index> m;
  Index segment_len = 0;
  Index renorm_every = kDefaultRenormEvery;
  Index N_back = kDefaultCorrectionBack;
  Index N = kDefaultCorrectionForward;
  bool oracle = true;
  Index N_f = kDefaultTruncation;
  Index N_b = kDefaultTruncation;
  double delta_s = 1e-2;
  Index fd_seeds = 0;
  Index fd_K = 0;
  std::optional<Index> N_r;
  std::optional<std::string> json_path;
  std::optional<std::string> csv_path;
  std::uint64_t seed = 1;
};

/// Parses a config tree. Missing keys take defaults; unknown keys, wrong
/// types and out-of-range values throw ConfigError. Does not check m <= M,
/// which needs the system.
ExperimentConfig parse_config(const nlohmann::json &tree);
ExperimentConfig load_config(const std::string &path);

/// Full tree with every key present; parse_config(config_to_json(c))
/// reproduces c.
nlohmann::json config_to_json(const ExperimentConfig &config);

/// Applies "a.b.c=value" to the tree. The value is read as JSON when it
/// parses as JSON and as a string otherwise.
void apply_override(nlohmann::json &tree, const std::string &assignment);

/// Phase-space dimension of the configured system.
Index system_dim(const SystemSpec &spec);

/// Builds the configured system with the declared m. Throws ConfigError for
/// unknown systems or m outside [0, M].
std::unique_ptr<SystemModel> make_system(const ExperimentConfig &config);

PipelineConfig pipeline_config(const ExperimentConfig &config);

/// run: executes the pipeline, writes the JSON report to config.json_path
/// (or `out` when unset) and the CSV row to config.csv_path when set.
int run(const ExperimentConfig &config, std::ostream &out, std::ostream &err);

/// Sweep axes: K, m, M, segment_len, N.
bool is_sweep_axis(const std::string &axis);

/// One run per value; CSV with leading axis,value columns followed by the
/// report columns, to config.csv_path or `out`. An empty list writes only
/// the header.
int sweep(const ExperimentConfig &config, const std::string &axis,
          const std::vector<double> &values, std::ostream &out,
          std::ostream &err);

/// Invariant suite; one PASS/FAIL line per check.
int validate(const ExperimentConfig &config, std::ostream &out,
             std::ostream &err);

/// Maps an exception from the pipeline to an exit code and a message.
int report_failure(std::ostream &err);

} // namespace shadow::cli
