#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdlab/error.hpp"

namespace fdlab::cli {

enum ExitCode : int {
  kSuccess = 0,
  kAssertionFailure = 1,
  kConfigError = 2,
  kNonConvergence = 3,
};

/// A configuration field is missing, mistyped or out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Kinds accepted by run(), in a fixed order.
const std::vector<std::string>& experiment_kinds();
/// Kinds whose trial family is randomized; they require a seed.
bool is_randomized(const std::string& kind);

/// One experiment. The JSON form is flat: {"kind", "name", "seed", "output",
/// "expected_exponent", ...kind parameters}.
struct ExperimentConfig {
  std::string kind;
  std::string name;
  std::optional<std::uint64_t> seed;
  std::string output_dir;                  ///< defaults to "fdlab-out/<name>"
  std::optional<double> expected_exponent; ///< overrides the built-in target
  nlohmann::json params;                   ///< kind parameters only
  nlohmann::json echo() const;             ///< full config, as written to result files
};

/// Parses and validates (kind, required fields, types, ranges, unknown keys).
/// Throws ConfigError with a field-level message.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct RunOutcome {
  int exit_code = kSuccess;
  bool pass = false;
  std::string message;
  std::optional<double> fitted_exponent;
  std::vector<std::string> files;
};

/// Runs one experiment and writes results (CSV or JSON), verdict.json and
/// provenance.json into config.output_dir. Results and verdict files depend only
/// on the config; wall time goes to provenance.json. Never throws for library
/// errors: they are mapped to exit codes.
RunOutcome run(const ExperimentConfig& config);

/// Runs every manifest entry and prints one row per experiment. Returns 0 when
/// each verdict matches its expectation, otherwise the most severe exit code
/// seen (config error, then non-convergence, then assertion failure).
int verify_all(const std::string& manifest_path, std::ostream& out);
int verify_all(const nlohmann::json& manifest, const std::string& base_dir, std::ostream& out);

std::string code_version();

}  // namespace fdlab::cli
