#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "secfield/error.hpp"

namespace secfield {

/// Values read from `--config <file>`; command-line flags take precedence.
/// JSON keys mirror the field names:
///   {"dataset": {"path", "system", "n", "n1", "n2"},
///    "kernel": {"epsilon"},
///    "resolution": {"J", "L", "L1", "L2", "L_D", "eta"},
///    "seed": 0, "outputs": "dir"}
struct ExperimentConfig {
  struct Dataset {
    std::optional<std::string> path;
    std::optional<std::string> system;
    std::optional<int> n, n1, n2;
  } dataset;
  struct Kernel {
    std::optional<double> epsilon;
  } kernel;
  struct Resolution {
    std::optional<int> J, L, L1, L2, L_D;
    std::optional<double> eta;
  } resolution;
  int seed = 0;  // reserved; generators are deterministic
  std::optional<std::string> outputs;
};

/// Throws Config on unknown keys or wrongly typed values.
ExperimentConfig parse_experiment_config(const std::string& json_text);

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

int exit_code_for(ErrorKind kind);

/// Runs the command line `args` (without the program name). Returns the
/// process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace secfield
