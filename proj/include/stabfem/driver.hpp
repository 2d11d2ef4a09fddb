#pragma once

#include <string>

#include "stabfem/coercivity_lab.hpp"
#include "stabfem/harness.hpp"

namespace stabfem {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RunResult {
  int status = 0;  // 0 ok, 1 verdict failure, 2 config error (thrown instead)
  std::string output;
  bool is_csv = false;
};

/// Executes one subcommand (solve, infsup, coercivity, signcheck,
/// convergence, check) on a JSON configuration string. Throws
/// ConfigError on bad input; verdict failures are reported via status.
RunResult run_command(const std::string& subcommand, const std::string& config_json);

}  // namespace stabfem
