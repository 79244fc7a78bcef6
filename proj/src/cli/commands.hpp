#ifndef FRACMONO_CLI_COMMANDS_HPP
#define FRACMONO_CLI_COMMANDS_HPP

#include "cli/config.hpp"
#include "cli/output.hpp"

#include <string>
#include <vector>

namespace fracmono::cli {

const std::vector<std::string>& command_names();

/// Runs one command; throws ValidationError / NumericalError.
ResultBundle run(const std::string& command, const RunConfig& cfg);

/// Full entry point: argument parsing, output writing, exit codes
/// (0 success, 1 validation error or usage, 2 numerical failure).
int main_entry(int argc, char** argv);

}  // namespace fracmono::cli

#endif  // FRACMONO_CLI_COMMANDS_HPP
