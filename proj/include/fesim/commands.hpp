#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fesim/config.hpp"

namespace fesim {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitInconclusive = 2 };

struct CommandResult {
  std::string csv_name;  // file written under output_dir
  std::string csv;
  std::string summary;   // human-readable report for stdout
  bool inconclusive = false;
};

const std::vector<std::string>& command_names();
/// Config namespaces a subcommand reads, for --help.
std::vector<std::string> command_key_prefixes(std::string_view command);

CommandResult cmd_histogram(const ExperimentConfig& cfg);
CommandResult cmd_channel(const ExperimentConfig& cfg);
CommandResult cmd_sweep_d(const ExperimentConfig& cfg);
CommandResult cmd_spectre(const ExperimentConfig& cfg);
CommandResult cmd_patch(const ExperimentConfig& cfg);
CommandResult cmd_fingerprint(const ExperimentConfig& cfg);

CommandResult run_command(std::string_view command, const ExperimentConfig& cfg);

/// Runs `command`, writes its CSV into cfg.output_dir and prints the
/// summary. Errors go to `err`; the return value is the process exit code.
int execute_command(std::string_view command, const ExperimentConfig& cfg, bool strict,
                    std::ostream& out, std::ostream& err);

}  // namespace fesim
