// fesim: runs the frontend side-channel experiments and writes CSV.
//
// Precedence, lowest first: built-in defaults, --config file, --set
// overrides in the order given, then --seed and --output-dir.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fesim/commands.hpp"

namespace {

std::string keys_footer(const std::string& command) {
  std::string s = "Config keys read:\n";
  for (const auto& k : fesim::config_keys_for(fesim::command_key_prefixes(command)))
    s += fmt::format("  {:<36} {}\n", k.name, k.help);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated CPU frontend side channels: covert channels, spectre, fingerprinting"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::string seed;
  std::string output_dir;
  bool strict = false;
  bool dump = false;

  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override one key, e.g. --set noise.sigma=2")->allow_extra_args(false);
  app.add_option("--seed", seed, "root seed (same as --set seed=N)");
  app.add_option("--output-dir", output_dir, "directory for CSV output (must exist)");
  app.add_flag("--strict", strict, "exit 2 on an inconclusive result");
  app.add_flag("--dump-config", dump, "print the effective config and exit");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"histogram", "per-path block timing histogram"},
      {"channel", "calibrate one covert channel and send a message"},
      {"sweep-d", "send the configured message for each receiver way count d"},
      {"spectre", "leak a secret through transient DSB set accesses"},
      {"patch", "tell whether the LSD is enabled from loop timing"},
      {"fingerprint", "classify co-running victims from attacker IPC traces"},
  };
  for (const auto& [name, desc] : commands) app.add_subcommand(name, desc)->footer(keys_footer(name));

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  fesim::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = fesim::load_config(config_path);
    for (const auto& o : overrides) fesim::apply_override(cfg, o);
    if (!seed.empty()) fesim::set_config_value(cfg, "seed", seed);
    if (!output_dir.empty()) fesim::set_config_value(cfg, "output_dir", output_dir);
  } catch (const fesim::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fesim::kExitValidation;
  }
  if (dump) {
    std::cout << fesim::dump_config(cfg);
    return fesim::kExitOk;
  }
  return fesim::execute_command(command, cfg, strict, std::cout, std::cerr);
}
