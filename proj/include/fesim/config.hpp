#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fesim/channel.hpp"
#include "fesim/fingerprint.hpp"
#include "fesim/spectre.hpp"

namespace fesim {

/// Channel settings as written in a config file. Unset counts fall back to
/// the chosen variant's defaults when resolved.
struct ChannelSettings {
  Variant variant = Variant::nonmt_evict;
  Stealth stealth = Stealth::stealthy;
  Measure measure = Measure::timing;
  Interleave interleave = Interleave::lap;
  std::optional<std::uint32_t> d;
  std::optional<std::uint32_t> M;
  std::optional<std::uint64_t> p;
  std::optional<std::uint64_t> q;
  std::uint32_t r = 16;
  std::uint32_t target_set = 0;
  std::optional<std::uint32_t> alternate_set;
  EnclaveMode enclave;
  double alpha = 0.5;
  std::uint32_t calibration_bits = 16;
  BitMessage::Pattern pattern = BitMessage::Pattern::alternating;
  std::size_t bits = 1000;
  std::uint64_t message_seed = 7;

  ChannelParams resolve() const;

  friend bool operator==(const ChannelSettings&, const ChannelSettings&) = default;
};

struct ExperimentConfig {
  SimSetup sim;
  ChannelSettings channel;
  std::uint32_t sweep_d_min = 1;
  std::uint32_t sweep_d_max = 8;
  std::string spectre_secret = "all";  // "all", "random" or hex digits
  std::size_t spectre_chunks = 32;     // length of a random secret
  SpectreParams spectre;
  PatchParams patch;
  FingerprintParams fingerprint;
  std::string fingerprint_victims = "synthetic";  // or comma-separated CSV paths
  std::size_t histogram_samples = 1000;
  double histogram_bin_width = 0.25;
  std::uint64_t seed = 1;
  std::string output_dir = ".";

  /// Checks cross-field constraints the individual setters cannot.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct ConfigKey {
  std::string name;
  std::string help;
};

/// Every accepted key in file order.
const std::vector<ConfigKey>& config_keys();

/// Keys whose name starts with one of `prefixes` (a prefix ending in '.'
/// matches a namespace; otherwise the key must match exactly).
std::vector<ConfigKey> config_keys_for(const std::vector<std::string>& prefixes);

/// Sets one key; throws ValidationError for unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const ExperimentConfig& cfg, std::string_view key);

/// "key=value", as given on the command line.
void apply_override(ExperimentConfig& cfg, std::string_view assignment);

/// `key = value` lines; '#' starts a comment.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
/// Every key with its current value, loadable by parse_config.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace fesim
