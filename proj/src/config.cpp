#include "fesim/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace fesim {

ChannelParams ChannelSettings::resolve() const {
  ChannelParams p = ChannelParams::defaults_for(variant, stealth);
  p.measure = measure;
  p.interleave = interleave;
  if (d) p.d = *d;
  if (M) p.M = *M;
  if (this->p) p.p = *this->p;
  if (q) p.q = *q;
  p.r = r;
  p.target_set = target_set;
  p.alternate_set = alternate_set;
  p.enclave = enclave;
  p.threshold_alpha = alpha;
  p.calibration_bits = calibration_bits;
  return p;
}

void ExperimentConfig::validate() const {
  sim.fe.validate();
  sim.costs.validate();
  if (!(sim.rapl_interval_s > 0.0)) throw ValidationError("rapl.interval_s must be positive");
  if (histogram_samples == 0) throw ValidationError("histogram.samples must be >= 1");
  if (!(histogram_bin_width > 0.0)) throw ValidationError("histogram.bin_width must be positive");
  if (output_dir.empty()) throw ValidationError("output_dir must not be empty");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view v, std::string_view what) {
  throw ValidationError(fmt::format("'{}' is not {}", v, what));
}

template <class T>
void parse_unsigned(std::string_view v, T& out) {
  T x{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) bad_value(v, "a non-negative integer");
  out = x;
}

void parse(std::string_view v, std::uint32_t& out) { parse_unsigned(v, out); }
void parse(std::string_view v, std::uint64_t& out) { parse_unsigned(v, out); }

void parse(std::string_view v, double& out) {
  const std::string s(v);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(x))
    bad_value(v, "a finite number");
  out = x;
}

void parse(std::string_view v, bool& out) {
  if (v == "true" || v == "1" || v == "on" || v == "yes")
    out = true;
  else if (v == "false" || v == "0" || v == "off" || v == "no")
    out = false;
  else
    bad_value(v, "a boolean");
}

void parse(std::string_view v, std::string& out) { out = std::string(v); }
void parse(std::string_view v, Variant& out) { out = parse_variant(v); }
void parse(std::string_view v, Stealth& out) { out = parse_stealth(v); }
void parse(std::string_view v, Measure& out) { out = parse_measure(v); }
void parse(std::string_view v, Interleave& out) { out = parse_interleave(v); }
void parse(std::string_view v, BitMessage::Pattern& out) { out = parse_pattern(v); }

template <class T>
void parse(std::string_view v, std::optional<T>& out) {
  if (v == "auto") {
    out.reset();
    return;
  }
  T x{};
  parse(v, x);
  out = x;
}

std::string format(std::uint32_t v) { return fmt::format("{}", v); }
std::string format(std::uint64_t v) { return fmt::format("{}", v); }
std::string format(double v) { return fmt::format("{}", v); }
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(const std::string& v) { return v; }
std::string format(Variant v) { return std::string(to_string(v)); }
std::string format(Stealth v) { return std::string(to_string(v)); }
std::string format(Measure v) { return std::string(to_string(v)); }
std::string format(Interleave v) { return std::string(to_string(v)); }
std::string format(BitMessage::Pattern v) { return std::string(to_string(v)); }
template <class T>
std::string format(const std::optional<T>& v) {
  return v ? format(*v) : std::string("auto");
}

struct Entry {
  ConfigKey key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class Ref>
Entry field(std::string name, std::string help, Ref ref) {
  return Entry{{std::move(name), std::move(help)},
               [ref](ExperimentConfig& c, std::string_view v) { parse(v, ref(c)); },
               [ref](const ExperimentConfig& c) {
                 return format(ref(const_cast<ExperimentConfig&>(c)));
               }};
}

#define FIELD(name, help, expr) field(name, help, [](ExperimentConfig& c) -> auto& { return expr; })

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      FIELD("dsb.sets", "DSB sets (power of two)", c.sim.fe.dsb.sets),
      FIELD("dsb.ways", "DSB ways per set (N)", c.sim.fe.dsb.ways),
      FIELD("dsb.uops_per_line", "micro-ops per DSB line", c.sim.fe.dsb.uops_per_line),
      FIELD("dsb.window_bytes", "bytes covered by one DSB way", c.sim.fe.dsb.window_bytes),
      FIELD("lsd.capacity", "LSD capacity in micro-ops", c.sim.fe.lsd.capacity_uops),
      FIELD("lsd.enabled", "LSD present (false models the microcode patch)", c.sim.fe.lsd.enabled),
      FIELD("lsd.capture_laps", "clean laps before a loop streams from the LSD", c.sim.fe.lsd.capture_laps),
      FIELD("l1i.size", "L1I size in bytes", c.sim.fe.l1i.size_bytes),
      FIELD("l1i.ways", "L1I associativity", c.sim.fe.l1i.ways),
      FIELD("l1i.line", "L1I line size in bytes", c.sim.fe.l1i.line_bytes),
      FIELD("cost.lsd", "cycles per LSD-delivered block", c.sim.costs.cycles_lsd),
      FIELD("cost.dsb", "cycles per DSB-delivered block", c.sim.costs.cycles_dsb),
      FIELD("cost.mite", "cycles per MITE-decoded block", c.sim.costs.cycles_mite),
      FIELD("cost.lsd_to_dsb", "LSD to DSB switch penalty (cycles)", c.sim.costs.lsd_to_dsb),
      FIELD("cost.dsb_to_mite", "DSB to MITE switch penalty (cycles)", c.sim.costs.dsb_to_mite),
      FIELD("cost.lcp_stall", "cycles per stalled LCP instruction", c.sim.costs.lcp_stall),
      FIELD("cost.energy_lsd", "energy units per LSD micro-op", c.sim.costs.energy_lsd),
      FIELD("cost.energy_dsb", "energy units per DSB micro-op", c.sim.costs.energy_dsb),
      FIELD("cost.energy_mite", "energy units per MITE micro-op", c.sim.costs.energy_mite),
      FIELD("cost.core_freq_hz", "core clock for cycles to seconds", c.sim.costs.core_freq_hz),
      FIELD("noise.sigma", "Gaussian timing noise per block (cycles)", c.sim.costs.noise_sigma),
      FIELD("rapl.interval_s", "energy counter refresh interval (s)", c.sim.rapl_interval_s),
      FIELD("channel.variant", "mt_evict|mt_misalign|nonmt_evict|nonmt_misalign|slow_switch", c.channel.variant),
      FIELD("channel.stealth", "stealthy|fast (single-threaded variants)", c.channel.stealth),
      FIELD("channel.measure", "timing|power", c.channel.measure),
      FIELD("channel.mt_interleave", "lap|block scheduling of the MT sender", c.channel.interleave),
      FIELD("channel.d", "receiver blocks, or auto", c.channel.d),
      FIELD("channel.M", "receiver plus sender blocks for misalignment, or auto", c.channel.M),
      FIELD("channel.p", "receiver laps, or auto", c.channel.p),
      FIELD("channel.q", "sender laps, or auto", c.channel.q),
      FIELD("channel.r", "LCP adds in the slow-switch loop", c.channel.r),
      FIELD("channel.set", "target DSB set x", c.channel.target_set),
      FIELD("channel.alt_set", "alternate set y for stealthy eviction, or auto", c.channel.alternate_set),
      FIELD("channel.alpha", "threshold position between the two means", c.channel.alpha),
      FIELD("channel.calibration_bits", "bits in the calibration run", c.channel.calibration_bits),
      FIELD("channel.pattern", "all0|all1|alternating|random", c.channel.pattern),
      FIELD("channel.bits", "message length", c.channel.bits),
      FIELD("channel.message_seed", "seed for random messages", c.channel.message_seed),
      FIELD("channel.enclave", "sender runs inside an enclave", c.channel.enclave.enabled),
      FIELD("channel.enclave.entry_exit_cycles", "enclave entry plus exit cost", c.channel.enclave.entry_exit_cycles),
      FIELD("channel.enclave.p", "receiver laps in enclave mode", c.channel.enclave.p),
      FIELD("channel.enclave.q", "sender laps in enclave mode", c.channel.enclave.q),
      FIELD("sweep.d_min", "first d of the sweep", c.sweep_d_min),
      FIELD("sweep.d_max", "last d of the sweep", c.sweep_d_max),
      FIELD("spectre.secret", "all (every chunk value), random, or hex digits", c.spectre_secret),
      FIELD("spectre.chunks", "chunks in a random secret", c.spectre_chunks),
      FIELD("spectre.train_iterations", "training runs before each leak", c.spectre.train_iterations),
      FIELD("spectre.margin", "slowest-set lead needed to decide, or auto", c.spectre.margin),
      FIELD("patch.trials", "independent detection trials", c.patch.trials),
      FIELD("patch.laps", "measured laps per loop", c.patch.laps),
      FIELD("patch.warm_laps", "unmeasured laps per loop", c.patch.warm_laps),
      FIELD("fingerprint.sampling_hz", "IPC sampling rate", c.fingerprint.sampling_hz),
      FIELD("fingerprint.mite_capacity", "shared decoder throughput (micro-ops/s)", c.fingerprint.mite_capacity),
      FIELD("fingerprint.jitter", "relative IPC noise per sample", c.fingerprint.jitter),
      FIELD("fingerprint.partitioned", "force DSB and LSD partitioning", c.fingerprint.partitioned),
      FIELD("fingerprint.laps_per_sample", "attacker laps simulated per sample", c.fingerprint.laps_per_sample),
      FIELD("fingerprint.duration_s", "attacker run length (s)", c.fingerprint.duration_s),
      FIELD("fingerprint.runs", "runs per victim", c.fingerprint.runs),
      FIELD("fingerprint.victims", "synthetic, or comma-separated victim CSV paths", c.fingerprint_victims),
      FIELD("histogram.samples", "laps sampled per path", c.histogram_samples),
      FIELD("histogram.bin_width", "bin width in cycles per block", c.histogram_bin_width),
      FIELD("seed", "root seed", c.seed),
      FIELD("output_dir", "existing directory for CSV output", c.output_dir),
  };
  return table;
}

#undef FIELD

const Entry& find_entry(std::string_view key) {
  const auto& t = entries();
  auto it = std::find_if(t.begin(), t.end(), [&](const Entry& e) { return e.key.name == key; });
  if (it == t.end()) throw ValidationError(fmt::format("unknown config key '{}'", key));
  return *it;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

std::vector<ConfigKey> config_keys_for(const std::vector<std::string>& prefixes) {
  std::vector<ConfigKey> out;
  for (const auto& k : config_keys())
    for (const auto& p : prefixes)
      if (p.back() == '.' ? k.name.starts_with(p) : k.name == p) {
        out.push_back(k);
        break;
      }
  return out;
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const auto& e = find_entry(key);
  try {
    e.set(cfg, trim(value));
  } catch (const ValidationError& err) {
    throw ValidationError(fmt::format("{}: {}", key, err.what()));
  }
}

std::string get_config_value(const ExperimentConfig& cfg, std::string_view key) {
  return find_entry(key).get(cfg);
}

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ValidationError(fmt::format("expected key=value, got '{}'", assignment));
  set_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError(fmt::format("config line {}: expected 'key = value'", lineno));
    try {
      set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("config line {}: {}", lineno, e.what()));
    }
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw ValidationError(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string dump_config(const ExperimentConfig& cfg) {
  std::string s;
  for (const auto& e : entries()) s += fmt::format("{} = {}\n", e.key.name, e.get(cfg));
  return s;
}

}  // namespace fesim
