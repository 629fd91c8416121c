#include "fesim/commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "fesim/evaluation.hpp"

namespace fesim {

namespace {

const std::vector<std::string> kModelKeys = {"dsb.", "lsd.", "l1i.", "cost.", "noise.", "rapl.",
                                             "seed", "output_dir"};

std::vector<std::string> with_model(std::initializer_list<std::string> extra) {
  std::vector<std::string> v = kModelKeys;
  v.insert(v.end(), extra);
  return v;
}

BitMessage configured_message(const ExperimentConfig& cfg) {
  return gen_message(cfg.channel.pattern, cfg.channel.bits, cfg.channel.message_seed);
}

std::vector<std::uint32_t> configured_secret(const ExperimentConfig& cfg) {
  if (cfg.spectre_secret == "all") {
    std::vector<std::uint32_t> s(cfg.sim.fe.dsb.sets);
    for (std::uint32_t i = 0; i < s.size(); ++i) s[i] = i;
    return s;
  }
  if (cfg.spectre_secret == "random") return random_chunks(cfg.spectre_chunks, cfg.seed);
  return chunks_from_hex(cfg.spectre_secret);
}

std::vector<VictimTrace> configured_victims(const ExperimentConfig& cfg) {
  if (cfg.fingerprint_victims == "synthetic") return synthetic_victims();
  std::vector<VictimTrace> v;
  std::string_view list = cfg.fingerprint_victims;
  while (!list.empty()) {
    const auto comma = list.find(',');
    const auto path = list.substr(0, comma);
    if (!path.empty()) v.push_back(load_victim_csv(std::string(path)));
    list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
  }
  if (v.empty()) throw ValidationError("fingerprint.victims lists no files");
  return v;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"histogram", "channel",  "sweep-d",
                                                 "spectre",   "patch",    "fingerprint"};
  return names;
}

std::vector<std::string> command_key_prefixes(std::string_view command) {
  if (command == "histogram") return with_model({"histogram."});
  if (command == "channel") return with_model({"channel."});
  if (command == "sweep-d") return with_model({"channel.", "sweep."});
  if (command == "spectre") return with_model({"spectre."});
  if (command == "patch") return with_model({"patch."});
  if (command == "fingerprint") return with_model({"fingerprint."});
  throw ValidationError(fmt::format("unknown command '{}'", command));
}

CommandResult cmd_histogram(const ExperimentConfig& cfg) {
  cfg.validate();
  CommandResult r{"histogram.csv", "", "", false};
  std::vector<HistogramBin> all;
  for (const auto& ps : sample_path_timing(cfg.sim, cfg.histogram_samples, cfg.seed)) {
    const auto bins = make_histogram(ps.cycles_per_block, cfg.histogram_bin_width, ps.label);
    all.insert(all.end(), bins.begin(), bins.end());
  }
  r.csv = histogram_csv(all);
  r.summary = ascii_histogram(all);
  return r;
}

CommandResult cmd_channel(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto params = cfg.channel.resolve();
  const auto message = configured_message(cfg);
  const auto rep = run_channel(params, message, cfg.sim, cfg.seed);
  CommandResult r{"channel.csv", ChannelReport::csv_header() + "\n" + rep.csv_row() + "\n", "", false};
  r.summary = fmt::format("{}: {} bits, edit distance {}, error rate {:.4f}, {:.3f} kbps, {} L1I misses\n",
                          params.label(), rep.bits_sent, rep.edit_distance, rep.error_rate,
                          rep.tr_rate_kbps, rep.l1i_misses);
  return r;
}

CommandResult cmd_sweep_d(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto base = cfg.channel.resolve();
  const auto res = sweep_d(base, cfg.sweep_d_min, cfg.sweep_d_max, configured_message(cfg), cfg.sim,
                           cfg.seed, Exec::parallel);
  CommandResult r{"sweep_d.csv", ChannelReport::csv_header() + "\n", "", false};
  for (const auto& rep : res.reports) {
    r.csv += rep.csv_row() + "\n";
    r.summary += fmt::format("d={}: error rate {:.4f}, {:.3f} kbps\n", rep.params.d, rep.error_rate,
                             rep.tr_rate_kbps);
  }
  for (const auto& s : res.skipped) r.summary += fmt::format("d={}: skipped ({})\n", s.d, s.reason);
  return r;
}

CommandResult cmd_spectre(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto secret = configured_secret(cfg);
  const auto rows = run_spectre(cfg.sim, secret, cfg.seed, cfg.spectre);
  CommandResult r{"spectre.csv", spectre_csv(rows, cfg.sim.fe.dsb.sets), "", false};
  std::size_t ok = 0;
  std::uint64_t misses = 0;
  for (const auto& row : rows) {
    ok += row.probe.recovered == static_cast<int>(row.true_value);
    misses += row.probe.added_l1i_misses;
  }
  r.summary = fmt::format("recovered {}/{} chunks, {} added L1I misses\n", ok, rows.size(), misses);
  return r;
}

CommandResult cmd_patch(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto rep = detect_patch(cfg.sim, cfg.patch, cfg.seed);
  CommandResult r{"patch.csv", patch_csv(rep, cfg.sim.fe.lsd.enabled), "", false};
  r.inconclusive = rep.verdict == PatchVerdict::inconclusive;
  r.summary = fmt::format("verdict {} over {} trials, timing gap {:.3f} cycles/block, energy gap {:.3f}/uop\n",
                          to_string(rep.verdict), rep.trials.size(), rep.timing_gap, rep.energy_gap);
  return r;
}

CommandResult cmd_fingerprint(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto rows = fingerprint_experiment(configured_victims(cfg), cfg.sim, cfg.fingerprint, cfg.seed);
  CommandResult r{"fingerprint.csv", fingerprint_csv(rows), "", false};
  std::size_t ok = 0;
  double intra = 0.0, inter = 0.0;
  for (const auto& row : rows) {
    ok += row.correct();
    intra += row.result.intra_mean;
    inter += row.result.inter_mean;
  }
  const auto n = static_cast<double>(rows.size());
  r.summary = fmt::format("{}/{} traces classified correctly, mean intra {:.4f}, mean inter {:.4f}\n",
                          ok, rows.size(), intra / n, inter / n);
  return r;
}

CommandResult run_command(std::string_view command, const ExperimentConfig& cfg) {
  if (command == "histogram") return cmd_histogram(cfg);
  if (command == "channel") return cmd_channel(cfg);
  if (command == "sweep-d") return cmd_sweep_d(cfg);
  if (command == "spectre") return cmd_spectre(cfg);
  if (command == "patch") return cmd_patch(cfg);
  if (command == "fingerprint") return cmd_fingerprint(cfg);
  throw ValidationError(fmt::format("unknown command '{}'", command));
}

int execute_command(std::string_view command, const ExperimentConfig& cfg, bool strict,
                    std::ostream& out, std::ostream& err) {
  try {
    namespace fs = std::filesystem;
    if (!fs::is_directory(cfg.output_dir))
      throw ValidationError(fmt::format("output directory '{}' does not exist", cfg.output_dir));
    const auto res = run_command(command, cfg);
    const auto path = fs::path(cfg.output_dir) / res.csv_name;
    std::ofstream f(path, std::ios::binary);
    if (!(f << res.csv) || !f.flush())
      throw ValidationError(fmt::format("cannot write '{}'", path.string()));
    out << res.summary << "wrote " << path.string() << "\n";
    if (res.inconclusive && strict) {
      err << "inconclusive result\n";
      return kExitInconclusive;
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const DegenerateChannel& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitValidation;
}

}  // namespace fesim
