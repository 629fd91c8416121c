#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fesim/core.hpp"
#include "fesim/parallel.hpp"

namespace fesim {

// ---- microcode patch detection ------------------------------------------

enum class PatchVerdict : std::uint8_t { lsd_enabled, lsd_disabled, inconclusive };
std::string_view to_string(PatchVerdict v);

struct PatchParams {
  std::uint32_t trials = 100;
  std::uint64_t laps = 40;       // measured laps per loop
  std::uint64_t warm_laps = 4;

  friend bool operator==(const PatchParams&, const PatchParams&) = default;
};

struct PatchTrial {
  PatchVerdict verdict = PatchVerdict::inconclusive;
  double below_cycles_per_block = 0.0;  // median over laps
  double above_cycles_per_block = 0.0;
  double below_energy_per_uop = 0.0;
  double above_energy_per_uop = 0.0;
  double noise_floor = 0.0;
  double timing_gap() const { return above_cycles_per_block - below_cycles_per_block; }
  double energy_gap() const { return above_energy_per_uop - below_energy_per_uop; }
};

struct PatchReport {
  PatchVerdict verdict = PatchVerdict::inconclusive;  // most common trial verdict
  double timing_gap = 0.0;  // mean over trials
  double energy_gap = 0.0;
  std::vector<PatchTrial> trials;
};

/// Times a same-set loop that fits the LSD (8 blocks, 40 micro-ops) against
/// one that does not (16 blocks, 80 micro-ops) on a fresh core per trial.
/// A small loop costing like the LSD means the LSD is on; costing like the
/// DSB means a patch turned it off. A trial is inconclusive when its median
/// lies within a MAD-based noise floor of the midpoint between the two.
PatchReport detect_patch(const SimSetup& setup, const PatchParams& params, std::uint64_t seed,
                         Exec exec = Exec::parallel);

std::string patch_csv(const PatchReport& r, bool lsd_enabled);

// ---- application fingerprinting -----------------------------------------

/// Micro-ops a co-running victim pushes through the shared legacy decoder,
/// one value per interval. Treated as periodic when a run outlasts it.
struct VictimTrace {
  std::string name;
  double interval_s = 0.01;
  std::vector<double> demand_uops;

  void validate() const;
  double duration_s() const { return interval_s * static_cast<double>(demand_uops.size()); }
  /// Mean demand in micro-ops per second over [t0, t1).
  double mean_rate(double t0, double t1) const;
};

/// Rows of `interval_s,demand_uops`; every row must repeat the same interval.
VictimTrace read_victim_csv(std::istream& in, std::string name);
VictimTrace load_victim_csv(const std::string& path);
void write_victim_csv(std::ostream& out, const VictimTrace& v);

struct IpcTrace {
  std::vector<double> samples;
  double sampling_hz = 10.0;
};

struct FingerprintParams {
  double sampling_hz = 10.0;
  double mite_capacity = 1e9;  // micro-ops per second
  double jitter = 0.05;        // relative sd of per-sample IPC
  bool partitioned = true;
  std::uint64_t laps_per_sample = 20;
  double duration_s = 3.0;
  std::uint32_t runs = 3;

  std::size_t sample_count() const;
  void validate() const;

  friend bool operator==(const FingerprintParams&, const FingerprintParams&) = default;
};

double contention_factor(double demand_rate, double mite_capacity);

/// 100 one-byte nops split over four window-aligned blocks: too many
/// micro-ops for the LSD, two L1I lines, streamed from the DSB.
std::vector<MixBlock> attacker_nop_loop(Addr base = 0x500000);

struct AttackerRun {
  IpcTrace trace;
  double baseline_ipc = 0.0;
  std::uint64_t l1i_misses_after_warmup = 0;
  std::uint64_t lsd_blocks = 0;
};

AttackerRun attacker_ipc_run(const VictimTrace& victim, const SimSetup& setup,
                             const FingerprintParams& params, std::uint64_t seed);

double euclidean_distance(const IpcTrace& a, const IpcTrace& b);

struct LabeledTrace {
  std::string label;
  IpcTrace trace;
};

struct Classification {
  std::string label;
  double intra_mean = 0.0;  // mean pairwise distance within a label
  double inter_mean = 0.0;  // mean pairwise distance across labels
};

/// Nearest centroid. Needs at least one reference trace; labels with a
/// single trace simply contribute no intra pairs.
Classification classify(const std::vector<LabeledTrace>& refs, const IpcTrace& probe);

/// Four periodic CNN-inference-like demand patterns with distinct layer
/// timings.
std::vector<VictimTrace> synthetic_victims(double interval_s = 0.01);

struct FingerprintRow {
  std::string probe_label;
  std::size_t run = 0;
  Classification result;
  bool correct() const { return result.label == probe_label; }
};

/// runs × victims attacker traces, each classified leave-one-out against
/// all the others.
std::vector<FingerprintRow> fingerprint_experiment(const std::vector<VictimTrace>& victims,
                                                   const SimSetup& setup,
                                                   const FingerprintParams& params,
                                                   std::uint64_t seed, Exec exec = Exec::parallel);

std::string fingerprint_csv(const std::vector<FingerprintRow>& rows);

}  // namespace fesim
