#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fesim/core.hpp"

namespace fesim {

struct SpectreParams {
  std::uint32_t train_iterations = 16;
  // Minimum lead of the slowest set over the runner-up. Defaults to the
  // MITE-over-DSB block cost difference.
  std::optional<double> margin;

  friend bool operator==(const SpectreParams&, const SpectreParams&) = default;
};

struct ProbeResult {
  int recovered = -1;  // -1 when ambiguous
  bool ambiguous = true;
  std::vector<std::uint64_t> per_set_cycles;
  std::uint64_t added_l1i_misses = 0;  // over encode + probe
};

/// Attacker probe chains (one full set of ways per DSB set) plus the
/// victim gadget: one block per set, executed transiently for the secret
/// chunk.
class SpectreScenario {
 public:
  SpectreScenario(const SimSetup& setup, std::uint64_t seed, SpectreParams params = {});

  std::uint32_t chunk_values() const { return static_cast<std::uint32_t>(probes_.size()); }
  double margin() const;

  /// Runs every gadget block once architecturally and primes every set,
  /// so later phases see warm instruction caches.
  void warm_up();
  /// Bounds-check training. Only the predictor would notice, and no
  /// predictor is modelled, so this just counts iterations.
  void train();
  std::uint64_t trained_iterations() const { return trained_; }

  void prime();
  /// Squashed execution still fills the frontend: the gadget block for
  /// `chunk` goes through decode and lands in DSB set `chunk`.
  void transient_encode(std::uint32_t chunk);
  /// Times each set's probe chain in ascending set order.
  ProbeResult probe_all_sets();

  /// prime, train, transient_encode, probe.
  ProbeResult leak(std::uint32_t chunk);

  Core& core() { return core_; }

 private:
  SpectreParams params_;
  Core core_;
  std::vector<std::vector<MixBlock>> probes_;
  std::vector<MixBlock> gadget_;
  std::uint64_t trained_ = 0;
  std::uint64_t misses_at_encode_ = 0;
  bool encoded_ = false;
};

/// Hex digits to 5-bit chunks, most significant bit first, zero-padded at
/// the end. An optional 0x prefix is accepted.
std::vector<std::uint32_t> chunks_from_hex(std::string_view hex);
std::vector<std::uint32_t> random_chunks(std::size_t n, std::uint64_t seed);

struct SpectreRow {
  std::size_t chunk_index = 0;
  std::uint32_t true_value = 0;
  ProbeResult probe;
};

/// Leaks every chunk in order on one scenario, warming it up first.
std::vector<SpectreRow> run_spectre(const SimSetup& setup, const std::vector<std::uint32_t>& secret,
                                    std::uint64_t seed, SpectreParams params = {});

std::string spectre_csv(const std::vector<SpectreRow>& rows, std::uint32_t sets);

}  // namespace fesim
