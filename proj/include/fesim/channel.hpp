#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fesim/core.hpp"

namespace fesim {

enum class Alignment : std::uint8_t { aligned, misaligned };

/// Same-set chain of canonical blocks. Block k sits at
///   base + (first_slot + k) * sets * window + set * window (+ window/2 if misaligned)
/// so every block maps to `set` and consecutive blocks land on different L1I
/// sets. Each block jumps to the next and the last closes the loop.
/// `alignment` may be empty (all aligned) or hold one entry per block.
std::vector<MixBlock> build_block_chain(std::uint32_t count, std::uint32_t set,
                                        std::span<const Alignment> alignment = {},
                                        std::uint32_t first_slot = 0, Addr base = 0,
                                        const DsbGeometry& g = {});

/// Loop of single-micro-op `add`s, LCP-prefixed where `lcp[i]` is set.
/// Plain adds take 4 bytes and prefixed ones 5; instructions are packed into
/// window-aligned blocks of at most one DSB line each.
std::vector<MixBlock> build_add_loop(const std::vector<bool>& lcp, Addr base,
                                     const DsbGeometry& g = {});

/// r (LCP, plain) pairs.
std::vector<bool> mixed_issue(std::uint32_t r);
/// r plain adds then r LCP adds.
std::vector<bool> ordered_issue(std::uint32_t r);

enum class Variant : std::uint8_t { mt_evict, mt_misalign, nonmt_evict, nonmt_misalign, slow_switch };
enum class Stealth : std::uint8_t { stealthy, fast };
enum class Measure : std::uint8_t { timing, power };
/// How an MT sender lap is scheduled against its group of receiver laps.
enum class Interleave : std::uint8_t { lap, block };

std::string_view to_string(Variant v);
std::string_view to_string(Stealth s);
std::string_view to_string(Measure m);
std::string_view to_string(Interleave i);
Interleave parse_interleave(std::string_view s);
Variant parse_variant(std::string_view s);
Stealth parse_stealth(std::string_view s);
Measure parse_measure(std::string_view s);

inline bool is_mt(Variant v) { return v == Variant::mt_evict || v == Variant::mt_misalign; }
inline bool is_misalign(Variant v) {
  return v == Variant::mt_misalign || v == Variant::nonmt_misalign;
}

/// Sender lives inside an enclave: one entry/exit per bit and its own
/// iteration counts.
struct EnclaveMode {
  bool enabled = false;
  std::uint64_t entry_exit_cycles = 20000;
  std::uint64_t p = 1000;
  std::uint64_t q = 1000;

  friend bool operator==(const EnclaveMode&, const EnclaveMode&) = default;
};

struct ChannelParams {
  Variant variant = Variant::nonmt_evict;
  Stealth stealth = Stealth::stealthy;
  Measure measure = Measure::timing;
  Interleave interleave = Interleave::lap;
  std::uint32_t d = 6;
  std::uint32_t M = 8;
  std::uint64_t p = 10;
  std::uint64_t q = 10;
  std::uint32_t r = 16;
  std::uint32_t target_set = 0;
  std::optional<std::uint32_t> alternate_set;
  EnclaveMode enclave;
  double threshold_alpha = 0.5;
  std::uint32_t calibration_bits = 16;

  /// Defaults used in the evaluation: d=6 for eviction, d=5/M=8 for
  /// misalignment, p=q=10 single-threaded, p=1000/q=100 multi-threaded.
  static ChannelParams defaults_for(Variant v, Stealth s = Stealth::stealthy);

  std::uint64_t effective_p() const { return enclave.enabled ? enclave.p : p; }
  std::uint64_t effective_q() const { return enclave.enabled ? enclave.q : q; }
  std::uint32_t alt_set(const DsbGeometry& g) const {
    return alternate_set.value_or((target_set + 1) % g.sets);
  }
  /// Throws ValidationError on any combination the protocols cannot run.
  void validate(const DsbGeometry& g) const;
  /// e.g. "nonmt_evict_fast", "mt_evict+enclave".
  std::string label() const;

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

struct BitMessage {
  enum class Pattern : std::uint8_t { all0, all1, alternating, random };

  std::vector<std::uint8_t> bits;
  Pattern pattern = Pattern::alternating;
  std::uint64_t seed = 0;

  std::size_t size() const { return bits.size(); }
  std::string str() const;
  static BitMessage from_string(std::string_view s);

  friend bool operator==(const BitMessage& a, const BitMessage& b) { return a.bits == b.bits; }
};

std::string_view to_string(BitMessage::Pattern p);
BitMessage::Pattern parse_pattern(std::string_view s);

struct BitResult {
  double observation = 0.0;           // cycles, or energy units in power mode
  std::uint64_t elapsed_cycles = 0;   // everything the bit cost, timed or not
  std::uint64_t receiver_mite_blocks = 0;
  std::uint64_t l1i_misses = 0;
};

enum class Polarity : std::uint8_t { above_is_one, below_is_one };

struct Calibration {
  double threshold = 0.0;
  Polarity polarity = Polarity::above_is_one;
  double mean0 = 0.0;
  double mean1 = 0.0;

  double gap() const { return mean1 - mean0; }
  int classify(double observation) const;
};

/// Thrown when calibration sees no separation between the two bit values.
class DegenerateChannel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TransmitResult {
  BitMessage received;
  double elapsed_s = 0.0;
  std::vector<double> observations;
  std::uint64_t l1i_misses = 0;
  std::uint64_t dsb_evictions = 0;
};

/// One covert channel over one simulated core: sender and receiver code
/// laid out for the chosen variant, plus the calibrated decision rule.
class Channel {
 public:
  Channel(ChannelParams params, FrontendConfig fe, CostModel costs, std::uint64_t seed,
          double rapl_interval_s = kDefaultRaplInterval);

  const ChannelParams& params() const { return params_; }
  Core& core() { return core_; }
  const Core& core() const { return core_; }

  const std::vector<MixBlock>& receiver_chain() const { return receiver_; }
  const std::vector<MixBlock>& sender_chain(int m) const { return m ? sender1_ : sender0_; }

  /// Init, encode and decode for one bit.
  BitResult run_bit(int m);

  /// Sends an alternating pattern and derives threshold and polarity.
  const Calibration& calibrate();
  const std::optional<Calibration>& calibration() const { return calibration_; }

  /// Sends `message` bit by bit, decoding each observation. Calibrates
  /// first if that has not happened yet.
  TransmitResult transmit(const BitMessage& message);

 private:
  ChannelParams params_;
  Core core_;
  std::vector<MixBlock> receiver_;
  std::vector<MixBlock> sender1_;
  std::vector<MixBlock> sender0_;
  std::optional<Calibration> calibration_;
};

}  // namespace fesim
