#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fesim/geometry.hpp"

namespace fesim {

enum class Path : std::uint8_t { lsd, dsb, mite };

const char* to_string(Path p);

struct Counters {
  std::uint64_t lsd_uops = 0;
  std::uint64_t dsb_uops = 0;
  std::uint64_t mite_uops = 0;
  std::uint64_t dsb_evictions = 0;
  std::uint64_t lsd_flushes = 0;
  std::uint64_t dsb_to_mite_switches = 0;
  std::uint64_t lsd_to_dsb_switches = 0;
  std::uint64_t lcp_stall_cycles = 0;
  std::uint64_t l1i_misses = 0;

  static std::string csv_header();
  std::string csv_row() const;

  friend bool operator==(const Counters&, const Counters&) = default;
};

struct DeliveryRecord {
  Path path = Path::mite;
  std::uint32_t uops = 0;
  std::uint32_t lcp_stalls = 0;
  std::uint32_t windows_touched = 0;
  std::uint32_t windows_filled = 0;
  std::uint32_t dsb_evictions = 0;
  std::uint32_t l1i_misses = 0;
};

/// Aligned / misaligned block mix seen recently in one DSB set.
struct Composition {
  std::uint32_t aligned = 0;
  std::uint32_t misaligned = 0;

  friend bool operator==(const Composition&, const Composition&) = default;
};

/// Observed LSD-compatibility of a same-set block mix. Returns false for the
/// mixes that knock the loop out of the LSD and back onto the DSB.
bool misalignment_rule(Composition c);

/// Structural state of the delivery paths: set-associative DSB of 32-byte
/// windows, per-thread LSD capture, L1I shadow cache and event counters.
///
/// Threads are 0 and 1. Window entries remember their owning thread so a
/// switch into partitioned mode can evict whatever falls outside the
/// owner's half.
class Frontend {
 public:
  static constexpr int kThreads = 2;

  explicit Frontend(FrontendConfig cfg = {});

  const FrontendConfig& config() const { return cfg_; }

  DeliveryRecord access(int thread, const MixBlock& block);

  /// Lap-complete hook. `loop` is the closed block chain the thread just
  /// finished one pass over. Captures once the same chain has completed
  /// `capture_laps` consecutive clean laps and every LSD rule admits it.
  bool lsd_try_capture(int thread, std::span<const MixBlock> loop);

  /// Marks `loop` as the chain the thread is executing; LSD delivery only
  /// happens for the chain the thread is currently in.
  void enter_loop(int thread, std::span<const MixBlock> loop);
  void leave_loop(int thread);

  void set_partition_mode(int active_threads, int surviving_thread = 0);

  int active_threads() const { return active_threads_; }
  bool partitioned() const { return active_threads_ == 2; }

  const Counters& counters() const { return counters_; }
  Counters& counters() { return counters_; }

  // Inspection.
  std::uint32_t set_of(int thread, Addr addr) const;
  bool dsb_resident(int thread, Addr addr) const;
  std::vector<Addr> dsb_set_windows(std::uint32_t set) const;
  std::size_t dsb_set_occupancy(std::uint32_t set) const;
  std::size_t dsb_set_occupancy(std::uint32_t set, int owner) const;
  bool lsd_captured(int thread) const { return lsd_[thread].valid; }
  std::vector<Addr> lsd_windows(int thread) const;
  std::uint32_t lsd_uops(int thread) const { return lsd_[thread].uops; }
  Composition set_composition(std::uint32_t set) const;
  bool l1i_resident(Addr addr) const;
  /// True when every window held by a valid LSD capture is DSB-resident.
  bool inclusivity_holds() const;

  friend bool operator==(const Frontend&, const Frontend&) = default;

 private:
  struct DsbWay {
    Addr window = 0;
    std::int8_t owner = 0;
    std::uint64_t last_use = 0;
    friend bool operator==(const DsbWay&, const DsbWay&) = default;
  };
  struct L1iWay {
    Addr line = 0;
    std::uint64_t last_use = 0;
    friend bool operator==(const L1iWay&, const L1iWay&) = default;
  };
  struct WindowRef {
    Addr window = 0;
    std::int8_t owner = 0;
    friend bool operator==(const WindowRef&, const WindowRef&) = default;
  };
  struct LsdCapture {
    bool valid = false;
    std::vector<Addr> signature;
    std::vector<WindowRef> windows;
    std::uint32_t uops = 0;
    friend bool operator==(const LsdCapture&, const LsdCapture&) = default;
  };
  struct LoopTracker {
    std::vector<Addr> signature;
    std::vector<std::uint32_t> home_sets;
    std::uint32_t clean_laps = 0;
    friend bool operator==(const LoopTracker&, const LoopTracker&) = default;
  };
  struct RingEntry {
    Addr start = 0;
    bool misaligned = false;
    bool valid = false;
    friend bool operator==(const RingEntry&, const RingEntry&) = default;
  };
  struct AccessRing {
    std::vector<RingEntry> entries;
    std::uint32_t head = 0;
    friend bool operator==(const AccessRing&, const AccessRing&) = default;
  };

  std::vector<Addr> windows_of(const MixBlock& b) const;
  std::vector<Addr> lines_of(const MixBlock& b) const;
  DsbWay* find_way(int thread, Addr window);
  const DsbWay* find_way(int thread, Addr window) const;
  std::uint32_t fill_window(int thread, Addr window);
  void on_dsb_eviction(const DsbWay& victim);
  void flush_lsd(int thread);
  void note_set_access(int thread, const MixBlock& b);
  std::uint32_t touch_l1i(const MixBlock& b);
  void count_switch(int thread, Path p);

  FrontendConfig cfg_;
  int active_threads_ = 1;
  std::uint64_t clock_ = 0;
  std::vector<std::vector<DsbWay>> dsb_;
  std::vector<std::vector<L1iWay>> l1i_;
  std::vector<AccessRing> rings_;
  std::array<LsdCapture, kThreads> lsd_{};
  std::array<LoopTracker, kThreads> tracker_{};
  std::array<std::vector<Addr>, kThreads> active_loop_{};
  std::array<std::optional<Path>, kThreads> prev_path_{};
  Counters counters_;
};

}  // namespace fesim
