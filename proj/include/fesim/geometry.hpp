#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fesim {

using Addr = std::uint64_t;

/// Raised for any configuration or parameter combination the simulator
/// refuses to run.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Micro-op cache shape. One way holds one window of `window_bytes` bytes.
struct DsbGeometry {
  std::uint32_t sets = 32;
  std::uint32_t ways = 8;
  std::uint32_t uops_per_line = 6;
  std::uint32_t window_bytes = 32;

  std::uint32_t capacity_uops() const { return sets * ways * uops_per_line; }
  void validate() const;

  friend bool operator==(const DsbGeometry&, const DsbGeometry&) = default;
};

struct LsdGeometry {
  std::uint32_t capacity_uops = 64;
  bool enabled = true;
  // Identical consecutive laps before a loop is streamed from the LSD.
  std::uint32_t capture_laps = 2;

  void validate() const;

  friend bool operator==(const LsdGeometry&, const LsdGeometry&) = default;
};

struct L1iGeometry {
  std::uint32_t size_bytes = 32768;
  std::uint32_t ways = 8;
  std::uint32_t line_bytes = 64;

  std::uint32_t sets() const { return size_bytes / (ways * line_bytes); }
  void validate() const;

  friend bool operator==(const L1iGeometry&, const L1iGeometry&) = default;
};

struct FrontendConfig {
  DsbGeometry dsb;
  LsdGeometry lsd;
  L1iGeometry l1i;

  void validate() const {
    dsb.validate();
    lsd.validate();
    l1i.validate();
  }

  friend bool operator==(const FrontendConfig&, const FrontendConfig&) = default;
};

/// An addressable run of instructions ending in a jump to `next_addr`.
struct MixBlock {
  Addr start_addr = 0;
  std::uint32_t byte_len = 25;
  std::uint32_t uop_count = 5;
  std::uint32_t lcp_count = 0;
  // LCP instructions whose predecessor inside the block is not an LCP
  // instruction; each of these pays the LCP pre-decode stall.
  std::uint32_t lcp_stalls = 0;
  Addr next_addr = 0;

  Addr end_addr() const { return start_addr + byte_len; }  // exclusive
  bool aligned(std::uint32_t window_bytes = 32) const { return start_addr % window_bytes == 0; }
  bool misaligned(std::uint32_t window_bytes = 32) const {
    return start_addr % window_bytes == window_bytes / 2;
  }
  bool dsb_line_eligible(const DsbGeometry& g = {}) const {
    return byte_len <= g.window_bytes && uop_count <= g.uops_per_line;
  }

  friend bool operator==(const MixBlock&, const MixBlock&) = default;
};

/// Four movs and a jmp: 25 bytes, 5 micro-ops.
inline MixBlock canonical_block(Addr start, Addr next) {
  return MixBlock{start, 25, 5, 0, 0, next};
}

inline bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

/// DSB set for `addr`. Partitioned mode gives each of the two threads one
/// contiguous half of the sets: thread t owns [t*sets/2, (t+1)*sets/2).
std::uint32_t dsb_set_index(Addr addr, bool partitioned, int thread_id,
                            const DsbGeometry& g = {});
inline std::uint32_t dsb_set_index(Addr addr) { return dsb_set_index(addr, false, 0); }

std::uint32_t l1i_set_index(Addr addr, const L1iGeometry& g = {});

}  // namespace fesim
