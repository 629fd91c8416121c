#include "fesim/geometry.hpp"

namespace fesim {

void DsbGeometry::validate() const {
  if (sets == 0 || ways == 0 || uops_per_line == 0 || window_bytes == 0)
    throw ValidationError("dsb geometry counts must be >= 1");
  if (!is_pow2(sets) || !is_pow2(window_bytes))
    throw ValidationError("dsb.sets and the window size must be powers of two");
  if (sets < 2) throw ValidationError("dsb.sets must allow two partition halves");
}

void LsdGeometry::validate() const {
  if (capacity_uops == 0) throw ValidationError("lsd.capacity must be >= 1");
  if (capture_laps == 0) throw ValidationError("lsd.capture_laps must be >= 1");
}

void L1iGeometry::validate() const {
  if (ways == 0 || line_bytes == 0 || size_bytes == 0)
    throw ValidationError("l1i geometry counts must be >= 1");
  if (size_bytes % (ways * line_bytes) != 0)
    throw ValidationError("l1i.size must be a multiple of l1i.ways * l1i.line");
  if (!is_pow2(sets()) || !is_pow2(line_bytes))
    throw ValidationError("l1i sets and line size must be powers of two");
}

std::uint32_t dsb_set_index(Addr addr, bool partitioned, int thread_id, const DsbGeometry& g) {
  const Addr window = addr / g.window_bytes;
  if (!partitioned) return static_cast<std::uint32_t>(window % g.sets);
  const std::uint32_t half = g.sets / 2;
  return static_cast<std::uint32_t>(thread_id) * half + static_cast<std::uint32_t>(window % half);
}

std::uint32_t l1i_set_index(Addr addr, const L1iGeometry& g) {
  return static_cast<std::uint32_t>((addr / g.line_bytes) % g.sets());
}

}  // namespace fesim
