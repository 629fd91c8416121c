#include "fesim/frontend.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace fesim {

const char* to_string(Path p) {
  switch (p) {
    case Path::lsd: return "LSD";
    case Path::dsb: return "DSB";
    case Path::mite: return "MITE";
  }
  return "?";
}

std::string Counters::csv_header() {
  return "lsd_uops,dsb_uops,mite_uops,dsb_evictions,lsd_flushes,dsb_to_mite_switches,"
         "lsd_to_dsb_switches,lcp_stall_cycles,l1i_misses";
}

std::string Counters::csv_row() const {
  return fmt::format("{},{},{},{},{},{},{},{},{}", lsd_uops, dsb_uops, mite_uops, dsb_evictions,
                     lsd_flushes, dsb_to_mite_switches, lsd_to_dsb_switches, lcp_stall_cycles,
                     l1i_misses);
}

bool misalignment_rule(Composition c) {
  const auto a = c.aligned;
  const auto m = c.misaligned;
  if (a == 0 && m >= 4) return false;
  if (m == 1) return a != 7;
  if (m == 2) return a != 5 && a != 6;
  if (m == 3) return a != 3 && a != 4 && a != 5;
  return true;
}

Frontend::Frontend(FrontendConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  dsb_.resize(cfg_.dsb.sets);
  l1i_.resize(cfg_.l1i.sets());
  rings_.resize(cfg_.dsb.sets);
  for (auto& r : rings_) r.entries.resize(cfg_.dsb.ways);
}

std::uint32_t Frontend::set_of(int thread, Addr addr) const {
  return dsb_set_index(addr, partitioned(), thread, cfg_.dsb);
}

std::vector<Addr> Frontend::windows_of(const MixBlock& b) const {
  const Addr w = cfg_.dsb.window_bytes;
  std::vector<Addr> out;
  const Addr last = (b.end_addr() - 1) / w;
  for (Addr i = b.start_addr / w; i <= last; ++i) out.push_back(i * w);
  return out;
}

std::vector<Addr> Frontend::lines_of(const MixBlock& b) const {
  const Addr l = cfg_.l1i.line_bytes;
  std::vector<Addr> out;
  const Addr last = (b.end_addr() - 1) / l;
  for (Addr i = b.start_addr / l; i <= last; ++i) out.push_back(i * l);
  return out;
}

Frontend::DsbWay* Frontend::find_way(int thread, Addr window) {
  auto& set = dsb_[set_of(thread, window)];
  auto it = std::find_if(set.begin(), set.end(),
                         [&](const DsbWay& w) { return w.window == window && w.owner == thread; });
  return it == set.end() ? nullptr : &*it;
}

const Frontend::DsbWay* Frontend::find_way(int thread, Addr window) const {
  return const_cast<Frontend*>(this)->find_way(thread, window);
}

bool Frontend::dsb_resident(int thread, Addr addr) const {
  const Addr w = cfg_.dsb.window_bytes;
  return find_way(thread, addr / w * w) != nullptr;
}

void Frontend::flush_lsd(int thread) {
  auto& cap = lsd_[thread];
  if (!cap.valid) return;
  cap = LsdCapture{};
  ++counters_.lsd_flushes;
}

void Frontend::on_dsb_eviction(const DsbWay& victim) {
  ++counters_.dsb_evictions;
  for (int t = 0; t < kThreads; ++t) {
    const auto& cap = lsd_[t];
    if (!cap.valid) continue;
    const WindowRef ref{victim.window, victim.owner};
    if (std::find(cap.windows.begin(), cap.windows.end(), ref) != cap.windows.end()) flush_lsd(t);
  }
}

std::uint32_t Frontend::fill_window(int thread, Addr window) {
  auto& set = dsb_[set_of(thread, window)];
  std::uint32_t evicted = 0;
  if (set.size() >= cfg_.dsb.ways) {
    auto lru = std::min_element(set.begin(), set.end(), [](const DsbWay& a, const DsbWay& b) {
      return a.last_use < b.last_use;
    });
    const DsbWay victim = *lru;
    set.erase(lru);
    on_dsb_eviction(victim);
    ++evicted;
  }
  set.push_back(DsbWay{window, static_cast<std::int8_t>(thread), clock_});
  return evicted;
}

void Frontend::note_set_access(int thread, const MixBlock& b) {
  const std::uint32_t home = set_of(thread, b.start_addr);
  auto& ring = rings_[home];
  ring.entries[ring.head] = RingEntry{b.start_addr, b.misaligned(cfg_.dsb.window_bytes), true};
  ring.head = (ring.head + 1) % static_cast<std::uint32_t>(ring.entries.size());
  if (misalignment_rule(set_composition(home))) return;

  // LSD collision: drop every capture streaming from this set and restart
  // qualification for any loop that lives in it.
  for (int t = 0; t < kThreads; ++t) {
    const auto& cap = lsd_[t];
    if (cap.valid && std::any_of(cap.windows.begin(), cap.windows.end(), [&](const WindowRef& w) {
          return set_of(w.owner, w.window) == home;
        }))
      flush_lsd(t);
    auto& tr = tracker_[t];
    if (std::find(tr.home_sets.begin(), tr.home_sets.end(), home) != tr.home_sets.end())
      tr.clean_laps = 0;
  }
}

Composition Frontend::set_composition(std::uint32_t set) const {
  Composition c;
  const auto& entries = rings_.at(set).entries;
  std::vector<Addr> seen;
  for (const auto& e : entries) {
    if (!e.valid || std::find(seen.begin(), seen.end(), e.start) != seen.end()) continue;
    seen.push_back(e.start);
    if (e.misaligned)
      ++c.misaligned;
    else
      ++c.aligned;
  }
  return c;
}

std::uint32_t Frontend::touch_l1i(const MixBlock& b) {
  std::uint32_t misses = 0;
  for (Addr line : lines_of(b)) {
    auto& set = l1i_[l1i_set_index(line, cfg_.l1i)];
    auto it = std::find_if(set.begin(), set.end(), [&](const L1iWay& w) { return w.line == line; });
    if (it != set.end()) {
      it->last_use = clock_;
      continue;
    }
    ++misses;
    if (set.size() >= cfg_.l1i.ways) {
      set.erase(std::min_element(set.begin(), set.end(), [](const L1iWay& a, const L1iWay& b) {
        return a.last_use < b.last_use;
      }));
    }
    set.push_back(L1iWay{line, clock_});
  }
  counters_.l1i_misses += misses;
  return misses;
}

bool Frontend::l1i_resident(Addr addr) const {
  const Addr line = addr / cfg_.l1i.line_bytes * cfg_.l1i.line_bytes;
  const auto& set = l1i_[l1i_set_index(line, cfg_.l1i)];
  return std::any_of(set.begin(), set.end(), [&](const L1iWay& w) { return w.line == line; });
}

void Frontend::count_switch(int thread, Path p) {
  const auto prev = prev_path_[thread];
  prev_path_[thread] = p;
  if (!prev) return;
  if (*prev == Path::lsd && p == Path::dsb) ++counters_.lsd_to_dsb_switches;
  if (*prev == Path::dsb && p == Path::mite) ++counters_.dsb_to_mite_switches;
  if (*prev == Path::lsd && p == Path::mite) {
    ++counters_.lsd_to_dsb_switches;
    ++counters_.dsb_to_mite_switches;
  }
}

DeliveryRecord Frontend::access(int thread, const MixBlock& block) {
  if (thread < 0 || thread >= kThreads) throw ValidationError("thread id must be 0 or 1");
  if (block.uop_count == 0) throw ValidationError("block must carry at least one micro-op");
  if (block.byte_len == 0) throw ValidationError("block must span at least one byte");
  ++clock_;
  note_set_access(thread, block);

  DeliveryRecord rec;
  rec.uops = block.uop_count;
  rec.lcp_stalls = block.lcp_stalls;
  const auto windows = windows_of(block);
  rec.windows_touched = static_cast<std::uint32_t>(windows.size());

  const auto& cap = lsd_[thread];
  const bool in_capture =
      cap.valid && active_loop_[thread] == cap.signature &&
      std::find(cap.signature.begin(), cap.signature.end(), block.start_addr) != cap.signature.end();

  if (block.lcp_count > 0) {
    rec.path = Path::mite;
  } else if (cfg_.lsd.enabled && in_capture) {
    rec.path = Path::lsd;
  } else {
    bool all_resident = true;
    for (Addr w : windows) {
      if (DsbWay* way = find_way(thread, w)) {
        way->last_use = clock_;
      } else {
        all_resident = false;
      }
    }
    if (all_resident) {
      rec.path = Path::dsb;
    } else {
      rec.path = Path::mite;
      for (Addr w : windows) {
        if (find_way(thread, w)) continue;
        rec.dsb_evictions += fill_window(thread, w);
        ++rec.windows_filled;
      }
    }
  }

  if (rec.path != Path::lsd) rec.l1i_misses = touch_l1i(block);

  switch (rec.path) {
    case Path::lsd: counters_.lsd_uops += block.uop_count; break;
    case Path::dsb: counters_.dsb_uops += block.uop_count; break;
    case Path::mite: counters_.mite_uops += block.uop_count; break;
  }
  count_switch(thread, rec.path);
  return rec;
}

void Frontend::enter_loop(int thread, std::span<const MixBlock> loop) {
  auto& active = active_loop_.at(thread);
  active.clear();
  for (const auto& b : loop) active.push_back(b.start_addr);
}

void Frontend::leave_loop(int thread) { active_loop_.at(thread).clear(); }

bool Frontend::lsd_try_capture(int thread, std::span<const MixBlock> loop) {
  if (loop.empty()) throw ValidationError("loop trace must be non-empty");
  if (loop.back().next_addr != loop.front().start_addr)
    throw ValidationError("loop trace must be closed");

  std::vector<Addr> sig;
  sig.reserve(loop.size());
  for (const auto& b : loop) sig.push_back(b.start_addr);

  auto& tr = tracker_.at(thread);
  if (tr.signature == sig) {
    ++tr.clean_laps;
  } else {
    tr.signature = sig;
    tr.home_sets.clear();
    for (const auto& b : loop) {
      const auto s = set_of(thread, b.start_addr);
      if (std::find(tr.home_sets.begin(), tr.home_sets.end(), s) == tr.home_sets.end())
        tr.home_sets.push_back(s);
    }
    tr.clean_laps = 1;
  }

  auto& cap = lsd_[thread];
  if (cap.valid && cap.signature == sig) return true;
  if (!cfg_.lsd.enabled || tr.clean_laps < cfg_.lsd.capture_laps) return false;

  std::uint32_t uops = 0;
  std::vector<WindowRef> windows;
  for (const auto& b : loop) {
    if (b.lcp_count > 0) return false;
    uops += b.uop_count;
    for (Addr w : windows_of(b)) {
      if (!find_way(thread, w)) return false;
      const WindowRef ref{w, static_cast<std::int8_t>(thread)};
      if (std::find(windows.begin(), windows.end(), ref) == windows.end()) windows.push_back(ref);
    }
  }
  if (uops > cfg_.lsd.capacity_uops) return false;
  for (auto s : tr.home_sets)
    if (!misalignment_rule(set_composition(s))) return false;

  cap.valid = true;
  cap.signature = std::move(sig);
  cap.windows = std::move(windows);
  cap.uops = uops;
  return true;
}

void Frontend::set_partition_mode(int active_threads, int surviving_thread) {
  if (active_threads != 1 && active_threads != 2)
    throw ValidationError("active_threads must be 1 or 2");
  if (surviving_thread != 0 && surviving_thread != 1)
    throw ValidationError("surviving thread must be 0 or 1");
  if (active_threads == active_threads_) return;
  active_threads_ = active_threads;

  if (active_threads == 2) {
    for (std::uint32_t s = 0; s < dsb_.size(); ++s) {
      auto& set = dsb_[s];
      for (auto it = set.begin(); it != set.end();) {
        if (set_of(it->owner, it->window) != s) {
          const DsbWay victim = *it;
          it = set.erase(it);
          on_dsb_eviction(victim);
        } else {
          ++it;
        }
      }
    }
    for (auto& tr : tracker_) tr = LoopTracker{};
    return;
  }

  // Back to one thread: nothing is evicted, but the idle thread's loop is
  // gone and captures that no longer map onto their windows stop streaming.
  for (int t = 0; t < kThreads; ++t) {
    if (t != surviving_thread) {
      flush_lsd(t);
      active_loop_[t].clear();
      prev_path_[t].reset();
    }
    tracker_[t] = LoopTracker{};
  }
  const auto& cap = lsd_[surviving_thread];
  if (cap.valid && std::any_of(cap.windows.begin(), cap.windows.end(), [&](const WindowRef& w) {
        return find_way(w.owner, w.window) == nullptr;
      }))
    flush_lsd(surviving_thread);
}

std::vector<Addr> Frontend::dsb_set_windows(std::uint32_t set) const {
  std::vector<Addr> out;
  for (const auto& w : dsb_.at(set)) out.push_back(w.window);
  return out;
}

std::size_t Frontend::dsb_set_occupancy(std::uint32_t set) const { return dsb_.at(set).size(); }

std::size_t Frontend::dsb_set_occupancy(std::uint32_t set, int owner) const {
  const auto& s = dsb_.at(set);
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [&](const DsbWay& w) { return w.owner == owner; }));
}

std::vector<Addr> Frontend::lsd_windows(int thread) const {
  std::vector<Addr> out;
  for (const auto& w : lsd_.at(thread).windows) out.push_back(w.window);
  return out;
}

bool Frontend::inclusivity_holds() const {
  for (const auto& cap : lsd_) {
    if (!cap.valid) continue;
    for (const auto& w : cap.windows)
      if (!find_way(w.owner, w.window)) return false;
  }
  return true;
}

}  // namespace fesim
