#include "fesim/core.hpp"

namespace fesim {

RunTotals& RunTotals::operator+=(const RunTotals& o) {
  cycles += o.cycles;
  energy += o.energy;
  blocks += o.blocks;
  lsd_blocks += o.lsd_blocks;
  dsb_blocks += o.dsb_blocks;
  mite_blocks += o.mite_blocks;
  l1i_misses += o.l1i_misses;
  dsb_evictions += o.dsb_evictions;
  return *this;
}

Core::Core(FrontendConfig fe, CostModel costs, std::uint64_t seed, double rapl_interval_s)
    : fe_(fe), costs_(costs), rng_(make_rng(seed)),
      rapl_(rapl_interval_s * costs.core_freq_hz) {
  costs_.validate();
}

Core::Step Core::execute(int thread, const MixBlock& block) {
  Step s;
  s.record = fe_.access(thread, block);
  s.cycles = cost_of(s.record, prev_[thread], costs_, rng_);
  s.energy = energy_of(s.record, costs_);
  prev_[thread] = s.record.path;
  fe_.counters().lcp_stall_cycles += static_cast<std::uint64_t>(s.record.lcp_stalls) * costs_.lcp_stall;
  clock_ += s.cycles;
  rapl_.record(clock_, s.energy);
  return s;
}

void Core::tally(RunTotals& t, const Step& s) const {
  t.cycles += s.cycles;
  t.energy += s.energy;
  ++t.blocks;
  switch (s.record.path) {
    case Path::lsd: ++t.lsd_blocks; break;
    case Path::dsb: ++t.dsb_blocks; break;
    case Path::mite: ++t.mite_blocks; break;
  }
  t.l1i_misses += s.record.l1i_misses;
  t.dsb_evictions += s.record.dsb_evictions;
}

RunTotals Core::run_once(int thread, std::span<const MixBlock> blocks) {
  fe_.leave_loop(thread);
  RunTotals t;
  for (const auto& b : blocks) tally(t, execute(thread, b));
  return t;
}

RunTotals Core::run_loop(int thread, std::span<const MixBlock> chain, std::uint64_t laps) {
  const LoopStream s{thread, chain, laps};
  return run_interleaved(std::span<const LoopStream>(&s, 1)).front();
}

std::vector<RunTotals> Core::run_interleaved(std::span<const LoopStream> streams) {
  struct Cursor {
    std::size_t pos = 0;
    std::uint64_t lap = 0;
  };
  std::vector<RunTotals> totals(streams.size());
  std::vector<Cursor> cur(streams.size());
  for (const auto& s : streams) {
    if (s.chain.empty() && s.laps > 0) throw ValidationError("cannot loop over an empty chain");
    fe_.enter_loop(s.thread, s.chain);
  }

  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (std::size_t i = 0; i < streams.size(); ++i) {
      const auto& s = streams[i];
      auto& c = cur[i];
      if (c.lap >= s.laps) continue;
      progressed = true;
      tally(totals[i], execute(s.thread, s.chain[c.pos]));
      if (++c.pos == s.chain.size()) {
        c.pos = 0;
        ++c.lap;
        fe_.lsd_try_capture(s.thread, s.chain);
      }
    }
  }
  return totals;
}

}  // namespace fesim
