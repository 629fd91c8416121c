#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fesim/cost_model.hpp"
#include "fesim/frontend.hpp"

namespace fesim {

/// Per-stream tallies returned by the loop runners.
struct RunTotals {
  std::uint64_t cycles = 0;
  double energy = 0.0;
  std::uint64_t blocks = 0;
  std::uint64_t lsd_blocks = 0;
  std::uint64_t dsb_blocks = 0;
  std::uint64_t mite_blocks = 0;
  std::uint64_t l1i_misses = 0;
  std::uint64_t dsb_evictions = 0;

  RunTotals& operator+=(const RunTotals& o);
};

/// Everything needed to build a fresh Core apart from its seed.
struct SimSetup {
  FrontendConfig fe;
  CostModel costs;
  double rapl_interval_s = kDefaultRaplInterval;

  friend bool operator==(const SimSetup&, const SimSetup&) = default;
};

/// One thread looping over a closed chain for `laps` passes.
struct LoopStream {
  int thread = 0;
  std::span<const MixBlock> chain;
  std::uint64_t laps = 0;
};

/// A frontend plus the clock, energy meter and noise source that turn
/// deliveries into time. One Core is one simulation run.
class Core {
 public:
  Core(FrontendConfig fe, CostModel costs, std::uint64_t seed,
       double rapl_interval_s = kDefaultRaplInterval);
  Core(const SimSetup& s, std::uint64_t seed) : Core(s.fe, s.costs, seed, s.rapl_interval_s) {}

  Frontend& frontend() { return fe_; }
  const Frontend& frontend() const { return fe_; }
  const CostModel& costs() const { return costs_; }
  CostModel& costs() { return costs_; }
  Rng& rng() { return rng_; }

  std::uint64_t now_cycles() const { return clock_; }
  double now_seconds() const { return static_cast<double>(clock_) / costs_.core_freq_hz; }
  double energy() const { return rapl_.cumulative(); }
  /// Energy as a RAPL-style reader would see it right now.
  double rapl_read() const { return rapl_.read(clock_); }

  struct Step {
    DeliveryRecord record;
    std::uint64_t cycles = 0;
    double energy = 0.0;
  };

  Step execute(int thread, const MixBlock& block);

  /// Straight-line pass over `blocks`; no loop is active so nothing streams
  /// from the LSD.
  RunTotals run_once(int thread, std::span<const MixBlock> blocks);
  RunTotals run_loop(int thread, std::span<const MixBlock> chain, std::uint64_t laps);
  /// Block-level round-robin across streams until every stream finishes its
  /// laps. Returns one tally per stream, in input order.
  std::vector<RunTotals> run_interleaved(std::span<const LoopStream> streams);

  /// Adds a fixed cycle overhead (e.g. an enclave entry and exit).
  void stall(std::uint64_t cycles) { clock_ += cycles; }

 private:
  void tally(RunTotals& t, const Step& s) const;

  Frontend fe_;
  CostModel costs_;
  Rng rng_;
  std::array<std::optional<Path>, Frontend::kThreads> prev_{};
  std::uint64_t clock_ = 0;
  RaplMeter rapl_;
};

}  // namespace fesim
