#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fesim/frontend.hpp"

namespace fesim {

using Rng = std::mt19937_64;

/// Derives an independent generator for sub-experiment `stream` of a run
/// seeded with `root`. The split goes through std::seed_seq so that every
/// (root, stream) pair maps to a distinct, reproducible engine state.
Rng make_rng(std::uint64_t root, std::uint64_t stream = 0);

/// First draw of make_rng(root, stream); used to hand a sub-experiment its
/// own root seed.
std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream);

/// Cycle and energy costs of block delivery. Energy units are abstract.
struct CostModel {
  std::uint32_t cycles_lsd = 5;
  std::uint32_t cycles_dsb = 7;
  std::uint32_t cycles_mite = 12;
  std::uint32_t lsd_to_dsb = 6;
  std::uint32_t dsb_to_mite = 10;
  std::uint32_t lcp_stall = 3;
  double energy_lsd = 1.0;
  double energy_dsb = 1.5;
  double energy_mite = 2.5;
  double noise_sigma = 0.0;
  double core_freq_hz = 2.7e9;

  std::uint32_t cycles(Path p) const;
  double energy_per_uop(Path p) const;
  void validate() const;

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

/// Switch penalty for moving from `prev` to `next` delivery.
std::uint32_t switch_penalty(std::optional<Path> prev, Path next, const CostModel& m);

/// Cycles charged for one delivered block. With noise_sigma == 0 the
/// generator is never touched.
std::uint64_t cost_of(const DeliveryRecord& rec, std::optional<Path> prev, const CostModel& m,
                      Rng& rng);

double energy_of(const DeliveryRecord& rec, const CostModel& m);

struct SequenceCost {
  std::uint64_t total_cycles = 0;
  double total_energy = 0.0;
};

SequenceCost measure_sequence(std::span<const DeliveryRecord> records, const CostModel& m, Rng& rng);

enum class SampleKind : std::uint8_t { cycles, energy, ipc };

struct TraceSample {
  std::uint64_t index = 0;
  double value = 0.0;
  double timestamp = 0.0;  // seconds
  SampleKind kind = SampleKind::energy;

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

constexpr double kDefaultRaplInterval = 1.0 / 20000.0;

/// Counter value visible at time `t` when the counter only refreshes at
/// multiples of `interval_s`. `trace` holds cumulative energy samples with
/// non-decreasing timestamps; each sample's value holds from its timestamp on.
double rapl_read(std::span<const TraceSample> trace, double interval_s, double t);

/// The trace as seen through the rate-limited counter, one reading per
/// input sample.
std::vector<TraceSample> rapl_sample(std::span<const TraceSample> trace,
                                     double interval_s = kDefaultRaplInterval);

/// Streaming form of the same quantisation, driven in cycles.
class RaplMeter {
 public:
  explicit RaplMeter(double interval_cycles);
  void record(std::uint64_t t_end, double energy);
  double read(std::uint64_t now) const;
  double cumulative() const { return cumulative_; }

 private:
  double interval_;
  double next_boundary_;
  double latched_ = 0.0;
  double cumulative_ = 0.0;
  std::uint64_t last_t_ = 0;
};

}  // namespace fesim
