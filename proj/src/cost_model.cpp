#include "fesim/cost_model.hpp"

#include <algorithm>
#include <cmath>

namespace fesim {

Rng make_rng(std::uint64_t root, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream) {
  return make_rng(root, stream)();
}

std::uint32_t CostModel::cycles(Path p) const {
  switch (p) {
    case Path::lsd: return cycles_lsd;
    case Path::dsb: return cycles_dsb;
    case Path::mite: return cycles_mite;
  }
  return cycles_mite;
}

double CostModel::energy_per_uop(Path p) const {
  switch (p) {
    case Path::lsd: return energy_lsd;
    case Path::dsb: return energy_dsb;
    case Path::mite: return energy_mite;
  }
  return energy_mite;
}

void CostModel::validate() const {
  if (!(cycles_lsd <= cycles_dsb && cycles_dsb < cycles_mite))
    throw ValidationError("cost ordering must satisfy lsd <= dsb < mite");
  if (cycles_lsd == 0) throw ValidationError("cost.lsd must be >= 1 cycle");
  if (!(energy_lsd < energy_dsb && energy_dsb < energy_mite))
    throw ValidationError("energy ordering must satisfy lsd < dsb < mite");
  if (energy_lsd < 0) throw ValidationError("energy per micro-op must be non-negative");
  if (!(noise_sigma >= 0) || !std::isfinite(noise_sigma))
    throw ValidationError("noise.sigma must be a finite value >= 0");
  if (!(core_freq_hz > 0)) throw ValidationError("cost.core_freq_hz must be positive");
}

std::uint32_t switch_penalty(std::optional<Path> prev, Path next, const CostModel& m) {
  if (!prev) return 0;
  if (*prev == Path::lsd && next == Path::dsb) return m.lsd_to_dsb;
  if (*prev == Path::dsb && next == Path::mite) return m.dsb_to_mite;
  if (*prev == Path::lsd && next == Path::mite) return m.lsd_to_dsb + m.dsb_to_mite;
  return 0;
}

std::uint64_t cost_of(const DeliveryRecord& rec, std::optional<Path> prev, const CostModel& m,
                      Rng& rng) {
  const double base = static_cast<double>(m.cycles(rec.path)) + switch_penalty(prev, rec.path, m) +
                      static_cast<double>(m.lcp_stall) * rec.lcp_stalls;
  if (m.noise_sigma == 0.0) return static_cast<std::uint64_t>(base);
  std::normal_distribution<double> noise(0.0, m.noise_sigma);
  const double v = std::round(base + noise(rng));
  return v < 1.0 ? 1 : static_cast<std::uint64_t>(v);
}

double energy_of(const DeliveryRecord& rec, const CostModel& m) {
  return rec.uops * m.energy_per_uop(rec.path);
}

SequenceCost measure_sequence(std::span<const DeliveryRecord> records, const CostModel& m,
                              Rng& rng) {
  SequenceCost out;
  std::optional<Path> prev;
  for (const auto& r : records) {
    out.total_cycles += cost_of(r, prev, m, rng);
    out.total_energy += energy_of(r, m);
    prev = r.path;
  }
  return out;
}

namespace {

// Index of the last refresh at or before t. The epsilon keeps exact
// multiples of the interval from rounding down a boundary.
double last_boundary(double t, double interval_s) {
  return std::floor(t / interval_s + 1e-9) * interval_s;
}

}  // namespace

double rapl_read(std::span<const TraceSample> trace, double interval_s, double t) {
  if (!(interval_s > 0)) throw ValidationError("RAPL update interval must be positive");
  const double b = last_boundary(t, interval_s);
  auto it = std::upper_bound(trace.begin(), trace.end(), b + 1e-15,
                             [](double v, const TraceSample& s) { return v < s.timestamp; });
  return it == trace.begin() ? 0.0 : std::prev(it)->value;
}

std::vector<TraceSample> rapl_sample(std::span<const TraceSample> trace, double interval_s) {
  std::vector<TraceSample> out;
  out.reserve(trace.size());
  for (const auto& s : trace) {
    TraceSample r = s;
    r.value = rapl_read(trace, interval_s, s.timestamp);
    out.push_back(r);
  }
  return out;
}

RaplMeter::RaplMeter(double interval_cycles)
    : interval_(interval_cycles), next_boundary_(interval_cycles) {
  if (!(interval_cycles > 0)) throw ValidationError("RAPL update interval must be positive");
}

void RaplMeter::record(std::uint64_t t_end, double energy) {
  while (next_boundary_ < static_cast<double>(t_end)) {
    latched_ = cumulative_;
    next_boundary_ += interval_;
  }
  cumulative_ += energy;
  last_t_ = t_end;
}

double RaplMeter::read(std::uint64_t now) const {
  // Largest refresh boundary at or before `now`.
  const double b = std::floor(static_cast<double>(now) / interval_) * interval_;
  if (b >= static_cast<double>(last_t_)) return cumulative_;
  return latched_;
}

}  // namespace fesim
