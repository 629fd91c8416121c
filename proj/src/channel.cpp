#include "fesim/channel.hpp"

#include <cmath>

#include <fmt/format.h>

namespace fesim {

namespace {

constexpr Addr kChannelCodeBase = 0x100000;
constexpr Addr kMixedLoopBase = 0x200000;
constexpr Addr kOrderedLoopBase = 0x201000;
constexpr std::uint32_t kPlainAddBytes = 4;
constexpr std::uint32_t kLcpAddBytes = 5;

void close_loop(std::vector<MixBlock>& chain) {
  for (std::size_t i = 0; i < chain.size(); ++i)
    chain[i].next_addr = chain[(i + 1) % chain.size()].start_addr;
}

}  // namespace

std::vector<MixBlock> build_block_chain(std::uint32_t count, std::uint32_t set,
                                        std::span<const Alignment> alignment,
                                        std::uint32_t first_slot, Addr base, const DsbGeometry& g) {
  if (count == 0) throw ValidationError("block chain needs at least one block");
  if (set >= g.sets) throw ValidationError(fmt::format("set index {} out of range", set));
  if (!alignment.empty() && alignment.size() != count)
    throw ValidationError("alignment list must match the block count");
  const Addr stride = static_cast<Addr>(g.sets) * g.window_bytes;
  std::vector<MixBlock> chain;
  chain.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    Addr a = base + (first_slot + k) * stride + static_cast<Addr>(set) * g.window_bytes;
    if (!alignment.empty() && alignment[k] == Alignment::misaligned) a += g.window_bytes / 2;
    chain.push_back(canonical_block(a, 0));
  }
  close_loop(chain);
  return chain;
}

std::vector<MixBlock> build_add_loop(const std::vector<bool>& lcp, Addr base, const DsbGeometry& g) {
  if (lcp.empty()) throw ValidationError("add loop needs at least one instruction");
  std::vector<MixBlock> chain;
  std::size_t i = 0;
  Addr addr = base;
  while (i < lcp.size()) {
    MixBlock b{addr, 0, 0, 0, 0, 0};
    bool prev_lcp = false;
    while (i < lcp.size() && b.uop_count < g.uops_per_line) {
      const std::uint32_t len = lcp[i] ? kLcpAddBytes : kPlainAddBytes;
      if (b.byte_len + len > g.window_bytes) break;
      if (lcp[i]) {
        ++b.lcp_count;
        if (b.uop_count > 0 && !prev_lcp) ++b.lcp_stalls;
      }
      prev_lcp = lcp[i];
      b.byte_len += len;
      ++b.uop_count;
      ++i;
    }
    chain.push_back(b);
    addr += g.window_bytes;
  }
  close_loop(chain);
  return chain;
}

std::vector<bool> mixed_issue(std::uint32_t r) {
  std::vector<bool> v;
  for (std::uint32_t i = 0; i < r; ++i) {
    v.push_back(true);
    v.push_back(false);
  }
  return v;
}

std::vector<bool> ordered_issue(std::uint32_t r) {
  std::vector<bool> v(r, false);
  v.insert(v.end(), r, true);
  return v;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::mt_evict: return "mt_evict";
    case Variant::mt_misalign: return "mt_misalign";
    case Variant::nonmt_evict: return "nonmt_evict";
    case Variant::nonmt_misalign: return "nonmt_misalign";
    case Variant::slow_switch: return "slow_switch";
  }
  return "?";
}

std::string_view to_string(Stealth s) { return s == Stealth::stealthy ? "stealthy" : "fast"; }
std::string_view to_string(Measure m) { return m == Measure::timing ? "timing" : "power"; }

Variant parse_variant(std::string_view s) {
  for (auto v : {Variant::mt_evict, Variant::mt_misalign, Variant::nonmt_evict,
                 Variant::nonmt_misalign, Variant::slow_switch})
    if (to_string(v) == s) return v;
  throw ValidationError(fmt::format("unknown channel variant '{}'", s));
}

Stealth parse_stealth(std::string_view s) {
  if (s == "stealthy") return Stealth::stealthy;
  if (s == "fast") return Stealth::fast;
  throw ValidationError(fmt::format("unknown stealth mode '{}'", s));
}

std::string_view to_string(Interleave i) { return i == Interleave::lap ? "lap" : "block"; }

Interleave parse_interleave(std::string_view s) {
  if (s == "lap") return Interleave::lap;
  if (s == "block") return Interleave::block;
  throw ValidationError(fmt::format("unknown interleave mode '{}'", s));
}

Measure parse_measure(std::string_view s) {
  if (s == "timing") return Measure::timing;
  if (s == "power") return Measure::power;
  throw ValidationError(fmt::format("unknown measurement '{}'", s));
}

ChannelParams ChannelParams::defaults_for(Variant v, Stealth s) {
  ChannelParams p;
  p.variant = v;
  p.stealth = s;
  p.d = is_misalign(v) ? 5 : 6;
  p.M = 8;
  if (is_mt(v)) {
    p.p = 1000;
    p.q = 100;
  } else {
    p.p = 10;
    p.q = 10;
  }
  return p;
}

void ChannelParams::validate(const DsbGeometry& g) const {
  const std::uint32_t n = g.ways;
  if (effective_p() == 0 || effective_q() == 0) throw ValidationError("p and q must be >= 1");
  if (target_set >= g.sets) throw ValidationError("channel.set out of range");
  if (!(threshold_alpha > 0.0 && threshold_alpha < 1.0))
    throw ValidationError("channel.alpha must lie in (0,1)");
  if (calibration_bits < 2) throw ValidationError("channel.calibration_bits must be >= 2");
  if (variant != Variant::slow_switch) {
    if (d == 0 || d > n)
      throw ValidationError(fmt::format("d={} violates 1 <= d < N+1 with N={}", d, n));
  }
  if (is_misalign(variant)) {
    if (M > n) throw ValidationError(fmt::format("M={} exceeds N={}", M, n));
    if (d >= M) throw ValidationError(fmt::format("d={} must be below M={}", d, M));
  }
  if (is_mt(variant)) {
    if (effective_p() % effective_q() != 0)
      throw ValidationError("multi-threaded variants need q to divide p");
    if (measure == Measure::power)
      throw ValidationError("power measurement is only modelled for single-threaded variants");
  } else {
    if (effective_p() != effective_q())
      throw ValidationError("single-threaded variants need p == q");
  }
  if (variant == Variant::slow_switch) {
    if (r == 0) throw ValidationError("slow-switch needs r >= 1");
    if (measure == Measure::power)
      throw ValidationError("power measurement is only modelled for eviction and misalignment");
  }
  if (variant == Variant::nonmt_evict && stealth == Stealth::stealthy) {
    if (alt_set(g) >= g.sets) throw ValidationError("channel.alt_set out of range");
    if (alt_set(g) == target_set) throw ValidationError("alternate set must differ from target set");
  }
}

std::string ChannelParams::label() const {
  std::string s(to_string(variant));
  if (variant == Variant::nonmt_evict || variant == Variant::nonmt_misalign) {
    s += '_';
    s += to_string(stealth);
  }
  if (measure == Measure::power) s += "_power";
  if (enclave.enabled) s += "+enclave";
  return s;
}

std::string BitMessage::str() const {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

BitMessage BitMessage::from_string(std::string_view s) {
  BitMessage m;
  for (char c : s) {
    if (c != '0' && c != '1') throw ValidationError("bit strings may only contain 0 and 1");
    m.bits.push_back(c == '1');
  }
  return m;
}

std::string_view to_string(BitMessage::Pattern p) {
  switch (p) {
    case BitMessage::Pattern::all0: return "all0";
    case BitMessage::Pattern::all1: return "all1";
    case BitMessage::Pattern::alternating: return "alternating";
    case BitMessage::Pattern::random: return "random";
  }
  return "?";
}

BitMessage::Pattern parse_pattern(std::string_view s) {
  for (auto p : {BitMessage::Pattern::all0, BitMessage::Pattern::all1,
                 BitMessage::Pattern::alternating, BitMessage::Pattern::random})
    if (to_string(p) == s) return p;
  throw ValidationError(fmt::format("unknown message pattern '{}'", s));
}

int Calibration::classify(double observation) const {
  const bool above = observation > threshold;
  return polarity == Polarity::above_is_one ? (above ? 1 : 0) : (above ? 0 : 1);
}

Channel::Channel(ChannelParams params, FrontendConfig fe, CostModel costs, std::uint64_t seed,
                 double rapl_interval_s)
    : params_(params), core_(fe, costs, seed, rapl_interval_s) {
  const auto& g = fe.dsb;
  params_.validate(g);
  const std::uint32_t n = g.ways;
  const std::uint32_t x = params_.target_set;
  const std::uint32_t d = params_.d;

  switch (params_.variant) {
    case Variant::mt_evict:
    case Variant::nonmt_evict:
      receiver_ = build_block_chain(d, x, {}, 0, kChannelCodeBase, g);
      sender1_ = build_block_chain(n + 1 - d, x, {}, d, kChannelCodeBase, g);
      sender0_ = build_block_chain(n + 1 - d, params_.alt_set(g), {}, d, kChannelCodeBase, g);
      break;
    case Variant::mt_misalign:
    case Variant::nonmt_misalign: {
      const std::uint32_t k = params_.M - d;
      const std::vector<Alignment> mis(k, Alignment::misaligned);
      receiver_ = build_block_chain(d, x, {}, 0, kChannelCodeBase, g);
      sender1_ = build_block_chain(k, x, mis, d, kChannelCodeBase, g);
      sender0_ = build_block_chain(k, x, {}, d, kChannelCodeBase, g);
      break;
    }
    case Variant::slow_switch: {
      const auto mixed = mixed_issue(params_.r);
      const auto ordered = ordered_issue(params_.r);
      sender1_ = build_add_loop(mixed, kMixedLoopBase, g);
      sender0_ = build_add_loop(ordered, kOrderedLoopBase, g);
      break;
    }
  }
}

BitResult Channel::run_bit(int m) {
  if (m != 0 && m != 1) throw ValidationError("a bit is 0 or 1");
  const std::uint64_t p = params_.effective_p();
  const std::uint64_t q = params_.effective_q();
  const bool power = params_.measure == Measure::power;
  const std::uint64_t start = core_.now_cycles();
  const std::uint64_t misses0 = core_.frontend().counters().l1i_misses;
  const double energy0 = core_.rapl_read();

  BitResult out;
  if (params_.enclave.enabled) core_.stall(params_.enclave.entry_exit_cycles);

  switch (params_.variant) {
    case Variant::mt_evict:
    case Variant::mt_misalign: {
      core_.run_loop(0, receiver_, p);
      // One sender lap per group of p/q receiver laps. Lap pacing runs the
      // sender lap first; block pacing alternates it with the group's laps.
      const std::uint64_t group = p / q;
      RunTotals rx;
      for (std::uint64_t i = 0; i < q; ++i) {
        if (m == 0) {
          rx += core_.run_loop(0, receiver_, group);
        } else if (params_.interleave == Interleave::lap) {
          core_.run_loop(1, sender1_, 1);
          rx += core_.run_loop(0, receiver_, group);
        } else {
          const std::vector<LoopStream> streams{{1, sender1_, 1}, {0, receiver_, group}};
          rx += core_.run_interleaved(streams)[1];
        }
      }
      out.observation = static_cast<double>(rx.cycles);
      out.receiver_mite_blocks = rx.mite_blocks;
      break;
    }
    case Variant::nonmt_evict:
    case Variant::nonmt_misalign: {
      core_.run_loop(0, receiver_, p);
      if (m == 1)
        core_.run_loop(0, sender1_, q);
      else if (params_.stealth == Stealth::stealthy)
        core_.run_loop(0, sender0_, q);
      const auto dec = core_.run_loop(0, receiver_, p);
      out.receiver_mite_blocks = dec.mite_blocks;
      out.observation = static_cast<double>(core_.now_cycles() - start);
      break;
    }
    case Variant::slow_switch: {
      const auto enc = core_.run_loop(0, m ? sender1_ : sender0_, q);
      out.observation = static_cast<double>(enc.cycles);
      if (params_.enclave.enabled) out.observation += params_.enclave.entry_exit_cycles;
      break;
    }
  }

  if (power) out.observation = core_.rapl_read() - energy0;
  out.elapsed_cycles = core_.now_cycles() - start;
  out.l1i_misses = core_.frontend().counters().l1i_misses - misses0;
  if (params_.enclave.enabled && is_mt(params_.variant))
    out.observation += static_cast<double>(params_.enclave.entry_exit_cycles);
  return out;
}

const Calibration& Channel::calibrate() {
  // Warm every code path once before measuring.
  run_bit(0);
  run_bit(1);

  double sum[2] = {0.0, 0.0};
  std::uint32_t n[2] = {0, 0};
  for (std::uint32_t i = 0; i < params_.calibration_bits; ++i) {
    const int m = static_cast<int>(i % 2);
    sum[m] += run_bit(m).observation;
    ++n[m];
  }
  Calibration c;
  c.mean0 = sum[0] / n[0];
  c.mean1 = sum[1] / n[1];
  if (c.mean0 == c.mean1)
    throw DegenerateChannel(fmt::format("{}: bit values produce identical observations ({})",
                                        params_.label(), c.mean0));
  c.threshold = c.mean0 + params_.threshold_alpha * (c.mean1 - c.mean0);
  c.polarity = c.mean1 > c.mean0 ? Polarity::above_is_one : Polarity::below_is_one;
  calibration_ = c;
  return *calibration_;
}

TransmitResult Channel::transmit(const BitMessage& message) {
  if (!calibration_) calibrate();
  TransmitResult out;
  out.received.pattern = message.pattern;
  out.received.seed = message.seed;
  const std::uint64_t start = core_.now_cycles();
  const auto before = core_.frontend().counters();
  out.observations.reserve(message.size());
  for (auto bit : message.bits) {
    const auto r = run_bit(bit);
    out.observations.push_back(r.observation);
    out.received.bits.push_back(static_cast<std::uint8_t>(calibration_->classify(r.observation)));
  }
  const auto& after = core_.frontend().counters();
  out.elapsed_s = static_cast<double>(core_.now_cycles() - start) / core_.costs().core_freq_hz;
  out.l1i_misses = after.l1i_misses - before.l1i_misses;
  out.dsb_evictions = after.dsb_evictions - before.dsb_evictions;
  return out;
}

}  // namespace fesim
