#include "fesim/spectre.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "fesim/channel.hpp"

namespace fesim {

namespace {
constexpr Addr kProbeBase = 0x400000;
}

SpectreScenario::SpectreScenario(const SimSetup& setup, std::uint64_t seed, SpectreParams params)
    : params_(params), core_(setup, seed) {
  const auto& g = setup.fe.dsb;
  for (std::uint32_t s = 0; s < g.sets; ++s) {
    probes_.push_back(build_block_chain(g.ways, s, {}, 0, kProbeBase, g));
    gadget_.push_back(build_block_chain(1, s, {}, g.ways, kProbeBase, g).front());
  }
}

double SpectreScenario::margin() const {
  if (params_.margin) return *params_.margin;
  const auto& c = core_.costs();
  return static_cast<double>(c.cycles_mite) - static_cast<double>(c.cycles_dsb);
}

void SpectreScenario::warm_up() {
  core_.run_once(0, gadget_);
  prime();
  prime();
}

void SpectreScenario::train() { trained_ += params_.train_iterations; }

void SpectreScenario::prime() {
  for (const auto& chain : probes_) core_.run_once(0, chain);
  encoded_ = false;
}

void SpectreScenario::transient_encode(std::uint32_t chunk) {
  if (chunk >= chunk_values())
    throw ValidationError(fmt::format("chunk {} out of range 0..{}", chunk, chunk_values() - 1));
  misses_at_encode_ = core_.frontend().counters().l1i_misses;
  encoded_ = true;
  const MixBlock& b = gadget_[chunk];
  core_.run_once(0, std::span<const MixBlock>(&b, 1));
}

ProbeResult SpectreScenario::probe_all_sets() {
  const auto misses0 = encoded_ ? misses_at_encode_ : core_.frontend().counters().l1i_misses;
  ProbeResult r;
  for (const auto& chain : probes_) r.per_set_cycles.push_back(core_.run_once(0, chain).cycles);
  r.added_l1i_misses = core_.frontend().counters().l1i_misses - misses0;
  encoded_ = false;

  const auto best = std::max_element(r.per_set_cycles.begin(), r.per_set_cycles.end());
  std::uint64_t second = 0;
  for (auto it = r.per_set_cycles.begin(); it != r.per_set_cycles.end(); ++it)
    if (it != best) second = std::max(second, *it);
  const double lead = static_cast<double>(*best) - static_cast<double>(second);
  r.ambiguous = r.per_set_cycles.size() > 1 && lead <= margin();
  r.recovered = r.ambiguous ? -1 : static_cast<int>(best - r.per_set_cycles.begin());
  return r;
}

ProbeResult SpectreScenario::leak(std::uint32_t chunk) {
  prime();
  train();
  transient_encode(chunk);
  return probe_all_sets();
}

std::vector<std::uint32_t> chunks_from_hex(std::string_view hex) {
  if (hex.size() >= 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X')) hex.remove_prefix(2);
  if (hex.empty()) throw ValidationError("secret must contain at least one hex digit");
  std::vector<std::uint8_t> bits;
  for (char c : hex) {
    if (!std::isxdigit(static_cast<unsigned char>(c)))
      throw ValidationError(fmt::format("'{}' is not a hex digit", c));
    const int v = std::isdigit(static_cast<unsigned char>(c))
                      ? c - '0'
                      : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
    for (int k = 3; k >= 0; --k) bits.push_back(static_cast<std::uint8_t>((v >> k) & 1));
  }
  while (bits.size() % 5) bits.push_back(0);
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < bits.size(); i += 5) {
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 5; ++k) v = (v << 1) | bits[i + k];
    out.push_back(v);
  }
  return out;
}

std::vector<std::uint32_t> random_chunks(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x73656372);
  std::vector<std::uint32_t> out(n);
  for (auto& c : out) c = static_cast<std::uint32_t>(rng() >> 59);
  return out;
}

std::vector<SpectreRow> run_spectre(const SimSetup& setup, const std::vector<std::uint32_t>& secret,
                                    std::uint64_t seed, SpectreParams params) {
  SpectreScenario sc(setup, seed, params);
  sc.warm_up();
  std::vector<SpectreRow> rows;
  for (std::size_t i = 0; i < secret.size(); ++i) rows.push_back({i, secret[i], sc.leak(secret[i])});
  return rows;
}

std::string spectre_csv(const std::vector<SpectreRow>& rows, std::uint32_t sets) {
  std::string s = "chunk_index,true_value,recovered_value";
  for (std::uint32_t k = 0; k < sets; ++k) s += fmt::format(",set{}_cycles", k);
  s += ",added_l1i_misses\n";
  for (const auto& r : rows) {
    s += fmt::format("{},{},{}", r.chunk_index, r.true_value, r.probe.recovered);
    for (auto c : r.probe.per_set_cycles) s += fmt::format(",{}", c);
    s += fmt::format(",{}\n", r.probe.added_l1i_misses);
  }
  return s;
}

}  // namespace fesim
