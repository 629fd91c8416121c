#include "fesim/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "fesim/channel.hpp"

namespace fesim {

// ---- microcode patch detection ------------------------------------------

std::string_view to_string(PatchVerdict v) {
  switch (v) {
    case PatchVerdict::lsd_enabled: return "lsd_enabled";
    case PatchVerdict::lsd_disabled: return "lsd_disabled";
    case PatchVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

constexpr Addr kSmallLoopBase = 0x300000;
constexpr Addr kLargeLoopBase = 0x310000;

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  const double hi = *mid;
  return (*std::max_element(v.begin(), mid) + hi) / 2.0;
}

struct LoopStats {
  std::vector<double> cycles_per_block;
  double energy_per_uop = 0.0;
};

LoopStats measure_loop(Core& core, const std::vector<MixBlock>& chain, const PatchParams& p) {
  core.run_loop(0, chain, p.warm_laps);
  std::uint32_t lap_uops = 0;
  for (const auto& b : chain) lap_uops += b.uop_count;
  LoopStats s;
  double energy = 0.0;
  for (std::uint64_t i = 0; i < p.laps; ++i) {
    const auto t = core.run_loop(0, chain, 1);
    s.cycles_per_block.push_back(static_cast<double>(t.cycles) / static_cast<double>(t.blocks));
    energy += t.energy;
  }
  s.energy_per_uop = energy / (static_cast<double>(lap_uops) * static_cast<double>(p.laps));
  return s;
}

PatchTrial patch_trial(const SimSetup& setup, const PatchParams& p, std::uint64_t seed) {
  Core core(setup, seed);
  const auto& g = setup.fe.dsb;
  const auto small = build_block_chain(8, 0, {}, 0, kSmallLoopBase, g);
  std::vector<MixBlock> large;
  for (std::uint32_t k = 0; k < 16; ++k)
    large.push_back(canonical_block(kLargeLoopBase + k * g.window_bytes, 0));
  for (std::size_t i = 0; i < large.size(); ++i)
    large[i].next_addr = large[(i + 1) % large.size()].start_addr;

  const auto below = measure_loop(core, small, p);
  const auto above = measure_loop(core, large, p);

  PatchTrial t;
  t.below_cycles_per_block = median(below.cycles_per_block);
  t.above_cycles_per_block = median(above.cycles_per_block);
  t.below_energy_per_uop = below.energy_per_uop;
  t.above_energy_per_uop = above.energy_per_uop;

  const auto& c = setup.costs;
  if (c.cycles_lsd == c.cycles_dsb) {
    // Timing cannot tell the paths apart; energy is noise-free.
    const double mid = (c.energy_lsd + c.energy_dsb) / 2.0;
    t.verdict = t.below_energy_per_uop < mid ? PatchVerdict::lsd_enabled : PatchVerdict::lsd_disabled;
    return t;
  }
  std::vector<double> dev;
  for (double v : below.cycles_per_block) dev.push_back(std::abs(v - t.below_cycles_per_block));
  const double mad = median(dev);
  // 3 standard errors of a median, with the MAD scaled to a sigma.
  t.noise_floor = 3.0 * 1.2533 * 1.4826 * mad / std::sqrt(static_cast<double>(p.laps));
  // Noise as wide as half the class separation makes any verdict a guess,
  // even when the (floor-biased) median lands far from both classes.
  const double mid = (c.cycles_lsd + c.cycles_dsb) / 2.0;
  const double half_sep = (static_cast<double>(c.cycles_dsb) - c.cycles_lsd) / 2.0;
  if (t.noise_floor >= half_sep || std::abs(t.below_cycles_per_block - mid) <= t.noise_floor)
    t.verdict = PatchVerdict::inconclusive;
  else
    t.verdict = t.below_cycles_per_block < mid ? PatchVerdict::lsd_enabled : PatchVerdict::lsd_disabled;
  return t;
}

}  // namespace

PatchReport detect_patch(const SimSetup& setup, const PatchParams& params, std::uint64_t seed,
                         Exec exec) {
  if (params.trials == 0) throw ValidationError("patch.trials must be >= 1");
  if (params.laps == 0) throw ValidationError("patch.laps must be >= 1");
  PatchReport r;
  r.trials.resize(params.trials);
  for_each_index(exec, params.trials,
                 [&](std::size_t i) { r.trials[i] = patch_trial(setup, params, split_seed(seed, i)); });

  std::size_t votes[3] = {0, 0, 0};
  for (const auto& t : r.trials) {
    ++votes[static_cast<int>(t.verdict)];
    r.timing_gap += t.timing_gap();
    r.energy_gap += t.energy_gap();
  }
  r.timing_gap /= params.trials;
  r.energy_gap /= params.trials;
  const auto best = std::max_element(std::begin(votes), std::end(votes));
  const bool tie = std::count(std::begin(votes), std::end(votes), *best) > 1;
  r.verdict = tie ? PatchVerdict::inconclusive
                  : static_cast<PatchVerdict>(best - std::begin(votes));
  return r;
}

std::string patch_csv(const PatchReport& r, bool lsd_enabled) {
  std::string s =
      "trial,lsd_enabled,verdict,below_cycles_per_block,above_cycles_per_block,timing_gap,"
      "energy_gap\n";
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    const auto& t = r.trials[i];
    s += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", i, lsd_enabled ? 1 : 0,
                     to_string(t.verdict), t.below_cycles_per_block, t.above_cycles_per_block,
                     t.timing_gap(), t.energy_gap());
  }
  return s;
}

// ---- application fingerprinting -----------------------------------------

void VictimTrace::validate() const {
  if (!(interval_s > 0.0)) throw ValidationError(fmt::format("{}: interval_s must be positive", name));
  if (demand_uops.empty()) throw ValidationError(fmt::format("{}: victim trace is empty", name));
  for (double d : demand_uops)
    if (!(d >= 0.0) || !std::isfinite(d))
      throw ValidationError(fmt::format("{}: demand must be finite and >= 0", name));
}

double VictimTrace::mean_rate(double t0, double t1) const {
  if (!(t1 > t0)) throw ValidationError("rate window must have positive length");
  std::vector<double> prefix(demand_uops.size() + 1, 0.0);
  for (std::size_t i = 0; i < demand_uops.size(); ++i) prefix[i + 1] = prefix[i] + demand_uops[i];
  const double period = duration_s();
  // Cumulative demand up to t, repeating the trace.
  auto cumulative = [&](double t) {
    const double laps = std::floor(t / period);
    const double r = t - laps * period;
    auto k = static_cast<std::size_t>(r / interval_s);
    k = std::min(k, demand_uops.size() - 1);
    const double frac = (r - static_cast<double>(k) * interval_s) / interval_s;
    return laps * prefix.back() + prefix[k] + demand_uops[k] * frac;
  };
  return (cumulative(t1) - cumulative(t0)) / (t1 - t0);
}

VictimTrace read_victim_csv(std::istream& in, std::string name) {
  VictimTrace v;
  v.name = std::move(name);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(fmt::format("{}: missing header", v.name));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "interval_s,demand_uops")
    throw ValidationError(fmt::format("{}: expected header 'interval_s,demand_uops'", v.name));
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ValidationError(fmt::format("{}:{}: expected two columns", v.name, row));
    double interval = 0.0, demand = 0.0;
    try {
      interval = std::stod(line.substr(0, comma));
      demand = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("{}:{}: not a number", v.name, row));
    }
    if (v.demand_uops.empty())
      v.interval_s = interval;
    else if (std::abs(interval - v.interval_s) > 1e-12 * std::max(1.0, v.interval_s))
      throw ValidationError(fmt::format("{}:{}: intervals must all be equal", v.name, row));
    v.demand_uops.push_back(demand);
  }
  v.validate();
  return v;
}

VictimTrace load_victim_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError(fmt::format("cannot open victim trace '{}'", path));
  auto stem = path.substr(path.find_last_of('/') + 1);
  if (auto dot = stem.rfind('.'); dot != std::string::npos) stem.resize(dot);
  return read_victim_csv(f, stem);
}

void write_victim_csv(std::ostream& out, const VictimTrace& v) {
  out << "interval_s,demand_uops\n";
  for (double d : v.demand_uops) out << fmt::format("{},{}\n", v.interval_s, d);
}

std::size_t FingerprintParams::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration_s * sampling_hz));
}

void FingerprintParams::validate() const {
  if (!(sampling_hz > 0.0)) throw ValidationError("fingerprint.sampling_hz must be positive");
  if (!(mite_capacity > 0.0)) throw ValidationError("fingerprint.mite_capacity must be positive");
  if (!(jitter >= 0.0)) throw ValidationError("fingerprint.jitter must be >= 0");
  if (laps_per_sample == 0) throw ValidationError("fingerprint.laps_per_sample must be >= 1");
  if (sample_count() == 0) throw ValidationError("fingerprint run yields no samples");
  if (runs == 0) throw ValidationError("fingerprint.runs must be >= 1");
}

double contention_factor(double demand_rate, double mite_capacity) {
  return mite_capacity / (mite_capacity + demand_rate);
}

std::vector<MixBlock> attacker_nop_loop(Addr base) {
  std::vector<MixBlock> loop;
  for (Addr k = 0; k < 4; ++k) loop.push_back(MixBlock{base + 32 * k, 25, 25, 0, 0, 0});
  for (std::size_t i = 0; i < loop.size(); ++i) loop[i].next_addr = loop[(i + 1) % loop.size()].start_addr;
  return loop;
}

AttackerRun attacker_ipc_run(const VictimTrace& victim, const SimSetup& setup,
                             const FingerprintParams& params, std::uint64_t seed) {
  victim.validate();
  params.validate();
  Core core(setup, seed);
  Rng jitter_rng = make_rng(seed, 1);
  std::normal_distribution<double> jitter(0.0, 1.0);
  if (params.partitioned) core.frontend().set_partition_mode(2);

  const auto loop = attacker_nop_loop();
  std::uint64_t lap_uops = 0;
  for (const auto& b : loop) lap_uops += b.uop_count;

  AttackerRun out;
  out.trace.sampling_hz = params.sampling_hz;
  core.run_loop(0, loop, 4);
  const auto misses0 = core.frontend().counters().l1i_misses;
  double ipc_sum = 0.0;
  const double dt = 1.0 / params.sampling_hz;
  for (std::size_t k = 0; k < params.sample_count(); ++k) {
    const auto t = core.run_loop(0, loop, params.laps_per_sample);
    out.lsd_blocks += t.lsd_blocks;
    const double ipc = static_cast<double>(lap_uops * params.laps_per_sample) / static_cast<double>(t.cycles);
    ipc_sum += ipc;
    const double rate = victim.mean_rate(static_cast<double>(k) * dt, static_cast<double>(k + 1) * dt);
    double sample = ipc * contention_factor(rate, params.mite_capacity);
    if (params.jitter > 0.0) sample *= std::max(0.01, 1.0 + params.jitter * jitter(jitter_rng));
    out.trace.samples.push_back(sample);
  }
  out.baseline_ipc = ipc_sum / static_cast<double>(params.sample_count());
  out.l1i_misses_after_warmup = core.frontend().counters().l1i_misses - misses0;
  return out;
}

double euclidean_distance(const IpcTrace& a, const IpcTrace& b) {
  if (a.samples.size() != b.samples.size())
    throw ValidationError(fmt::format("trace lengths differ ({} vs {})", a.samples.size(), b.samples.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = a.samples[i] - b.samples[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Classification classify(const std::vector<LabeledTrace>& refs, const IpcTrace& probe) {
  if (refs.empty()) throw ValidationError("classification needs reference traces");
  std::map<std::string, std::pair<IpcTrace, std::size_t>> centroids;
  for (const auto& r : refs) {
    if (r.trace.samples.size() != probe.samples.size())
      throw ValidationError("reference and probe traces differ in length");
    auto& [sum, n] = centroids[r.label];
    if (sum.samples.empty()) sum.samples.assign(probe.samples.size(), 0.0);
    for (std::size_t i = 0; i < sum.samples.size(); ++i) sum.samples[i] += r.trace.samples[i];
    ++n;
  }
  Classification c;
  double best = 0.0;
  bool first = true;
  for (auto& [label, entry] : centroids) {
    auto& [sum, n] = entry;
    for (auto& v : sum.samples) v /= static_cast<double>(n);
    const double d = euclidean_distance(sum, probe);
    if (first || d < best) {
      best = d;
      c.label = label;
      first = false;
    }
  }
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < refs.size(); ++i)
    for (std::size_t j = i + 1; j < refs.size(); ++j) {
      const double d = euclidean_distance(refs[i].trace, refs[j].trace);
      if (refs[i].label == refs[j].label) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  c.intra_mean = n_intra ? intra / static_cast<double>(n_intra) : 0.0;
  c.inter_mean = n_inter ? inter / static_cast<double>(n_inter) : 0.0;
  return c;
}

std::vector<VictimTrace> synthetic_victims(double interval_s) {
  struct Layer {
    double seconds;
    double rate;  // micro-ops per second
  };
  const std::vector<std::pair<std::string, std::vector<Layer>>> models = {
      {"convnet_wide", {{0.30, 1.6e9}, {0.10, 0.3e9}, {0.20, 0.9e9}}},
      {"convnet_deep",
       {{0.1, 1.2e9}, {0.1, 0.5e9}, {0.1, 1.2e9}, {0.1, 0.5e9}, {0.1, 1.2e9}, {0.1, 0.5e9},
        {0.1, 1.2e9}, {0.1, 0.5e9}, {0.2, 2.0e9}}},
      {"mobilenet_like", {{0.45, 0.4e9}, {0.05, 2.2e9}}},
      {"resnet_like",
       {{0.1, 0.2e9}, {0.1, 0.4e9}, {0.1, 0.6e9}, {0.1, 0.8e9}, {0.1, 1.0e9}, {0.1, 1.2e9},
        {0.1, 1.4e9}, {0.1, 1.6e9}, {0.2, 0.1e9}}},
  };
  std::vector<VictimTrace> out;
  for (const auto& [name, layers] : models) {
    double period = 0.0;
    for (const auto& l : layers) period += l.seconds;
    VictimTrace v{name, interval_s, {}};
    const auto n = static_cast<std::size_t>(std::llround(period / interval_s));
    for (std::size_t k = 0; k < n; ++k) {
      const double mid = (static_cast<double>(k) + 0.5) * interval_s;
      double t = 0.0;
      double rate = layers.back().rate;
      for (const auto& l : layers) {
        if (mid < t + l.seconds) {
          rate = l.rate;
          break;
        }
        t += l.seconds;
      }
      v.demand_uops.push_back(rate * interval_s);
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<FingerprintRow> fingerprint_experiment(const std::vector<VictimTrace>& victims,
                                                   const SimSetup& setup,
                                                   const FingerprintParams& params,
                                                   std::uint64_t seed, Exec exec) {
  params.validate();
  if (victims.empty()) throw ValidationError("fingerprinting needs at least one victim");
  const std::size_t n = victims.size() * params.runs;
  std::vector<LabeledTrace> traces(n);
  for_each_index(exec, n, [&](std::size_t i) {
    const auto& v = victims[i / params.runs];
    traces[i] = {v.name, attacker_ipc_run(v, setup, params, split_seed(seed, i)).trace};
  });

  std::vector<FingerprintRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<LabeledTrace> refs;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) refs.push_back(traces[j]);
    if (refs.empty()) refs.push_back(traces[i]);
    rows.push_back({traces[i].label, i % params.runs, classify(refs, traces[i].trace)});
  }
  return rows;
}

std::string fingerprint_csv(const std::vector<FingerprintRow>& rows) {
  std::string s = "probe_label,predicted,intra_mean,inter_mean,correct\n";
  for (const auto& r : rows)
    s += fmt::format("{},{},{:.6f},{:.6f},{}\n", r.probe_label, r.result.label, r.result.intra_mean,
                     r.result.inter_mean, r.correct() ? 1 : 0);
  return s;
}

}  // namespace fesim
