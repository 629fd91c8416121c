#include "fesim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace fesim {

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t edit_distance(const BitMessage& a, const BitMessage& b) {
  return edit_distance(a.str(), b.str());
}

double error_rate(const BitMessage& sent, const BitMessage& received) {
  if (sent.size() == 0) return 0.0;
  return static_cast<double>(edit_distance(sent, received)) / static_cast<double>(sent.size());
}

double transmission_rate(std::uint64_t bits_sent, double elapsed_s) {
  if (!(elapsed_s > 0.0)) throw ValidationError("elapsed time must be positive");
  return static_cast<double>(bits_sent) / elapsed_s / 1000.0;
}

BitMessage gen_message(BitMessage::Pattern pattern, std::size_t length, std::uint64_t seed) {
  BitMessage m;
  m.pattern = pattern;
  m.seed = seed;
  m.bits.resize(length);
  switch (pattern) {
    case BitMessage::Pattern::all0: break;
    case BitMessage::Pattern::all1: std::fill(m.bits.begin(), m.bits.end(), 1); break;
    case BitMessage::Pattern::alternating:
      for (std::size_t i = 0; i < length; ++i) m.bits[i] = static_cast<std::uint8_t>(i % 2);
      break;
    case BitMessage::Pattern::random: {
      Rng rng = make_rng(seed, 0x6d657373);
      for (auto& b : m.bits) b = static_cast<std::uint8_t>(rng() >> 63);
      break;
    }
  }
  return m;
}

std::string ChannelReport::csv_header() {
  return "variant,d,M,p,q,pattern,bits_sent,bits_received,edit_distance,error_rate,"
         "tr_rate_kbps,seed";
}

std::string ChannelReport::csv_row() const {
  return fmt::format("{},{},{},{},{},{},{},{},{},{:.6f},{:.3f},{}", params.label(), params.d,
                     params.M, params.effective_p(), params.effective_q(), to_string(pattern),
                     bits_sent, bits_received, edit_distance, error_rate, tr_rate_kbps, seed);
}

ChannelReport run_channel(const ChannelParams& params, const BitMessage& message,
                          const SimSetup& setup, std::uint64_t seed) {
  Channel ch(params, setup.fe, setup.costs, seed, setup.rapl_interval_s);
  ch.calibrate();
  const auto res = ch.transmit(message);
  ChannelReport r;
  r.params = params;
  r.pattern = message.pattern;
  r.bits_sent = message.size();
  r.bits_received = res.received.size();
  r.edit_distance = edit_distance(message, res.received);
  r.error_rate = error_rate(message, res.received);
  r.tr_rate_kbps = message.size() == 0 ? 0.0 : transmission_rate(message.size(), res.elapsed_s);
  r.seed = seed;
  r.l1i_misses = res.l1i_misses;
  return r;
}

SweepResult sweep_d(const ChannelParams& base, std::uint32_t d_min, std::uint32_t d_max,
                    const BitMessage& message, const SimSetup& setup, std::uint64_t seed,
                    Exec exec) {
  SweepResult out;
  std::vector<ChannelParams> points;
  for (std::uint64_t dd = d_min; dd <= d_max; ++dd) {
    const auto d = static_cast<std::uint32_t>(dd);
    ChannelParams p = base;
    p.d = d;
    try {
      p.validate(setup.fe.dsb);
      points.push_back(p);
    } catch (const ValidationError& e) {
      out.skipped.push_back({d, e.what()});
    }
  }
  out.reports.resize(points.size());
  for_each_index(exec, points.size(), [&](std::size_t i) {
    out.reports[i] = run_channel(points[i], message, setup, split_seed(seed, points[i].d));
  });
  return out;
}

std::vector<PathSamples> sample_path_timing(const SimSetup& setup, std::size_t samples,
                                            std::uint64_t seed) {
  constexpr Addr kBase = 0x100000;
  constexpr std::uint64_t kWarmLaps = 8;
  struct Scenario {
    const char* label;
    std::uint32_t blocks;
    bool lsd;
  };
  const Scenario scenarios[] = {{"LSD", 8, true}, {"DSB", 8, false}, {"MITE+DSB", 9, true}};

  std::vector<PathSamples> out;
  std::uint64_t stream = 0;
  for (const auto& sc : scenarios) {
    SimSetup s = setup;
    s.fe.lsd.enabled = s.fe.lsd.enabled && sc.lsd;
    Core core(s, split_seed(seed, stream++));
    const auto chain = build_block_chain(sc.blocks, 0, {}, 0, kBase, s.fe.dsb);
    core.run_loop(0, chain, kWarmLaps);
    PathSamples ps{sc.label, {}};
    ps.cycles_per_block.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
      const auto t = core.run_loop(0, chain, 1);
      ps.cycles_per_block.push_back(static_cast<double>(t.cycles) / static_cast<double>(t.blocks));
    }
    out.push_back(std::move(ps));
  }
  return out;
}

std::vector<HistogramBin> make_histogram(const std::vector<double>& values, double bin_width,
                                         const std::string& label) {
  if (!(bin_width > 0.0)) throw ValidationError("histogram bin width must be positive");
  if (values.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = std::floor(*lo_it / bin_width) * bin_width;
  const auto nbins = static_cast<std::size_t>(std::floor((*hi_it - lo) / bin_width)) + 1;
  std::vector<HistogramBin> bins(nbins);
  for (std::size_t i = 0; i < nbins; ++i)
    bins[i] = {lo + static_cast<double>(i) * bin_width, lo + static_cast<double>(i + 1) * bin_width,
               0, label};
  for (double v : values) {
    auto k = static_cast<std::size_t>(std::floor((v - lo) / bin_width));
    ++bins[std::min(k, nbins - 1)].count;
  }
  return bins;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::string s = "bin_low,bin_high,count,path_label\n";
  for (const auto& b : bins) s += fmt::format("{},{},{},{}\n", b.low, b.high, b.count, b.path_label);
  return s;
}

std::string ascii_histogram(const std::vector<HistogramBin>& bins, std::size_t width) {
  std::uint64_t peak = 0;
  for (const auto& b : bins) peak = std::max(peak, b.count);
  std::string s;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    const auto bar = peak == 0 ? 0 : static_cast<std::size_t>(b.count * width / peak);
    s += fmt::format("{:>9} [{:8.2f},{:8.2f}) {:>7} {}\n", b.path_label, b.low, b.high, b.count,
                     std::string(std::max<std::size_t>(bar, 1), '#'));
  }
  return s;
}

}  // namespace fesim
