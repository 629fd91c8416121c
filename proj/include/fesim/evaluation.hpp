#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fesim/channel.hpp"
#include "fesim/parallel.hpp"

namespace fesim {

/// Levenshtein distance with unit costs (Wagner-Fischer, two rows).
std::size_t edit_distance(std::string_view a, std::string_view b);
std::size_t edit_distance(const BitMessage& a, const BitMessage& b);

/// Edit distance over the sent length; 0 for an empty message.
double error_rate(const BitMessage& sent, const BitMessage& received);

/// Kbit/s. Throws ValidationError unless elapsed_s > 0.
double transmission_rate(std::uint64_t bits_sent, double elapsed_s);

BitMessage gen_message(BitMessage::Pattern pattern, std::size_t length, std::uint64_t seed = 0);

struct ChannelReport {
  ChannelParams params;
  BitMessage::Pattern pattern = BitMessage::Pattern::alternating;
  std::size_t bits_sent = 0;
  std::size_t bits_received = 0;
  std::size_t edit_distance = 0;
  double error_rate = 0.0;
  double tr_rate_kbps = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t l1i_misses = 0;

  static std::string csv_header();
  std::string csv_row() const;
};

/// Builds a channel, calibrates it and sends `message`.
ChannelReport run_channel(const ChannelParams& params, const BitMessage& message,
                          const SimSetup& setup, std::uint64_t seed);

struct SweepResult {
  std::vector<ChannelReport> reports;  // ascending d
  struct Skip {
    std::uint32_t d = 0;
    std::string reason;
  };
  std::vector<Skip> skipped;
};

/// One transmission per d in [d_min, d_max]. Point d runs on
/// split_seed(seed, d), so results do not depend on execution order.
SweepResult sweep_d(const ChannelParams& base, std::uint32_t d_min, std::uint32_t d_max,
                    const BitMessage& message, const SimSetup& setup, std::uint64_t seed,
                    Exec exec = Exec::parallel);

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::uint64_t count = 0;
  std::string path_label;

  friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

struct PathSamples {
  std::string label;
  std::vector<double> cycles_per_block;
};

/// Per-lap mean block cost for three steady-state loops: an 8-block loop
/// streaming from the LSD, the same loop with the LSD off, and a 9-block
/// same-set loop that thrashes the DSB set and decodes through MITE.
std::vector<PathSamples> sample_path_timing(const SimSetup& setup, std::size_t samples,
                                            std::uint64_t seed);

/// Fixed-width bins aligned to multiples of bin_width, covering
/// [min, max] of `values`. Empty input gives no bins.
std::vector<HistogramBin> make_histogram(const std::vector<double>& values, double bin_width,
                                         const std::string& label);

std::string histogram_csv(const std::vector<HistogramBin>& bins);
std::string ascii_histogram(const std::vector<HistogramBin>& bins, std::size_t width = 50);

}  // namespace fesim
