#pragma once
// Independent re-derivations used as test oracles. Written from the
// definitions, deliberately without sharing code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

inline std::uint32_t dsb_set(std::uint64_t a) { return static_cast<std::uint32_t>((a / 32) % 32); }
inline std::uint32_t l1i_set(std::uint64_t a) { return static_cast<std::uint32_t>((a / 64) % 64); }

inline std::uint32_t dsb_set_partitioned(std::uint64_t a, int thread) {
  return static_cast<std::uint32_t>(thread * 16 + (a / 32) % 16);
}

// Plain exponential recursion.
inline std::size_t levenshtein(const std::string& a, const std::string& b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::string a1 = a.substr(1), b1 = b.substr(1);
  if (a[0] == b[0]) return levenshtein(a1, b1);
  return 1 + std::min({levenshtein(a1, b), levenshtein(a, b1), levenshtein(a1, b1)});
}

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (long double)(a[i] - b[i]) * (a[i] - b[i]);
  return static_cast<double>(std::sqrt(s));
}

// Sample-and-hold of a step trace at the last refresh boundary at or before t.
struct Step {
  double t;
  double value;
};
inline double rapl_replay(const std::vector<Step>& steps, double interval, double t) {
  const double boundary = static_cast<double>(static_cast<long long>(t / interval + 1e-9)) * interval;
  double v = 0.0;
  for (const auto& s : steps)
    if (s.t <= boundary + 1e-15) v = s.value;
  return v;
}

}  // namespace oracle
