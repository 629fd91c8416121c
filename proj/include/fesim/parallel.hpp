#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace fesim {

/// Serial keeps a plain loop around as the reference the OpenMP path is
/// checked against.
enum class Exec { serial, parallel };

/// Calls fn(i) for i in [0, n). Iterations must only touch state owned by
/// index i. The first exception (by index) is rethrown after the loop.
template <class Fn>
void for_each_index(Exec exec, std::size_t n, Fn&& fn) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fesim
