#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace sct {

/// Integer time in ticks of the system-wide resolution.
using Tick = std::int64_t;

// Floor/ceil division that behave for negative numerators.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) == (b < 0))) ++q;
  return q;
}

inline std::int64_t checked_lcm(std::int64_t a, std::int64_t b) {
  if (a <= 0 || b <= 0) throw std::invalid_argument("lcm of non-positive value");
  const std::int64_t g = std::gcd(a, b);
  const __int128 r = static_cast<__int128>(a / g) * b;
  if (r > static_cast<__int128>(INT64_MAX / 4))
    throw std::overflow_error("hyperperiod overflows the tick range");
  return static_cast<std::int64_t>(r);
}

}  // namespace sct
