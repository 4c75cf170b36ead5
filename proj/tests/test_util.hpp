// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <limits>

namespace testutil {

// Monotone integer key over doubles (radix-sort trick): unsigned distance
// between keys counts representable values between a and b.
inline std::uint64_t float_key(double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, sizeof(u));
  if (u & 0x8000000000000000ULL)
    u = ~u;
  else
    u |= 0x8000000000000000ULL;
  return u;
}

inline std::uint64_t ulps_between(double a, double b) {
  const std::uint64_t ka = float_key(a), kb = float_key(b);
  return ka > kb ? ka - kb : kb - ka;
}

}  // namespace testutil
