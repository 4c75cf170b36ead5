// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace lrwsde {

// Seedable uniform generator: xoshiro256++ with SplitMix64 state expansion.
//
// Stream derivation: stream k of seed s seeds the SplitMix64 expander with
// s XOR finalizer(k), where finalizer is one SplitMix64 output round. This
// gives independent generators for (seed, replica-index) pairs without
// jump-ahead bookkeeping. Sequences are reproducible within this library;
// no cross-language bit-exactness is promised.
//
// The stream also counts uniform and normal draws so tests can pin down
// which schemes touch the Gaussian sampling path.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform draw on [0, 1) with 53 random bits.
  double uniform();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t uniform_draws() const { return n_uniform_; }
  std::uint64_t normal_draws() const { return n_normal_; }

 private:
  friend double standard_normal(RngStream&);

  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t n_uniform_ = 0;
  std::uint64_t n_normal_ = 0;
};

// One N(0,1) draw via the basic Box-Muller transform:
//   z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2).
// Consumes exactly two uniforms per draw and increments the stream's
// normal-draw counter.
double standard_normal(RngStream& rng);

}  // namespace lrwsde
