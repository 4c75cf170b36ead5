// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "lrwsde/sde.hpp"

namespace lrwsde {

// Binary floating-point format described by its exponent and explicit
// significand widths. extended_range selects fn-style semantics where the
// top exponent is finite except for a reserved NaN pattern (as in e4m3);
// otherwise the top exponent is inf/NaN as in the IEEE interchange formats.
struct PrecisionFormat {
  int exponent_bits = 0;
  int mantissa_bits = 0;
  std::string name;
  bool extended_range = false;

  int bias() const { return (1 << (exponent_bits - 1)) - 1; }
  double max_finite() const;

  static PrecisionFormat binary32();  // fp32: (8, 23)
  static PrecisionFormat binary16();  // fp16: (5, 10)
  static PrecisionFormat e4m3();      // fp8:  (4, 3), extended range
  // Accepts fp8 | fp16 | fp32 and the names above.
  static PrecisionFormat from_name(std::string_view name);
};

// Round-to-nearest-even into the format's representable set. Subnormals are
// kept; magnitudes that round past the largest finite value saturate to
// +-max_finite. Non-finite input raises.
double quantise_value(double v, const PrecisionFormat& fmt);

// Wraps drift and diffusion so every output coordinate passes through
// quantise_value. Scheme-internal arithmetic stays at working precision.
SdeSpec quantise_spec(const SdeSpec& spec, const PrecisionFormat& fmt);

}  // namespace lrwsde
