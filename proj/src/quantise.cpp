// SPDX-License-Identifier: Apache-2.0
#include "lrwsde/quantise.hpp"

#include <cmath>
#include <stdexcept>

namespace lrwsde {

double PrecisionFormat::max_finite() const {
  const int m = mantissa_bits;
  if (extended_range) {
    // top exponent is finite; its all-ones significand is the NaN pattern
    const int emax = ((1 << exponent_bits) - 1) - bias();
    return std::ldexp(2.0 - 2.0 * std::ldexp(1.0, -m), emax);
  }
  const int emax = bias();
  return std::ldexp(2.0 - std::ldexp(1.0, -m), emax);
}

PrecisionFormat PrecisionFormat::binary32() { return {8, 23, "fp32", false}; }
PrecisionFormat PrecisionFormat::binary16() { return {5, 10, "fp16", false}; }
PrecisionFormat PrecisionFormat::e4m3() { return {4, 3, "fp8", true}; }

PrecisionFormat PrecisionFormat::from_name(std::string_view name) {
  if (name == "fp32" || name == "binary32") return binary32();
  if (name == "fp16" || name == "binary16") return binary16();
  if (name == "fp8" || name == "e4m3") return e4m3();
  throw std::invalid_argument("unknown precision format: " +
                              std::string(name));
}

double quantise_value(double v, const PrecisionFormat& fmt) {
  if (!std::isfinite(v))
    throw std::domain_error("quantise_value: non-finite input");
  if (v == 0.0) return v;  // keeps the sign of zero
  const int emin = 1 - fmt.bias();  // smallest normal exponent
  const double av = std::fabs(v);
  int e = 0;
  (void)std::frexp(av, &e);
  const int exp = e - 1;  // av = m * 2^exp with m in [1, 2)
  // quantum of the target format at this magnitude (subnormal-aware)
  const int qexp = std::max(exp, emin) - fmt.mantissa_bits;
  // both scalings are exact; nearbyint gives ties-to-even under the
  // default rounding mode
  const double rounded = std::nearbyint(std::ldexp(av, -qexp));
  double out = std::ldexp(rounded, qexp);
  const double mf = fmt.max_finite();
  if (out > mf) out = mf;  // saturating overflow
  return std::copysign(out, v);
}

SdeSpec quantise_spec(const SdeSpec& spec, const PrecisionFormat& fmt) {
  auto wrap = [fmt](const FieldFn& inner) {
    return FieldFn([inner, fmt](const Vector& x, double t, Vector& out) {
      inner(x, t, out);
      for (Index i = 0; i < out.size(); ++i)
        out[i] = quantise_value(out[i], fmt);
    });
  };
  SdeSpec q;
  q.dim = spec.dim;
  q.drift = wrap(spec.drift);
  q.diffusion = wrap(spec.diffusion);
  return q;
}

}  // namespace lrwsde
