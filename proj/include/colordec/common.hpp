/* Copyright 2026 The colordec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef COLORDEC_COMMON_HPP_
#define COLORDEC_COMMON_HPP_

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace colordec {

// Base class of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define COLORDEC_DEFINE_ERROR(Name)            \
  class Name : public Error {                  \
   public:                                     \
    using Error::Error;                        \
  }

COLORDEC_DEFINE_ERROR(MalformedArpa);
COLORDEC_DEFINE_ERROR(DuplicateColoredToken);
COLORDEC_DEFINE_ERROR(UnknownChar);
COLORDEC_DEFINE_ERROR(InvalidWordChar);
COLORDEC_DEFINE_ERROR(InvalidConfig);
COLORDEC_DEFINE_ERROR(EmptyCalibration);
COLORDEC_DEFINE_ERROR(MissingModel);
COLORDEC_DEFINE_ERROR(MissingBinTable);
COLORDEC_DEFINE_ERROR(ShapeMismatch);
COLORDEC_DEFINE_ERROR(LengthMismatch);
COLORDEC_DEFINE_ERROR(LabelTooLong);
COLORDEC_DEFINE_ERROR(InstanceTooLarge);
COLORDEC_DEFINE_ERROR(MalformedManifest);
COLORDEC_DEFINE_ERROR(MissingLogitsFile);
COLORDEC_DEFINE_ERROR(MalformedLogits);
COLORDEC_DEFINE_ERROR(EmptyLexicon);
COLORDEC_DEFINE_ERROR(IoFailure);

#undef COLORDEC_DEFINE_ERROR

// Index of the lexicon / language model a word was drawn from.
struct ColorId {
  std::uint32_t value = 0;

  constexpr ColorId() = default;
  constexpr explicit ColorId(std::uint32_t v) : value(v) {}
  constexpr auto operator<=>(const ColorId&) const = default;
};

// A character of the colored alphabet: base character index plus color.
// Two colored characters with the same base index share an acoustic column.
struct ColoredChar {
  std::uint32_t index = 0;
  ColorId color;

  constexpr auto operator<=>(const ColoredChar&) const = default;
};

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();
inline constexpr double kLn10 = 2.302585092994045684017991454684364208;

// All scores in the library are log10. Acoustic inputs arrive as natural log.
inline double ln_to_log10(double ln_value) { return ln_value / kLn10; }
inline double log10_to_ln(double log10_value) { return log10_value * kLn10; }

// log10(10^a + 10^b) without leaving the log domain.
inline double log10_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::pow(10.0, lo - hi)) / kLn10;
}

inline double log10_sum(std::span<const double> values) {
  double hi = kLogZero;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kLogZero) return kLogZero;
  double acc = 0.0;
  for (double v : values) acc += std::pow(10.0, v - hi);
  return hi + std::log10(acc);
}

// log10 of a linear probability, mapping 0 to -inf.
inline double safe_log10(double p) { return p > 0.0 ? std::log10(p) : kLogZero; }

}  // namespace colordec

#endif  // COLORDEC_COMMON_HPP_
