// Copyright 2026 The dpspec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPSPEC_RATIONAL_H_
#define DPSPEC_RATIONAL_H_

#include <gmpxx.h>

#include <cctype>
#include <cstdint>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/string_view.h"

namespace dpspec {

// Exact probabilities and parameters are GMP rationals throughout.
using Rational = mpq_class;
using BigInt = mpz_class;

inline Rational MakeRational(long num, unsigned long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline Rational Pow(const Rational& base, unsigned long exponent) {
  Rational out;
  mpz_pow_ui(out.get_num_mpz_t(), base.get_num_mpz_t(), exponent);
  mpz_pow_ui(out.get_den_mpz_t(), base.get_den_mpz_t(), exponent);
  out.canonicalize();
  return out;
}

inline std::string ToString(const Rational& r) { return r.get_str(); }

// Parses "3/8", "12", "0.05", "-2.5e-3" or "1e-10" into an exact rational.
// Decimal input is read literally, so "0.1" is exactly 1/10.
inline absl::StatusOr<Rational> ParseRational(absl::string_view text) {
  auto bad = [&] {
    return absl::InvalidArgumentError(
        absl::StrCat("not a rational number: '", text, "'"));
  };
  if (text.empty()) return bad();
  if (auto slash = text.find('/'); slash != absl::string_view::npos) {
    std::string num(text.substr(0, slash));
    std::string den(text.substr(slash + 1));
    BigInt n, d;
    if (num.empty() || den.empty() || n.set_str(num, 10) != 0 ||
        d.set_str(den, 10) != 0 || d == 0) {
      return bad();
    }
    Rational r(n, d);
    r.canonicalize();
    return r;
  }
  size_t i = 0;
  bool negative = false;
  if (text[i] == '+' || text[i] == '-') {
    negative = text[i] == '-';
    ++i;
  }
  std::string digits;
  long scale = 0;
  bool seen_point = false;
  bool seen_digit = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) --scale;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) return bad();
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') return bad();
    ++i;
    std::string exponent(text.substr(i));
    if (exponent.empty()) return bad();
    size_t used = 0;
    long e = 0;
    try {
      e = std::stol(exponent, &used);
    } catch (...) {
      return bad();
    }
    if (used != exponent.size() || e > 4096 || e < -4096) return bad();
    scale += e;
  }
  BigInt mantissa(digits, 10);
  if (negative) mantissa = -mantissa;
  BigInt ten_pow;
  mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(
                                             scale < 0 ? -scale : scale));
  Rational r = scale < 0 ? Rational(mantissa, ten_pow)
                         : Rational(mantissa * ten_pow, 1);
  r.canonicalize();
  return r;
}

inline BigInt Factorial(unsigned long k) {
  BigInt out;
  mpz_fac_ui(out.get_mpz_t(), k);
  return out;
}

}  // namespace dpspec

#endif  // DPSPEC_RATIONAL_H_
