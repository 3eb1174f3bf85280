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

#ifndef DPSPEC_LOG_VALUE_H_
#define DPSPEC_LOG_VALUE_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpspec/rational.h"

namespace dpspec {

// Absolute tolerance used whenever a comparison cannot be done exactly.
inline constexpr double kComparisonTolerance = 1e-9;

// An extended non-negative real used for budgets and divergences.
//
// Most quantities produced here are logarithms of rationals divided by a
// positive integer (a divergence over a Hamming distance, or a closed-form
// bound), so they are kept symbolically as ln(ratio) / divisor. Values that
// are not of that form (Renyi-based quantities) are carried as doubles.
class LogValue {
 public:
  LogValue() : kind_(Kind::kExact), ratio_(1), divisor_(1) {}

  static LogValue Zero() { return LogValue(); }
  static LogValue Infinity() {
    LogValue v;
    v.kind_ = Kind::kInfinite;
    return v;
  }
  // ln(ratio) / divisor. `ratio` must be positive and `divisor` nonzero.
  static LogValue LogOf(const Rational& ratio, uint64_t divisor = 1) {
    LogValue v;
    v.ratio_ = ratio;
    v.divisor_ = divisor;
    if (v.ratio_ == 1) v.divisor_ = 1;
    return v;
  }
  static LogValue Approx(double value) {
    if (std::isinf(value)) return Infinity();
    LogValue v;
    v.kind_ = Kind::kApprox;
    v.approx_ = value;
    return v;
  }

  bool is_infinite() const { return kind_ == Kind::kInfinite; }
  bool is_exact() const { return kind_ == Kind::kExact; }
  bool is_zero() const {
    return (kind_ == Kind::kExact && ratio_ == 1) ||
           (kind_ == Kind::kApprox && approx_ == 0.0);
  }
  const Rational& ratio() const { return ratio_; }
  uint64_t divisor() const { return divisor_; }

  double ToDouble() const {
    switch (kind_) {
      case Kind::kInfinite:
        return std::numeric_limits<double>::infinity();
      case Kind::kApprox:
        return approx_;
      case Kind::kExact:
        break;
    }
    // ln(a/b) computed from the operands so huge ratios don't overflow.
    long exp_num = 0, exp_den = 0;
    double num = mpz_get_d_2exp(&exp_num, ratio_.get_num_mpz_t());
    double den = mpz_get_d_2exp(&exp_den, ratio_.get_den_mpz_t());
    double ln = std::log(num) - std::log(den) +
                static_cast<double>(exp_num - exp_den) * std::log(2.0);
    return ln / static_cast<double>(divisor_);
  }

  LogValue DividedBy(uint64_t k) const {
    LogValue v = *this;
    if (kind_ == Kind::kExact && ratio_ != 1) v.divisor_ *= k;
    if (kind_ == Kind::kApprox) v.approx_ /= static_cast<double>(k);
    return v;
  }
  LogValue MultipliedBy(uint64_t k) const {
    if (kind_ == Kind::kApprox) return Approx(approx_ * static_cast<double>(k));
    if (kind_ == Kind::kInfinite) return *this;
    // ln(r)/d * k == ln(r^k)/d; reduce k against d first.
    BigInt g;
    BigInt dz(std::to_string(divisor_)), kz(std::to_string(k));
    mpz_gcd(g.get_mpz_t(), dz.get_mpz_t(), kz.get_mpz_t());
    uint64_t gu = g.get_ui();
    return LogOf(Pow(ratio_, k / gu), divisor_ / gu);
  }

  // ln(a)/d1 + ln(b)/d2 == ln(a^d2 * b^d1) / (d1 * d2); +inf absorbs.
  LogValue Plus(const LogValue& other) const {
    if (is_infinite() || other.is_infinite()) return Infinity();
    if (is_exact() && other.is_exact()) {
      if (divisor_ == other.divisor_) {
        return LogOf(ratio_ * other.ratio_, divisor_);
      }
      return LogOf(Pow(ratio_, other.divisor_) * Pow(other.ratio_, divisor_),
                   divisor_ * other.divisor_);
    }
    return Approx(ToDouble() + other.ToDouble());
  }

  // "ln(7)/2", "0", "inf", or a 10-significant-digit decimal when inexact.
  std::string ToString() const {
    switch (kind_) {
      case Kind::kInfinite:
        return "inf";
      case Kind::kApprox:
        return absl::StrFormat("%.10g", approx_);
      case Kind::kExact:
        break;
    }
    if (ratio_ == 1) return "0";
    std::string out = absl::StrCat("ln(", ratio_.get_str(), ")");
    if (divisor_ != 1) absl::StrAppend(&out, "/", divisor_);
    return out;
  }

  std::string ToDecimalString() const {
    if (is_infinite()) return "inf";
    return absl::StrFormat("%.10g", ToDouble());
  }

  // Three-way comparison. Exact operands compare exactly through
  // a^d2 <=> b^d1; anything else compares as doubles within `tolerance`.
  friend int Compare(const LogValue& a, const LogValue& b,
                     double tolerance = kComparisonTolerance) {
    if (a.is_infinite() || b.is_infinite()) {
      if (a.is_infinite() && b.is_infinite()) return 0;
      return a.is_infinite() ? 1 : -1;
    }
    constexpr uint64_t kMaxExactExponent = 1 << 14;
    if (a.is_exact() && b.is_exact() && a.divisor_ <= kMaxExactExponent &&
        b.divisor_ <= kMaxExactExponent) {
      Rational lhs = Pow(a.ratio_, b.divisor_);
      Rational rhs = Pow(b.ratio_, a.divisor_);
      int c = cmp(lhs, rhs);
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    double x = a.ToDouble(), y = b.ToDouble();
    if (std::abs(x - y) <= tolerance) return 0;
    return x < y ? -1 : 1;
  }

  friend bool operator==(const LogValue& a, const LogValue& b) {
    return Compare(a, b) == 0;
  }
  friend bool operator<(const LogValue& a, const LogValue& b) {
    return Compare(a, b) < 0;
  }
  friend bool operator<=(const LogValue& a, const LogValue& b) {
    return Compare(a, b) <= 0;
  }
  friend bool operator>(const LogValue& a, const LogValue& b) {
    return Compare(a, b) > 0;
  }
  friend bool operator>=(const LogValue& a, const LogValue& b) {
    return Compare(a, b) >= 0;
  }

 private:
  enum class Kind { kExact, kApprox, kInfinite };

  Kind kind_;
  Rational ratio_;
  uint64_t divisor_ = 1;
  double approx_ = 0.0;
};

}  // namespace dpspec

#endif  // DPSPEC_LOG_VALUE_H_
