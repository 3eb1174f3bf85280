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

// Output premetrics on exact finite distributions and the budget arithmetic
// built on top of them.

#ifndef DPSPEC_DIVERGENCES_H_
#define DPSPEC_DIVERGENCES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dpspec/distribution.h"
#include "dpspec/log_value.h"
#include "dpspec/rational.h"

namespace dpspec {

// Unions at or below this size are searched over all 2^k events.
inline constexpr size_t kEventEnumerationLimit = 20;
// Smallest order on the zCDP grid.
inline constexpr double kZcdpGridStart = 1.0 + 1.0 / (1 << 20);
inline constexpr int kZcdpMinGridPoints = 64;
inline constexpr int kZcdpDefaultGridPoints = 256;

namespace internal {

// Both distributions over their union support, scaled to integer weights on
// a common denominator so that event sums and ratio comparisons stay in
// integer arithmetic.
struct AlignedMasses {
  std::vector<BigInt> p;
  std::vector<BigInt> q;
  BigInt scale;  // the common denominator
};

inline AlignedMasses Align(const OutputDistribution& P,
                           const OutputDistribution& Q,
                           const Rational& extra = Rational(0)) {
  std::vector<std::pair<Rational, Rational>> merged;
  const auto& a = P.atoms();
  const auto& b = Q.atoms();
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      merged.emplace_back(a[i++].second, Rational(0));
    } else if (i == a.size() || b[j].first < a[i].first) {
      merged.emplace_back(Rational(0), b[j++].second);
    } else {
      merged.emplace_back(a[i++].second, b[j++].second);
    }
  }
  AlignedMasses out;
  BigInt scale = extra.get_den();
  for (const auto& [x, y] : merged) {
    mpz_lcm(scale.get_mpz_t(), scale.get_mpz_t(), x.get_den_mpz_t());
    mpz_lcm(scale.get_mpz_t(), scale.get_mpz_t(), y.get_den_mpz_t());
  }
  out.scale = scale;
  out.p.reserve(merged.size());
  out.q.reserve(merged.size());
  for (const auto& [x, y] : merged) {
    out.p.push_back(x.get_num() * (scale / x.get_den()));
    out.q.push_back(y.get_num() * (scale / y.get_den()));
  }
  return out;
}

// Running maximum of num/den over non-negative candidates, starting at 1.
class RatioMax {
 public:
  // Returns false once an infinite ratio has been seen.
  bool Offer(const BigInt& num, const BigInt& den) {
    if (infinite_ || num <= 0) return !infinite_;
    if (den == 0) {
      infinite_ = true;
      return false;
    }
    if (num * den_ > num_ * den) {
      num_ = num;
      den_ = den;
    }
    return true;
  }
  bool infinite() const { return infinite_; }
  LogValue Log() const {
    if (infinite_) return LogValue::Infinity();
    Rational r(num_, den_);
    r.canonicalize();
    return LogValue::LogOf(r);
  }

 private:
  bool infinite_ = false;
  BigInt num_ = 1;
  BigInt den_ = 1;
};

inline double LogOfRational(const Rational& r) {
  long en = 0, ed = 0;
  double n = mpz_get_d_2exp(&en, r.get_num_mpz_t());
  double d = mpz_get_d_2exp(&ed, r.get_den_mpz_t());
  return std::log(n) - std::log(d) +
         static_cast<double>(en - ed) * std::log(2.0);
}

inline absl::Status CheckDelta(const Rational& delta) {
  if (delta < 0 || delta > 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in [0, 1], got ", delta.get_str()));
  }
  return absl::OkStatus();
}

// Up-set scan in one direction: the supremum of (A(S) - c) / B(S) is attained
// on a set of the form {t : a_t / b_t > c'} or {t : a_t / b_t >= c'}, i.e. on
// a prefix of the atoms sorted by decreasing likelihood ratio that ends at a
// tie-group boundary.
inline void ScanUpSets(const std::vector<BigInt>& a, const std::vector<BigInt>& b,
                       const BigInt& c, RatioMax& best) {
  std::vector<size_t> order(a.size());
  std::iota(order.begin(), order.end(), 0);
  auto higher = [&](size_t x, size_t y) { return a[x] * b[y] > a[y] * b[x]; };
  std::stable_sort(order.begin(), order.end(), higher);
  BigInt sum_a = 0, sum_b = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    sum_a += a[order[k]];
    sum_b += b[order[k]];
    bool group_end = k + 1 == order.size() || higher(order[k], order[k + 1]);
    if (!group_end) continue;
    if (!best.Offer(sum_a - c, sum_b)) return;
  }
}

}  // namespace internal

// Pure multiplicative divergence: sup over events of |ln P(S) - ln Q(S)|,
// computed on atoms. +inf when either distribution charges an atom the other
// does not.
inline absl::StatusOr<LogValue> MultDivergence(const OutputDistribution& P,
                                               const OutputDistribution& Q) {
  if (absl::Status s = CheckNormalized(P); !s.ok()) return s;
  if (absl::Status s = CheckNormalized(Q); !s.ok()) return s;
  internal::AlignedMasses m = internal::Align(P, Q);
  internal::RatioMax best;
  for (size_t t = 0; t < m.p.size(); ++t) {
    if (!best.Offer(m.p[t], m.q[t]) || !best.Offer(m.q[t], m.p[t])) break;
  }
  return best.Log();
}

// delta-approximate multiplicative divergence by exhaustive event search.
inline absl::StatusOr<LogValue> DeltaMultDivergenceBruteForce(
    const OutputDistribution& P, const OutputDistribution& Q,
    const Rational& delta) {
  if (absl::Status s = internal::CheckDelta(delta); !s.ok()) return s;
  if (absl::Status s = CheckNormalized(P); !s.ok()) return s;
  if (absl::Status s = CheckNormalized(Q); !s.ok()) return s;
  internal::AlignedMasses m = internal::Align(P, Q, delta);
  const size_t k = m.p.size();
  if (k > 30) {
    return absl::ResourceExhaustedError(
        absl::StrCat("event enumeration over ", k, " atoms is not supported"));
  }
  const BigInt c = delta.get_num() * (m.scale / delta.get_den());
  internal::RatioMax best;
  BigInt sum_p = 0, sum_q = 0;
  uint64_t mask = 0;
  // Gray-code walk: each step toggles exactly one atom in or out of S.
  for (uint64_t step = 1; step < (uint64_t{1} << k); ++step) {
    int bit = __builtin_ctzll(step);
    mask ^= uint64_t{1} << bit;
    if (mask & (uint64_t{1} << bit)) {
      sum_p += m.p[bit];
      sum_q += m.q[bit];
    } else {
      sum_p -= m.p[bit];
      sum_q -= m.q[bit];
    }
    if (!best.Offer(sum_p - c, sum_q) || !best.Offer(sum_q - c, sum_p)) break;
  }
  return best.Log();
}

// Same quantity using only likelihood-ratio up-sets; O(k log k).
inline absl::StatusOr<LogValue> DeltaMultDivergenceUpSet(
    const OutputDistribution& P, const OutputDistribution& Q,
    const Rational& delta) {
  if (absl::Status s = internal::CheckDelta(delta); !s.ok()) return s;
  if (absl::Status s = CheckNormalized(P); !s.ok()) return s;
  if (absl::Status s = CheckNormalized(Q); !s.ok()) return s;
  internal::AlignedMasses m = internal::Align(P, Q, delta);
  const BigInt c = delta.get_num() * (m.scale / delta.get_den());
  internal::RatioMax best;
  internal::ScanUpSets(m.p, m.q, c, best);
  if (!best.infinite()) internal::ScanUpSets(m.q, m.p, c, best);
  return best.Log();
}

inline absl::StatusOr<LogValue> DeltaMultDivergence(
    const OutputDistribution& P, const OutputDistribution& Q,
    const Rational& delta) {
  if (internal::Align(P, Q).p.size() <= kEventEnumerationLimit) {
    return DeltaMultDivergenceBruteForce(P, Q, delta);
  }
  return DeltaMultDivergenceUpSet(P, Q, delta);
}

// Renyi divergence of order alpha > 1, D_alpha(P || Q).
inline absl::StatusOr<double> RenyiDivergence(const OutputDistribution& P,
                                              const OutputDistribution& Q,
                                              const Rational& alpha) {
  if (alpha <= 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("Renyi order must exceed 1, got ", alpha.get_str()));
  }
  if (absl::Status s = CheckNormalized(P); !s.ok()) return s;
  if (absl::Status s = CheckNormalized(Q); !s.ok()) return s;
  const double am1 = Rational(alpha - 1).get_d();
  std::vector<double> weight, exponent;
  for (const auto& [key, p] : P.atoms()) {
    Rational q = Q.MassOf(key);
    if (q == 0) return std::numeric_limits<double>::infinity();
    weight.push_back(p.get_d());
    exponent.push_back(am1 * internal::LogOfRational(Rational(p / q)));
  }
  double top = *std::max_element(exponent.begin(), exponent.end());
  double value;
  if (top < 50.0) {
    // sum_t p (p/q)^(alpha-1) - 1 == sum_t p * expm1(.), exact near alpha = 1.
    double excess = 0.0;
    for (size_t t = 0; t < weight.size(); ++t) {
      excess += weight[t] * std::expm1(exponent[t]);
    }
    value = std::log1p(excess) / am1;
  } else {
    double acc = 0.0;
    for (size_t t = 0; t < weight.size(); ++t) {
      acc += weight[t] * std::exp(exponent[t] - top);
    }
    value = (top + std::log(acc)) / am1;
  }
  return std::max(value, 0.0);
}

// Geometric grid of orders from just above 1 to alpha_max, inclusive.
inline absl::StatusOr<std::vector<double>> ZcdpGrid(double alpha_max,
                                                    int points) {
  if (points < kZcdpMinGridPoints) {
    return absl::InvalidArgumentError(absl::StrCat(
        "zCDP grid needs at least ", kZcdpMinGridPoints, " points"));
  }
  if (!(alpha_max > kZcdpGridStart)) {
    return absl::InvalidArgumentError("alpha_max must exceed 1 + 2^-20");
  }
  std::vector<double> grid(points);
  const double log_span = std::log(alpha_max / kZcdpGridStart);
  for (int i = 0; i < points; ++i) {
    grid[i] = kZcdpGridStart *
              std::exp(log_span * static_cast<double>(i) / (points - 1));
  }
  grid.back() = alpha_max;
  return grid;
}

// Normalized Renyi quantity sup_alpha D_alpha / alpha, symmetrized, taken over
// the grid above. A lower bound on the true supremum over (1, alpha_max].
inline absl::StatusOr<double> ZcdpParameter(
    const OutputDistribution& P, const OutputDistribution& Q,
    const Rational& alpha_max, int grid_points = kZcdpDefaultGridPoints) {
  absl::StatusOr<std::vector<double>> grid =
      ZcdpGrid(alpha_max.get_d(), grid_points);
  if (!grid.ok()) return grid.status();
  double best = 0.0;
  for (double alpha : *grid) {
    Rational a(alpha);  // exact binary value of the grid point
    for (int dir = 0; dir < 2; ++dir) {
      absl::StatusOr<double> d =
          dir == 0 ? RenyiDivergence(P, Q, a) : RenyiDivergence(Q, P, a);
      if (!d.ok()) return d.status();
      if (std::isinf(*d)) return *d;
      best = std::max(best, *d / alpha);
    }
  }
  return best;
}

// Closed-form budget of the permutation swapping algorithm with swap rate p
// and largest matching group b, with o = p / (1 - p):
//   ln(b + 1) - ln o                     for 0 < p <= 1/2
//   max{ ln o, ln(b + 1) - ln o }        for 1/2 < p < 1
inline absl::StatusOr<LogValue> PsaBudgetBound(const Rational& p, uint64_t b) {
  if (p <= 0 || p >= 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("swap rate must lie in (0, 1), got ", p.get_str()));
  }
  if (b < 1) {
    return absl::InvalidArgumentError("largest stratum size must be >= 1");
  }
  Rational odds = p / (1 - p);
  Rational b_plus_1(BigInt(std::to_string(b)) + 1, 1);
  Rational ratio = b_plus_1 / odds;
  if (p > Rational(1, 2) && odds > ratio) ratio = odds;
  return LogValue::LogOf(ratio);
}

// epsilon = rho + 2 sqrt(rho ln(1/delta)).
inline absl::StatusOr<double> ZcdpToApproxDp(double rho, double delta) {
  if (!(rho > 0)) return absl::InvalidArgumentError("rho must be positive");
  if (!(delta > 0 && delta <= 1)) {
    return absl::InvalidArgumentError("delta must lie in (0, 1]");
  }
  return rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta));
}

inline LogValue ComposePure(const LogValue& a, const LogValue& b) {
  return a.Plus(b);
}

inline double ComposeZcdp(double rho1, double rho2) { return rho1 + rho2; }

// Output premetric (building block 4).
struct Multiplicative {};
struct DeltaMultiplicative {
  Rational delta;
};
struct RenyiOrder {
  Rational alpha;
};
struct NormalizedRenyi {
  Rational alpha_max;
  int grid_points = kZcdpDefaultGridPoints;
};
using OutputPremetric =
    std::variant<Multiplicative, DeltaMultiplicative, RenyiOrder,
                 NormalizedRenyi>;

inline std::string PremetricName(const OutputPremetric& premetric) {
  struct Visitor {
    std::string operator()(const Multiplicative&) const { return "mult"; }
    std::string operator()(const DeltaMultiplicative& d) const {
      return absl::StrCat("delta-mult(delta=", d.delta.get_str(), ")");
    }
    std::string operator()(const RenyiOrder& r) const {
      return absl::StrCat("renyi(alpha=", r.alpha.get_str(), ")");
    }
    std::string operator()(const NormalizedRenyi& z) const {
      return absl::StrCat("zcdp(alpha_max=", z.alpha_max.get_str(), ")");
    }
  };
  return std::visit(Visitor{}, premetric);
}

inline absl::StatusOr<LogValue> EvaluatePremetric(
    const OutputPremetric& premetric, const OutputDistribution& P,
    const OutputDistribution& Q) {
  if (const auto* d = std::get_if<DeltaMultiplicative>(&premetric)) {
    return DeltaMultDivergence(P, Q, d->delta);
  }
  if (const auto* r = std::get_if<RenyiOrder>(&premetric)) {
    absl::StatusOr<double> pq = RenyiDivergence(P, Q, r->alpha);
    if (!pq.ok()) return pq.status();
    absl::StatusOr<double> qp = RenyiDivergence(Q, P, r->alpha);
    if (!qp.ok()) return qp.status();
    return LogValue::Approx(std::max(*pq, *qp));
  }
  if (const auto* z = std::get_if<NormalizedRenyi>(&premetric)) {
    absl::StatusOr<double> v = ZcdpParameter(P, Q, z->alpha_max, z->grid_points);
    if (!v.ok()) return v.status();
    return LogValue::Approx(*v);
  }
  return MultDivergence(P, Q);
}

}  // namespace dpspec

#endif  // DPSPEC_DIVERGENCES_H_
