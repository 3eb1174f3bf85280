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

// Data release mechanisms. Each one has a seeded sampler and, for small
// instances, an exact output distribution.

#ifndef DPSPEC_MECHANISMS_H_
#define DPSPEC_MECHANISMS_H_

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dpspec/distribution.h"
#include "dpspec/rational.h"
#include "dpspec/rng.h"
#include "dpspec/schema.h"
#include "dpspec/strata.h"

namespace dpspec {

struct EnumerationCaps {
  // Largest stratum the exact swapping oracle will enumerate (7! * 2^7).
  size_t max_stratum_size = 7;
  // Largest dataset the cross-stratum oracle will enumerate (3^n patterns).
  size_t max_pooled_records = 7;
  size_t max_rr_records = 16;
  // Swapping-value assignments scanned when enumerating a universe.
  uint64_t max_universe_candidates = 1'000'000;
  // Candidate record multisets scanned by reconstruction.
  uint64_t max_multisets = 10'000'000;
};

// Permutation swapping: select each record with probability p, then permute
// the swapping values of the selected records uniformly within each stratum.
struct Psa {
  Rational p;
};
// Probabilistic unit matching: like Psa, but a selected record joins a single
// cross-stratum pool with probability alpha_cross.
struct Pum {
  Rational p;
  Rational alpha_cross;
};
// Flips the single binary variable of every record with probability flip.
struct RandomizedResponse {
  Rational flip;
};
struct ConstantMechanism {
  Dataset value;
};
struct IdentityMechanism {};

using MechanismDescriptor = std::variant<Psa, Pum, RandomizedResponse,
                                         ConstantMechanism, IdentityMechanism>;

inline std::string MechanismName(const MechanismDescriptor& m) {
  struct Visitor {
    std::string operator()(const Psa& psa) const {
      return absl::StrCat("psa(p=", psa.p.get_str(), ")");
    }
    std::string operator()(const Pum& pum) const {
      return absl::StrCat("pum(p=", pum.p.get_str(),
                          ",alpha_cross=", pum.alpha_cross.get_str(), ")");
    }
    std::string operator()(const RandomizedResponse& rr) const {
      return absl::StrCat("rr(flip=", rr.flip.get_str(), ")");
    }
    std::string operator()(const ConstantMechanism&) const {
      return "constant";
    }
    std::string operator()(const IdentityMechanism&) const {
      return "identity";
    }
  };
  return std::visit(Visitor{}, m);
}

// One stratum's draw: `permutation[i]` indexes the selected position whose
// swapping values move to `selected[i]`.
struct StratumSwap {
  Record key;
  std::vector<size_t> positions;
  std::vector<size_t> selected;
  std::vector<size_t> permutation;
};

struct SwapPlan {
  std::vector<StratumSwap> strata;
};

namespace internal {

inline absl::Status CheckProbability(const Rational& p, absl::string_view what) {
  if (p < 0 || p > 1) {
    return absl::InvalidArgumentError(
        absl::StrCat(what, " must lie in [0, 1], got ", p.get_str()));
  }
  return absl::OkStatus();
}

inline absl::Status CheckSwappable(const Schema& schema) {
  if (schema.swapping_indices().empty()) {
    return absl::FailedPreconditionError(
        "swapping requires at least one swapping variable");
  }
  return absl::OkStatus();
}

inline std::vector<Record> SwapTuples(const Dataset& x) {
  std::vector<Record> tuples(x.size());
  for (size_t i = 0; i < x.size(); ++i) tuples[i] = SwapTuple(x, i);
  return tuples;
}

inline std::vector<Record> WithSwapTuples(const Dataset& x,
                                          const std::vector<Record>& tuples) {
  std::vector<Record> records = x.records();
  const auto& swap_vars = x.schema().swapping_indices();
  for (size_t i = 0; i < records.size(); ++i) {
    for (size_t k = 0; k < swap_vars.size(); ++k) {
      records[i][swap_vars[k]] = tuples[i][k];
    }
  }
  return records;
}

// Enumerates every combination of one permutation per pool and adds
// `weight / prod(|pool|!)` to the resulting swap-tuple assignment.
class PoolPermuter {
 public:
  PoolPermuter(const std::vector<Record>& base,
               const std::vector<std::vector<size_t>>& pools,
               std::map<std::vector<Record>, Rational>& out)
      : base_(base), pools_(pools), out_(out), perms_(pools.size()) {}

  void Run(const Rational& weight) {
    BigInt denom = 1;
    for (const auto& pool : pools_) denom *= Factorial(pool.size());
    per_outcome_ = weight / Rational(denom);
    for (size_t k = 0; k < pools_.size(); ++k) {
      perms_[k].resize(pools_[k].size());
      std::iota(perms_[k].begin(), perms_[k].end(), 0);
    }
    Recurse(0);
  }

 private:
  void Recurse(size_t pool) {
    if (pool == pools_.size()) {
      std::vector<Record> result = base_;
      for (size_t k = 0; k < pools_.size(); ++k) {
        const auto& positions = pools_[k];
        for (size_t i = 0; i < positions.size(); ++i) {
          result[positions[i]] = base_[positions[perms_[k][i]]];
        }
      }
      out_[std::move(result)] += per_outcome_;
      return;
    }
    std::vector<size_t>& perm = perms_[pool];
    std::sort(perm.begin(), perm.end());
    do {
      Recurse(pool + 1);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  const std::vector<Record>& base_;
  const std::vector<std::vector<size_t>>& pools_;
  std::map<std::vector<Record>, Rational>& out_;
  std::vector<std::vector<size_t>> perms_;
  Rational per_outcome_;
};

inline OutputDistribution ToDatasetDistribution(
    const Dataset& x, const std::map<std::vector<Record>, Rational>& tuples) {
  std::map<std::string, Rational> masses;
  for (const auto& [assignment, mass] : tuples) {
    masses[Dataset::EncodeRecords(WithSwapTuples(x, assignment))] += mass;
  }
  return OutputDistribution::FromMap(std::move(masses));
}

}  // namespace internal

inline absl::StatusOr<SwapPlan> DrawSwapPlan(const Dataset& x,
                                             const Rational& p, uint64_t seed) {
  if (absl::Status s = internal::CheckProbability(p, "swap rate"); !s.ok()) {
    return s;
  }
  if (absl::Status s = internal::CheckSwappable(x.schema()); !s.ok()) return s;
  SwapPlan plan;
  for (const auto& [key, positions] : Stratify(x)) {
    RandomStream stream =
        RandomStream::Derive(seed, StratumLabel(x.schema(), key));
    StratumSwap s{key, positions, {}, {}};
    for (size_t pos : positions) {
      if (stream.Bernoulli(p)) s.selected.push_back(pos);
    }
    s.permutation.resize(s.selected.size());
    std::iota(s.permutation.begin(), s.permutation.end(), 0);
    stream.Shuffle(s.permutation);
    plan.strata.push_back(std::move(s));
  }
  return plan;
}

inline Dataset ApplySwapPlan(const Dataset& x, const SwapPlan& plan) {
  const std::vector<Record> before = internal::SwapTuples(x);
  std::vector<Record> after = before;
  for (const StratumSwap& s : plan.strata) {
    for (size_t i = 0; i < s.selected.size(); ++i) {
      after[s.selected[i]] = before[s.selected[s.permutation[i]]];
    }
  }
  return x.WithRecords(internal::WithSwapTuples(x, after));
}

inline absl::StatusOr<Dataset> PsaSample(const Dataset& x, const Rational& p,
                                         uint64_t seed) {
  absl::StatusOr<SwapPlan> plan = DrawSwapPlan(x, p, seed);
  if (!plan.ok()) return plan.status();
  return ApplySwapPlan(x, *plan);
}

// Exact output distribution of Psa. Strata are independent, so each one is
// enumerated over all selections and permutations and the results combined
// as a product.
inline absl::StatusOr<OutputDistribution> PsaExactDistribution(
    const Dataset& x, const Rational& p, const EnumerationCaps& caps = {}) {
  if (absl::Status s = internal::CheckProbability(p, "swap rate"); !s.ok()) {
    return s;
  }
  if (absl::Status s = internal::CheckSwappable(x.schema()); !s.ok()) return s;
  const Strata strata = Stratify(x);
  for (const auto& [key, positions] : strata) {
    if (positions.size() > caps.max_stratum_size) {
      return absl::ResourceExhaustedError(absl::StrCat(
          StratumLabel(x.schema(), key), " has ", positions.size(),
          " records; exact enumeration is capped at ", caps.max_stratum_size));
    }
  }
  const std::vector<Record> base = internal::SwapTuples(x);
  const Rational q = 1 - p;
  // Joint assignment over all positions, built stratum by stratum.
  std::map<std::vector<Record>, Rational> joint{{base, Rational(1)}};
  for (const auto& [key, positions] : strata) {
    const size_t m = positions.size();
    std::vector<Record> local_base(m);
    for (size_t i = 0; i < m; ++i) local_base[i] = base[positions[i]];
    std::map<std::vector<Record>, Rational> local;
    for (uint64_t mask = 0; mask < (uint64_t{1} << m); ++mask) {
      std::vector<size_t> pool;
      for (size_t i = 0; i < m; ++i) {
        if (mask & (uint64_t{1} << i)) pool.push_back(i);
      }
      Rational weight = Pow(p, pool.size()) * Pow(q, m - pool.size());
      if (weight == 0) continue;
      std::vector<std::vector<size_t>> pools{pool};
      internal::PoolPermuter(local_base, pools, local).Run(weight);
    }
    std::map<std::vector<Record>, Rational> next;
    for (const auto& [assignment, mass] : joint) {
      for (const auto& [local_assignment, local_mass] : local) {
        std::vector<Record> combined = assignment;
        for (size_t i = 0; i < m; ++i) {
          combined[positions[i]] = local_assignment[i];
        }
        next[std::move(combined)] += mass * local_mass;
      }
    }
    joint = std::move(next);
  }
  return internal::ToDatasetDistribution(x, joint);
}

inline absl::Status CheckPumParameters(const Pum& pum) {
  if (absl::Status s = internal::CheckProbability(pum.p, "swap rate");
      !s.ok()) {
    return s;
  }
  return internal::CheckProbability(pum.alpha_cross, "alpha_cross");
}

inline absl::StatusOr<Dataset> PumSample(const Dataset& x, const Pum& pum,
                                         uint64_t seed) {
  if (absl::Status s = CheckPumParameters(pum); !s.ok()) return s;
  if (absl::Status s = internal::CheckSwappable(x.schema()); !s.ok()) return s;
  const std::vector<Record> before = internal::SwapTuples(x);
  std::vector<Record> after = before;
  std::vector<size_t> global_pool;
  auto permute_pool = [&](const std::vector<size_t>& pool,
                          RandomStream& stream) {
    std::vector<size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    stream.Shuffle(order);
    for (size_t i = 0; i < pool.size(); ++i) {
      after[pool[i]] = before[pool[order[i]]];
    }
  };
  for (const auto& [key, positions] : Stratify(x)) {
    RandomStream stream =
        RandomStream::Derive(seed, StratumLabel(x.schema(), key));
    std::vector<size_t> local_pool;
    for (size_t pos : positions) {
      if (!stream.Bernoulli(pum.p)) continue;
      if (stream.Bernoulli(pum.alpha_cross)) {
        global_pool.push_back(pos);
      } else {
        local_pool.push_back(pos);
      }
    }
    permute_pool(local_pool, stream);
  }
  std::sort(global_pool.begin(), global_pool.end());
  RandomStream global = RandomStream::Derive(seed, "global-pool");
  permute_pool(global_pool, global);
  return x.WithRecords(internal::WithSwapTuples(x, after));
}

// Exact output distribution of Pum: every record is unselected, locally
// pooled or globally pooled; all 3^n patterns are enumerated.
inline absl::StatusOr<OutputDistribution> PumExactDistribution(
    const Dataset& x, const Pum& pum, const EnumerationCaps& caps = {}) {
  if (absl::Status s = CheckPumParameters(pum); !s.ok()) return s;
  if (absl::Status s = internal::CheckSwappable(x.schema()); !s.ok()) return s;
  const size_t n = x.size();
  if (n > caps.max_pooled_records) {
    return absl::ResourceExhaustedError(
        absl::StrCat("dataset has ", n, " records; cross-stratum exact ",
                     "enumeration is capped at ", caps.max_pooled_records));
  }
  const std::vector<Record> base = internal::SwapTuples(x);
  const Strata strata = Stratify(x);
  const Rational state_prob[3] = {1 - pum.p, pum.p * (1 - pum.alpha_cross),
                                  pum.p * pum.alpha_cross};
  std::map<std::vector<Record>, Rational> out;
  std::vector<int> state(n, 0);
  uint64_t patterns = 1;
  for (size_t i = 0; i < n; ++i) patterns *= 3;
  for (uint64_t code = 0; code < patterns; ++code) {
    uint64_t c = code;
    Rational weight(1);
    for (size_t i = 0; i < n; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
      weight *= state_prob[state[i]];
    }
    if (weight == 0) continue;
    std::vector<std::vector<size_t>> pools;
    for (const auto& [key, positions] : strata) {
      std::vector<size_t> local;
      for (size_t pos : positions) {
        if (state[pos] == 1) local.push_back(pos);
      }
      if (local.size() > 1) pools.push_back(std::move(local));
    }
    std::vector<size_t> global;
    for (size_t i = 0; i < n; ++i) {
      if (state[i] == 2) global.push_back(i);
    }
    if (global.size() > 1) pools.push_back(std::move(global));
    internal::PoolPermuter(base, pools, out).Run(weight);
  }
  return internal::ToDatasetDistribution(x, out);
}

namespace internal {
inline absl::Status CheckBinarySchema(const Schema& schema) {
  if (schema.num_variables() != 1 || schema.variable(0).values.size() != 2) {
    return absl::InvalidArgumentError(
        "randomized response needs a single binary variable");
  }
  return absl::OkStatus();
}
}  // namespace internal

inline absl::StatusOr<Dataset> RrSample(const Dataset& x, const Rational& flip,
                                        uint64_t seed) {
  if (absl::Status s = internal::CheckBinarySchema(x.schema()); !s.ok()) {
    return s;
  }
  if (absl::Status s = internal::CheckProbability(flip, "flip"); !s.ok()) {
    return s;
  }
  RandomStream stream = RandomStream::Derive(seed, "randomized-response");
  std::vector<Record> records = x.records();
  for (Record& r : records) {
    if (stream.Bernoulli(flip)) r[0] = static_cast<ValueIndex>(1 - r[0]);
  }
  return x.WithRecords(std::move(records));
}

inline absl::StatusOr<OutputDistribution> RrExactDistribution(
    const Dataset& x, const Rational& flip, const EnumerationCaps& caps = {}) {
  if (absl::Status s = internal::CheckBinarySchema(x.schema()); !s.ok()) {
    return s;
  }
  if (absl::Status s = internal::CheckProbability(flip, "flip"); !s.ok()) {
    return s;
  }
  const size_t n = x.size();
  if (n > caps.max_rr_records) {
    return absl::ResourceExhaustedError(
        absl::StrCat("randomized response oracle is capped at ",
                     caps.max_rr_records, " records"));
  }
  std::map<std::string, Rational> masses;
  const Rational keep = 1 - flip;
  for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask) {
    std::vector<Record> records = x.records();
    Rational mass(1);
    for (size_t i = 0; i < n; ++i) {
      if (mask & (uint64_t{1} << i)) {
        records[i][0] = static_cast<ValueIndex>(1 - records[i][0]);
        mass *= flip;
      } else {
        mass *= keep;
      }
    }
    if (mass != 0) masses[Dataset::EncodeRecords(records)] += mass;
  }
  return OutputDistribution::FromMap(std::move(masses));
}

inline absl::StatusOr<OutputDistribution> ExactDistribution(
    const MechanismDescriptor& mechanism, const Dataset& x,
    const EnumerationCaps& caps = {}) {
  if (const auto* psa = std::get_if<Psa>(&mechanism)) {
    return PsaExactDistribution(x, psa->p, caps);
  }
  if (const auto* pum = std::get_if<Pum>(&mechanism)) {
    return PumExactDistribution(x, *pum, caps);
  }
  if (const auto* rr = std::get_if<RandomizedResponse>(&mechanism)) {
    return RrExactDistribution(x, rr->flip, caps);
  }
  if (const auto* c = std::get_if<ConstantMechanism>(&mechanism)) {
    return OutputDistribution::PointMass(c->value.Key());
  }
  return OutputDistribution::PointMass(x.Key());
}

inline absl::StatusOr<Dataset> Sample(const MechanismDescriptor& mechanism,
                                      const Dataset& x, uint64_t seed) {
  if (const auto* psa = std::get_if<Psa>(&mechanism)) {
    return PsaSample(x, psa->p, seed);
  }
  if (const auto* pum = std::get_if<Pum>(&mechanism)) {
    return PumSample(x, *pum, seed);
  }
  if (const auto* rr = std::get_if<RandomizedResponse>(&mechanism)) {
    return RrSample(x, rr->flip, seed);
  }
  if (const auto* c = std::get_if<ConstantMechanism>(&mechanism)) {
    return c->value;
  }
  return x;
}

}  // namespace dpspec

#endif  // DPSPEC_MECHANISMS_H_
