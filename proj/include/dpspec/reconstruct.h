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

// Exhaustive reconstruction of microdata from exactly published tables.
// Tables do not see record order, so candidates are record multisets.

#ifndef DPSPEC_RECONSTRUCT_H_
#define DPSPEC_RECONSTRUCT_H_

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dpspec/invariants.h"
#include "dpspec/rational.h"
#include "dpspec/rng.h"
#include "dpspec/schema.h"

namespace dpspec {

struct PublishedTables {
  uint64_t n = 0;
  std::vector<EvaluatedTable> tables;
};

inline PublishedTables PublishedFromInvariants(const InvariantValue& value,
                                               uint64_t n) {
  return {n, value.tables};
}

struct ReconstructionResult {
  // Sorted record lists, one per consistent multiset, in lexicographic order.
  std::vector<std::vector<Record>> consistent;
  uint64_t candidates_scanned = 0;

  size_t count() const { return consistent.size(); }
};

// All records over the schema, in lexicographic order.
inline std::vector<Record> AllRecords(const Schema& schema) {
  std::vector<Record> cells{Record{}};
  for (const Variable& v : schema.variables()) {
    std::vector<Record> next;
    for (const Record& c : cells) {
      for (size_t k = 0; k < v.values.size(); ++k) {
        Record r = c;
        r.push_back(static_cast<ValueIndex>(k));
        next.push_back(std::move(r));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

inline std::map<Record, uint64_t> ProjectCounts(
    const std::vector<Record>& records, const std::vector<size_t>& variables) {
  std::map<Record, uint64_t> counts;
  for (const Record& r : records) {
    Record cell;
    for (size_t v : variables) cell.push_back(r[v]);
    ++counts[cell];
  }
  return counts;
}

inline bool ReproducesTables(const std::vector<Record>& records,
                             const PublishedTables& tables) {
  if (records.size() != tables.n) return false;
  for (const EvaluatedTable& t : tables.tables) {
    if (ProjectCounts(records, t.variables) != t.counts) return false;
  }
  return true;
}

inline absl::StatusOr<ReconstructionResult> Reconstruct(
    const Schema& schema, const PublishedTables& tables, uint64_t cap) {
  for (const EvaluatedTable& t : tables.tables) {
    if (t.kind != TableDescriptor::Kind::kContingency) {
      return absl::InvalidArgumentError(
          absl::StrCat("table '", t.name, "' is not a contingency table"));
    }
    uint64_t sum = 0;
    for (const auto& [cell, count] : t.counts) {
      if (cell.size() != t.variables.size()) {
        return absl::InvalidArgumentError(
            absl::StrCat("table '", t.name, "' has a malformed cell"));
      }
      sum += count;
    }
    if (sum != tables.n) {
      return absl::InvalidArgumentError(absl::StrCat(
          "table '", t.name, "' counts sum to ", sum, ", not ", tables.n));
    }
    for (size_t v : t.variables) {
      if (v >= schema.num_variables()) {
        return absl::InvalidArgumentError(
            absl::StrCat("table '", t.name, "' references unknown variable"));
      }
    }
  }
  const std::vector<Record> cells = AllRecords(schema);
  const size_t n = static_cast<size_t>(tables.n);
  BigInt multisets;
  mpz_bin_uiui(multisets.get_mpz_t(), cells.size() + n - 1, n);
  if (multisets > BigInt(std::to_string(cap))) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "reconstruction needs ", multisets.get_str(),
        " candidate multisets; cap is ", cap));
  }
  ReconstructionResult result;
  // Non-decreasing index sequences enumerate multisets exactly once.
  std::vector<size_t> idx(n, 0);
  std::vector<Record> records(n);
  while (true) {
    for (size_t i = 0; i < n; ++i) records[i] = cells[idx[i]];
    ++result.candidates_scanned;
    if (ReproducesTables(records, tables)) result.consistent.push_back(records);
    size_t k = n;
    while (k > 0 && idx[k - 1] + 1 == cells.size()) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (size_t i = k; i < n; ++i) idx[i] = idx[k - 1];
  }
  return result;
}

struct AgreementScore {
  // Best fraction of truth's records matched by any consistent multiset.
  Rational best;
  // Expected fraction under a uniform choice among consistent multisets.
  Rational expected;
};

inline uint64_t MultisetOverlap(std::vector<Record> a, std::vector<Record> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  uint64_t shared = 0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++shared;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return shared;
}

inline absl::StatusOr<AgreementScore> ScoreAgreement(
    const ReconstructionResult& result, const Dataset& truth) {
  if (result.consistent.empty()) {
    return absl::FailedPreconditionError("no consistent multiset to score");
  }
  if (truth.size() != result.consistent.front().size()) {
    return absl::InvalidArgumentError("truth has a different record count");
  }
  AgreementScore score;
  if (truth.size() == 0) {
    score.best = score.expected = 1;
    return score;
  }
  uint64_t total = 0, best = 0;
  for (const auto& candidate : result.consistent) {
    uint64_t overlap = MultisetOverlap(candidate, truth.records());
    total += overlap;
    best = std::max(best, overlap);
  }
  const long n = static_cast<long>(truth.size());
  score.best = Rational(static_cast<long>(best), n);
  score.best.canonicalize();
  score.expected = Rational(BigInt(std::to_string(total)),
                            BigInt(std::to_string(result.consistent.size())) * n);
  score.expected.canonicalize();
  return score;
}

// Nested publications for a swapping schema: the record count alone, then
// the holding table, then also the matching-by-swapping table, then also the
// full joint table. Each level's constraints contain the previous level's.
struct TableLevel {
  std::string label;
  PublishedTables tables;
};

inline absl::StatusOr<std::vector<TableLevel>> NestedSwapTables(
    const Dataset& truth) {
  absl::StatusOr<InvariantSpec> swap_spec = DeriveInvariants(truth.schema());
  if (!swap_spec.ok()) return swap_spec.status();
  InvariantSpec full = *swap_spec;
  std::vector<size_t> all(truth.schema().num_variables());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  full.tables.push_back({"joint", all, TableDescriptor::Kind::kContingency});
  const InvariantValue value = EvaluateInvariants(truth, full);
  std::vector<TableLevel> levels;
  levels.push_back({"n", {truth.size(), {}}});
  std::vector<EvaluatedTable> acc;
  for (const EvaluatedTable& t : value.tables) {
    acc.push_back(t);
    levels.push_back({absl::StrCat("+", t.name), {truth.size(), acc}});
  }
  return levels;
}

inline constexpr uint64_t kReconstructionBatterySeed = 0x5EED0601;
inline constexpr size_t kReconstructionBatterySize = 50;

// Random 4-record truths over region (matching), tenure (holding) and area
// (swapping, 3 values).
inline std::vector<Dataset> MakeReconstructionBattery(
    uint64_t seed = kReconstructionBatterySeed,
    size_t count = kReconstructionBatterySize) {
  auto schema = std::make_shared<const Schema>(
      *Schema::Create({{"region", {"r0", "r1"}, Role::kHolding},
                       {"tenure", {"own", "rent"}, Role::kHolding},
                       {"area", {"a", "b", "c"}, Role::kSwapping}},
                      {"region"}));
  std::vector<Dataset> out;
  for (size_t id = 0; id < count; ++id) {
    RandomStream rng = RandomStream::Derive(seed, absl::StrCat("truth-", id));
    std::vector<Record> records(4);
    for (Record& r : records) {
      r = {static_cast<ValueIndex>(rng.UniformBelow(2)),
           static_cast<ValueIndex>(rng.UniformBelow(2)),
           static_cast<ValueIndex>(rng.UniformBelow(3))};
    }
    out.push_back(*Dataset::Create(schema, std::move(records)));
  }
  return out;
}

}  // namespace dpspec

#endif  // DPSPEC_RECONSTRUCT_H_
