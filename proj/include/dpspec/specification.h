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

// A differential privacy specification as five building blocks: a domain of
// datasets, a multiverse (here the level sets of an invariant function), an
// input premetric, an output premetric and a per-universe budget. A mechanism
// satisfies it when, inside every universe,
//
//   D(P_x, P_x') <= budget * d(x, x').

#ifndef DPSPEC_SPECIFICATION_H_
#define DPSPEC_SPECIFICATION_H_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dpspec/distribution.h"
#include "dpspec/divergences.h"
#include "dpspec/invariants.h"
#include "dpspec/log_value.h"
#include "dpspec/schema.h"

namespace dpspec {

struct SizePolicy {
  enum class Kind { kFixed, kUpTo };
  Kind kind = Kind::kFixed;
  size_t n = 0;

  static SizePolicy Fixed(size_t n) { return {Kind::kFixed, n}; }
  static SizePolicy UpTo(size_t cap) { return {Kind::kUpTo, cap}; }
};

class Domain {
 public:
  Domain(std::shared_ptr<const Schema> schema, SizePolicy size)
      : schema_(std::move(schema)), size_(size) {}

  const Schema& schema() const { return *schema_; }
  const std::shared_ptr<const Schema>& schema_ptr() const { return schema_; }
  const SizePolicy& size_policy() const { return size_; }

  bool Contains(const Dataset& x) const {
    if (!(x.schema() == *schema_)) return false;
    return size_.kind == SizePolicy::Kind::kFixed ? x.size() == size_.n
                                                  : x.size() <= size_.n;
  }

  // Every member exactly once, ordered by size then lexicographically.
  absl::StatusOr<std::vector<Dataset>> Enumerate(uint64_t cap) const {
    const uint64_t cells = schema_->CellCount(AllVariables());
    size_t lo = size_.kind == SizePolicy::Kind::kFixed ? size_.n : 0;
    uint64_t total = 0;
    for (size_t n = lo; n <= size_.n; ++n) {
      uint64_t count = 1;
      for (size_t i = 0; i < n; ++i) {
        if (count > cap / std::max<uint64_t>(cells, 1)) {
          return absl::ResourceExhaustedError(absl::StrCat(
              "domain enumeration exceeds ", cap, " datasets"));
        }
        count *= cells;
      }
      total += count;
      if (total > cap) {
        return absl::ResourceExhaustedError(
            absl::StrCat("domain enumeration exceeds ", cap, " datasets"));
      }
    }
    std::vector<Record> all_cells = AllCells();
    std::vector<Dataset> out;
    out.reserve(total);
    for (size_t n = lo; n <= size_.n; ++n) {
      std::vector<size_t> digits(n, 0);
      while (true) {
        std::vector<Record> records(n);
        for (size_t i = 0; i < n; ++i) records[i] = all_cells[digits[i]];
        out.push_back(*Dataset::Create(schema_, std::move(records)));
        size_t k = n;
        while (k > 0 && ++digits[k - 1] == all_cells.size()) digits[--k] = 0;
        if (k == 0) break;
      }
    }
    return out;
  }

 private:
  std::vector<size_t> AllVariables() const {
    std::vector<size_t> vars(schema_->num_variables());
    for (size_t i = 0; i < vars.size(); ++i) vars[i] = i;
    return vars;
  }

  std::vector<Record> AllCells() const {
    std::vector<Record> cells{Record{}};
    for (const Variable& v : schema_->variables()) {
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

  std::shared_ptr<const Schema> schema_;
  SizePolicy size_;
};

// Universes as level sets of a pure invariant function. Overlapping
// multiverses are not representable this way.
struct Multiverse {
  std::string name;
  std::function<std::string(const Dataset&)> invariant_fn;

  static Multiverse FromInvariants(InvariantSpec spec) {
    return {"invariants", [spec = std::move(spec)](const Dataset& x) {
              return EvaluateInvariants(x, spec).Serialize();
            }};
  }
  // One universe per record count: no invariants beyond n.
  static Multiverse Trivial() {
    return {"trivial",
            [](const Dataset& x) { return absl::StrCat("n=", x.size()); }};
  }
};

// Number of positions whose records differ.
inline absl::StatusOr<uint64_t> HammingDistance(const Dataset& x,
                                                const Dataset& y) {
  if (!(x.schema() == y.schema())) {
    return absl::InvalidArgumentError("datasets have different schemas");
  }
  if (x.size() != y.size()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "datasets have different sizes: ", x.size(), " vs ", y.size()));
  }
  uint64_t d = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x.record(i) != y.record(i)) ++d;
  }
  return d;
}

// Hamming distance on record positions, optionally re-expressed at a finer
// granularity where one record counts as `units_per_record` units.
struct InputPremetric {
  uint64_t units_per_record = 1;

  absl::StatusOr<uint64_t> Distance(const Dataset& x, const Dataset& y) const {
    absl::StatusOr<uint64_t> d = HammingDistance(x, y);
    if (!d.ok()) return d.status();
    return *d * units_per_record;
  }
};

// Budget per universe, looked up by universe key.
using PlbFunction = std::function<LogValue(const std::string& universe_key)>;

inline PlbFunction ConstantPlb(LogValue epsilon) {
  return [epsilon](const std::string&) { return epsilon; };
}

struct DPSpecification {
  Domain domain;
  Multiverse multiverse;
  InputPremetric input_premetric;
  OutputPremetric output_premetric;
  PlbFunction plb;
};

inline absl::StatusOr<std::string> UniverseKey(const DPSpecification& spec,
                                               const Dataset& x) {
  if (!spec.domain.Contains(x)) {
    return absl::OutOfRangeError("dataset is outside the specification domain");
  }
  return spec.multiverse.invariant_fn(x);
}

using DistributionOracle =
    std::function<absl::StatusOr<OutputDistribution>(const Dataset&)>;

struct SpecificationCheck {
  std::string universe_key;
  size_t universe_size = 0;
  // Worst-case D / d over pairs of distinct members.
  LogValue epsilon_tight;
  LogValue budget;
  bool passes = true;
  bool degenerate = false;
  // Universe indices of the first maximizing pair, with its d and D.
  std::optional<std::pair<size_t, size_t>> maximizing_pair;
  uint64_t pair_distance = 0;
  LogValue pair_divergence;
  std::vector<OutputDistribution> distributions;
};

// Computes the tight budget over one universe and compares it with the
// specification's budget. Pairs are scanned with i < j in universe order; the
// first strict maximum wins, so the report is independent of how pairs are
// evaluated.
inline absl::StatusOr<SpecificationCheck> CheckSpecification(
    const DistributionOracle& oracle, const DPSpecification& spec,
    const std::vector<Dataset>& universe) {
  SpecificationCheck report;
  report.universe_size = universe.size();
  if (universe.empty()) {
    report.degenerate = true;
    return report;
  }
  for (const Dataset& x : universe) {
    absl::StatusOr<std::string> key = UniverseKey(spec, x);
    if (!key.ok()) return key.status();
    if (report.universe_key.empty()) {
      report.universe_key = *key;
    } else if (*key != report.universe_key) {
      return absl::InvalidArgumentError(
          absl::StrCat("dataset ", x.ToString(), " is not in the universe"));
    }
  }
  report.budget = spec.plb(report.universe_key);
  for (const Dataset& x : universe) {
    absl::StatusOr<OutputDistribution> d = oracle(x);
    if (!d.ok()) return d.status();
    report.distributions.push_back(*std::move(d));
  }
  if (universe.size() < 2) {
    report.degenerate = true;
    report.passes = Compare(report.epsilon_tight, report.budget) <= 0;
    return report;
  }
  for (size_t i = 0; i < universe.size(); ++i) {
    for (size_t j = i + 1; j < universe.size(); ++j) {
      absl::StatusOr<uint64_t> d =
          spec.input_premetric.Distance(universe[i], universe[j]);
      if (!d.ok()) return d.status();
      if (*d == 0) continue;
      absl::StatusOr<LogValue> D =
          EvaluatePremetric(spec.output_premetric, report.distributions[i],
                            report.distributions[j]);
      if (!D.ok()) return D.status();
      LogValue ratio = D->DividedBy(*d);
      if (!report.maximizing_pair || ratio > report.epsilon_tight) {
        report.epsilon_tight = ratio;
        report.maximizing_pair = {i, j};
        report.pair_distance = *d;
        report.pair_divergence = *D;
      }
    }
  }
  report.passes = Compare(report.epsilon_tight, report.budget) <= 0;
  return report;
}

}  // namespace dpspec

#endif  // DPSPEC_SPECIFICATION_H_
