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

// Statistics released exactly by a swapping mechanism.
//
// Swapping keeps holding values in place and only moves swapping values
// within a stratum, so two tables are invariant: the joint table of all
// holding variables, and the joint table of the matching and swapping
// variables. Together they fix the holding, matching and swapping marginals.

#ifndef DPSPEC_INVARIANTS_H_
#define DPSPEC_INVARIANTS_H_

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "dpspec/mechanisms.h"
#include "dpspec/schema.h"

namespace dpspec {

inline constexpr char kHoldingTable[] = "hold";
inline constexpr char kMatchSwapTable[] = "match_swap";

struct TableDescriptor {
  enum class Kind {
    kContingency,  // counts over the cross product of `variables`
    kRecordLevel,  // the record at every position, i.e. the dataset itself
  };
  std::string name;
  std::vector<size_t> variables;
  Kind kind = Kind::kContingency;
};

struct InvariantSpec {
  std::vector<TableDescriptor> tables;
};

struct EvaluatedTable {
  std::string name;
  TableDescriptor::Kind kind = TableDescriptor::Kind::kContingency;
  std::vector<size_t> variables;
  // Nonzero cells only. For record-level tables the key is the position
  // followed by the record.
  std::map<Record, uint64_t> counts;
  uint64_t total = 0;

  friend bool operator==(const EvaluatedTable&,
                         const EvaluatedTable&) = default;
};

// Evaluated invariant tables. Serialize() is the canonical universe key:
// sorted "cellkey=count" lines, one per nonzero cell plus a "name[*]=n"
// total line per table.
struct InvariantValue {
  std::vector<EvaluatedTable> tables;
  std::vector<std::string> lines;

  std::string Serialize() const {
    std::string out;
    for (const std::string& line : lines) absl::StrAppend(&out, line, "\n");
    return out;
  }

  const EvaluatedTable* Find(absl::string_view name) const {
    for (const EvaluatedTable& t : tables) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  friend bool operator==(const InvariantValue& a, const InvariantValue& b) {
    return a.lines == b.lines;
  }
};

inline absl::StatusOr<InvariantSpec> DeriveInvariants(const Schema& schema) {
  if (schema.swapping_indices().empty()) {
    return absl::FailedPreconditionError(
        "cannot derive swapping invariants without a swapping variable");
  }
  InvariantSpec spec;
  spec.tables.push_back({kHoldingTable, schema.holding_indices(),
                         TableDescriptor::Kind::kContingency});
  std::vector<size_t> match_swap = schema.matching_indices();
  match_swap.insert(match_swap.end(), schema.swapping_indices().begin(),
                    schema.swapping_indices().end());
  std::sort(match_swap.begin(), match_swap.end());
  spec.tables.push_back({kMatchSwapTable, std::move(match_swap),
                         TableDescriptor::Kind::kContingency});
  return spec;
}

// Appends the whole dataset as an invariant; every universe is a singleton.
inline InvariantSpec WithRecordLevelInvariant(InvariantSpec spec,
                                              const Schema& schema) {
  std::vector<size_t> all(schema.num_variables());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  spec.tables.push_back(
      {"records", std::move(all), TableDescriptor::Kind::kRecordLevel});
  return spec;
}

inline std::string CellKey(const Schema& schema, const TableDescriptor& table,
                           const Record& cell) {
  std::vector<std::string> parts;
  size_t offset = 0;
  if (table.kind == TableDescriptor::Kind::kRecordLevel) {
    parts.push_back(absl::StrCat("#", cell[0]));
    offset = 1;
  }
  for (size_t k = 0; k < table.variables.size(); ++k) {
    const Variable& v = schema.variable(table.variables[k]);
    parts.push_back(absl::StrCat(v.name, "=", v.values[cell[k + offset]]));
  }
  return absl::StrCat(table.name, "[", absl::StrJoin(parts, ";"), "]");
}

inline InvariantValue EvaluateInvariants(const Dataset& x,
                                         const InvariantSpec& spec) {
  InvariantValue value;
  for (const TableDescriptor& table : spec.tables) {
    EvaluatedTable t;
    t.name = table.name;
    t.kind = table.kind;
    t.variables = table.variables;
    t.total = x.size();
    for (size_t i = 0; i < x.size(); ++i) {
      Record cell;
      if (table.kind == TableDescriptor::Kind::kRecordLevel) {
        cell.push_back(static_cast<ValueIndex>(i));
      }
      for (size_t v : table.variables) cell.push_back(x.record(i)[v]);
      ++t.counts[cell];
    }
    for (const auto& [cell, count] : t.counts) {
      value.lines.push_back(
          absl::StrCat(CellKey(x.schema(), table, cell), "=", count));
    }
    value.lines.push_back(absl::StrCat(table.name, "[*]=", t.total));
    value.tables.push_back(std::move(t));
  }
  std::sort(value.lines.begin(), value.lines.end());
  return value;
}

struct InvarianceReport {
  bool holds = true;
  bool exact = false;
  uint64_t outputs_checked = 0;
  // Per table: true if every checked output reproduced it.
  std::map<std::string, bool> table_holds;
  std::optional<Dataset> counterexample;
};

namespace internal {
inline void RecordOutput(const InvariantValue& reference, const Dataset& output,
                         const InvariantSpec& spec, InvarianceReport& report) {
  ++report.outputs_checked;
  InvariantValue got = EvaluateInvariants(output, spec);
  for (size_t t = 0; t < spec.tables.size(); ++t) {
    if (got.tables[t] == reference.tables[t]) continue;
    report.table_holds[spec.tables[t].name] = false;
    if (report.holds) {
      report.holds = false;
      report.counterexample = output;
    }
  }
}
}  // namespace internal

// Every support point of the exact output distribution must reproduce x's
// invariants.
inline absl::StatusOr<InvarianceReport> CheckInvarianceExact(
    const MechanismDescriptor& mechanism, const Dataset& x,
    const InvariantSpec& spec, const EnumerationCaps& caps = {}) {
  absl::StatusOr<OutputDistribution> dist =
      ExactDistribution(mechanism, x, caps);
  if (!dist.ok()) return dist.status();
  InvarianceReport report;
  report.exact = true;
  for (const TableDescriptor& t : spec.tables) report.table_holds[t.name] = true;
  const InvariantValue reference = EvaluateInvariants(x, spec);
  for (const auto& [key, mass] : dist->atoms()) {
    absl::StatusOr<Dataset> out = Dataset::FromKey(x.schema_ptr(), key);
    if (!out.ok()) return out.status();
    internal::RecordOutput(reference, *out, spec, report);
  }
  return report;
}

// Draws `trials` outputs with seeds derived from `seed`.
inline absl::StatusOr<InvarianceReport> CheckInvarianceSampled(
    const MechanismDescriptor& mechanism, const Dataset& x,
    const InvariantSpec& spec, uint64_t trials, uint64_t seed = 0) {
  InvarianceReport report;
  for (const TableDescriptor& t : spec.tables) report.table_holds[t.name] = true;
  const InvariantValue reference = EvaluateInvariants(x, spec);
  uint64_t state = seed;
  for (uint64_t i = 0; i < trials; ++i) {
    absl::StatusOr<Dataset> out = Sample(mechanism, x, SplitMix64(state));
    if (!out.ok()) return out.status();
    internal::RecordOutput(reference, *out, spec, report);
  }
  return report;
}

// trials == 0 selects exact mode.
inline absl::StatusOr<InvarianceReport> CheckInvariance(
    const MechanismDescriptor& mechanism, const Dataset& x,
    const InvariantSpec& spec, uint64_t trials,
    const EnumerationCaps& caps = {}) {
  if (trials == 0) return CheckInvarianceExact(mechanism, x, spec, caps);
  return CheckInvarianceSampled(mechanism, x, spec, trials);
}

}  // namespace dpspec

#endif  // DPSPEC_INVARIANTS_H_
