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

#ifndef DPSPEC_SCHEMA_H_
#define DPSPEC_SCHEMA_H_

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/string_view.h"

namespace dpspec {

enum class Role { kSwapping, kHolding };

inline absl::string_view RoleName(Role role) {
  return role == Role::kSwapping ? "swapping" : "holding";
}

struct Variable {
  std::string name;
  std::vector<std::string> values;
  Role role = Role::kHolding;
};

using ValueIndex = uint16_t;
// One record: a value index per schema variable, in schema order.
using Record = std::vector<ValueIndex>;

// Categorical schema with swapping/holding roles and a matching subset of the
// holding variables. Immutable once created.
class Schema {
 public:
  static absl::StatusOr<Schema> Create(std::vector<Variable> variables,
                                       std::vector<std::string> matching) {
    Schema schema;
    std::set<std::string> names;
    for (const Variable& v : variables) {
      if (v.name.empty()) {
        return absl::InvalidArgumentError("variable with empty name");
      }
      if (!names.insert(v.name).second) {
        return absl::InvalidArgumentError(
            absl::StrCat("duplicate variable name '", v.name, "'"));
      }
      if (v.values.empty()) {
        return absl::InvalidArgumentError(
            absl::StrCat("variable '", v.name, "' has no values"));
      }
      if (v.values.size() > 0xFFFF) {
        return absl::InvalidArgumentError(
            absl::StrCat("variable '", v.name, "' has too many values"));
      }
      std::set<std::string> seen(v.values.begin(), v.values.end());
      if (seen.size() != v.values.size()) {
        return absl::InvalidArgumentError(
            absl::StrCat("variable '", v.name, "' repeats a value"));
      }
    }
    schema.variables_ = std::move(variables);
    for (size_t i = 0; i < schema.variables_.size(); ++i) {
      if (schema.variables_[i].role == Role::kSwapping) {
        schema.swapping_.push_back(i);
      } else {
        schema.holding_.push_back(i);
      }
    }
    std::set<size_t> matching_set;
    for (const std::string& name : matching) {
      std::optional<size_t> idx = schema.IndexOf(name);
      if (!idx) {
        return absl::InvalidArgumentError(
            absl::StrCat("matching variable '", name, "' is not in schema"));
      }
      if (schema.variables_[*idx].role != Role::kHolding) {
        return absl::InvalidArgumentError(absl::StrCat(
            "matching variable '", name, "' must be a holding variable"));
      }
      matching_set.insert(*idx);
    }
    schema.matching_.assign(matching_set.begin(), matching_set.end());
    return schema;
  }

  // Same variables, different matching set.
  absl::StatusOr<Schema> WithMatching(std::vector<std::string> matching) const {
    return Create(variables_, std::move(matching));
  }

  const std::vector<Variable>& variables() const { return variables_; }
  size_t num_variables() const { return variables_.size(); }
  const Variable& variable(size_t i) const { return variables_[i]; }
  const std::vector<size_t>& swapping_indices() const { return swapping_; }
  const std::vector<size_t>& holding_indices() const { return holding_; }
  const std::vector<size_t>& matching_indices() const { return matching_; }

  std::vector<std::string> matching_names() const {
    std::vector<std::string> out;
    for (size_t i : matching_) out.push_back(variables_[i].name);
    return out;
  }

  std::optional<size_t> IndexOf(absl::string_view name) const {
    for (size_t i = 0; i < variables_.size(); ++i) {
      if (variables_[i].name == name) return i;
    }
    return std::nullopt;
  }

  absl::StatusOr<ValueIndex> ValueOf(size_t var, absl::string_view value) const {
    const auto& values = variables_[var].values;
    auto it = std::find(values.begin(), values.end(), value);
    if (it == values.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("value '", value, "' is not allowed for variable '",
                       variables_[var].name, "'"));
    }
    return static_cast<ValueIndex>(it - values.begin());
  }

  // Number of distinct records over the given variables.
  uint64_t CellCount(const std::vector<size_t>& vars) const {
    uint64_t count = 1;
    for (size_t v : vars) count *= variables_[v].values.size();
    return count;
  }

  friend bool operator==(const Schema& a, const Schema& b) {
    if (a.matching_ != b.matching_) return false;
    if (a.variables_.size() != b.variables_.size()) return false;
    for (size_t i = 0; i < a.variables_.size(); ++i) {
      const Variable& x = a.variables_[i];
      const Variable& y = b.variables_[i];
      if (x.name != y.name || x.values != y.values || x.role != y.role) {
        return false;
      }
    }
    return true;
  }

 private:
  Schema() = default;

  std::vector<Variable> variables_;
  std::vector<size_t> swapping_;
  std::vector<size_t> holding_;
  std::vector<size_t> matching_;
};

// Position-identified microdata: record i is the i-th unit.
class Dataset {
 public:
  static absl::StatusOr<Dataset> Create(std::shared_ptr<const Schema> schema,
                                        std::vector<Record> records) {
    for (size_t r = 0; r < records.size(); ++r) {
      if (records[r].size() != schema->num_variables()) {
        return absl::InvalidArgumentError(
            absl::StrCat("record ", r, " has ", records[r].size(),
                         " fields, schema has ", schema->num_variables()));
      }
      for (size_t v = 0; v < records[r].size(); ++v) {
        if (records[r][v] >= schema->variable(v).values.size()) {
          return absl::InvalidArgumentError(absl::StrCat(
              "record ", r, " has out-of-range value for '",
              schema->variable(v).name, "'"));
        }
      }
    }
    return Dataset(std::move(schema), std::move(records));
  }

  static absl::StatusOr<Dataset> FromStrings(
      std::shared_ptr<const Schema> schema,
      const std::vector<std::vector<std::string>>& rows) {
    std::vector<Record> records;
    records.reserve(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != schema->num_variables()) {
        return absl::InvalidArgumentError(
            absl::StrCat("row ", r, " has ", rows[r].size(),
                         " fields, schema has ", schema->num_variables()));
      }
      Record rec(rows[r].size());
      for (size_t v = 0; v < rows[r].size(); ++v) {
        absl::StatusOr<ValueIndex> idx = schema->ValueOf(v, rows[r][v]);
        if (!idx.ok()) {
          return absl::InvalidArgumentError(
              absl::StrCat("row ", r, ": ", idx.status().message()));
        }
        rec[v] = *idx;
      }
      records.push_back(std::move(rec));
    }
    return Dataset(std::move(schema), std::move(records));
  }

  // Inverse of Key().
  static absl::StatusOr<Dataset> FromKey(std::shared_ptr<const Schema> schema,
                                         absl::string_view key) {
    const size_t width = 2 * schema->num_variables();
    if (width == 0 || key.size() % width != 0) {
      return absl::InvalidArgumentError("malformed dataset key");
    }
    std::vector<Record> records(key.size() / width,
                                Record(schema->num_variables()));
    for (size_t r = 0; r < records.size(); ++r) {
      for (size_t v = 0; v < schema->num_variables(); ++v) {
        size_t at = r * width + 2 * v;
        records[r][v] = static_cast<ValueIndex>(
            (static_cast<unsigned char>(key[at]) << 8) |
            static_cast<unsigned char>(key[at + 1]));
      }
    }
    return Create(std::move(schema), std::move(records));
  }

  const Schema& schema() const { return *schema_; }
  const std::shared_ptr<const Schema>& schema_ptr() const { return schema_; }
  const std::vector<Record>& records() const { return records_; }
  size_t size() const { return records_.size(); }
  const Record& record(size_t i) const { return records_[i]; }

  // Canonical byte encoding: two big-endian bytes per value, record-major.
  // Lexicographic order on keys is lexicographic order on record lists.
  std::string Key() const { return EncodeRecords(records_); }

  static std::string EncodeRecords(const std::vector<Record>& records) {
    std::string key;
    for (const Record& rec : records) {
      for (ValueIndex v : rec) {
        key.push_back(static_cast<char>(v >> 8));
        key.push_back(static_cast<char>(v & 0xFF));
      }
    }
    return key;
  }

  std::vector<std::string> RowStrings(size_t i) const {
    std::vector<std::string> row;
    for (size_t v = 0; v < records_[i].size(); ++v) {
      row.push_back(schema_->variable(v).values[records_[i][v]]);
    }
    return row;
  }

  // Human-readable rendering, e.g. "[A,x][B,y]".
  std::string ToString() const {
    std::string out;
    for (size_t i = 0; i < records_.size(); ++i) {
      absl::StrAppend(&out, "[", absl::StrJoin(RowStrings(i), ","), "]");
    }
    return out;
  }

  Dataset WithRecords(std::vector<Record> records) const {
    return Dataset(schema_, std::move(records));
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return *a.schema_ == *b.schema_ && a.records_ == b.records_;
  }

 private:
  Dataset(std::shared_ptr<const Schema> schema, std::vector<Record> records)
      : schema_(std::move(schema)), records_(std::move(records)) {}

  std::shared_ptr<const Schema> schema_;
  std::vector<Record> records_;
};

inline std::shared_ptr<const Schema> Share(Schema schema) {
  return std::make_shared<const Schema>(std::move(schema));
}

}  // namespace dpspec

#endif  // DPSPEC_SCHEMA_H_
