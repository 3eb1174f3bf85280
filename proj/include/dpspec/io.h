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

// CSV microdata, JSON run configuration and JSON reports.

#ifndef DPSPEC_IO_H_
#define DPSPEC_IO_H_

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/string_view.h"
#include "dpspec/divergences.h"
#include "dpspec/invariants.h"
#include "dpspec/mechanisms.h"
#include "dpspec/rational.h"
#include "dpspec/reconstruct.h"
#include "dpspec/rng.h"
#include "dpspec/schema.h"
#include "dpspec/verifier.h"
#include "json.hpp"

namespace dpspec {

using Json = nlohmann::json;

inline constexpr char kVersion[] = "0.1.0";

// ---------------------------------------------------------------------------
// Files

inline absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open '", path, "'"));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline absl::Status WriteFile(const std::string& path,
                              absl::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write '", path, "'"));
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.close();
  if (!out) return absl::DataLossError(absl::StrCat("short write to ", path));
  return absl::OkStatus();
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based physical line on which each row starts.
  std::vector<size_t> row_lines;

  friend bool operator==(const CsvTable& a, const CsvTable& b) {
    return a.header == b.header && a.rows == b.rows;
  }
};

// Comma-separated, double-quote quoting with "" escapes, LF or CRLF line
// ends. The first record is the header. Blank lines are skipped.
inline absl::StatusOr<CsvTable> ParseCsv(absl::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<size_t> lines;
  size_t line = 1;
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '\n' || text[i] == '\r') {
      if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      ++i;
      ++line;
      continue;
    }
    const size_t start_line = line;
    std::vector<std::string> fields;
    std::string field;
    bool done = false;
    while (!done) {
      field.clear();
      if (i < text.size() && text[i] == '"') {
        ++i;
        while (true) {
          if (i >= text.size()) {
            return absl::InvalidArgumentError(absl::StrCat(
                "line ", start_line, ": unterminated quoted field"));
          }
          char c = text[i++];
          if (c == '"') {
            if (i < text.size() && text[i] == '"') {
              field.push_back('"');
              ++i;
            } else {
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
          }
        }
        if (i < text.size() && text[i] != ',' && text[i] != '\n' &&
            text[i] != '\r') {
          return absl::InvalidArgumentError(absl::StrCat(
              "line ", line, ": unexpected character after closing quote"));
        }
      } else {
        while (i < text.size() && text[i] != ',' && text[i] != '\n' &&
               text[i] != '\r') {
          if (text[i] == '"') {
            return absl::InvalidArgumentError(
                absl::StrCat("line ", line, ": stray quote in unquoted field"));
          }
          field.push_back(text[i++]);
        }
      }
      fields.push_back(field);
      if (i < text.size() && text[i] == ',') {
        ++i;
      } else {
        done = true;
      }
    }
    records.push_back(std::move(fields));
    lines.push_back(start_line);
  }
  if (records.empty()) return absl::InvalidArgumentError("CSV has no header");
  CsvTable table;
  table.header = std::move(records[0]);
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", lines[r], ": expected ", table.header.size(),
                       " fields, found ", records[r].size()));
    }
    table.rows.push_back(std::move(records[r]));
    table.row_lines.push_back(lines[r]);
  }
  return table;
}

// Quotes a field only when it contains a comma, quote, line break or
// surrounding whitespace.
inline std::string CsvField(absl::string_view value) {
  bool quote = value.find_first_of(",\"\r\n") != absl::string_view::npos ||
               (!value.empty() && (value.front() == ' ' || value.back() == ' '));
  if (!quote) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string SerializeCsv(const CsvTable& table) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& fields) {
    for (size_t k = 0; k < fields.size(); ++k) {
      if (k > 0) out.push_back(',');
      out += CsvField(fields[k]);
    }
    out.push_back('\n');
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  return out;
}

// Columns may appear in any order but must name every schema variable once.
inline absl::StatusOr<Dataset> DatasetFromCsv(
    std::shared_ptr<const Schema> schema, const CsvTable& table) {
  std::vector<size_t> column_of(schema->num_variables());
  std::set<size_t> seen;
  if (table.header.size() != schema->num_variables()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "line 1: header has ", table.header.size(), " columns, schema has ",
        schema->num_variables(), " variables"));
  }
  for (size_t c = 0; c < table.header.size(); ++c) {
    std::optional<size_t> v = schema->IndexOf(table.header[c]);
    if (!v.has_value()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line 1: column '", table.header[c], "' is not a schema variable"));
    }
    if (!seen.insert(*v).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("line 1: duplicate column '", table.header[c], "'"));
    }
    column_of[*v] = c;
  }
  std::vector<Record> records;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    Record rec(schema->num_variables());
    for (size_t v = 0; v < rec.size(); ++v) {
      absl::StatusOr<ValueIndex> idx =
          schema->ValueOf(v, table.rows[r][column_of[v]]);
      if (!idx.ok()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", table.row_lines[r], ": ", idx.status().message()));
      }
      rec[v] = *idx;
    }
    records.push_back(std::move(rec));
  }
  return Dataset::Create(std::move(schema), std::move(records));
}

inline CsvTable DatasetToCsv(const Dataset& x) {
  CsvTable table;
  for (const Variable& v : x.schema().variables()) table.header.push_back(v.name);
  for (size_t i = 0; i < x.size(); ++i) {
    table.rows.push_back(x.RowStrings(i));
    table.row_lines.push_back(i + 2);
  }
  return table;
}

inline absl::StatusOr<Dataset> LoadCsvDataset(
    std::shared_ptr<const Schema> schema, const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<CsvTable> table = ParseCsv(*text);
  if (!table.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": ", table.status().message()));
  }
  absl::StatusOr<Dataset> x = DatasetFromCsv(std::move(schema), *table);
  if (!x.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": ", x.status().message()));
  }
  return x;
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  std::shared_ptr<const Schema> schema;
  std::optional<MechanismDescriptor> mechanism;
  uint64_t seed = 0;
  OutputPremetric premetric = Multiplicative{};
  EnumerationCaps caps;
  std::string input;   // microdata CSV
  std::string truth;   // ground-truth CSV for reconstruction scoring
  std::string tables;  // published tables JSON
  // Effective settings after flag overrides; hashed into report manifests.
  Json effective = Json::object();

  uint64_t Hash() const { return Fnv1a64(effective.dump()); }
};

namespace internal {

inline absl::Status RejectUnknownKeys(const Json& object,
                                      const std::set<std::string>& allowed,
                                      absl::string_view where) {
  if (!object.is_object()) {
    return absl::InvalidArgumentError(absl::StrCat(where, " must be an object"));
  }
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown key '", key, "' in ", where));
    }
  }
  return absl::OkStatus();
}

// A rational given either as a string ("1/3", "0.05") or a JSON number. A
// number is read through its shortest decimal rendering, so 0.1 is 1/10.
inline absl::StatusOr<Rational> RationalFromJson(const Json& value,
                                                 absl::string_view where) {
  if (value.is_string()) {
    absl::StatusOr<Rational> r = ParseRational(value.get<std::string>());
    if (!r.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat(where, ": ", r.status().message()));
    }
    return r;
  }
  if (value.is_number()) {
    absl::StatusOr<Rational> r = ParseRational(value.dump());
    if (!r.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat(where, ": ", r.status().message()));
    }
    return r;
  }
  return absl::InvalidArgumentError(
      absl::StrCat(where, " must be a number or a string"));
}

inline absl::StatusOr<uint64_t> CountFromJson(const Json& value,
                                              absl::string_view where) {
  if (!value.is_number_unsigned()) {
    return absl::InvalidArgumentError(
        absl::StrCat(where, " must be a non-negative integer"));
  }
  return value.get<uint64_t>();
}

inline absl::StatusOr<std::string> StringFromJson(const Json& value,
                                                  absl::string_view where) {
  if (!value.is_string()) {
    return absl::InvalidArgumentError(absl::StrCat(where, " must be a string"));
  }
  return value.get<std::string>();
}

inline absl::StatusOr<Schema> SchemaFromJson(const Json& j) {
  if (absl::Status s = RejectUnknownKeys(j, {"variables", "matching"}, "schema");
      !s.ok()) {
    return s;
  }
  if (!j.contains("variables") || !j["variables"].is_array()) {
    return absl::InvalidArgumentError("schema.variables must be an array");
  }
  std::vector<Variable> variables;
  for (size_t k = 0; k < j["variables"].size(); ++k) {
    const Json& v = j["variables"][k];
    std::string where = absl::StrCat("schema.variables[", k, "]");
    if (absl::Status s = RejectUnknownKeys(v, {"name", "role", "values"}, where);
        !s.ok()) {
      return s;
    }
    if (!v.contains("name") || !v.contains("role") || !v.contains("values")) {
      return absl::InvalidArgumentError(
          absl::StrCat(where, " needs name, role and values"));
    }
    Variable var;
    absl::StatusOr<std::string> name = StringFromJson(v["name"], where + ".name");
    if (!name.ok()) return name.status();
    var.name = *name;
    absl::StatusOr<std::string> role = StringFromJson(v["role"], where + ".role");
    if (!role.ok()) return role.status();
    if (*role == "holding") {
      var.role = Role::kHolding;
    } else if (*role == "swapping") {
      var.role = Role::kSwapping;
    } else {
      return absl::InvalidArgumentError(absl::StrCat(
          where, ".role must be \"holding\" or \"swapping\", got \"", *role,
          "\""));
    }
    if (!v["values"].is_array()) {
      return absl::InvalidArgumentError(absl::StrCat(where, ".values must be an array"));
    }
    for (const Json& value : v["values"]) {
      absl::StatusOr<std::string> s = StringFromJson(value, where + ".values[]");
      if (!s.ok()) return s.status();
      var.values.push_back(*s);
    }
    variables.push_back(std::move(var));
  }
  std::vector<std::string> matching;
  if (j.contains("matching")) {
    if (!j["matching"].is_array()) {
      return absl::InvalidArgumentError("schema.matching must be an array");
    }
    for (const Json& m : j["matching"]) {
      absl::StatusOr<std::string> s = StringFromJson(m, "schema.matching[]");
      if (!s.ok()) return s.status();
      matching.push_back(*s);
    }
  }
  return Schema::Create(std::move(variables), std::move(matching));
}

inline absl::StatusOr<MechanismDescriptor> MechanismFromJson(const Json& j) {
  if (absl::Status s = RejectUnknownKeys(
          j, {"kind", "p", "alpha_cross", "flip"}, "mechanism");
      !s.ok()) {
    return s;
  }
  if (!j.contains("kind")) {
    return absl::InvalidArgumentError("mechanism.kind is required");
  }
  absl::StatusOr<std::string> kind = StringFromJson(j["kind"], "mechanism.kind");
  if (!kind.ok()) return kind.status();
  auto rational = [&](const char* key) -> absl::StatusOr<Rational> {
    if (!j.contains(key)) {
      return absl::InvalidArgumentError(
          absl::StrCat("mechanism '", *kind, "' needs '", key, "'"));
    }
    absl::StatusOr<Rational> r =
        RationalFromJson(j[key], absl::StrCat("mechanism.", key));
    if (!r.ok()) return r;
    if (absl::Status s = CheckProbability(*r, key); !s.ok()) return s;
    return r;
  };
  auto only = [&](std::set<std::string> keys) {
    keys.insert("kind");
    return RejectUnknownKeys(j, keys, absl::StrCat("mechanism '", *kind, "'"));
  };
  if (*kind == "psa") {
    if (absl::Status s = only({"p"}); !s.ok()) return s;
    absl::StatusOr<Rational> p = rational("p");
    if (!p.ok()) return p.status();
    return Psa{*p};
  }
  if (*kind == "pum") {
    if (absl::Status s = only({"p", "alpha_cross"}); !s.ok()) return s;
    absl::StatusOr<Rational> p = rational("p");
    if (!p.ok()) return p.status();
    absl::StatusOr<Rational> a = rational("alpha_cross");
    if (!a.ok()) return a.status();
    return Pum{*p, *a};
  }
  if (*kind == "randomized-response") {
    if (absl::Status s = only({"flip"}); !s.ok()) return s;
    absl::StatusOr<Rational> f = rational("flip");
    if (!f.ok()) return f.status();
    return RandomizedResponse{*f};
  }
  if (*kind == "identity") {
    if (absl::Status s = only({}); !s.ok()) return s;
    return IdentityMechanism{};
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown mechanism kind '", *kind,
      "' (expected psa, pum, randomized-response or identity)"));
}

inline absl::StatusOr<OutputPremetric> PremetricFromJson(const Json& j) {
  if (absl::Status s = RejectUnknownKeys(
          j, {"kind", "delta", "alpha", "alpha_max"}, "premetric");
      !s.ok()) {
    return s;
  }
  std::string kind = "mult";
  if (j.contains("kind")) {
    absl::StatusOr<std::string> k = StringFromJson(j["kind"], "premetric.kind");
    if (!k.ok()) return k.status();
    kind = *k;
  }
  auto get = [&](const char* key) -> absl::StatusOr<Rational> {
    if (!j.contains(key)) {
      return absl::InvalidArgumentError(
          absl::StrCat("premetric '", kind, "' needs '", key, "'"));
    }
    return RationalFromJson(j[key], absl::StrCat("premetric.", key));
  };
  if (kind == "mult") return Multiplicative{};
  if (kind == "delta") {
    absl::StatusOr<Rational> d = get("delta");
    if (!d.ok()) return d.status();
    if (absl::Status s = CheckDelta(*d); !s.ok()) return s;
    return DeltaMultiplicative{*d};
  }
  if (kind == "renyi") {
    absl::StatusOr<Rational> a = get("alpha");
    if (!a.ok()) return a.status();
    if (*a <= 1) return absl::InvalidArgumentError("premetric.alpha must exceed 1");
    return RenyiOrder{*a};
  }
  if (kind == "zcdp") {
    absl::StatusOr<Rational> a = get("alpha_max");
    if (!a.ok()) return a.status();
    if (*a <= 1) {
      return absl::InvalidArgumentError("premetric.alpha_max must exceed 1");
    }
    return NormalizedRenyi{*a};
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown premetric kind '", kind, "' (expected mult, delta, renyi or zcdp)"));
}

inline absl::StatusOr<EnumerationCaps> CapsFromJson(const Json& j) {
  static const std::set<std::string> kKeys = {
      "max_stratum_size", "max_pooled_records", "max_rr_records",
      "max_universe_candidates", "max_multisets"};
  if (absl::Status s = RejectUnknownKeys(j, kKeys, "caps"); !s.ok()) return s;
  EnumerationCaps caps;
  for (const auto& [key, value] : j.items()) {
    absl::StatusOr<uint64_t> v = CountFromJson(value, absl::StrCat("caps.", key));
    if (!v.ok()) return v.status();
    if (key == "max_stratum_size") caps.max_stratum_size = *v;
    if (key == "max_pooled_records") caps.max_pooled_records = *v;
    if (key == "max_rr_records") caps.max_rr_records = *v;
    if (key == "max_universe_candidates") caps.max_universe_candidates = *v;
    if (key == "max_multisets") caps.max_multisets = *v;
  }
  return caps;
}

inline std::string ResolvePath(const std::string& base_dir,
                               const std::string& path) {
  if (path.empty() || path[0] == '/' || base_dir.empty()) return path;
  return absl::StrCat(base_dir, "/", path);
}

}  // namespace internal

// Builds a RunConfig from a JSON object. Relative paths are resolved against
// `base_dir`. Every key is checked against the documented key set.
inline absl::StatusOr<RunConfig> RunConfigFromJson(const Json& j,
                                                   const std::string& base_dir) {
  if (absl::Status s = internal::RejectUnknownKeys(
          j,
          {"schema", "mechanism", "seed", "premetric", "caps", "input", "truth",
           "tables"},
          "config");
      !s.ok()) {
    return s;
  }
  RunConfig config;
  config.effective = j;
  if (j.contains("schema")) {
    absl::StatusOr<Schema> schema = internal::SchemaFromJson(j["schema"]);
    if (!schema.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("schema: ", schema.status().message()));
    }
    config.schema = Share(*std::move(schema));
  }
  if (j.contains("mechanism")) {
    absl::StatusOr<MechanismDescriptor> m =
        internal::MechanismFromJson(j["mechanism"]);
    if (!m.ok()) return m.status();
    config.mechanism = *std::move(m);
  }
  if (j.contains("seed")) {
    absl::StatusOr<uint64_t> seed = internal::CountFromJson(j["seed"], "seed");
    if (!seed.ok()) return seed.status();
    config.seed = *seed;
  }
  if (j.contains("premetric")) {
    absl::StatusOr<OutputPremetric> d = internal::PremetricFromJson(j["premetric"]);
    if (!d.ok()) return d.status();
    config.premetric = *std::move(d);
  }
  if (j.contains("caps")) {
    absl::StatusOr<EnumerationCaps> caps = internal::CapsFromJson(j["caps"]);
    if (!caps.ok()) return caps.status();
    config.caps = *caps;
  }
  for (const char* key : {"input", "truth", "tables"}) {
    if (!j.contains(key)) continue;
    absl::StatusOr<std::string> path = internal::StringFromJson(j[key], key);
    if (!path.ok()) return path.status();
    std::string resolved = internal::ResolvePath(base_dir, *path);
    if (std::string(key) == "input") config.input = resolved;
    if (std::string(key) == "truth") config.truth = resolved;
    if (std::string(key) == "tables") config.tables = resolved;
  }
  return config;
}

inline absl::StatusOr<Json> ParseJson(absl::string_view text,
                                      absl::string_view where) {
  Json j = Json::parse(text.begin(), text.end(), nullptr,
                       /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(where, ": malformed JSON"));
  }
  return j;
}

// ---------------------------------------------------------------------------
// Reports

inline Json ManifestJson(absl::string_view command, const RunConfig& config) {
  return {{"command", std::string(command)},
          {"config_hash", absl::StrFormat("%016x", config.Hash())},
          {"seed", config.seed},
          {"version", kVersion}};
}

inline Json ReportEnvelope(absl::string_view kind, absl::string_view command,
                           const RunConfig& config) {
  return {{"report_schema", absl::StrCat("dpspec.", kind, "/1")},
          {"manifest", ManifestJson(command, config)}};
}

inline Json LogValueJson(const LogValue& v) {
  Json out = {{"exact", v.ToString()}};
  if (v.is_infinite()) {
    out["value"] = nullptr;
    out["infinite"] = true;
  } else {
    out["value"] = v.ToDouble();
  }
  return out;
}

inline Json DatasetJson(const Dataset& x) {
  Json rows = Json::array();
  for (size_t i = 0; i < x.size(); ++i) rows.push_back(x.RowStrings(i));
  return rows;
}

inline Json RecordJson(const Schema& schema, const Record& r) {
  Json out = Json::array();
  for (size_t v = 0; v < r.size(); ++v) out.push_back(schema.variable(v).values[r[v]]);
  return out;
}

inline Json TablesJson(const Schema& schema, const InvariantValue& value) {
  Json tables = Json::array();
  for (const EvaluatedTable& t : value.tables) {
    const bool record_level = t.kind == TableDescriptor::Kind::kRecordLevel;
    Json names = Json::array();
    for (size_t v : t.variables) names.push_back(schema.variable(v).name);
    Json cells = Json::array();
    for (const auto& [cell, count] : t.counts) {
      Json c;
      size_t offset = 0;
      if (record_level) {
        c["position"] = cell[0];
        offset = 1;
      }
      Json values = Json::array();
      for (size_t k = 0; k < t.variables.size(); ++k) {
        values.push_back(schema.variable(t.variables[k]).values[cell[k + offset]]);
      }
      c["values"] = values;
      c["count"] = count;
      cells.push_back(c);
    }
    tables.push_back({{"name", t.name},
                      {"kind", record_level ? "record_level" : "contingency"},
                      {"variables", names},
                      {"total", t.total},
                      {"cells", cells}});
  }
  return tables;
}

inline Json InvariantsReport(const Dataset& x, const InvariantValue& value,
                             absl::string_view command,
                             const RunConfig& config) {
  Json out = ReportEnvelope("invariants", command, config);
  out["n"] = x.size();
  out["tables"] = TablesJson(x.schema(), value);
  return out;
}

// Reads the "tables" array written by InvariantsReport.
inline absl::StatusOr<PublishedTables> PublishedTablesFromJson(
    const Json& j, const Schema& schema) {
  if (!j.is_object() || !j.contains("n") || !j.contains("tables") ||
      !j["n"].is_number_unsigned() || !j["tables"].is_array()) {
    return absl::InvalidArgumentError(
        "tables document needs an integer 'n' and a 'tables' array");
  }
  PublishedTables published;
  published.n = j["n"].get<uint64_t>();
  for (const Json& t : j["tables"]) {
    if (absl::Status s = internal::RejectUnknownKeys(
            t, {"name", "kind", "variables", "total", "cells"}, "table");
        !s.ok()) {
      return s;
    }
    EvaluatedTable table;
    table.name = t.value("name", "");
    std::string kind = t.value("kind", "contingency");
    if (kind == "record_level") {
      table.kind = TableDescriptor::Kind::kRecordLevel;
    } else if (kind != "contingency") {
      return absl::InvalidArgumentError(
          absl::StrCat("table '", table.name, "': unknown kind '", kind, "'"));
    }
    if (!t.contains("variables") || !t["variables"].is_array() ||
        !t.contains("cells") || !t["cells"].is_array()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "table '", table.name, "' needs 'variables' and 'cells' arrays"));
    }
    for (const Json& name : t["variables"]) {
      std::optional<size_t> v =
          name.is_string() ? schema.IndexOf(name.get<std::string>())
                           : std::nullopt;
      if (!v.has_value()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "table '", table.name, "': unknown variable ", name.dump()));
      }
      table.variables.push_back(*v);
    }
    uint64_t sum = 0;
    for (const Json& c : t["cells"]) {
      const bool record_level = table.kind == TableDescriptor::Kind::kRecordLevel;
      if (!c.is_object() || !c.contains("values") || !c["values"].is_array() ||
          c["values"].size() != table.variables.size() || !c.contains("count") ||
          !c["count"].is_number_unsigned() ||
          (record_level && !c.contains("position"))) {
        return absl::InvalidArgumentError(
            absl::StrCat("table '", table.name, "': malformed cell ", c.dump()));
      }
      Record cell;
      if (record_level) cell.push_back(c["position"].get<ValueIndex>());
      for (size_t k = 0; k < table.variables.size(); ++k) {
        if (!c["values"][k].is_string()) {
          return absl::InvalidArgumentError(
              absl::StrCat("table '", table.name, "': non-string cell value"));
        }
        absl::StatusOr<ValueIndex> idx =
            schema.ValueOf(table.variables[k], c["values"][k].get<std::string>());
        if (!idx.ok()) {
          return absl::InvalidArgumentError(
              absl::StrCat("table '", table.name, "': ", idx.status().message()));
        }
        cell.push_back(*idx);
      }
      uint64_t count = c["count"].get<uint64_t>();
      if (count == 0) continue;
      table.counts[cell] += count;
      sum += count;
    }
    if (sum != published.n) {
      return absl::InvalidArgumentError(absl::StrCat(
          "table '", table.name, "' sums to ", sum, ", expected n = ",
          published.n));
    }
    table.total = published.n;
    published.tables.push_back(std::move(table));
  }
  return published;
}

inline Json PlbReportJson(const PlbReport& r) {
  Json out = {{"n", r.n},
              {"p", r.p.get_str()},
              {"b", r.b},
              {"strata_sizes", r.strata_sizes},
              {"universe_size", r.universe_size},
              {"epsilon_tight", LogValueJson(r.epsilon_tight)},
              {"closed_form_bound", LogValueJson(r.closed_form_bound)},
              {"gap", r.gap},
              {"bound_holds", r.bound_holds},
              {"degenerate", r.degenerate}};
  if (r.x.has_value() && r.x_prime.has_value()) {
    out["maximizing_pair"] = {{"x", DatasetJson(*r.x)},
                              {"x_prime", DatasetJson(*r.x_prime)},
                              {"distance", r.distance},
                              {"divergence", LogValueJson(r.divergence)}};
  }
  return out;
}

inline Json GamingScenarioJson(const GamingScenario& s) {
  Json steps = Json::array();
  for (const GamingStep& step : s.steps) {
    steps.push_back({{"label", step.label},
                     {"specification", step.specification},
                     {"nominal_epsilon", LogValueJson(step.nominal_epsilon)},
                     {"epsilon_tight", LogValueJson(step.epsilon_tight)},
                     {"universe_size", step.universe_size}});
  }
  return {{"scenario", GamingKindName(s.kind)},
          {"steps", steps},
          {"distributions_identical", s.distributions_identical},
          {"nominal_strictly_decreasing", s.nominal_strictly_decreasing},
          {"note", s.note}};
}

inline Json ConstantParadoxJson(const ConstantParadox& c) {
  return {{"scenario", "constant"},
          {"universe_size", c.universe_size},
          {"epsilon_unrelated_constant", LogValueJson(c.epsilon_unrelated)},
          {"epsilon_confidential_constant", LogValueJson(c.epsilon_confidential)},
          {"note", c.note}};
}

inline Json ReconstructionJson(const Schema& schema,
                               const ReconstructionResult& r,
                               const std::optional<AgreementScore>& agreement) {
  Json sets = Json::array();
  for (const std::vector<Record>& m : r.consistent) {
    Json records = Json::array();
    for (const Record& rec : m) records.push_back(RecordJson(schema, rec));
    sets.push_back(records);
  }
  Json out = {{"count", r.count()},
              {"candidates_scanned", r.candidates_scanned},
              {"consistent_set", sets}};
  if (agreement.has_value()) {
    out["agreement"] = {{"best", agreement->best.get_d()},
                        {"best_exact", agreement->best.get_str()},
                        {"expected", agreement->expected.get_d()},
                        {"expected_exact", agreement->expected.get_str()}};
  }
  return out;
}

inline Json BatteryJson(const BatteryResult& r) {
  Json failures = Json::array();
  for (size_t k = 0; k < r.reports.size(); ++k) {
    if (!r.reports[k].bound_holds) {
      failures.push_back({{"instance", k}, {"report", PlbReportJson(r.reports[k])}});
    }
  }
  return {{"instances", r.instances},
          {"passed", r.passed},
          {"min_gap", r.min_gap},
          {"failures", failures}};
}

}  // namespace dpspec

#endif  // DPSPEC_IO_H_
