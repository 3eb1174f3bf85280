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

#ifndef DPSPEC_STRATA_H_
#define DPSPEC_STRATA_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "absl/strings/str_join.h"
#include "dpspec/schema.h"

namespace dpspec {

// Matching-value tuple -> record positions sharing it, in increasing order.
using Strata = std::map<Record, std::vector<size_t>>;

inline Record MatchingTuple(const Dataset& x, size_t position) {
  Record key;
  for (size_t v : x.schema().matching_indices()) {
    key.push_back(x.record(position)[v]);
  }
  return key;
}

// Every position lands in exactly one stratum. With no matching variables
// there is a single stratum keyed by the empty tuple.
inline Strata Stratify(const Dataset& x) {
  Strata strata;
  for (size_t i = 0; i < x.size(); ++i) {
    strata[MatchingTuple(x, i)].push_back(i);
  }
  return strata;
}

// Platform-independent label for a stratum, used to derive RNG substreams
// and to name strata in messages.
inline std::string StratumLabel(const Schema& schema, const Record& key) {
  std::vector<std::string> parts;
  const auto& matching = schema.matching_indices();
  for (size_t k = 0; k < key.size(); ++k) {
    const Variable& var = schema.variable(matching[k]);
    parts.push_back(var.name + "=" + var.values[key[k]]);
  }
  return "stratum{" + absl::StrJoin(parts, ";") + "}";
}

struct LargestStratum {
  uint64_t size = 0;
  bool empty_dataset = false;
};

inline LargestStratum FindLargestStratum(const Dataset& x) {
  LargestStratum out;
  if (x.size() == 0) {
    out.empty_dataset = true;
    return out;
  }
  for (const auto& [key, positions] : Stratify(x)) {
    out.size = std::max<uint64_t>(out.size, positions.size());
  }
  return out;
}

inline Record SwapTuple(const Dataset& x, size_t position) {
  Record tuple;
  for (size_t v : x.schema().swapping_indices()) {
    tuple.push_back(x.record(position)[v]);
  }
  return tuple;
}

}  // namespace dpspec

#endif  // DPSPEC_STRATA_H_
