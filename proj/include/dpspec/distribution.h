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

#ifndef DPSPEC_DISTRIBUTION_H_
#define DPSPEC_DISTRIBUTION_H_

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/escaping.h"
#include "absl/strings/str_cat.h"
#include "dpspec/rational.h"

namespace dpspec {

// Exact finite probability mass function. Support entries are canonical
// output keys (serialized datasets or plain labels), kept sorted and unique;
// zero-mass atoms are dropped.
class OutputDistribution {
 public:
  using Atom = std::pair<std::string, Rational>;

  OutputDistribution() = default;

  // Merges repeated keys. Does not require normalization; see IsNormalized().
  static absl::StatusOr<OutputDistribution> FromMasses(
      std::vector<Atom> atoms) {
    std::map<std::string, Rational> merged;
    for (auto& [key, mass] : atoms) {
      if (mass < 0) {
        return absl::InvalidArgumentError(
            absl::StrCat("negative mass ", mass.get_str()));
      }
      merged[key] += mass;
    }
    return FromMap(std::move(merged));
  }

  static OutputDistribution FromMap(std::map<std::string, Rational> masses) {
    OutputDistribution d;
    d.atoms_.reserve(masses.size());
    for (auto& [key, mass] : masses) {
      if (mass != 0) d.atoms_.emplace_back(key, std::move(mass));
    }
    return d;
  }

  static OutputDistribution PointMass(std::string key) {
    OutputDistribution d;
    d.atoms_.emplace_back(std::move(key), Rational(1));
    return d;
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  size_t size() const { return atoms_.size(); }

  Rational TotalMass() const {
    Rational total;
    for (const auto& [key, mass] : atoms_) total += mass;
    return total;
  }
  bool IsNormalized() const { return TotalMass() == 1; }

  Rational MassOf(const std::string& key) const {
    auto it = std::lower_bound(
        atoms_.begin(), atoms_.end(), key,
        [](const Atom& a, const std::string& k) { return a.first < k; });
    if (it == atoms_.end() || it->first != key) return Rational(0);
    return it->second;
  }

  // Byte-exact rendering used for identity checks across runs.
  std::string Serialize() const {
    std::string out;
    for (const auto& [key, mass] : atoms_) {
      absl::StrAppend(&out, absl::BytesToHexString(key), "=", mass.get_str(),
                      "\n");
    }
    return out;
  }

  friend bool operator==(const OutputDistribution& a,
                         const OutputDistribution& b) {
    return a.atoms_ == b.atoms_;
  }

 private:
  std::vector<Atom> atoms_;
};

inline absl::Status CheckNormalized(const OutputDistribution& d) {
  if (!d.IsNormalized()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "distribution masses sum to ", d.TotalMass().get_str(), ", not 1"));
  }
  return absl::OkStatus();
}

}  // namespace dpspec

#endif  // DPSPEC_DISTRIBUTION_H_
