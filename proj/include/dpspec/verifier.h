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

// Brute-force verification of the swapping budget on small instances, and
// demonstrations of nominal budget reductions that leave the mechanism alone.

#ifndef DPSPEC_VERIFIER_H_
#define DPSPEC_VERIFIER_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "dpspec/divergences.h"
#include "dpspec/invariants.h"
#include "dpspec/log_value.h"
#include "dpspec/mechanisms.h"
#include "dpspec/rng.h"
#include "dpspec/schema.h"
#include "dpspec/specification.h"
#include "dpspec/strata.h"

namespace dpspec {

// Master seed of the committed verification battery.
inline constexpr uint64_t kBatteryMasterSeed = 0x5EED2010;
inline constexpr size_t kBatterySize = 200;

// All datasets with x0's holding values at every position whose invariants
// equal x0's. Scans every assignment of swapping values to positions, in
// lexicographic order.
inline absl::StatusOr<std::vector<Dataset>> EnumerateUniverse(
    const Dataset& x0, const InvariantSpec& spec,
    const EnumerationCaps& caps = {}) {
  const Schema& schema = x0.schema();
  const uint64_t tuples = schema.CellCount(schema.swapping_indices());
  const size_t n = x0.size();
  uint64_t candidates = 1;
  double estimate = 1.0;
  for (size_t i = 0; i < n; ++i) estimate *= static_cast<double>(tuples);
  if (estimate > static_cast<double>(caps.max_universe_candidates)) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "universe scan needs ", tuples, "^", n, " ~ ", estimate,
        " candidate assignments; cap is ", caps.max_universe_candidates));
  }
  for (size_t i = 0; i < n; ++i) candidates *= tuples;

  std::vector<Record> tuple_values{Record{}};
  for (size_t v : schema.swapping_indices()) {
    std::vector<Record> next;
    for (const Record& t : tuple_values) {
      for (size_t k = 0; k < schema.variable(v).values.size(); ++k) {
        Record r = t;
        r.push_back(static_cast<ValueIndex>(k));
        next.push_back(std::move(r));
      }
    }
    tuple_values = std::move(next);
  }

  const InvariantValue reference = EvaluateInvariants(x0, spec);
  std::vector<Dataset> universe;
  std::vector<size_t> digits(n, 0);
  std::vector<Record> assignment(n);
  for (uint64_t c = 0; c < candidates; ++c) {
    for (size_t i = 0; i < n; ++i) assignment[i] = tuple_values[digits[i]];
    Dataset candidate = x0.WithRecords(internal::WithSwapTuples(x0, assignment));
    if (EvaluateInvariants(candidate, spec) == reference) {
      universe.push_back(std::move(candidate));
    }
    for (size_t k = n; k > 0; --k) {
      if (++digits[k - 1] < tuple_values.size()) break;
      digits[k - 1] = 0;
    }
  }
  return universe;
}

struct PlbReport {
  std::string universe_key;
  size_t universe_size = 0;
  LogValue epsilon_tight;
  LogValue closed_form_bound;
  // closed_form_bound - epsilon_tight, as a double.
  double gap = 0.0;
  bool bound_holds = false;
  bool degenerate = false;
  std::optional<Dataset> x;
  std::optional<Dataset> x_prime;
  uint64_t distance = 0;
  LogValue divergence;
  size_t n = 0;
  std::vector<size_t> strata_sizes;
  Rational p;
  uint64_t b = 0;
};

inline absl::StatusOr<PlbReport> VerifyPsa(const Dataset& x0, const Rational& p,
                                           const EnumerationCaps& caps = {}) {
  if (x0.size() == 0) {
    return absl::FailedPreconditionError("verification needs a record");
  }
  absl::StatusOr<InvariantSpec> inv = DeriveInvariants(x0.schema());
  if (!inv.ok()) return inv.status();
  absl::StatusOr<std::vector<Dataset>> universe =
      EnumerateUniverse(x0, *inv, caps);
  if (!universe.ok()) return universe.status();

  PlbReport report;
  report.n = x0.size();
  report.p = p;
  report.b = FindLargestStratum(x0).size;
  for (const auto& [key, positions] : Stratify(x0)) {
    report.strata_sizes.push_back(positions.size());
  }
  for (const Dataset& member : *universe) {
    if (FindLargestStratum(member).size != report.b) {
      return absl::InternalError(absl::StrCat(
          "largest stratum differs inside the universe at ", member.ToString()));
    }
  }
  absl::StatusOr<LogValue> bound = PsaBudgetBound(p, report.b);
  if (!bound.ok()) return bound.status();
  report.closed_form_bound = *bound;

  DPSpecification spec{Domain(x0.schema_ptr(), SizePolicy::Fixed(x0.size())),
                       Multiverse::FromInvariants(*inv), InputPremetric{},
                       Multiplicative{}, ConstantPlb(*bound)};
  DistributionOracle oracle = [&](const Dataset& x) {
    return PsaExactDistribution(x, p, caps);
  };
  absl::StatusOr<SpecificationCheck> check =
      CheckSpecification(oracle, spec, *universe);
  if (!check.ok()) return check.status();

  report.universe_key = check->universe_key;
  report.universe_size = check->universe_size;
  report.epsilon_tight = check->epsilon_tight;
  report.degenerate = check->degenerate;
  report.bound_holds = check->passes;
  report.gap = report.closed_form_bound.ToDouble() - report.epsilon_tight.ToDouble();
  if (check->maximizing_pair) {
    report.x = (*universe)[check->maximizing_pair->first];
    report.x_prime = (*universe)[check->maximizing_pair->second];
    report.distance = check->pair_distance;
    report.divergence = check->pair_divergence;
  }
  return report;
}

struct BatteryInstance {
  size_t id = 0;
  Dataset x;
  Rational p;
};

// Random instances with 2..6 records, 1..3 strata, 2 or 3 swapping values and
// p on the grid {0.1, ..., 0.9}. Deterministic in `master_seed`.
inline std::vector<BatteryInstance> MakeBattery(
    uint64_t master_seed = kBatteryMasterSeed, size_t count = kBatterySize) {
  std::vector<BatteryInstance> out;
  for (size_t id = 0; id < count; ++id) {
    RandomStream rng =
        RandomStream::Derive(master_seed, absl::StrCat("instance-", id));
    const size_t strata = 1 + rng.UniformBelow(3);
    const size_t swap_values = 2 + rng.UniformBelow(2);
    const size_t n = 2 + rng.UniformBelow(5);
    std::vector<std::string> m_values, s_values;
    for (size_t k = 0; k < strata; ++k) m_values.push_back(absl::StrCat("m", k));
    for (size_t k = 0; k < swap_values; ++k) {
      s_values.push_back(std::string(1, static_cast<char>('a' + k)));
    }
    absl::StatusOr<Schema> schema = Schema::Create(
        {{"group", m_values, Role::kHolding},
         {"kind", {"u", "v"}, Role::kHolding},
         {"area", s_values, Role::kSwapping}},
        {"group"});
    std::vector<Record> records(n);
    for (Record& r : records) {
      r = {static_cast<ValueIndex>(rng.UniformBelow(strata)),
           static_cast<ValueIndex>(rng.UniformBelow(2)),
           static_cast<ValueIndex>(rng.UniformBelow(swap_values))};
    }
    Rational p(static_cast<long>(1 + id % 9), 10);
    p.canonicalize();
    out.push_back({id, *Dataset::Create(Share(*std::move(schema)),
                                        std::move(records)),
                   p});
  }
  return out;
}

struct BatteryResult {
  size_t instances = 0;
  size_t passed = 0;
  double min_gap = 0.0;
  std::vector<PlbReport> reports;
};

inline absl::StatusOr<BatteryResult> RunBattery(
    const std::vector<BatteryInstance>& battery,
    const EnumerationCaps& caps = {}) {
  BatteryResult result;
  result.instances = battery.size();
  for (const BatteryInstance& instance : battery) {
    absl::StatusOr<PlbReport> report = VerifyPsa(instance.x, instance.p, caps);
    if (!report.ok()) {
      return absl::Status(report.status().code(),
                          absl::StrCat("instance ", instance.id, ": ",
                                       report.status().message()));
    }
    if (report->bound_holds) ++result.passed;
    if (result.reports.empty() || report->gap < result.min_gap) {
      result.min_gap = report->gap;
    }
    result.reports.push_back(*std::move(report));
  }
  return result;
}

enum class GamingKind {
  kRefineStrata,
  kIncreaseDelta,
  kRefineGranularity,
  kAddInvariants,
};

inline std::string GamingKindName(GamingKind kind) {
  switch (kind) {
    case GamingKind::kRefineStrata:
      return "refine-strata";
    case GamingKind::kIncreaseDelta:
      return "increase-delta";
    case GamingKind::kRefineGranularity:
      return "refine-granularity";
    case GamingKind::kAddInvariants:
      return "add-invariants";
  }
  return "unknown";
}

inline absl::StatusOr<GamingKind> ParseGamingKind(absl::string_view name) {
  for (GamingKind k :
       {GamingKind::kRefineStrata, GamingKind::kIncreaseDelta,
        GamingKind::kRefineGranularity, GamingKind::kAddInvariants}) {
    if (GamingKindName(k) == name) return k;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown scenario '", name, "'"));
}

struct GamingInstance {
  Dataset x;
  Rational p;
  // refine-strata: holding variable added to the matching set.
  std::string refine_variable;
  // refine-granularity: units per record after refinement.
  uint64_t granularity = 2;
  // increase-delta: delta values, in increasing order.
  std::vector<Rational> deltas = {Rational(0), Rational(1, 100),
                                  Rational(1, 10)};
};

struct GamingStep {
  std::string label;
  std::string specification;
  // The budget one would report: the closed-form bound for refine-strata,
  // the tight budget otherwise.
  LogValue nominal_epsilon;
  LogValue epsilon_tight;
  size_t universe_size = 0;
};

struct GamingScenario {
  GamingKind kind;
  std::vector<GamingStep> steps;
  // Exact output distribution of every member of the starting universe,
  // byte-compared between the first and last configuration.
  bool distributions_identical = false;
  bool nominal_strictly_decreasing = false;
  std::string note;
};

namespace internal {

inline absl::StatusOr<std::string> SerializeUniverseDistributions(
    const std::vector<Dataset>& universe, const Rational& p,
    const std::shared_ptr<const Schema>& schema, const EnumerationCaps& caps) {
  std::string out;
  for (const Dataset& member : universe) {
    absl::StatusOr<Dataset> rebound = Dataset::Create(schema, member.records());
    if (!rebound.ok()) return rebound.status();
    absl::StatusOr<OutputDistribution> d =
        PsaExactDistribution(*rebound, p, caps);
    if (!d.ok()) return d.status();
    absl::StrAppend(&out, "#", absl::BytesToHexString(member.Key()), "\n",
                    d->Serialize());
  }
  return out;
}

inline absl::StatusOr<SpecificationCheck> CheckPsaUniverse(
    const Dataset& x0, const Rational& p, const InvariantSpec& inv,
    const InputPremetric& input, const OutputPremetric& output,
    const EnumerationCaps& caps) {
  absl::StatusOr<std::vector<Dataset>> universe =
      EnumerateUniverse(x0, inv, caps);
  if (!universe.ok()) return universe.status();
  DPSpecification spec{Domain(x0.schema_ptr(), SizePolicy::Fixed(x0.size())),
                       Multiverse::FromInvariants(inv), input, output,
                       ConstantPlb(LogValue::Infinity())};
  DistributionOracle oracle = [&](const Dataset& x) {
    return PsaExactDistribution(x, p, caps);
  };
  return CheckSpecification(oracle, spec, *universe);
}

inline std::string DescribeSpec(const Schema& schema,
                                const InvariantSpec& inv,
                                const InputPremetric& input,
                                const OutputPremetric& output) {
  std::vector<std::string> tables;
  for (const TableDescriptor& t : inv.tables) tables.push_back(t.name);
  return absl::StrCat(
      "matching={", absl::StrJoin(schema.matching_names(), ","),
      "} invariants={", absl::StrJoin(tables, ","), "} d=hamming*",
      input.units_per_record, " D=", PremetricName(output));
}

}  // namespace internal

// Base instances bundled with the demonstrations.
inline GamingInstance DefaultGamingInstance(GamingKind kind) {
  if (kind == GamingKind::kRefineStrata) {
    // Both "block" groups inside region r0 carry the same area, so splitting
    // r0 by block shrinks the largest stratum without changing any swap
    // outcome.
    Schema schema = *Schema::Create({{"region", {"r0", "r1"}, Role::kHolding},
                                     {"block", {"b0", "b1"}, Role::kHolding},
                                     {"area", {"a", "b"}, Role::kSwapping}},
                                    {"region"});
    Dataset x = *Dataset::FromStrings(Share(std::move(schema)),
                                      {{"r0", "b0", "a"},
                                       {"r0", "b0", "a"},
                                       {"r0", "b1", "a"},
                                       {"r0", "b1", "a"},
                                       {"r1", "b0", "a"},
                                       {"r1", "b0", "b"}});
    return {std::move(x), Rational(1, 2), "block"};
  }
  Schema schema = *Schema::Create({{"region", {"r0"}, Role::kHolding},
                                   {"area", {"a", "b", "c"}, Role::kSwapping}},
                                  {"region"});
  Dataset x = *Dataset::FromStrings(Share(std::move(schema)),
                                    {{"r0", "a"}, {"r0", "b"}, {"r0", "c"}});
  return {std::move(x), Rational(3, 10), ""};
}

inline absl::StatusOr<GamingScenario> RunGamingScenario(
    GamingKind kind, const GamingInstance& base,
    const EnumerationCaps& caps = {}) {
  GamingScenario scenario;
  scenario.kind = kind;
  const Dataset& x0 = base.x;
  absl::StatusOr<InvariantSpec> inv = DeriveInvariants(x0.schema());
  if (!inv.ok()) return inv.status();
  absl::StatusOr<std::vector<Dataset>> universe =
      EnumerateUniverse(x0, *inv, caps);
  if (!universe.ok()) return universe.status();
  absl::StatusOr<std::string> before_pmfs =
      internal::SerializeUniverseDistributions(*universe, base.p,
                                               x0.schema_ptr(), caps);
  if (!before_pmfs.ok()) return before_pmfs.status();
  std::shared_ptr<const Schema> after_schema = x0.schema_ptr();

  auto add_step = [&](std::string label, const Dataset& x,
                      const InvariantSpec& spec_inv, const InputPremetric& input,
                      const OutputPremetric& output,
                      std::optional<LogValue> nominal) -> absl::Status {
    absl::StatusOr<SpecificationCheck> check =
        internal::CheckPsaUniverse(x, base.p, spec_inv, input, output, caps);
    if (!check.ok()) return check.status();
    GamingStep step;
    step.label = std::move(label);
    step.specification =
        internal::DescribeSpec(x.schema(), spec_inv, input, output);
    step.epsilon_tight = check->epsilon_tight;
    step.nominal_epsilon = nominal ? *nominal : check->epsilon_tight;
    step.universe_size = check->universe_size;
    scenario.steps.push_back(std::move(step));
    return absl::OkStatus();
  };

  switch (kind) {
    case GamingKind::kRefineStrata: {
      std::vector<std::string> matching = x0.schema().matching_names();
      matching.push_back(base.refine_variable);
      absl::StatusOr<Schema> refined = x0.schema().WithMatching(matching);
      if (!refined.ok()) return refined.status();
      after_schema = Share(*std::move(refined));
      absl::StatusOr<Dataset> x1 = Dataset::Create(after_schema, x0.records());
      if (!x1.ok()) return x1.status();
      absl::StatusOr<InvariantSpec> inv1 = DeriveInvariants(*after_schema);
      if (!inv1.ok()) return inv1.status();
      absl::StatusOr<LogValue> bound0 =
          PsaBudgetBound(base.p, FindLargestStratum(x0).size);
      if (!bound0.ok()) return bound0.status();
      absl::StatusOr<LogValue> bound1 =
          PsaBudgetBound(base.p, FindLargestStratum(*x1).size);
      if (!bound1.ok()) return bound1.status();
      if (absl::Status s = add_step(
              absl::StrCat("b=", FindLargestStratum(x0).size), x0, *inv,
              InputPremetric{}, Multiplicative{}, *bound0);
          !s.ok()) {
        return s;
      }
      if (absl::Status s = add_step(
              absl::StrCat("b=", FindLargestStratum(*x1).size), *x1, *inv1,
              InputPremetric{}, Multiplicative{}, *bound1);
          !s.ok()) {
        return s;
      }
      scenario.note =
          "nominal epsilon is the closed-form bound; finer matching shrinks "
          "the largest stratum";
      break;
    }
    case GamingKind::kIncreaseDelta:
      for (const Rational& delta : base.deltas) {
        if (absl::Status s = add_step(
                absl::StrCat("delta=", delta.get_str()), x0, *inv,
                InputPremetric{}, DeltaMultiplicative{delta}, std::nullopt);
            !s.ok()) {
          return s;
        }
      }
      scenario.note = "approximate premetric discounts up to delta of mass";
      break;
    case GamingKind::kRefineGranularity:
      for (uint64_t units : {uint64_t{1}, base.granularity}) {
        if (absl::Status s = add_step(absl::StrCat("units_per_record=", units),
                                      x0, *inv, InputPremetric{units},
                                      Multiplicative{}, std::nullopt);
            !s.ok()) {
          return s;
        }
      }
      scenario.note = "distances counted in sub-record units";
      break;
    case GamingKind::kAddInvariants: {
      InvariantSpec more = WithRecordLevelInvariant(*inv, x0.schema());
      if (absl::Status s = add_step("swap invariants", x0, *inv,
                                    InputPremetric{}, Multiplicative{},
                                    std::nullopt);
          !s.ok()) {
        return s;
      }
      if (absl::Status s = add_step("plus record-level invariant", x0, more,
                                    InputPremetric{}, Multiplicative{},
                                    std::nullopt);
          !s.ok()) {
        return s;
      }
      scenario.note =
          "with the whole dataset invariant every universe is a singleton";
      break;
    }
  }

  absl::StatusOr<std::string> after_pmfs =
      internal::SerializeUniverseDistributions(*universe, base.p, after_schema,
                                               caps);
  if (!after_pmfs.ok()) return after_pmfs.status();
  scenario.distributions_identical = *before_pmfs == *after_pmfs;
  scenario.nominal_strictly_decreasing = true;
  for (size_t i = 1; i < scenario.steps.size(); ++i) {
    if (!(scenario.steps[i].nominal_epsilon <
          scenario.steps[i - 1].nominal_epsilon)) {
      scenario.nominal_strictly_decreasing = false;
    }
  }
  return scenario;
}

// A constant mechanism has zero tight budget on every universe, even when its
// constant is the confidential dataset itself: the budget only constrains how
// outputs vary across inputs, not what a fixed output reveals.
struct ConstantParadox {
  LogValue epsilon_unrelated;    // constant is another dataset
  LogValue epsilon_confidential;  // constant is x0
  size_t universe_size = 0;
  std::string note;
};

inline absl::StatusOr<ConstantParadox> RunConstantParadox(
    const Dataset& x0, const EnumerationCaps& caps = {}) {
  absl::StatusOr<InvariantSpec> inv = DeriveInvariants(x0.schema());
  if (!inv.ok()) return inv.status();
  absl::StatusOr<std::vector<Dataset>> universe =
      EnumerateUniverse(x0, *inv, caps);
  if (!universe.ok()) return universe.status();
  DPSpecification spec{Domain(x0.schema_ptr(), SizePolicy::Fixed(x0.size())),
                       Multiverse::FromInvariants(*inv), InputPremetric{},
                       Multiplicative{}, ConstantPlb(LogValue::Zero())};
  ConstantParadox out;
  out.universe_size = universe->size();
  std::vector<Record> blank(x0.size(), Record(x0.schema().num_variables(), 0));
  for (int which = 0; which < 2; ++which) {
    MechanismDescriptor mech =
        ConstantMechanism{which == 0 ? x0.WithRecords(blank) : x0};
    DistributionOracle oracle = [&](const Dataset& x) {
      return ExactDistribution(mech, x, caps);
    };
    absl::StatusOr<SpecificationCheck> check =
        CheckSpecification(oracle, spec, *universe);
    if (!check.ok()) return check.status();
    (which == 0 ? out.epsilon_unrelated : out.epsilon_confidential) =
        check->epsilon_tight;
  }
  out.note =
      "constant mechanism releasing the confidential dataset still has zero "
      "tight budget; the mechanism must not be chosen as a function of the "
      "confidential data";
  return out;
}

}  // namespace dpspec

#endif  // DPSPEC_VERIFIER_H_
