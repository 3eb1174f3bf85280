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

#include "dpspec/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dpspec/divergences.h"
#include "dpspec/invariants.h"
#include "dpspec/strata.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace dpspec {
namespace {

using ::dpspec::testing_util::Hold;
using ::dpspec::testing_util::MakeSchema;
using ::dpspec::testing_util::Rows;
using ::dpspec::testing_util::Swap;
using ::testing::HasSubstr;

std::shared_ptr<const Schema> StateCounty() {
  return MakeSchema({Hold("state", {"A", "B"}), Hold("size", {"1", "2"}),
                     Swap("county", {"a", "b", "c"})},
                    {"state"});
}

Dataset SixRecords() {
  return Rows(StateCounty(), {{"A", "1", "a"},
                              {"A", "2", "b"},
                              {"A", "1", "c"},
                              {"B", "2", "a"},
                              {"B", "1", "b"},
                              {"B", "2", "b"}});
}

std::map<Record, std::multiset<Record>> SwapMultisets(const Dataset& x) {
  std::map<Record, std::multiset<Record>> out;
  for (const auto& [key, positions] : Stratify(x)) {
    for (size_t pos : positions) out[key].insert(SwapTuple(x, pos));
  }
  return out;
}

void ExpectHoldingUntouched(const Dataset& x, const Dataset& y) {
  ASSERT_EQ(x.size(), y.size());
  for (size_t i = 0; i < x.size(); ++i) {
    for (size_t v : x.schema().holding_indices()) {
      ASSERT_EQ(x.record(i)[v], y.record(i)[v]) << "position " << i;
    }
  }
}

TEST(RandomStreamTest, SplitMixMatchesReferenceSequence) {
  uint64_t state = 0;
  EXPECT_EQ(SplitMix64(state), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(SplitMix64(state), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(SplitMix64(state), 0x06c45d188009454fULL);
}

TEST(RandomStreamTest, UniformBelowIsInRangeAndRoughlyFlat) {
  RandomStream rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70'000; ++i) {
    uint64_t v = rng.UniformBelow(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 10'000, 500);
}

TEST(RandomStreamTest, ExactBernoulliRate) {
  RandomStream rng(4);
  int hits = 0;
  for (int i = 0; i < 100'000; ++i) hits += rng.Bernoulli(Rational(3, 10));
  EXPECT_NEAR(hits, 30'000, 600);
  EXPECT_FALSE(RandomStream(1).Bernoulli(0));
  EXPECT_TRUE(RandomStream(1).Bernoulli(1));
}

TEST(StratifyTest, EmptyMatchingGivesOneStratum) {
  auto schema = MakeSchema({Hold("h", {"x"}), Swap("s", {"a", "b"})}, {});
  Strata strata = Stratify(Rows(schema, {{"x", "a"}, {"x", "b"}, {"x", "a"}}));
  ASSERT_EQ(strata.size(), 1u);
  EXPECT_EQ(strata.begin()->second, (std::vector<size_t>{0, 1, 2}));
}

TEST(StratifyTest, TwoStatesGiveTwoStrata) {
  Strata strata = Stratify(SixRecords());
  ASSERT_EQ(strata.size(), 2u);
  size_t total = 0;
  for (const auto& [key, positions] : strata) total += positions.size();
  EXPECT_EQ(total, 6u);
  EXPECT_EQ(FindLargestStratum(SixRecords()).size, 3u);
}

TEST(StratifyTest, EmptyDatasetIsFlagged) {
  LargestStratum b = FindLargestStratum(Rows(StateCounty(), {}));
  EXPECT_TRUE(b.empty_dataset);
  EXPECT_EQ(b.size, 0u);
}

TEST(PsaExactTest, TwoDistinctRecords) {
  auto schema = MakeSchema({Hold("h", {"x"}), Swap("s", {"a", "b"})}, {});
  Dataset x = Rows(schema, {{"x", "a"}, {"x", "b"}});
  Dataset swapped = Rows(schema, {{"x", "b"}, {"x", "a"}});
  Rational p(3, 10);
  OutputDistribution d = *PsaExactDistribution(x, p);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.MassOf(swapped.Key()), p * p / 2);
  EXPECT_EQ(d.MassOf(x.Key()), 1 - p * p / 2);
}

TEST(PsaExactTest, EqualSwapValuesGivePointMass) {
  auto schema = MakeSchema({Hold("h", {"x", "y"}), Swap("s", {"a", "b"})}, {});
  Dataset x = Rows(schema, {{"x", "a"}, {"y", "a"}});
  EXPECT_EQ(*PsaExactDistribution(x, Rational(1, 2)),
            OutputDistribution::PointMass(x.Key()));
}

TEST(PsaExactTest, ZeroRateIsIdentity) {
  EXPECT_EQ(*PsaExactDistribution(SixRecords(), 0),
            OutputDistribution::PointMass(SixRecords().Key()));
  for (uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(*PsaSample(SixRecords(), 0, seed), SixRecords());
  }
}

TEST(PsaExactTest, SingletonStrataNeverChange) {
  Dataset x = Rows(StateCounty(), {{"A", "1", "a"}, {"B", "2", "b"}});
  EXPECT_EQ(*PsaExactDistribution(x, Rational(9, 10)),
            OutputDistribution::PointMass(x.Key()));
  for (uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(*PsaSample(x, Rational(9, 10), seed), x);
  }
}

TEST(PsaExactTest, MatchesGlobalEnumerationOracle) {
  RandomStream rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    size_t n = 1 + rng.UniformBelow(6);
    Dataset x = testing_util::RandomDataset(rng, n, 1 + rng.UniformBelow(3),
                                            2 + rng.UniformBelow(2));
    Rational p(static_cast<long>(1 + rng.UniformBelow(9)), 10);
    p.canonicalize();
    OutputDistribution exact = *PsaExactDistribution(x, p);
    EXPECT_TRUE(exact.IsNormalized());
    EXPECT_EQ(exact, OutputDistribution::FromMap(oracle::SwapOracle(x, p)))
        << x.ToString() << " p=" << p;
  }
}

TEST(PsaExactTest, SupportStaysInsideUniverse) {
  RandomStream rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    Dataset x = testing_util::RandomDataset(rng, 5, 2, 3);
    InvariantSpec spec = *DeriveInvariants(x.schema());
    InvariantValue reference = EvaluateInvariants(x, spec);
    OutputDistribution d = *PsaExactDistribution(x, Rational(1, 2));
    for (const auto& [key, mass] : d.atoms()) {
      Dataset y = *Dataset::FromKey(x.schema_ptr(), key);
      EXPECT_EQ(EvaluateInvariants(y, spec), reference);
      EXPECT_EQ(FindLargestStratum(y).size, FindLargestStratum(x).size);
    }
  }
}

TEST(PsaExactTest, OversizedStratumIsNamed) {
  std::vector<std::vector<std::string>> rows(8, {"A", "1", "a"});
  absl::StatusOr<OutputDistribution> d =
      PsaExactDistribution(Rows(StateCounty(), rows), Rational(1, 2));
  EXPECT_EQ(d.status().code(), absl::StatusCode::kResourceExhausted);
  EXPECT_THAT(d.status().message(), HasSubstr("stratum{state=A}"));
}

TEST(PsaExactTest, RejectsSchemaWithoutSwappingVariable) {
  auto schema = MakeSchema({Hold("h", {"x"})}, {});
  EXPECT_EQ(PsaExactDistribution(Rows(schema, {{"x"}}), Rational(1, 2))
                .status()
                .code(),
            absl::StatusCode::kFailedPrecondition);
}

TEST(PsaSampleTest, HoldingValuesAndStratumMultisetsArePreserved) {
  const Dataset x = SixRecords();
  const auto before = SwapMultisets(x);
  for (uint64_t seed = 0; seed < 10'000; ++seed) {
    Dataset y = *PsaSample(x, Rational(3, 10), seed);
    ExpectHoldingUntouched(x, y);
    ASSERT_EQ(SwapMultisets(y), before) << "seed " << seed;
  }
}

TEST(PsaSampleTest, SameSeedSameOutput) {
  for (uint64_t seed : {0ULL, 1ULL, 987654321ULL}) {
    EXPECT_EQ(*PsaSample(SixRecords(), Rational(1, 2), seed),
              *PsaSample(SixRecords(), Rational(1, 2), seed));
  }
}

TEST(PsaSampleTest, FrozenOutputForFixedSeed) {
  // Regression guard for cross-platform reproducibility of the stream layout.
  Dataset y = *PsaSample(SixRecords(), Rational(1, 2), 2025);
  EXPECT_EQ(y.ToString(), "[A,1,a][A,2,c][A,1,b][B,2,b][B,1,a][B,2,b]");
}

TEST(PsaSampleTest, AddingAStratumLeavesOtherStrataUnchanged) {
  const Dataset x = SixRecords();
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < x.size(); ++i) rows.push_back(x.RowStrings(i));
  auto schema = MakeSchema({Hold("state", {"A", "B", "C"}),
                            Hold("size", {"1", "2"}),
                            Swap("county", {"a", "b", "c"})},
                           {"state"});
  std::vector<std::vector<std::string>> extended = rows;
  extended.insert(extended.begin(), {"C", "1", "c"});
  extended.insert(extended.begin() + 3, {"C", "2", "a"});
  Dataset big = Rows(schema, extended);
  Dataset small = Rows(schema, rows);
  for (uint64_t seed = 0; seed < 200; ++seed) {
    Dataset ys = *PsaSample(small, Rational(1, 2), seed);
    Dataset yb = *PsaSample(big, Rational(1, 2), seed);
    std::vector<Record> kept;
    for (size_t i = 0; i < yb.size(); ++i) {
      if (yb.RowStrings(i)[0] != "C") kept.push_back(yb.record(i));
    }
    EXPECT_EQ(kept, ys.records()) << "seed " << seed;
  }
}

TEST(PsaSampleTest, FrequenciesWithinThreeStandardErrors) {
  const Dataset x = SixRecords();
  const Rational p(3, 10);
  const int samples = 10'000;
  OutputDistribution exact = *PsaExactDistribution(x, p);
  std::map<std::string, int> counts;
  uint64_t state = 77;
  for (int t = 0; t < samples; ++t) {
    ++counts[PsaSample(x, p, SplitMix64(state))->Key()];
  }
  for (const auto& [key, mass] : exact.atoms()) {
    double q = mass.get_d();
    double se = std::sqrt(q * (1 - q) / samples);
    double freq = static_cast<double>(counts[key]) / samples;
    EXPECT_LE(std::abs(freq - q), 3 * se + 1.0 / samples) << "mass " << mass;
  }
  for (const auto& [key, c] : counts) EXPECT_GT(exact.MassOf(key), 0);
}

TEST(PsaSampleTest, PassesChiSquareAgainstExactPmf) {
  const Dataset x = SixRecords();
  MechanismDescriptor mech = Psa{Rational(3, 10)};
  OutputDistribution exact = *ExactDistribution(mech, x);
  testing_util::GoodnessOfFit fit =
      testing_util::ChiSquareAgainstExact(mech, x, exact, 10'000, 5);
  EXPECT_FALSE(fit.rejects())
      << fit.statistic << " vs " << fit.critical << " dof " << fit.dof;
}

TEST(PumTest, ZeroCrossRateEqualsPsa) {
  RandomStream rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    Dataset x = testing_util::RandomDataset(rng, 4, 2, 3);
    Rational p(static_cast<long>(1 + rng.UniformBelow(9)), 10);
    p.canonicalize();
    EXPECT_EQ(*PumExactDistribution(x, Pum{p, 0}), *PsaExactDistribution(x, p));
  }
}

TEST(PumTest, ZeroCrossRatePreservesMatchSwapOnEverySample) {
  const Dataset x = SixRecords();
  InvariantSpec spec = *DeriveInvariants(x.schema());
  InvarianceReport report =
      *CheckInvarianceSampled(Pum{Rational(1, 2), 0}, x, spec, 2'000, 8);
  EXPECT_TRUE(report.holds);
}

TEST(PumTest, FullCrossRateBreaksMatchSwapButNotHolding) {
  const Dataset x = SixRecords();
  InvariantSpec spec = *DeriveInvariants(x.schema());
  InvariantValue reference = EvaluateInvariants(x, spec);
  int violations = 0;
  uint64_t state = 9;
  for (int t = 0; t < 10'000; ++t) {
    Dataset y = *PumSample(x, Pum{Rational(1, 2), 1}, SplitMix64(state));
    InvariantValue got = EvaluateInvariants(y, spec);
    ASSERT_EQ(*got.Find(kHoldingTable), *reference.Find(kHoldingTable));
    ExpectHoldingUntouched(x, y);
    if (!(*got.Find(kMatchSwapTable) == *reference.Find(kMatchSwapTable))) {
      ++violations;
    }
  }
  EXPECT_GT(violations, 0);
}

TEST(PumTest, ExactOracleIsNormalizedAndMatchesSamples) {
  const Dataset x = SixRecords();
  MechanismDescriptor mech = Pum{Rational(2, 5), Rational(1, 2)};
  OutputDistribution exact = *ExactDistribution(mech, x);
  EXPECT_TRUE(exact.IsNormalized());
  testing_util::GoodnessOfFit fit =
      testing_util::ChiSquareAgainstExact(mech, x, exact, 10'000, 6);
  EXPECT_FALSE(fit.rejects())
      << fit.statistic << " vs " << fit.critical << " dof " << fit.dof;
}

TEST(PumTest, ExactOracleCapped) {
  std::vector<std::vector<std::string>> rows(8, {"A", "1", "a"});
  EXPECT_EQ(PumExactDistribution(Rows(StateCounty(), rows),
                                 Pum{Rational(1, 2), Rational(1, 2)})
                .status()
                .code(),
            absl::StatusCode::kResourceExhausted);
}

TEST(PumTest, RejectsOutOfRangeCrossRate) {
  EXPECT_FALSE(PumSample(SixRecords(), Pum{Rational(1, 2), 2}, 1).ok());
}

std::shared_ptr<const Schema> Bit() {
  return MakeSchema({Swap("bit", {"0", "1"})}, {});
}

TEST(RandomizedResponseTest, ZeroFlipIsPointMass) {
  Dataset x = Rows(Bit(), {{"0"}, {"1"}, {"1"}});
  EXPECT_EQ(*RrExactDistribution(x, 0), OutputDistribution::PointMass(x.Key()));
}

TEST(RandomizedResponseTest, HalfFlipIsUniform) {
  Dataset x = Rows(Bit(), {{"0"}, {"1"}, {"1"}});
  OutputDistribution d = *RrExactDistribution(x, Rational(1, 2));
  ASSERT_EQ(d.size(), 8u);
  for (const auto& [key, mass] : d.atoms()) EXPECT_EQ(mass, Rational(1, 8));
}

TEST(RandomizedResponseTest, SingleRecordBudget) {
  for (long k : {1, 2, 3, 4}) {
    Rational flip(k, 10);
    flip.canonicalize();
    LogValue eps =
        *MultDivergence(*RrExactDistribution(Rows(Bit(), {{"0"}}), flip),
                        *RrExactDistribution(Rows(Bit(), {{"1"}}), flip));
    EXPECT_EQ(eps, LogValue::LogOf((1 - flip) / flip));
  }
}

TEST(RandomizedResponseTest, RejectsNonBinarySchema) {
  auto schema = MakeSchema({Swap("s", {"a", "b", "c"})}, {});
  EXPECT_EQ(
      RrExactDistribution(Rows(schema, {{"a"}}), Rational(1, 4)).status().code(),
      absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(RrSample(Rows(schema, {{"a"}}), Rational(1, 4), 1).ok());
}

TEST(RandomizedResponseTest, SamplesMatchExactPmf) {
  Dataset x = Rows(Bit(), {{"0"}, {"1"}, {"1"}, {"0"}});
  MechanismDescriptor mech = RandomizedResponse{Rational(1, 5)};
  testing_util::GoodnessOfFit fit = testing_util::ChiSquareAgainstExact(
      mech, x, *ExactDistribution(mech, x), 10'000, 7);
  EXPECT_FALSE(fit.rejects()) << fit.statistic << " vs " << fit.critical;
}

TEST(ConstantAndIdentityTest, PointMasses) {
  Dataset x = SixRecords();
  Dataset c = Rows(StateCounty(), {{"A", "1", "a"}});
  EXPECT_EQ(*ExactDistribution(ConstantMechanism{c}, x),
            OutputDistribution::PointMass(c.Key()));
  EXPECT_EQ(*ExactDistribution(IdentityMechanism{}, x),
            OutputDistribution::PointMass(x.Key()));
  EXPECT_EQ(*Sample(ConstantMechanism{c}, x, 3), c);
  EXPECT_EQ(*Sample(IdentityMechanism{}, x, 3), x);
}

TEST(MechanismNameTest, Renders) {
  EXPECT_EQ(MechanismName(Psa{Rational(1, 2)}), "psa(p=1/2)");
  EXPECT_EQ(MechanismName(Pum{Rational(1, 2), Rational(1, 10)}),
            "pum(p=1/2,alpha_cross=1/10)");
  EXPECT_EQ(MechanismName(IdentityMechanism{}), "identity");
}

}  // namespace
}  // namespace dpspec
