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

#include "dpspec/invariants.h"

#include <algorithm>
#include <string>
#include <vector>

#include "dpspec/divergences.h"
#include "dpspec/mechanisms.h"
#include "dpspec/strata.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpspec {
namespace {

using ::dpspec::testing_util::Hold;
using ::dpspec::testing_util::MakeSchema;
using ::dpspec::testing_util::Rows;
using ::dpspec::testing_util::Swap;

std::shared_ptr<const Schema> Households(std::vector<std::string> matching) {
  return MakeSchema({Hold("state", {"NY", "PA"}), Hold("size", {"1", "2", "3"}),
                     Swap("county", {"c1", "c2", "c3"})},
                    std::move(matching));
}

Dataset Sample5(std::vector<std::string> matching = {"state", "size"}) {
  return Rows(Households(std::move(matching)), {{"NY", "1", "c1"},
                                                {"NY", "1", "c2"},
                                                {"NY", "2", "c3"},
                                                {"PA", "1", "c1"},
                                                {"PA", "1", "c3"}});
}

std::vector<std::string> Names(const Schema& s, const std::vector<size_t>& v) {
  std::vector<std::string> out;
  for (size_t i : v) out.push_back(s.variable(i).name);
  return out;
}

TEST(DeriveInvariantsTest, HouseholdInstantiation) {
  auto schema = Households({"state", "size"});
  InvariantSpec spec = *DeriveInvariants(*schema);
  ASSERT_EQ(spec.tables.size(), 2u);
  EXPECT_EQ(spec.tables[0].name, kHoldingTable);
  EXPECT_EQ(Names(*schema, spec.tables[0].variables),
            (std::vector<std::string>{"state", "size"}));
  EXPECT_EQ(spec.tables[1].name, kMatchSwapTable);
  EXPECT_EQ(Names(*schema, spec.tables[1].variables),
            (std::vector<std::string>{"state", "size", "county"}));
}

TEST(DeriveInvariantsTest, EmptyMatchingGivesSwappingMarginal) {
  auto schema = MakeSchema({Hold("h", {"x", "y"}), Swap("s", {"a", "b"})}, {});
  InvariantSpec spec = *DeriveInvariants(*schema);
  EXPECT_EQ(Names(*schema, spec.tables[0].variables),
            (std::vector<std::string>{"h"}));
  EXPECT_EQ(Names(*schema, spec.tables[1].variables),
            (std::vector<std::string>{"s"}));
}

TEST(DeriveInvariantsTest, RequiresSwappingVariable) {
  auto schema = MakeSchema({Hold("h", {"x"})}, {});
  EXPECT_FALSE(DeriveInvariants(*schema).ok());
}

TEST(EvaluateInvariantsTest, CanonicalSerialization) {
  Dataset x = Sample5({"state"});
  InvariantValue v = EvaluateInvariants(x, *DeriveInvariants(x.schema()));
  EXPECT_EQ(v.Serialize(),
            "hold[*]=5\n"
            "hold[state=NY;size=1]=2\n"
            "hold[state=NY;size=2]=1\n"
            "hold[state=PA;size=1]=2\n"
            "match_swap[*]=5\n"
            "match_swap[state=NY;county=c1]=1\n"
            "match_swap[state=NY;county=c2]=1\n"
            "match_swap[state=NY;county=c3]=1\n"
            "match_swap[state=PA;county=c1]=1\n"
            "match_swap[state=PA;county=c3]=1\n");
}

TEST(EvaluateInvariantsTest, EmptyDatasetHasOnlyZeroTotals) {
  Dataset x = Rows(Households({"state"}), {});
  InvariantValue v = EvaluateInvariants(x, *DeriveInvariants(x.schema()));
  EXPECT_EQ(v.Serialize(), "hold[*]=0\nmatch_swap[*]=0\n");
  for (const EvaluatedTable& t : v.tables) EXPECT_TRUE(t.counts.empty());
}

TEST(EvaluateInvariantsTest, HoldingEditChangesHoldingTable) {
  Dataset x = Sample5();
  std::vector<Record> records = x.records();
  records[2][1] = 0;  // size 2 -> 1
  Dataset y = *Dataset::Create(x.schema_ptr(), records);
  InvariantSpec spec = *DeriveInvariants(x.schema());
  EXPECT_FALSE(*EvaluateInvariants(x, spec).Find(kHoldingTable) ==
               *EvaluateInvariants(y, spec).Find(kHoldingTable));
}

TEST(EvaluateInvariantsTest, IndependentOfRecordOrder) {
  RandomStream rng(51);
  for (int trial = 0; trial < 200; ++trial) {
    Dataset x = testing_util::RandomDataset(rng, 6, 3, 3);
    std::vector<Record> shuffled = x.records();
    rng.Shuffle(shuffled);
    InvariantSpec spec = *DeriveInvariants(x.schema());
    EXPECT_EQ(EvaluateInvariants(x, spec).Serialize(),
              EvaluateInvariants(x.WithRecords(shuffled), spec).Serialize());
  }
}

TEST(EvaluateInvariantsTest, RecordLevelTableSeesPositions) {
  Dataset x = Sample5();
  InvariantSpec spec =
      WithRecordLevelInvariant(*DeriveInvariants(x.schema()), x.schema());
  std::vector<Record> swapped = x.records();
  std::swap(swapped[0][2], swapped[1][2]);
  EXPECT_FALSE(EvaluateInvariants(x, spec) ==
               EvaluateInvariants(x.WithRecords(swapped), spec));
  EXPECT_THAT(EvaluateInvariants(x, spec).Serialize(),
              ::testing::HasSubstr("records[#0;state=NY;size=1;county=c1]=1"));
}

TEST(InvarianceTest, PsaSamplesKeepInvariants) {
  Dataset x = Sample5({"state"});
  InvariantSpec spec = *DeriveInvariants(x.schema());
  InvariantValue reference = EvaluateInvariants(x, spec);
  for (uint64_t seed = 0; seed < 10'000; ++seed) {
    ASSERT_EQ(EvaluateInvariants(*PsaSample(x, Rational(1, 2), seed), spec),
              reference)
        << "seed " << seed;
  }
}

TEST(InvarianceTest, PsaExactSupportKeepsInvariants) {
  RandomStream rng(52);
  for (int trial = 0; trial < 50; ++trial) {
    Dataset x = testing_util::RandomDataset(rng, 1 + rng.UniformBelow(6),
                                            1 + rng.UniformBelow(3), 3);
    InvarianceReport r = *CheckInvariance(
        Psa{Rational(1, 3)}, x, *DeriveInvariants(x.schema()), 0);
    EXPECT_TRUE(r.exact);
    EXPECT_TRUE(r.holds) << x.ToString();
    EXPECT_FALSE(r.counterexample.has_value());
  }
}

TEST(InvarianceTest, CrossStratumPoolingBreaksMatchSwapOnly) {
  Dataset x = Sample5({"state"});
  InvariantSpec spec = *DeriveInvariants(x.schema());
  MechanismDescriptor pum = Pum{Rational(1, 2), Rational(1, 2)};
  InvarianceReport sampled = *CheckInvarianceSampled(pum, x, spec, 2'000, 3);
  ASSERT_FALSE(sampled.holds);
  EXPECT_FALSE(sampled.table_holds.at(kMatchSwapTable));
  EXPECT_TRUE(sampled.table_holds.at(kHoldingTable));
  ASSERT_TRUE(sampled.counterexample.has_value());

  // The sampled counterexample lies in the exact support.
  OutputDistribution exact = *ExactDistribution(pum, x);
  EXPECT_GT(exact.MassOf(sampled.counterexample->Key()), 0);
  InvarianceReport confirmed = *CheckInvarianceExact(pum, x, spec);
  EXPECT_FALSE(confirmed.holds);
  EXPECT_FALSE(confirmed.table_holds.at(kMatchSwapTable));
  EXPECT_TRUE(confirmed.table_holds.at(kHoldingTable));
}

TEST(InvarianceTest, IdentityHoldsForEverySpec) {
  Dataset x = Sample5();
  InvariantSpec spec =
      WithRecordLevelInvariant(*DeriveInvariants(x.schema()), x.schema());
  EXPECT_TRUE(CheckInvariance(IdentityMechanism{}, x, spec, 0)->holds);
  EXPECT_TRUE(CheckInvariance(IdentityMechanism{}, x, spec, 50)->holds);
}

TEST(LargestStratumTest, RefinementNeverIncreasesBound) {
  RandomStream rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    Dataset coarse = testing_util::RandomDataset(rng, 1 + rng.UniformBelow(8),
                                                 1 + rng.UniformBelow(3), 3);
    Schema refined_schema = *coarse.schema().WithMatching({"g", "h"});
    Dataset fine =
        *Dataset::Create(Share(refined_schema), coarse.records());
    uint64_t b_coarse = FindLargestStratum(coarse).size;
    uint64_t b_fine = FindLargestStratum(fine).size;
    EXPECT_LE(b_fine, b_coarse);
    Rational p(static_cast<long>(1 + rng.UniformBelow(9)), 10);
    p.canonicalize();
    EXPECT_LE(*PsaBudgetBound(p, b_fine), *PsaBudgetBound(p, b_coarse));
  }
}

TEST(LargestStratumTest, SingleStratumIsWholeDataset) {
  Dataset x = Sample5({});
  EXPECT_EQ(FindLargestStratum(x).size, 5u);
}

}  // namespace
}  // namespace dpspec
