// Copyright 2026 The iclbias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "iclbias/data.h"
#include "iclbias/error.h"
#include "tests/test_util.h"

namespace iclbias {
namespace {

using testing::GroupB;
using testing::RandomSmall;
using testing::SmallSchema;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(Csv, ParsesThreeRowsInOrder) {
  const std::string text =
      "group,tier,x,y\nA,low,1.5,0\nB,high,2,1\nA,\"mid\",9.75,1\n";
  auto ds = ParseCsv(text, SmallSchema());
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds[0].cat(0), "A");
  EXPECT_EQ(ds[1].num(2), 2.0);
  EXPECT_EQ(ds[2].cat(1), "mid");
  EXPECT_EQ(ds[2].label, "1");
}

TEST(Csv, ColumnOrderFollowsHeader) {
  auto ds = ParseCsv("y,x,tier,group\n1,3.5,low,B\n", SmallSchema());
  EXPECT_EQ(ds[0], (Record{{std::string("B"), std::string("low"), 3.5}, "1"}));
}

TEST(Csv, RejectsBadInput) {
  auto s = SmallSchema();
  EXPECT_EQ(CodeOf([&] { ParseCsv("group,tier,x,y\nA,low,,0\n", s); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([&] { ParseCsv("group,tier,x,y\nC,low,1,0\n", s); }), ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([&] { ParseCsv("group,tier,x,y\nA,low,11,0\n", s); }), ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([&] { ParseCsv("group,tier,x,y\nA,low,abc,0\n", s); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([&] { ParseCsv("group,tier,y\nA,low,0\n", s); }), ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([&] { ParseCsv("group,tier,x,y\nA,low,1\n", s); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([&] { ParseCsv("", s); }), ErrorCode::kParse);
}

TEST(Csv, ClampOptionPullsValuesIntoRange) {
  auto ds = ParseCsv("group,tier,x,y\nA,low,11,0\nB,low,-2,1\n", SmallSchema(),
                     IngestOptions{true});
  EXPECT_EQ(ds[0].num(2), 10.0);
  EXPECT_EQ(ds[1].num(2), 0.0);
}

TEST(Csv, RoundTripIsRecordWiseIdentical) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto ds = RandomSmall(rng, 40);
    auto back = ParseCsv(ToCsv(ds), ds.schema_ptr());
    EXPECT_EQ(back.records(), ds.records());
  }
}

TEST(Csv, BundledFixturesLoad) {
  for (const char* name : {"compas", "adult", "diabetes", "thyroid", "toy"}) {
    auto train = testing::LoadFixture(name, "train");
    auto test = testing::LoadFixture(name, "test");
    EXPECT_GT(train.size(), 100u) << name;
    EXPECT_GT(test.size(), 100u) << name;
    EXPECT_EQ(ParseCsv(ToCsv(train), train.schema_ptr()).records(), train.records()) << name;
  }
}

TEST(Schema, JsonRoundTrip) {
  auto s = LoadSchema(testing::DataDir() / "adult.schema.json");
  EXPECT_EQ(SchemaFromJson(SchemaToJson(s)), s);
  EXPECT_EQ(s.protected_features().size(), 3u);
  EXPECT_EQ(CodeOf([] { SchemaFromJson(R"({"features":[{"name":"a","kind":"categorical",
      "support":["x"],"bogus":1}],"label":{"name":"y","support":["0","1"]}})"); }),
            ErrorCode::kSchema);
}

TEST(Split, PartitionsForAllSeeds) {
  std::mt19937_64 rng(4);
  auto base = RandomSmall(rng, 57);
  // Tag each row with a unique x so rows can be identified after the split.
  std::vector<Record> rows = base.records();
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].values[2] = static_cast<double>(i) / 10.0;
  Dataset ds(SmallSchema(), rows);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto split = SplitDataset(ds, 0.8, seed);
    EXPECT_EQ(split.train.size() + split.test.size(), ds.size());
    std::set<double> seen;
    for (const auto& r : split.train.records()) seen.insert(r.num(2));
    for (const auto& r : split.test.records()) EXPECT_TRUE(seen.insert(r.num(2)).second);
    EXPECT_EQ(seen.size(), ds.size());
    EXPECT_FALSE(split.degenerate);
  }
  EXPECT_EQ(CodeOf([&] { SplitDataset(ds, 1.0, 1); }), ErrorCode::kInvalidArgument);
}

TEST(Split, DeterministicPerSeed) {
  std::mt19937_64 rng(5);
  auto ds = RandomSmall(rng, 50);
  EXPECT_EQ(SplitDataset(ds, 0.5, 9).train.records(), SplitDataset(ds, 0.5, 9).train.records());
}

TEST(Subgroup, MaskMatchesPredicate) {
  std::mt19937_64 rng(6);
  auto ds = RandomSmall(rng, 60);
  auto mask = SubgroupMask(ds, GroupB());
  auto member = SubgroupMembership(ds, GroupB());
  std::size_t j = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const bool b = ds[i].cat(0) == "B";
    EXPECT_EQ(member[i], b ? 1 : 0);
    if (b) EXPECT_EQ(mask[j++], i);
  }
  EXPECT_EQ(j, mask.size());
}

TEST(Subgroup, IntervalAndConjunction) {
  std::mt19937_64 rng(7);
  auto ds = RandomSmall(rng, 80);
  SubgroupSpec sub{{Conjunct::Equals("group", "A"), Conjunct::Within("x", 2.0, 5.0)}, "1"};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const bool want = ds[i].cat(0) == "A" && ds[i].num(2) >= 2.0 && ds[i].num(2) <= 5.0;
    EXPECT_EQ(sub.Matches(ds.schema(), ds[i]), want);
  }
  SubgroupSpec bad{{Conjunct::Equals("group", "Z")}, "1"};
  EXPECT_THROW(bad.Validate(ds.schema()), Error);
  SubgroupSpec bad_interval{{Conjunct::Within("tier", 0, 1)}, "1"};
  EXPECT_THROW(bad_interval.Validate(ds.schema()), Error);
}

TEST(Empirical, CategoricalAndNumerical) {
  std::mt19937_64 rng(8);
  auto ds = RandomSmall(rng, 90);
  auto cat = std::get<CategoricalDistribution>(EmpiricalDistributionOf(ds, "tier"));
  double low = 0;
  for (const auto& r : ds.records()) low += r.cat(1) == "low";
  EXPECT_NEAR(cat.mass[0], low / 90.0, 1e-15);
  auto hist = std::get<Histogram>(EmpiricalDistributionOf(ds, "x"));
  double total = 0;
  for (double m : hist.mass) total += m;
  EXPECT_NEAR(total, 1.0, 1e-12);
  Dataset empty(SmallSchema(), {});
  EXPECT_THROW(EmpiricalDistributionOf(empty, "x"), Error);
}

}  // namespace
}  // namespace iclbias
