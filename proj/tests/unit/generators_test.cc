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

#include <cmath>
#include <random>

#include "iclbias/error.h"
#include "iclbias/generators.h"
#include "iclbias/metrics.h"
#include "iclbias/prompt.h"
#include "tests/test_util.h"

namespace iclbias {
namespace {

using testing::GroupB;
using testing::MakeRecord;
using testing::RandomSmall;
using testing::SmallSchema;

// Four-sigma normal band for a binomial proportion; tests make dozens of
// these checks, so a 99% band alone would trip on chance.
void ExpectInBinomialCi(double observed, double p, std::size_t n) {
  const double half = 4.0 * std::sqrt(p * (1 - p) / static_cast<double>(n));
  EXPECT_NEAR(observed, p, half + 1e-12) << "p=" << p << " n=" << n;
}

double Frequency(const Dataset& ds, const std::function<bool(const Record&)>& f) {
  double c = 0;
  for (const auto& r : ds.records()) c += f(r);
  return c / static_cast<double>(ds.size());
}

AnchorSpec GroupAnchor(double p_b, double p_pos_b = 0.5) {
  AnchorSpec spec;
  spec.schema = SmallSchema();
  spec.layout = DefaultLayout(*spec.schema);
  spec.categorical["group"] = {1 - p_b, p_b};
  spec.label_given_cell.push_back({{Conjunct::Equals("group", "B")}, {1 - p_pos_b, p_pos_b}});
  return spec;
}

TEST(Alpha, Schedule) {
  EXPECT_EQ(AlphaSchedule(0), 0.0);
  EXPECT_DOUBLE_EQ(AlphaSchedule(20, 20), 0.5);
  EXPECT_DOUBLE_EQ(AlphaSchedule(80, 20), 0.8);
  for (int k = 0; k < 200; ++k) EXPECT_LT(AlphaSchedule(k), AlphaSchedule(k + 1));
  EXPECT_THROW(AlphaSchedule(5, 0.0), Error);
  EXPECT_THROW(AlphaSchedule(-1), Error);
}

TEST(Anchor, DeclarativeMarginalsAndLabelTable) {
  auto anchor = std::make_shared<AnchorModel>(FitAnchor(GroupAnchor(0.3, 0.4)));
  MixtureGenerator gen{anchor};
  auto ds = SampleMixture(gen, nullptr, 0, 5000, 1);
  const double fb = Frequency(ds, [](const Record& r) { return r.cat(0) == "B"; });
  ExpectInBinomialCi(fb, 0.3, 5000);
  double nb = 0, pb = 0;
  for (const auto& r : ds.records()) {
    if (r.cat(0) == "B") nb += 1, pb += r.label == "1";
    SmallSchema()->Validate(r);
  }
  ExpectInBinomialCi(pb / nb, 0.4, static_cast<std::size_t>(nb));
  EXPECT_NEAR(anchor->LabelRate({Conjunct::Equals("group", "B")}, "1"), 0.4, 1e-12);
  EXPECT_NEAR(anchor->CellMass({Conjunct::Equals("group", "B")}), 0.3, 1e-12);
}

TEST(Anchor, FittedSampleWithinSameSourceNoiseBand) {
  auto train = testing::LoadFixture("compas", "train");
  auto layout = DefaultLayout(train.schema());
  auto anchor = std::make_shared<AnchorModel>(FitAnchor(train, layout));
  MixtureGenerator gen{anchor};
  // Band: drift between disjoint halves of the source itself.
  std::vector<double> band;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto split = SplitDataset(train, 0.5, s);
    band.push_back(DriftScore(split.train, split.test).total);
  }
  auto sample = SampleMixture(gen, nullptr, 0, 1000, 3);
  EXPECT_LT(DriftScore(sample, train).total, 2.0 * Mean(band) + 4 * PopulationStd(band));
  EXPECT_THROW(FitAnchor(Dataset(train.schema_ptr(), {}), layout), Error);
}

TEST(Phi, SmoothedMassFormula) {
  std::vector<Record> ex;
  for (int i = 0; i < 40; ++i) ex.push_back(MakeRecord("A", "low", 1, "0"));
  for (int i = 0; i < 40; ++i) ex.push_back(MakeRecord("B", "mid", 1, "1"));
  auto m = SmoothedMarginal(ex, *SmallSchema(), "group");
  EXPECT_NEAR(m.mass[0], 40.5 / 81.0, 1e-15);
  EXPECT_NEAR(m.mass[1], 40.5 / 81.0, 1e-15);
  auto tier = SmoothedMarginal(ex, *SmallSchema(), "tier");
  EXPECT_NEAR(tier.mass[2], 0.5 / 81.5, 1e-15);
  auto pm = PhiTransform(ex, SmallSchema(), DefaultLayout(*SmallSchema()));
  EXPECT_GT(pm.Marginal("tier").mass[2], 0.0);
  EXPECT_THROW(PhiTransform({}, SmallSchema(), DefaultLayout(*SmallSchema())), Error);
}

TEST(Phi, ConditionalRateWithinSmoothingShift) {
  std::vector<Record> ex;
  for (int i = 0; i < 40; ++i) ex.push_back(MakeRecord("B", "low", 1, i < 30 ? "1" : "0"));
  for (int i = 0; i < 40; ++i) ex.push_back(MakeRecord("A", "low", 1, i < 20 ? "1" : "0"));
  auto pm = PhiTransform(ex, SmallSchema(), DefaultLayout(*SmallSchema()));
  // Laplace 0.5 on each (cell, label) stratum: (30 + 0.5) / (40 + 1).
  EXPECT_NEAR(pm.LabelRate({Conjunct::Equals("group", "B")}, "1"), 30.5 / 41.0, 1e-12);
}

TEST(Phi, NumericJitterUsesSilverman) {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8};
  double mean = 4.5, ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / 7.0);
  const double iqr = 6.25 - 2.75;  // linear-interpolated quartiles
  const double want = 0.9 * std::min(sd, iqr / 1.34) * std::pow(8.0, -0.2);
  EXPECT_NEAR(SilvermanBandwidth(v), want, 1e-12);
}

TEST(Mixture, CollapsesToComponents) {
  auto anchor = std::make_shared<AnchorModel>(FitAnchor(GroupAnchor(0.1)));
  std::vector<Record> ex;
  for (int i = 0; i < 50; ++i) ex.push_back(MakeRecord("B", "high", 9, "1"));
  auto pm = PhiTransform(ex, SmallSchema(), DefaultLayout(*SmallSchema()));
  MixtureGenerator gen{anchor};
  auto only_anchor = SampleMixture(gen, &pm, 0, 4000, 5);
  ExpectInBinomialCi(Frequency(only_anchor, [](const Record& r) { return r.cat(0) == "B"; }),
                     0.1, 4000);
  gen.alpha_tau = 1e-6;
  auto only_prompt = SampleMixture(gen, &pm, 80, 4000, 5);
  const double pb = pm.Marginal("group").mass[1];
  ExpectInBinomialCi(Frequency(only_prompt, [](const Record& r) { return r.cat(0) == "B"; }),
                     pb, 4000);
}

TEST(Mixture, ClosedFormTargetFrequency) {
  // p0 = 0.1, alpha = 0.6 (k = 30, tau = 20), prompt rate 0.5.
  auto anchor = std::make_shared<AnchorModel>(FitAnchor(GroupAnchor(0.1)));
  std::vector<Record> ex;
  for (int i = 0; i < 15; ++i) ex.push_back(MakeRecord("B", "low", 3, i % 2 ? "1" : "0"));
  for (int i = 0; i < 15; ++i) ex.push_back(MakeRecord("A", "mid", 4, i % 2 ? "1" : "0"));
  auto pm = PhiTransform(ex, SmallSchema(), DefaultLayout(*SmallSchema()));
  MixtureGenerator gen{anchor, 20.0};
  ASSERT_DOUBLE_EQ(gen.alpha(30), 0.6);
  auto ds = SampleMixture(gen, &pm, 30, 5000, 8);
  const double p_prompt = pm.Marginal("group").mass[1];
  EXPECT_NEAR(p_prompt, 0.5, 1e-12);
  ExpectInBinomialCi(Frequency(ds, [](const Record& r) { return r.cat(0) == "B"; }),
                     0.4 * 0.1 + 0.6 * 0.5, 5000);
}

TEST(Mixture, MarginalIdentityForEveryCategory) {
  auto train = testing::LoadFixture("toy", "train");
  auto layout = DefaultLayout(train.schema());
  auto anchor = std::make_shared<AnchorModel>(FitAnchor(train, layout));
  auto ex = SelectIclExamples(train, 40, 2);
  auto pm = PhiTransform(ex, train.schema_ptr(), layout);
  MixtureGenerator gen{anchor};
  const double a = gen.alpha(40);
  auto ds = SampleMixture(gen, &pm, 40, 5000, 13);
  for (const std::string feature : {"group", "tier", "y"}) {
    auto pa = anchor->Marginal(feature);
    auto pp = pm.Marginal(feature);
    const bool is_label = feature == "y";
    const std::size_t j = is_label ? 0 : train.schema().index_of(feature);
    for (std::size_t v = 0; v < pa.support.size(); ++v) {
      const double want = (1 - a) * pa.mass[v] + a * pp.mass[v];
      const double got = Frequency(ds, [&](const Record& r) {
        return (is_label ? r.label : r.cat(j)) == pa.support[v];
      });
      ExpectInBinomialCi(got, want, 5000);
    }
  }
}

TEST(Mixture, LinearInPromptFrequency) {
  auto train = testing::LoadFixture("toy", "train");
  auto layout = DefaultLayout(train.schema());
  auto anchor = std::make_shared<AnchorModel>(FitAnchor(train, layout));
  MixtureGenerator gen{anchor};
  auto pool = std::make_shared<Dataset>(train);
  BiasSpec spec;
  spec.mode = BiasMode::kMarginal;
  spec.target = {{Conjunct::Equals("group", "B")}, "1"};
  std::vector<double> xs, ys;
  for (double pi : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    spec.pi = pi;
    auto ex = InjectMarginalBias(SelectIclExamples(train, 40, 1), train.schema(), spec,
                                 PoolSampler(pool), 2).records;
    auto pm = PhiTransform(ex, train.schema_ptr(), layout);
    xs.push_back(pm.Marginal("group").mass[1]);
    auto ds = SampleMixture(gen, &pm, 40, 5000, 3);
    ys.push_back(Frequency(ds, [](const Record& r) { return r.cat(0) == "B"; }));
  }
  auto fit = OlsFit(xs, ys);
  EXPECT_NEAR(fit.slope, gen.alpha(40), 0.05);
}

TEST(Mixture, DeterministicAndSchemaValid) {
  auto anchor = std::make_shared<AnchorModel>(FitAnchor(GroupAnchor(0.2)));
  MixtureGenerator gen{anchor};
  std::mt19937_64 rng(1);
  auto ex = RandomSmall(rng, 30).records();
  auto pm = PhiTransform(ex, SmallSchema(), DefaultLayout(*SmallSchema()));
  auto a = SampleMixture(gen, &pm, 30, 500, 77);
  auto b = SampleMixture(gen, &pm, 30, 500, 77);
  EXPECT_EQ(a.records(), b.records());
  EXPECT_NE(a.records(), SampleMixture(gen, &pm, 30, 500, 78).records());
  for (const auto& r : a.records()) SmallSchema()->Validate(r);
  // Call-addressed streams: a later slice equals the matching calls alone.
  auto tail = SampleMixtureCalls(gen, &pm, 30, 100, 50, 2, {}, 77);
  EXPECT_EQ(std::vector<Record>(a.records().begin() + 200, a.records().begin() + 300), tail);
}

TEST(Mixture, SlotsForceCells) {
  auto anchor = std::make_shared<AnchorModel>(FitAnchor(GroupAnchor(0.1)));
  MixtureGenerator gen{anchor};
  std::vector<CellConstraint> slots{{{Conjunct::Equals("group", "A")}, false},
                                    {{Conjunct::Equals("group", "A")}, true}};
  auto ds = SampleMixture(gen, nullptr, 0, 100, 4, slots);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(ds[i].cat(0), i % 2 ? "B" : "A");
}

TEST(Parse, ContractChecks) {
  auto s = SmallSchema();
  auto ok = ParseGeneration(
      R"([{"group":"A","tier":"low","x":1.5,"y":"1"},{"group":"B","tier":"mid","x":2,"y":0}])",
      *s, 2);
  ASSERT_EQ(ok.records.size(), 2u);
  EXPECT_EQ(ok.records[1].label, "0");
  EXPECT_THROW(ParseGeneration(R"([{"group":"A","tier":"low","x":1,"y":"1"},
      {"group":"A","tier":"low","x":1,"y":"1"},{"group":"A","tier":"low","x":1,"y":"1"}])", *s, 2),
               Error);
  EXPECT_THROW(ParseGeneration("[] trailing", *s, 0), Error);
  EXPECT_THROW(ParseGeneration(R"({"group":"A"})", *s, 1), Error);
  auto extra = ParseGeneration(
      R"([{"group":"A","tier":"low","x":1,"y":"1","note":"hi"},{"tier":"low","group":"A","x":1,"y":"1"}])",
      *s, 2);
  EXPECT_TRUE(extra.records.empty());
  ASSERT_EQ(extra.row_errors.size(), 2u);
  EXPECT_NE(extra.row_errors[0].find("extra key 'note'"), std::string::npos);
  auto bad_values = ParseGeneration(
      R"([{"group":"C","tier":"low","x":1,"y":"1"},{"group":"A","tier":"low","x":11,"y":"1"}])",
      *s, 2);
  EXPECT_EQ(bad_values.row_errors.size(), 2u);
}

}  // namespace
}  // namespace iclbias
