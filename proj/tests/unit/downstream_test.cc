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
#include <filesystem>
#include <fstream>
#include <random>

#include "iclbias/downstream.h"
#include "iclbias/error.h"
#include "iclbias/metrics.h"
#include "tests/oracles.h"
#include "tests/test_util.h"

namespace iclbias {
namespace {

using testing::GroupB;
using testing::MakeRecord;
using testing::RandomSmall;
using testing::SmallSchema;

// y is 1 exactly when x > 5.
Dataset Separable(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<Record> rs;
  for (std::size_t i = 0; i < n; ++i) {
    double x = u(rng);
    if (std::fabs(x - 5) < 0.5) x += x < 5 ? -0.5 : 0.5;
    rs.push_back(MakeRecord(i % 2 ? "A" : "B", "mid", x, x > 5 ? "1" : "0"));
  }
  return Dataset(SmallSchema(), rs);
}

std::vector<std::string> Labels(const Dataset& ds) {
  std::vector<std::string> out;
  for (const auto& r : ds.records()) out.push_back(r.label);
  return out;
}

TEST(Logistic, SeparatesLinearData) {
  auto train = Separable(300, 1), test = Separable(200, 2);
  ClassifierSpec spec;
  auto m = Train(spec, train);
  EXPECT_EQ(Labels(test), Predict(m, test).labels);
  for (std::size_t i = 1; i < m.loss_trace.size(); ++i) {
    EXPECT_LE(m.loss_trace[i], m.loss_trace[i - 1]);
  }
  EXPECT_GT(m.iterations, 0);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(25, 4);
  Eigen::VectorXd y(25), w(4);
  for (int i = 0; i < 25; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = g(rng);
    x(i, 3) = 1.0;
    y(i) = rng() % 2;
  }
  for (int j = 0; j < 4; ++j) w(j) = g(rng);
  const double l2 = 0.05, h = 1e-6;
  auto obj = LogisticLossGrad(x, y, w, l2);
  // Direct evaluation of the mean log loss plus penalty.
  double direct = 0;
  for (int i = 0; i < 25; ++i) {
    const double p = 1 / (1 + std::exp(-x.row(i).dot(w)));
    direct -= y(i) * std::log(p) + (1 - y(i)) * std::log(1 - p);
  }
  direct = direct / 25 + 0.5 * l2 * w.head(3).squaredNorm();
  EXPECT_NEAR(obj.loss, direct, 1e-12);
  for (int j = 0; j < 4; ++j) {
    Eigen::VectorXd up = w, dn = w;
    up(j) += h;
    dn(j) -= h;
    const double fd =
        (LogisticLossGrad(x, y, up, l2).loss - LogisticLossGrad(x, y, dn, l2).loss) / (2 * h);
    EXPECT_NEAR(obj.grad(j), fd, 1e-7);
  }
}

TEST(Logistic, ScoreIsHandComputable) {
  auto train = Separable(100, 4);
  auto m = Train(ClassifierSpec{}, train);
  const auto& cols = m.encoder.columns();
  Dataset probe(SmallSchema(), {MakeRecord("A", "mid", 7.5, "1")});
  double z = m.weights(0, m.weights.cols() - 1);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    double v = 0;
    if (cols[c].category.empty()) {
      v = (7.5 - cols[c].mean) / cols[c].scale;
    } else {
      v = cols[c].category == (cols[c].feature == 0 ? "A" : "mid");
    }
    z += m.weights(0, static_cast<Eigen::Index>(c)) * v;
  }
  EXPECT_EQ(Predict(m, probe).labels[0], z > 0 ? "1" : "0");
  EXPECT_GT(z, 0);
}

TEST(Forest, MdiSumsToOneAndBlindIsZero) {
  std::mt19937_64 rng(5);
  auto ds = RandomSmall(rng, 300);
  ClassifierSpec spec;
  spec.kind = ClassifierKind::kRandomForest;
  spec.rf.trees = 20;
  spec.seed = 9;
  auto aware = Train(spec, ds);
  double sum = 0;
  for (const auto& f : MdiImportance(aware)) sum += f.value;
  EXPECT_NEAR(sum, 1.0, 1e-9);
  spec.policy = FeaturePolicy::kBlind;
  spec.blind_features = {"group"};
  auto blind = Train(spec, ds);
  for (const auto& f : MdiImportance(blind)) {
    if (f.feature == "group") EXPECT_EQ(f.value, 0.0);
  }
  EXPECT_THROW(MdiImportance(Train(ClassifierSpec{}, ds)), Error);
}

TEST(Forest, DeterministicPerSeed) {
  std::mt19937_64 rng(6);
  auto ds = RandomSmall(rng, 200);
  ClassifierSpec spec;
  spec.kind = ClassifierKind::kRandomForest;
  spec.rf.trees = 10;
  spec.seed = 3;
  EXPECT_EQ(Predict(Train(spec, ds), ds).labels, Predict(Train(spec, ds), ds).labels);
}

TEST(Forest, VoteTieGoesToSmallerLabel) {
  // Identical features with balanced labels: every leaf splits nothing.
  std::vector<Record> rs;
  for (int i = 0; i < 20; ++i) rs.push_back(MakeRecord("A", "low", 1.0, i % 2 ? "1" : "0"));
  Dataset ds(SmallSchema(), rs);
  ClassifierSpec spec;
  spec.kind = ClassifierKind::kRandomForest;
  spec.rf.trees = 2;
  spec.rf.bootstrap = false;
  auto m = Train(spec, ds);
  EXPECT_EQ(Predict(m, ds).labels[0], "0");
}

TEST(MacroF1, MatchesThreeClassOracle) {
  std::mt19937_64 rng(7);
  const char* cls[] = {"a", "b", "c"};
  for (int t = 0; t < 50; ++t) {
    std::vector<std::string> p, y;
    for (int i = 0; i < 40; ++i) {
      y.push_back(cls[rng() % 3]);
      p.push_back(cls[rng() % 3]);
    }
    EXPECT_NEAR(MacroF1(p, y), oracle::MacroF1(p, y), 1e-12);
  }
  EXPECT_DOUBLE_EQ(MacroF1({"a", "b"}, {"a", "b"}), 1.0);
  EXPECT_THROW(MacroF1({}, {}), Error);
}

TEST(Model, DumpRoundTrip) {
  std::mt19937_64 rng(8);
  auto ds = RandomSmall(rng, 150);
  const auto dir = std::filesystem::temp_directory_path() / "iclbias_model_test";
  std::filesystem::create_directories(dir);
  for (auto kind : {ClassifierKind::kLogisticRegression, ClassifierKind::kRandomForest}) {
    ClassifierSpec spec;
    spec.kind = kind;
    spec.rf.trees = 5;
    auto m = Train(spec, ds);
    const auto path = dir / (std::string(ClassifierName(kind)) + ".bin");
    SaveModel(m, path);
    auto back = LoadModel(path, SmallSchema());
    EXPECT_EQ(Predict(back, ds).labels, Predict(m, ds).labels);
    EXPECT_EQ(ModelSummary(back), ModelSummary(m));
  }
  std::ofstream(dir / "junk.bin") << "nope";
  try {
    LoadModel(dir / "junk.bin", SmallSchema());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
  std::filesystem::remove_all(dir);
}

TEST(Encoder, UnseenCategoryIsCounted) {
  std::vector<Record> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(MakeRecord("A", "low", i, i % 2 ? "1" : "0"));
  Dataset train(SmallSchema(), rs);
  auto m = Train(ClassifierSpec{}, train);
  Dataset probe(SmallSchema(), {MakeRecord("A", "high", 1, "0"), MakeRecord("B", "low", 1, "0")});
  EXPECT_EQ(Predict(m, probe).unseen, 2u);
  EXPECT_EQ(m.encoder.width(), 3u);  // group=A, tier=low, x
}

TEST(Train, SingleClassIsDegenerate) {
  Dataset ds(SmallSchema(), {MakeRecord("A", "low", 1, "1"), MakeRecord("B", "low", 2, "1")});
  try {
    Train(ClassifierSpec{}, ds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerate);
  }
}

TEST(Evaluate, SeedSummaryIsMeanOfRuns) {
  std::mt19937_64 rng(10);
  auto syn = RandomSmall(rng, 300), test = RandomSmall(rng, 200);
  ClassifierSpec spec;
  auto rep = EvaluateDownstream(spec, syn, test, GroupB(), {1, 2});
  ASSERT_EQ(rep.per_seed.size(), 2u);
  EXPECT_TRUE(std::isnan(rep.protected_mdi.mean));
  for (const auto& s : rep.per_seed) {
    EXPECT_GE(s.macro_f1, 0.0);
    EXPECT_LE(std::fabs(s.spd_d), 1.0);
  }
  EXPECT_NEAR(rep.spd_d.mean, (rep.per_seed[0].spd_d + rep.per_seed[1].spd_d) / 2, 1e-12);
}

}  // namespace
}  // namespace iclbias
