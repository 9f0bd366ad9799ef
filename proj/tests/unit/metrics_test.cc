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
#include <numeric>
#include <random>

#include "iclbias/error.h"
#include "iclbias/metrics.h"
#include "tests/test_util.h"

namespace iclbias {
namespace {

using testing::GroupB;
using testing::MakeRecord;
using testing::RandomSmall;
using testing::SmallSchema;

CategoricalDistribution Dist(std::vector<double> mass) {
  std::vector<std::string> support;
  for (std::size_t i = 0; i < mass.size(); ++i) support.push_back(std::to_string(i));
  return CategoricalDistribution::FromCounts(support, mass);
}

std::vector<double> RandomSimplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = e(rng);
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= s;
  return v;
}

double KlOracle(const std::vector<double>& p, const std::vector<double>& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) s += p[i] * std::log2(p[i] / m[i]);
  }
  return s;
}

double JsdOracle(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return 0.5 * KlOracle(p, m) + 0.5 * KlOracle(q, m);
}

TEST(Tvd, KnownValues) {
  EXPECT_NEAR(Tvd(Dist({0.5, 0.5}), Dist({0.8, 0.2})), 0.3, 1e-12);
  EXPECT_DOUBLE_EQ(Tvd(Dist({1, 0}), Dist({0, 1})), 1.0);
  EXPECT_DOUBLE_EQ(Tvd(Dist({0.2, 0.8}), Dist({0.2, 0.8})), 0.0);
  EXPECT_NEAR(Tvc(Dist({0.5, 0.5}), Dist({0.8, 0.2})), 0.7, 1e-12);
}

TEST(Tvd, SupportMismatchThrows) {
  auto p = CategoricalDistribution::FromCounts({"a", "b"}, std::vector<double>{1, 1});
  auto q = CategoricalDistribution::FromCounts({"b", "a"}, std::vector<double>{1, 1});
  EXPECT_THROW(Tvd(p, q), Error);
}

TEST(Tvd, MetricPropertiesOnRandomTriples) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 6;
    auto a = Dist(RandomSimplex(rng, n));
    auto b = Dist(RandomSimplex(rng, n));
    auto c = Dist(RandomSimplex(rng, n));
    EXPECT_DOUBLE_EQ(Tvd(a, b), Tvd(b, a));
    EXPECT_LE(Tvd(a, c), Tvd(a, b) + Tvd(b, c) + 1e-12);
    EXPECT_GE(Tvd(a, b), 0.0);
    EXPECT_LE(Tvd(a, b), 1.0);
  }
}

TEST(Jsd, KnownValues) {
  EXPECT_NEAR(Jsd(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0, 1e-12);
  EXPECT_NEAR(Jsd(std::vector<double>{0.3, 0.7}, std::vector<double>{0.3, 0.7}), 0.0, 1e-15);
  const double oracle = JsdOracle({0.5, 0.5}, {1.0, 0.0});
  EXPECT_NEAR(Jsd(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}), oracle, 1e-9);
}

TEST(Jsd, SymmetricAndBounded) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 8;
    auto p = RandomSimplex(rng, n);
    auto q = RandomSimplex(rng, n);
    const double v = Jsd(p, q);
    EXPECT_NEAR(v, Jsd(q, p), 1e-15);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 + 1e-12);
    EXPECT_NEAR(v, JsdOracle(p, q), 1e-9);
  }
}

TEST(Histogram, SmoothedJsdMatchesOracle) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> a(300), b(200);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = g(rng) + 0.5;
  double lo = 1e300, hi = -1e300;
  for (double v : a) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : b) lo = std::min(lo, v), hi = std::max(hi, v);
  auto edges = EqualWidthEdges(lo, hi);
  ASSERT_EQ(edges.size(), 21u);
  auto ha = BuildHistogram(a, edges);
  auto hb = BuildHistogram(b, edges);
  // Oracle histogram: count, add 1e-9 per bin, normalize.
  auto oracle_mass = [&](const std::vector<double>& xs) {
    std::vector<double> c(20, 0.0);
    const double w = (hi - lo) / 20.0;
    for (double v : xs) c[std::min<std::size_t>(19, static_cast<std::size_t>((v - lo) / w))] += 1;
    double s = 0;
    for (auto& x : c) s += (x += 1e-9);
    for (auto& x : c) x /= s;
    return c;
  };
  const double want = JsdOracle(oracle_mass(a), oracle_mass(b));
  EXPECT_NEAR(Jsd(ha, hb), want, 1e-6);
}

TEST(Spd, CountingOracle) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 50; ++t) {
    auto ds = RandomSmall(rng, 50);
    double nu = 0, pu = 0, np = 0, pp = 0;
    for (const auto& r : ds.records()) {
      const bool u = r.cat(0) == "B";
      (u ? nu : np) += 1;
      if (r.label == "1") (u ? pu : pp) += 1;
    }
    EXPECT_DOUBLE_EQ(Spd(ds, GroupB()), pu / nu - pp / np);
  }
}

TEST(Spd, HandValuesAndAntisymmetry) {
  std::vector<Record> rows;
  for (int i = 0; i < 10; ++i) rows.push_back(MakeRecord("B", "low", 1, i < 2 ? "1" : "0"));
  for (int i = 0; i < 10; ++i) rows.push_back(MakeRecord("A", "low", 1, i < 5 ? "1" : "0"));
  Dataset ds(SmallSchema(), rows);
  EXPECT_NEAR(Spd(ds, GroupB()), -0.3, 1e-12);
  SubgroupSpec a{{Conjunct::Equals("group", "A")}, "1"};
  EXPECT_DOUBLE_EQ(Spd(ds, a), -Spd(ds, GroupB()));
}

TEST(Spd, EmptySubgroupIsAnError) {
  Dataset ds(SmallSchema(), {MakeRecord("A", "low", 1, "1"), MakeRecord("A", "mid", 2, "0")});
  try {
    Spd(ds, GroupB());
    FAIL() << "expected a degenerate error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerate);
  }
}

struct Rates {
  double tpr_u, tpr_p, fpr_u, fpr_p;
};

Rates CountRates(const std::vector<std::string>& pred, const std::vector<std::string>& truth,
                 const std::vector<std::uint8_t>& u) {
  double c[2][4] = {};  // group -> tp, pos, fp, neg
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto& g = c[u[i] ? 0 : 1];
    if (truth[i] == "1") {
      g[1] += 1;
      g[0] += pred[i] == "1";
    } else {
      g[3] += 1;
      g[2] += pred[i] == "1";
    }
  }
  return {c[0][0] / c[0][1], c[1][0] / c[1][1], c[0][2] / c[0][3], c[1][2] / c[1][3]};
}

TEST(EoEod, CountingOracleOnRandomCases) {
  std::mt19937_64 rng(15);
  int checked = 0;
  while (checked < 100) {
    std::vector<std::string> pred(40), truth(40);
    std::vector<std::uint8_t> u(40);
    for (int i = 0; i < 40; ++i) {
      pred[i] = rng() % 2 ? "1" : "0";
      truth[i] = rng() % 2 ? "1" : "0";
      u[i] = rng() % 2;
    }
    const Rates r = CountRates(pred, truth, u);
    if (!std::isfinite(r.tpr_u + r.tpr_p + r.fpr_u + r.fpr_p)) continue;
    ++checked;
    EXPECT_NEAR(Eo(pred, truth, u, "1"), std::fabs(r.tpr_u - r.tpr_p), 1e-12);
    EXPECT_NEAR(Eod(pred, truth, u, "1"),
                0.5 * (std::fabs(r.tpr_u - r.tpr_p) + std::fabs(r.fpr_u - r.fpr_p)), 1e-12);
  }
}

TEST(EoEod, UndefinedRateThrows) {
  std::vector<std::string> pred{"1", "0", "1", "0"}, truth{"0", "0", "1", "0"};
  std::vector<std::uint8_t> u{1, 1, 0, 0};
  EXPECT_THROW(Eo(pred, truth, u, "1"), Error);
}

TEST(ExpectedStatistic, IndicatorMatchesCount) {
  std::mt19937_64 rng(16);
  auto ds = RandomSmall(rng, 77);
  BiasStatistic phi{"pos_and_b", [](const Schema&, const Record& r) {
                      return r.label == "1" && r.cat(0) == "B" ? 1.0 : 0.0;
                    }};
  double count = 0;
  for (const auto& r : ds.records()) count += r.label == "1" && r.cat(0) == "B";
  EXPECT_NEAR(ExpectedStatistic(ds, phi), count / 77.0, 1e-15);
}

TEST(BlockStats, ContiguousBlocksWithRemainderInLast) {
  std::mt19937_64 rng(17);
  auto ds = RandomSmall(rng, 103);
  std::vector<std::size_t> sizes;
  auto bs = ComputeBlockStats(ds, [&](const Dataset& b) {
    sizes.push_back(b.size());
    return static_cast<double>(b.size());
  });
  EXPECT_EQ(sizes, (std::vector<std::size_t>{20, 20, 20, 20, 23}));
  auto spd_blocks = ComputeBlockStats(ds, [&](const Dataset& b) { return Spd(b, GroupB()); });
  for (int i = 0; i < 5; ++i) {
    const std::size_t end = i == 4 ? 103 : (i + 1) * 20;
    EXPECT_DOUBLE_EQ(spd_blocks.values[i], Spd(ds.Slice(i * 20, end), GroupB()));
  }
  auto constant = ComputeBlockStats(ds, [](const Dataset&) { return 0.25; });
  EXPECT_EQ(constant.stddev, 0.0);
  EXPECT_EQ(constant.mean, 0.25);
}

TEST(Ols, ExactLineAndDegenerateBranches) {
  std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  auto f = OlsFit(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  auto flat = OlsFit(x, std::vector<double>{4, 4, 4, 4});
  EXPECT_EQ(flat.slope, 0.0);
  EXPECT_EQ(flat.r_squared, 1.0);
  EXPECT_THROW(OlsFit(std::vector<double>{1, 1}, std::vector<double>{0, 1}), Error);
}

TEST(Ols, NormalEquationsOracleAndShiftInvariance) {
  std::mt19937_64 rng(18);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> x(20), y(20);
  for (int i = 0; i < 20; ++i) {
    x[i] = g(rng);
    y[i] = 0.7 * x[i] + 0.2 + 0.3 * g(rng);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < 20; ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
  const double slope = (20 * sxy - sx * sy) / (20 * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / 20;
  auto f = OlsFit(x, y);
  EXPECT_NEAR(f.slope, slope, 1e-9);
  EXPECT_NEAR(f.intercept, icpt, 1e-9);
  std::vector<double> y2 = y;
  for (auto& v : y2) v += 3.0;
  auto f2 = OlsFit(x, y2);
  EXPECT_NEAR(f2.slope, f.slope, 1e-12);
  EXPECT_NEAR(f2.intercept, f.intercept + 3.0, 1e-12);
  EXPECT_GE(f.r_squared, 0.0);
  EXPECT_LE(f.r_squared, 1.0);
}

TEST(Drift, SelfIsZeroAndTotalIsSumOfMeans) {
  std::mt19937_64 rng(19);
  auto a = RandomSmall(rng, 200);
  auto b = RandomSmall(rng, 150, 0.3);
  EXPECT_EQ(DriftScore(a, a).total, 0.0);
  auto r = DriftScore(a, b);
  EXPECT_NEAR(r.total, r.mean_tvd + r.mean_jsd, 1e-12);
  // group, tier, label categorical; x numerical.
  ASSERT_EQ(r.per_feature.size(), 4u);
  EXPECT_NEAR(r.mean_tvd, (r.per_feature[0].value + r.per_feature[1].value +
                           r.per_feature[3].value) / 3.0, 1e-12);
  EXPECT_NEAR(r.mean_jsd, r.per_feature[2].value, 1e-12);
}

TEST(Drift, SameSourceBelowNoiseBand) {
  std::mt19937_64 rng(20);
  std::vector<double> same;
  for (int i = 0; i < 20; ++i) same.push_back(DriftScore(RandomSmall(rng, 500),
                                                         RandomSmall(rng, 500)).total);
  const double band = Mean(same) + 4 * PopulationStd(same);
  EXPECT_LT(DriftScore(RandomSmall(rng, 500), RandomSmall(rng, 500)).total, band);
  EXPECT_GT(DriftScore(RandomSmall(rng, 500), RandomSmall(rng, 500, 0.9, 0.1)).total, band);
}

TEST(Metrics, PureFunctions) {
  std::mt19937_64 rng(21);
  auto a = RandomSmall(rng, 100);
  auto b = RandomSmall(rng, 100);
  EXPECT_EQ(DriftScore(a, b).total, DriftScore(a, b).total);
  EXPECT_EQ(Spd(a, GroupB()), Spd(a, GroupB()));
}

}  // namespace
}  // namespace iclbias
