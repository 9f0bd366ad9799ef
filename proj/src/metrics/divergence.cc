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

#include <algorithm>
#include <cmath>

#include "iclbias/error.h"
#include "iclbias/metrics.h"

namespace iclbias {

CategoricalDistribution CategoricalDistribution::FromCounts(
    std::vector<std::string> support, std::span<const double> counts) {
  if (support.size() != counts.size()) {
    Fail(ErrorCode::kInvalidArgument, "counts and support differ in length");
  }
  double total = 0.0;
  for (double c : counts) {
    if (c < 0.0) Fail(ErrorCode::kInvalidArgument, "negative count");
    total += c;
  }
  if (!(total > 0.0)) Fail(ErrorCode::kInvalidArgument, "all-zero counts");
  CategoricalDistribution d;
  d.support = std::move(support);
  d.mass.reserve(counts.size());
  for (double c : counts) d.mass.push_back(c / total);
  return d;
}

std::vector<double> EqualWidthEdges(double lo, double hi, int bins) {
  if (bins < 1) Fail(ErrorCode::kInvalidArgument, "need at least one bin");
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(bins + 1);
  const double width = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) edges[b] = lo + width * b;
  edges[bins] = hi;
  return edges;
}

std::size_t BinIndex(const std::vector<double>& edges, double v) {
  const std::size_t bins = edges.size() - 1;
  if (v <= edges.front()) return 0;
  if (v >= edges.back()) return bins - 1;
  auto it = std::upper_bound(edges.begin(), edges.end(), v);
  return std::min<std::size_t>(static_cast<std::size_t>(it - edges.begin()) - 1,
                               bins - 1);
}

Histogram BuildHistogram(std::span<const double> values,
                         std::vector<double> edges, double smoothing) {
  if (edges.size() < 2) Fail(ErrorCode::kInvalidArgument, "histogram needs edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      Fail(ErrorCode::kInvalidArgument, "histogram edges not increasing");
    }
  }
  if (values.empty()) Fail(ErrorCode::kInvalidArgument, "histogram of no values");
  const std::size_t bins = edges.size() - 1;
  std::vector<double> mass(bins, 0.0);
  for (double v : values) mass[BinIndex(edges, v)] += 1.0;
  const double n = static_cast<double>(values.size());
  double total = 0.0;
  for (double& m : mass) {
    m = m / n + smoothing;
    total += m;
  }
  for (double& m : mass) m /= total;
  return Histogram{std::move(edges), std::move(mass)};
}

double Tvd(const CategoricalDistribution& p, const CategoricalDistribution& q) {
  if (p.support != q.support || p.mass.size() != q.mass.size()) {
    Fail(ErrorCode::kInvalidArgument, "TVD: support mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.mass.size(); ++i) s += std::fabs(p.mass[i] - q.mass[i]);
  return 0.5 * s;
}

double Jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) Fail(ErrorCode::kInvalidArgument, "JSD: length mismatch");
  double kl_p = 0.0, kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) kl_p += p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) kl_q += q[i] * std::log2(q[i] / m);
  }
  // Rounding can leave tiny negatives or overshoot past one.
  return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, 1.0);
}

double Jsd(const CategoricalDistribution& p, const CategoricalDistribution& q) {
  if (p.support != q.support) Fail(ErrorCode::kInvalidArgument, "JSD: support mismatch");
  return Jsd(std::span<const double>(p.mass), std::span<const double>(q.mass));
}

double Jsd(const Histogram& p, const Histogram& q) {
  if (p.edges != q.edges) Fail(ErrorCode::kInvalidArgument, "JSD: edge mismatch");
  return Jsd(std::span<const double>(p.mass), std::span<const double>(q.mass));
}

namespace {

CategoricalDistribution ColumnDistribution(const Dataset& ds, std::size_t j,
                                           bool label) {
  const Schema& s = ds.schema();
  const FeatureSpec& f = label ? s.label() : s.feature(j);
  std::vector<double> counts(f.support.size(), 0.0);
  for (const auto& r : ds.records()) {
    counts[*f.category_index(label ? r.label : r.cat(j))] += 1.0;
  }
  return CategoricalDistribution::FromCounts(f.support, counts);
}

}  // namespace

DriftReport DriftScore(const Dataset& a, const Dataset& b) {
  if (!(a.schema() == b.schema())) Fail(ErrorCode::kSchema, "drift: schema mismatch");
  if (a.empty() || b.empty()) Fail(ErrorCode::kInvalidArgument, "drift: empty input");
  const Schema& s = a.schema();
  DriftReport rep;
  double tvd_sum = 0.0, jsd_sum = 0.0;
  int n_cat = 0, n_num = 0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const auto& f = s.feature(j);
    FeatureDivergence fd{f.name, f.is_categorical(), 0.0};
    if (f.is_categorical()) {
      fd.value = Tvd(ColumnDistribution(a, j, false), ColumnDistribution(b, j, false));
      tvd_sum += fd.value;
      ++n_cat;
    } else {
      const auto ca = NumericColumn(a, j);
      const auto cb = NumericColumn(b, j);
      double lo = ca.front(), hi = ca.front();
      for (double v : ca) lo = std::min(lo, v), hi = std::max(hi, v);
      for (double v : cb) lo = std::min(lo, v), hi = std::max(hi, v);
      const auto edges = EqualWidthEdges(lo, hi);
      fd.value = Jsd(BuildHistogram(ca, edges), BuildHistogram(cb, edges));
      jsd_sum += fd.value;
      ++n_num;
    }
    rep.per_feature.push_back(fd);
  }
  FeatureDivergence lab{s.label().name, true,
                        Tvd(ColumnDistribution(a, 0, true), ColumnDistribution(b, 0, true))};
  tvd_sum += lab.value;
  ++n_cat;
  rep.per_feature.push_back(lab);
  rep.mean_tvd = n_cat ? tvd_sum / n_cat : 0.0;
  rep.mean_jsd = n_num ? jsd_sum / n_num : 0.0;
  rep.total = rep.mean_tvd + rep.mean_jsd;
  return rep;
}

}  // namespace iclbias
