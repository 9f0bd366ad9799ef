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

double SpdOfLabels(std::span<const std::string> labels,
                   std::span<const std::uint8_t> unprivileged,
                   const std::string& favorable) {
  if (labels.size() != unprivileged.size()) {
    Fail(ErrorCode::kInvalidArgument, "SPD: length mismatch");
  }
  std::size_t n_u = 0, n_p = 0, f_u = 0, f_p = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool fav = labels[i] == favorable;
    if (unprivileged[i]) {
      ++n_u;
      f_u += fav;
    } else {
      ++n_p;
      f_p += fav;
    }
  }
  if (n_u == 0 || n_p == 0) {
    Fail(ErrorCode::kDegenerate, n_u == 0 ? "SPD: unprivileged subgroup is empty"
                                          : "SPD: privileged subgroup is empty");
  }
  return static_cast<double>(f_u) / static_cast<double>(n_u) -
         static_cast<double>(f_p) / static_cast<double>(n_p);
}

double Spd(const Dataset& ds, const SubgroupSpec& sub) {
  std::vector<std::string> labels;
  labels.reserve(ds.size());
  for (const auto& r : ds.records()) labels.push_back(r.label);
  const auto membership = SubgroupMembership(ds, sub);
  return SpdOfLabels(labels, membership, sub.favorable_label);
}

GroupRates ComputeGroupRates(std::span<const std::string> preds,
                             std::span<const std::string> truth,
                             std::span<const std::uint8_t> unprivileged,
                             const std::string& favorable, bool need_fpr) {
  if (preds.size() != truth.size() || preds.size() != unprivileged.size()) {
    Fail(ErrorCode::kInvalidArgument, "group rates: length mismatch");
  }
  // [group][truth positive][pred positive]
  double c[2][2][2] = {};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    c[unprivileged[i] ? 0 : 1][truth[i] == favorable][preds[i] == favorable] += 1;
  }
  auto rate = [&](int g, int t, const char* what) {
    const double denom = c[g][t][0] + c[g][t][1];
    if (denom == 0.0) {
      Fail(ErrorCode::kDegenerate,
           std::string(what) + " undefined: " +
               (g == 0 ? "unprivileged" : "privileged") + " group has no " +
               (t ? "positive" : "negative") + " ground-truth instances");
    }
    return c[g][t][1] / denom;
  };
  GroupRates r{};
  r.tpr_unprivileged = rate(0, 1, "TPR");
  r.tpr_privileged = rate(1, 1, "TPR");
  if (need_fpr) {
    r.fpr_unprivileged = rate(0, 0, "FPR");
    r.fpr_privileged = rate(1, 0, "FPR");
  }
  return r;
}

double Eod(std::span<const std::string> preds,
           std::span<const std::string> truth,
           std::span<const std::uint8_t> unprivileged,
           const std::string& favorable) {
  const auto r = ComputeGroupRates(preds, truth, unprivileged, favorable, true);
  return 0.5 * (std::fabs(r.tpr_unprivileged - r.tpr_privileged) +
                std::fabs(r.fpr_unprivileged - r.fpr_privileged));
}

double Eo(std::span<const std::string> preds,
          std::span<const std::string> truth,
          std::span<const std::uint8_t> unprivileged,
          const std::string& favorable) {
  const auto r = ComputeGroupRates(preds, truth, unprivileged, favorable, false);
  return std::fabs(r.tpr_unprivileged - r.tpr_privileged);
}

double ExpectedStatistic(const Dataset& ds, const BiasStatistic& phi) {
  if (ds.empty()) Fail(ErrorCode::kInvalidArgument, "expected statistic of empty dataset");
  double sum = 0.0;
  for (const auto& r : ds.records()) {
    const double v = phi.evaluate(ds.schema(), r);
    if (!(std::fabs(v) <= 1.0)) {
      Fail(ErrorCode::kInvalidArgument,
           "statistic '" + phi.name + "' left [-1, 1]");
    }
    sum += v;
  }
  return sum / static_cast<double>(ds.size());
}

double Mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double PopulationStd(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = Mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

BlockStats ComputeBlockStats(const Dataset& ds,
                             const std::function<double(const Dataset&)>& metric,
                             int n_blocks) {
  if (n_blocks < 1) Fail(ErrorCode::kInvalidArgument, "need at least one block");
  if (ds.size() < static_cast<std::size_t>(n_blocks)) {
    Fail(ErrorCode::kInvalidArgument, "fewer rows than blocks");
  }
  const std::size_t size = ds.size() / n_blocks;
  BlockStats out;
  for (int b = 0; b < n_blocks; ++b) {
    const std::size_t begin = b * size;
    const std::size_t end = (b == n_blocks - 1) ? ds.size() : begin + size;
    out.values.push_back(metric(ds.Slice(begin, end)));
  }
  out.mean = Mean(out.values);
  out.stddev = PopulationStd(out.values);
  return out;
}

RegressionFit OlsFit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) Fail(ErrorCode::kInvalidArgument, "OLS: length mismatch");
  if (xs.size() < 2) Fail(ErrorCode::kInvalidArgument, "OLS: need at least two points");
  const double mx = Mean(xs), my = Mean(ys);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) Fail(ErrorCode::kInvalidArgument, "OLS: degenerate xs (all equal)");
  RegressionFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.slope * xs[i] + fit.intercept);
    ss_res += e * e;
  }
  if (syy == 0.0) {
    fit.r_squared = 1.0;
  } else {
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return fit;
}

}  // namespace iclbias
