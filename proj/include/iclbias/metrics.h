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

// Distributional and group-fairness statistics. Every function here is pure.

#ifndef ICLBIAS_METRICS_H_
#define ICLBIAS_METRICS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iclbias/data.h"
#include "iclbias/metrics_types.h"

namespace iclbias {

// Total variation distance, 0.5 * sum |p - q|. Throws kInvalidArgument on a
// support mismatch.
double Tvd(const CategoricalDistribution& p, const CategoricalDistribution& q);
inline double Tvc(const CategoricalDistribution& p,
                  const CategoricalDistribution& q) {
  return 1.0 - Tvd(p, q);
}

// Jensen-Shannon divergence in bits, so the value lies in [0, 1]. Zero-mass
// terms contribute nothing.
double Jsd(std::span<const double> p, std::span<const double> q);
double Jsd(const CategoricalDistribution& p, const CategoricalDistribution& q);
double Jsd(const Histogram& p, const Histogram& q);

struct FeatureDivergence {
  std::string feature;
  bool categorical = true;
  double value = 0.0;  // TVD for categorical, JSD for numerical
};

struct DriftReport {
  std::vector<FeatureDivergence> per_feature;  // schema order, label last
  double mean_tvd = 0.0;
  double mean_jsd = 0.0;
  double total = 0.0;  // mean_tvd + mean_jsd
};

// Drift score D_f: mean TVD over categorical columns (label included) plus
// mean JSD over numerical columns, with histogram edges taken from the
// pooled range of both samples.
DriftReport DriftScore(const Dataset& a, const Dataset& b);

// P(y = fav | unprivileged) - P(y = fav | privileged). Throws kDegenerate if
// either side is empty.
double Spd(const Dataset& ds, const SubgroupSpec& sub);
double SpdOfLabels(std::span<const std::string> labels,
                   std::span<const std::uint8_t> unprivileged,
                   const std::string& favorable);

struct GroupRates {
  double tpr_unprivileged, tpr_privileged;
  double fpr_unprivileged, fpr_privileged;
};

// Binary view: label == favorable is the positive class. Throws kDegenerate
// when a group lacks positives (TPR) or, if `need_fpr`, negatives (FPR).
GroupRates ComputeGroupRates(std::span<const std::string> preds,
                             std::span<const std::string> truth,
                             std::span<const std::uint8_t> unprivileged,
                             const std::string& favorable, bool need_fpr);

// 0.5 * (|dTPR| + |dFPR|).
double Eod(std::span<const std::string> preds,
           std::span<const std::string> truth,
           std::span<const std::uint8_t> unprivileged,
           const std::string& favorable);
// |dTPR|.
double Eo(std::span<const std::string> preds,
          std::span<const std::string> truth,
          std::span<const std::uint8_t> unprivileged,
          const std::string& favorable);

// A bounded statistic phi(x, a, y) with values in [-1, 1].
struct BiasStatistic {
  std::string name;
  std::function<double(const Schema&, const Record&)> evaluate;
};

// Sample mean of phi. Throws kInvalidArgument if phi leaves [-1, 1].
double ExpectedStatistic(const Dataset& ds, const BiasStatistic& phi);

struct BlockStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::vector<double> values;
};

// Contiguous equal-size blocks in generation order, remainder to the last.
BlockStats ComputeBlockStats(const Dataset& ds,
                             const std::function<double(const Dataset&)>& metric,
                             int n_blocks = 5);

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares y = slope * x + intercept. Throws kInvalidArgument
// on fewer than two points or constant xs.
RegressionFit OlsFit(std::span<const double> xs, std::span<const double> ys);

double Mean(std::span<const double> v);
double PopulationStd(std::span<const double> v);

}  // namespace iclbias

#endif  // ICLBIAS_METRICS_H_
