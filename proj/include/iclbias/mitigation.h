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

// Preprocessing defenses applied to an in-context example pool.

#ifndef ICLBIAS_MITIGATION_H_
#define ICLBIAS_MITIGATION_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iclbias/data.h"

namespace iclbias {

enum class MitigationStrategy {
  kNone,
  kRandomSubset,
  kGroupBalanced,
  kFairSpd,
  kCorrelationFilter,
};

const char* MitigationName(MitigationStrategy s);
MitigationStrategy ParseMitigation(const std::string& name);

struct MitigationConfig {
  MitigationStrategy strategy = MitigationStrategy::kNone;
  double epsilon = 0.02;
  double drop_fraction = 0.10;
  // nullopt: use the size Fair-SPD would keep on the same pool.
  std::optional<int> k_star;

  void Validate() const;
};

struct MitigationResult {
  std::vector<Record> pool;          // kept records, input order
  std::vector<std::size_t> kept;     // input indices, ascending
  std::vector<std::size_t> removed;  // input indices, ascending
  bool degenerate = false;  // Fair-SPD stopped before reaching epsilon
  bool shortfall = false;   // a quota could not be met
  std::vector<double> spd_trace;  // Fair-SPD: SPD before each step and at exit
};

// Greedy pruning: repeatedly drops the record whose removal minimizes |SPD|
// (lowest index on ties) until |SPD| <= epsilon. Removals that would empty
// a subgroup are never taken. Stops with `degenerate` when no removal is
// possible or the best one would raise |SPD|.
MitigationResult FairSpdPrune(const std::vector<Record>& pool, const Schema& schema,
                              const SubgroupSpec& sub, double epsilon);

// floor(k*/2) unprivileged and ceil(k*/2) privileged records, without
// replacement; a short group is kept whole and the other fills the gap.
MitigationResult GroupBalance(const std::vector<Record>& pool, const Schema& schema,
                              const SubgroupSpec& sub, int k_star, std::uint64_t seed);

struct CorrelationProfile {
  std::vector<std::string> features;  // profiled features, schema order
  std::vector<double> rho;
  std::vector<double> pearson, spearman, mutual_info;  // raw components
  // Column each feature is standardized on: the numerical value, or the
  // indicator of `category` for categorical features.
  std::vector<std::string> category;
  std::vector<double> mean, stddev;
  std::vector<double> scores;  // s_i per pool record
};

// Features other than the label, the protected features and those named by
// the subgroup are profiled against the unprivileged indicator.
CorrelationProfile ComputeCorrelationProfile(const std::vector<Record>& pool,
                                             const Schema& schema,
                                             const SubgroupSpec& sub);

// Drops the ceil(drop_fraction * n) highest-scoring records; among equal
// scores the higher index goes first.
MitigationResult CorrelationFilter(const std::vector<Record>& pool, const Schema& schema,
                                   const SubgroupSpec& sub, double drop_fraction,
                                   const CorrelationProfile* profile = nullptr);

MitigationResult RandomSubset(const std::vector<Record>& pool, int k_star,
                              std::uint64_t seed);

MitigationResult ApplyMitigation(const MitigationConfig& cfg,
                                 const std::vector<Record>& pool, const Schema& schema,
                                 const SubgroupSpec& sub, std::uint64_t seed);

// Helpers shared with the test oracles.
double PearsonCorrelation(const std::vector<double>& x, const std::vector<double>& y);
std::vector<double> AverageRanks(const std::vector<double>& x);
double MutualInformation(const std::vector<int>& x, const std::vector<int>& y);
// 10-quantile bucket of every value (ties share a bucket).
std::vector<int> QuantileBins(const std::vector<double>& x, int bins = 10);

}  // namespace iclbias

#endif  // ICLBIAS_MITIGATION_H_
