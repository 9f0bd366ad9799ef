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

#ifndef ICLBIAS_METRICS_TYPES_H_
#define ICLBIAS_METRICS_TYPES_H_

#include <span>
#include <string>
#include <vector>

namespace iclbias {

inline constexpr int kDefaultHistogramBins = 20;
inline constexpr double kHistogramSmoothing = 1e-9;

struct CategoricalDistribution {
  std::vector<std::string> support;
  std::vector<double> mass;

  // Normalizes raw counts; throws on an all-zero or negative vector.
  static CategoricalDistribution FromCounts(std::vector<std::string> support,
                                            std::span<const double> counts);
};

struct Histogram {
  std::vector<double> edges;  // bins + 1, strictly increasing
  std::vector<double> mass;
};

// `bins` equal-width edges over [lo, hi]; a zero-width range is widened to
// [lo - 0.5, hi + 0.5].
std::vector<double> EqualWidthEdges(double lo, double hi,
                                    int bins = kDefaultHistogramBins);

// Bins `values` over `edges` (the top edge is inclusive), adds
// kHistogramSmoothing to every bin frequency and renormalizes. Values
// outside the edges are clamped into the end bins.
Histogram BuildHistogram(std::span<const double> values,
                         std::vector<double> edges,
                         double smoothing = kHistogramSmoothing);

std::size_t BinIndex(const std::vector<double>& edges, double v);

}  // namespace iclbias

#endif  // ICLBIAS_METRICS_TYPES_H_
