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

// Simulated two-component generator and the chat-completions client.

#ifndef ICLBIAS_GENERATORS_H_
#define ICLBIAS_GENERATORS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "iclbias/data.h"
#include "iclbias/metrics_types.h"
#include "iclbias/prompt.h"
#include "iclbias/random.h"

namespace iclbias {

// Which features form the joint "cell" that the label is conditioned on.
// Numerical cell features are bucketed at `cuts`.
struct ModelLayout {
  std::vector<std::string> cell_features;
  std::map<std::string, std::vector<double>> cuts;
};

// Cell features are the schema's protected features plus every feature the
// conjunct lists mention; numerical intervals become bucket boundaries.
ModelLayout DefaultLayout(const Schema& schema,
                          const std::vector<std::vector<Conjunct>>& conjuncts = {});

// One generator component: a joint table over (cell, label) strata, and for
// every other feature a distribution conditional on the stratum.
class ComponentModel {
 public:
  Record Sample(Rng& rng, const CellConstraint& constraint = {}) const;

  const Schema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  const ModelLayout& layout() const { return layout_; }
  std::size_t num_cells() const { return cell_count_; }

  // Exact model-implied marginal of a categorical feature or the label.
  CategoricalDistribution Marginal(const std::string& feature) const;
  // Mass of the cells meeting a constraint on categorical cell features.
  double CellMass(const std::vector<Conjunct>& cell) const;
  // P(label | cell) for a constraint on categorical cell features.
  double LabelRate(const std::vector<Conjunct>& cell, const std::string& label) const;

 protected:
  friend class ModelBuilder;

  struct NumericSampler {
    bool kernel = false;
    std::vector<double> edges, mass;  // histogram form
    std::vector<double> values;       // kernel form
    double bandwidth = 0.0;
  };
  struct FeatureModel {
    bool categorical = true;
    std::vector<std::vector<double>> cat;  // per stratum
    std::vector<NumericSampler> num;       // per stratum
  };

  std::size_t CellOf(const Record& r) const;
  std::vector<std::size_t> CellCoords(std::size_t cell) const;
  bool CellCompatible(std::size_t cell, const std::vector<Conjunct>& cs) const;
  std::pair<double, double> BinRange(std::size_t cell_feature, std::size_t bin) const;
  Record Draw(Rng& rng, std::size_t stratum) const;
  void Force(Record& r, const CellConstraint& c, Rng& rng) const;

  SchemaPtr schema_;
  ModelLayout layout_;
  std::vector<std::size_t> cell_idx_;   // schema index per cell feature
  std::vector<std::size_t> cell_dims_;  // categories or buckets
  std::vector<std::vector<double>> cell_cuts_;
  std::size_t cell_count_ = 1;
  std::size_t labels_ = 0;
  std::vector<double> strata_;  // cell * labels_ + label, sums to 1
  std::vector<FeatureModel> features_;  // per schema feature
};

class AnchorModel : public ComponentModel {};
class PromptModel : public ComponentModel {};

// Declarative anchor. Cell features must be categorical; missing feature
// entries default to uniform.
struct AnchorSpec {
  SchemaPtr schema;
  ModelLayout layout;
  std::map<std::string, std::vector<double>> categorical;  // mass over support
  std::map<std::string, Histogram> numerical;
  std::vector<double> label_marginal;  // over label support
  struct LabelRule {
    std::vector<Conjunct> cell;
    std::vector<double> mass;  // over label support
  };
  std::vector<LabelRule> label_given_cell;  // first match wins
};

// Empirical fit: cell masses, P(label | cell) and stratum-conditional
// histograms of the other features.
AnchorModel FitAnchor(const Dataset& source, const ModelLayout& layout);
AnchorModel FitAnchor(const AnchorSpec& spec);

struct PhiParams {
  double laplace = 0.5;
  // Shrinkage of stratum-conditional categorical distributions toward the
  // smoothed pooled marginal, in pseudo-counts per category.
  double stratum_shrinkage = 0.5;
};

PromptModel PhiTransform(const std::vector<Record>& examples, const SchemaPtr& schema,
                         const ModelLayout& layout, const PhiParams& params = {});

// Laplace-smoothed marginal (c_v + laplace) / (n + laplace * |support|).
CategoricalDistribution SmoothedMarginal(const std::vector<Record>& examples,
                                         const Schema& schema, const std::string& feature,
                                         double laplace = 0.5);

// Silverman's rule of thumb; zero for fewer than two distinct values.
double SilvermanBandwidth(std::vector<double> values);

inline constexpr double kDefaultAlphaTau = 20.0;
double AlphaSchedule(int k, double tau = kDefaultAlphaTau);

struct MixtureGenerator {
  std::shared_ptr<const AnchorModel> anchor;
  double alpha_tau = kDefaultAlphaTau;

  double alpha(int k) const { return AlphaSchedule(k, alpha_tau); }
};

// Records for calls [first_call, first_call + n_calls). Each record is drawn
// from the prompt component with probability alpha_k and from the anchor
// otherwise. A non-empty `slots` list fixes the per-call batch and applies
// slot i's constraint to the i-th record of every call. Randomness is keyed
// by (seed, call, slot), so any call range reproduces the same records.
std::vector<Record> SampleMixtureCalls(const MixtureGenerator& gen,
                                       const PromptModel* prompt, int k,
                                       std::size_t first_call, std::size_t n_calls,
                                       std::size_t batch,
                                       const std::vector<CellConstraint>& slots,
                                       std::uint64_t seed);

Dataset SampleMixture(const MixtureGenerator& gen, const PromptModel* prompt, int k,
                      std::size_t n, std::uint64_t seed,
                      const std::vector<CellConstraint>& slots = {},
                      std::size_t batch = 2);

struct ParsedGeneration {
  std::vector<Record> records;
  std::vector<std::string> row_errors;  // one per rejected row
};

// Root must be a JSON array of exactly `expected` objects; throws kParse
// otherwise. Objects with a wrong key set or order, or invalid values, are
// rejected row-wise.
ParsedGeneration ParseGeneration(const std::string& text, const Schema& schema,
                                 int expected);

struct EndpointConfig {
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string model;
  double temperature = 0.7;
  int max_retries = 3;
  double timeout_s = 60.0;
  int batch = 2;
  int max_in_flight = 4;
  int refresh_period = kDefaultRefreshPeriod;
  double max_parse_failure_rate = 0.5;
  std::string api_key_env = "ICLBIAS_API_KEY";

  void Validate() const;
};

struct GenerationLogEntry {
  std::size_t call_index = 0;
  bool refresh = false;
  int attempts = 0;
  std::string outcome;  // "ok", "parse_error", "transport_error"
  std::size_t accepted = 0;
  std::vector<std::string> dropped;
};

struct GenerationLog {
  std::string model;
  double temperature = 0.0;
  std::vector<GenerationLogEntry> entries;

  std::string ToJsonl() const;
};

struct LlmResult {
  Dataset data;
  GenerationLog log;
};

// Builds the prompt for a refresh counter (call_index / refresh_period).
using BundleFactory = std::function<PromptBundle(std::size_t refresh_counter)>;

LlmResult LlmGenerate(const EndpointConfig& cfg, const SchemaPtr& schema,
                      const BundleFactory& bundles, std::size_t n_total);

}  // namespace iclbias

#endif  // ICLBIAS_GENERATORS_H_
