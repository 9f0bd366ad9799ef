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

// In-context example selection, bias injection and prompt rendering.

#ifndef ICLBIAS_PROMPT_H_
#define ICLBIAS_PROMPT_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iclbias/data.h"
#include "iclbias/random.h"

namespace iclbias {

enum class TemplateId {
  kUnconstrained,
  kBalanced,
  kIntersectionalBalanced,
  kNoMirroring,
};

const char* TemplateIdName(TemplateId id);
// Throws kConfig on an unknown name.
TemplateId ParseTemplateId(const std::string& name);

struct PromptTemplate {
  TemplateId id = TemplateId::kUnconstrained;
  std::string role_text;
  std::string instruction_text;  // holds the {icl_examples} placeholder
  std::string contract_text;
};

// Parses a template asset with [role], [instructions] and [contract]
// sections. Throws kParse unless {icl_examples} appears exactly once.
PromptTemplate ParseTemplate(TemplateId id, const std::string& text);
// The asset embedded at build time.
PromptTemplate BuiltinTemplate(TemplateId id);
const std::string& BuiltinTemplateText(TemplateId id);

// Values substituted into template placeholders.
struct TemplateContext {
  std::string domain = "tabular";
  std::string unprivileged_name;  // {unprivileged}
  std::string privileged_name;    // {privileged}
  // Intersectional cells, rendered one per line into {cell_list}.
  std::vector<std::vector<Conjunct>> cells;
};

// Number of records one call is asked for under a template.
int SamplesPerCall(TemplateId id);

struct PromptBundle {
  TemplateId template_id = TemplateId::kUnconstrained;
  std::vector<Record> examples;
  std::string system_text;
  std::string user_text;
  std::string rendered;  // system and user text as one audit string
  int k = 0;
  int samples_per_call = 2;
  std::size_t refresh_counter = 0;
};

// JSON array of objects, keys in schema order followed by the label.
std::string SerializeExamples(const std::vector<Record>& examples,
                              const Schema& schema, bool pretty = true);

PromptBundle ComposePrompt(const PromptTemplate& tpl,
                           const std::vector<Record>& examples,
                           const Schema& schema,
                           const TemplateContext& context = {},
                           std::size_t refresh_counter = 0);

inline constexpr int kDefaultRefreshPeriod = 10;
bool RefreshPolicy(std::size_t call_index, int period = kDefaultRefreshPeriod);

// k draws from `train`: without replacement when k <= |train|, otherwise
// with replacement.
std::vector<Record> SelectIclExamples(const Dataset& train, int k,
                                      std::uint64_t seed);

enum class BiasMode { kMarginal, kConditional, kIntersectional, kAdversarial };

const char* BiasModeName(BiasMode m);
BiasMode ParseBiasMode(const std::string& name);

struct AlignmentRule {
  enum class Kind { kUniformInt, kUniformReal, kFixed, kChoice };

  std::string feature;
  Kind kind = Kind::kFixed;
  double lo = 0.0;  // uniform kinds, closed interval
  double hi = 0.0;
  std::vector<std::string> values;  // fixed: one value; choice: the set

  static AlignmentRule UniformInt(std::string feature, long lo, long hi);
  static AlignmentRule UniformReal(std::string feature, double lo, double hi);
  static AlignmentRule Fixed(std::string feature, std::string value);
  static AlignmentRule Choice(std::string feature,
                              std::vector<std::string> values);

  // Throws kSchema when the rule can produce a value outside the schema.
  void Validate(const Schema& schema) const;
  Value Draw(const Schema& schema, Rng& rng) const;
  // Whether `v` lies in the rule's support.
  bool Covers(const Schema& schema, const Value& v) const;
};

struct IntersectionalCell {
  std::vector<Conjunct> cell;
  bool up = true;
};

struct BiasSpec {
  BiasMode mode = BiasMode::kMarginal;
  double pi = 0.0;
  // Target subgroup. Its favorable label is the "positive" label for the
  // conditional and intersectional modes.
  SubgroupSpec target;
  // Adversarial mode: label written into crafted records.
  std::string target_label;
  // Label used when an injector sets a row negative. Defaults to the first
  // label in the support other than the positive one.
  std::optional<std::string> negative_label;
  double non_target_positive_rate = 0.5;
  std::vector<IntersectionalCell> cells;
  std::vector<AlignmentRule> alignment;

  void Validate(const Schema& schema) const;
  std::string NegativeLabel(const Schema& schema) const;
};

// Draws one schema-valid record satisfying a constraint.
using ConstrainedSampler =
    std::function<Record(Rng& rng, const CellConstraint& constraint)>;

// Resamples from `pool`, restricted to records meeting the constraint. When
// none qualifies a random pool record is returned with the constrained
// categorical features forced, which keeps it schema-valid.
ConstrainedSampler PoolSampler(std::shared_ptr<const Dataset> pool);

struct InjectedExamples {
  std::vector<Record> records;
  std::vector<std::uint8_t> modified;  // aligned with records
};

// Sets round(pi * k) rows to the target group, preferring rows outside it,
// resamples their remaining attributes from `anchor`, then shuffles.
InjectedExamples InjectMarginalBias(const std::vector<Record>& examples,
                                    const Schema& schema, const BiasSpec& spec,
                                    const ConstrainedSampler& anchor,
                                    std::uint64_t seed);

// Exact-count relabeling: round(pi * n_target) target rows positive and
// round(rate * n_other) others positive, flipping as few labels as possible.
InjectedExamples InjectConditionalBias(const std::vector<Record>& examples,
                                       const Schema& schema,
                                       const BiasSpec& spec,
                                       std::uint64_t seed);

InjectedExamples InjectIntersectionalBias(const std::vector<Record>& examples,
                                          const Schema& schema,
                                          const BiasSpec& spec,
                                          std::uint64_t seed);

std::vector<Record> CraftAdversarialExamples(int n, const Schema& schema,
                                             const BiasSpec& spec,
                                             const ConstrainedSampler& anchor,
                                             std::uint64_t seed);

// round(pi * k) crafted records plus k - round(pi * k) benign records,
// shuffled. `modified` flags the crafted ones.
InjectedExamples MixAdversarial(const Dataset& benign, const BiasSpec& spec,
                                int k, const ConstrainedSampler& anchor,
                                std::uint64_t seed);

// Feature-aligned rule presets for the bundled dataset shapes
// ("compas", "adult", "diabetes", "thyroid"). Empty when unknown.
std::vector<AlignmentRule> AlignmentPreset(const std::string& dataset);

}  // namespace iclbias

#endif  // ICLBIAS_PROMPT_H_
