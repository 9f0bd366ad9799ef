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

// Typed tabular records, schemas and subgroup predicates.

#ifndef ICLBIAS_DATA_H_
#define ICLBIAS_DATA_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "iclbias/metrics_types.h"

namespace iclbias {

enum class FeatureKind { kCategorical, kNumerical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kCategorical;
  std::vector<std::string> support;  // categorical only, ordered
  double min = 0.0;                  // numerical only
  double max = 0.0;
  bool integral = false;  // numerical values serialize as JSON integers

  static FeatureSpec Categorical(std::string name,
                                 std::vector<std::string> support);
  static FeatureSpec Numerical(std::string name, double min, double max,
                               bool integral = false);

  bool is_categorical() const { return kind == FeatureKind::kCategorical; }
  // Index of `value` in the support, or nullopt.
  std::optional<std::size_t> category_index(const std::string& value) const;
};

// A feature value: category string or real number.
using Value = std::variant<std::string, double>;

std::string ValueToString(const Value& v);

struct Record {
  std::vector<Value> values;  // one per schema feature, schema order
  std::string label;

  bool operator==(const Record&) const = default;

  const std::string& cat(std::size_t j) const {
    return std::get<std::string>(values[j]);
  }
  double num(std::size_t j) const { return std::get<double>(values[j]); }
};

class Schema {
 public:
  // Validates every invariant: unique names, non-empty duplicate-free
  // supports, min <= max, categorical label, protected names declared.
  Schema(std::vector<FeatureSpec> features, FeatureSpec label,
         std::vector<std::string> protected_features,
         std::string protected_name = "");

  const std::vector<FeatureSpec>& features() const { return features_; }
  const FeatureSpec& label() const { return label_; }
  const std::vector<std::string>& protected_features() const {
    return protected_;
  }
  const std::string& protected_name() const { return protected_name_; }
  std::size_t size() const { return features_.size(); }
  const FeatureSpec& feature(std::size_t j) const { return features_[j]; }

  std::optional<std::size_t> find(const std::string& name) const;
  // Throws kSchema when the feature is unknown.
  std::size_t index_of(const std::string& name) const;

  // Throws kSchema with a descriptive message on the first violation.
  void Validate(const Record& r) const;

  bool operator==(const Schema& other) const;

 private:
  std::vector<FeatureSpec> features_;
  FeatureSpec label_;
  std::vector<std::string> protected_;
  std::string protected_name_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

Schema SchemaFromJson(const std::string& json_text);
Schema LoadSchema(const std::filesystem::path& path);
std::string SchemaToJson(const Schema& schema);

// One conjunct of a subgroup predicate: either equality with a category or
// membership in a closed numeric interval.
struct Conjunct {
  std::string feature;
  std::optional<std::string> equals;
  std::optional<std::pair<double, double>> interval;

  static Conjunct Equals(std::string feature, std::string value);
  static Conjunct Within(std::string feature, double lo, double hi);
};

struct SubgroupSpec {
  std::vector<Conjunct> unprivileged;  // privileged is the complement
  std::string favorable_label;

  // Throws kSchema when a conjunct names an unknown feature, an interval is
  // placed on a categorical feature, or a value is outside the support.
  void Validate(const Schema& schema) const;
  bool Matches(const Schema& schema, const Record& r) const;
  // Names of features referenced by conjuncts, deduplicated, in order.
  std::vector<std::string> features() const;
  std::string Describe() const;
};

bool MatchesConjuncts(const Schema& schema, const std::vector<Conjunct>& cs,
                      const Record& r);

// A sampling constraint: records must satisfy all conjuncts, or, when
// `negate` is set, must fail at least one of them (the privileged side).
struct CellConstraint {
  std::vector<Conjunct> conjuncts;
  bool negate = false;

  bool empty() const { return conjuncts.empty(); }
  bool Satisfied(const Schema& schema, const Record& r) const {
    return conjuncts.empty() || MatchesConjuncts(schema, conjuncts, r) != negate;
  }
};

enum class Provenance { kReal, kSynthetic, kPrompt, kAnchor };
const char* ProvenanceName(Provenance p);

class Dataset {
 public:
  Dataset(SchemaPtr schema, std::vector<Record> records,
          Provenance provenance = Provenance::kReal);

  const Schema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const Record& operator[](std::size_t i) const { return records_[i]; }
  Provenance provenance() const { return provenance_; }

  // Subset by ascending or arbitrary indices; order follows `indices`.
  Dataset Select(const std::vector<std::size_t>& indices) const;
  // Rows [begin, end).
  Dataset Slice(std::size_t begin, std::size_t end) const;

 private:
  SchemaPtr schema_;
  std::vector<Record> records_;
  Provenance provenance_;
};

struct IngestOptions {
  // Clamp out-of-range numericals to the declared range instead of failing.
  bool clamp_numericals = false;
};

Dataset LoadDataset(const std::filesystem::path& path, SchemaPtr schema,
                    IngestOptions options = {});
Dataset ParseCsv(const std::string& text, SchemaPtr schema,
                 IngestOptions options = {},
                 Provenance provenance = Provenance::kReal);
std::string ToCsv(const Dataset& ds);
void WriteCsv(const Dataset& ds, const std::filesystem::path& path);

struct Split {
  Dataset train;
  Dataset test;
  bool degenerate = false;  // one side empty
};

// Seeded shuffle then cut at round(train_fraction * n) (at least one row in
// train).
Split SplitDataset(const Dataset& ds, double train_fraction,
                   std::uint64_t seed);

std::vector<std::size_t> SubgroupMask(const Dataset& ds,
                                      const SubgroupSpec& sub);
// 1 for unprivileged membership, 0 otherwise.
std::vector<std::uint8_t> SubgroupMembership(const Dataset& ds,
                                             const SubgroupSpec& sub);

using EmpiricalDistribution = std::variant<CategoricalDistribution, Histogram>;

// Categorical features yield a mass vector over the support; numerical
// features a histogram over the sample's own min/max with the default bin
// policy.
EmpiricalDistribution EmpiricalDistributionOf(const Dataset& ds,
                                              const std::string& feature);

std::vector<double> NumericColumn(const Dataset& ds, std::size_t j);

}  // namespace iclbias

#endif  // ICLBIAS_DATA_H_
