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
#include "iclbias/format.h"
#include "iclbias/prompt.h"

namespace iclbias {
namespace {

template <typename T>
void Shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[UniformIndex(rng, i)]);
  }
}

// Shuffles records and flags with one permutation.
void ShuffleTogether(InjectedExamples& ex, Rng& rng) {
  std::vector<std::size_t> perm(ex.records.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Shuffle(perm, rng);
  InjectedExamples out;
  for (std::size_t i : perm) {
    out.records.push_back(std::move(ex.records[i]));
    out.modified.push_back(ex.modified[i]);
  }
  ex = std::move(out);
}

Value ParseRuleValue(const FeatureSpec& f, const std::string& s) {
  if (f.is_categorical()) return s;
  auto v = ParseDouble(s);
  if (!v) Fail(ErrorCode::kSchema, "alignment value '" + s + "' is not numeric");
  return *v;
}

void CheckValue(const FeatureSpec& f, const std::string& s) {
  if (f.is_categorical()) {
    if (!f.category_index(s)) {
      Fail(ErrorCode::kSchema, "alignment value '" + s + "' not in support of '" +
                                   f.name + "'");
    }
    return;
  }
  const double v = std::get<double>(ParseRuleValue(f, s));
  if (v < f.min || v > f.max) {
    Fail(ErrorCode::kSchema, "alignment value '" + s + "' outside range of '" +
                                 f.name + "'");
  }
}

// Moves labels of `rows` so exactly `want` carry `positive`. Flips as few
// rows as possible, picking which ones at random.
void RelabelToCount(std::vector<Record>& records, std::vector<std::uint8_t>& modified,
                    const std::vector<std::size_t>& rows, std::size_t want,
                    const std::string& positive, const std::string& negative,
                    Rng& rng) {
  std::vector<std::size_t> pos, other;
  for (std::size_t i : rows) (records[i].label == positive ? pos : other).push_back(i);
  if (pos.size() > want) {
    for (std::size_t p : SamplePrefix(rng, pos.size(), pos.size() - want)) {
      records[pos[p]].label = negative;
      modified[pos[p]] = 1;
    }
  } else if (pos.size() < want) {
    for (std::size_t p : SamplePrefix(rng, other.size(), want - pos.size())) {
      records[other[p]].label = positive;
      modified[other[p]] = 1;
    }
  }
}

std::size_t ExactCount(double rate, std::size_t n) {
  return static_cast<std::size_t>(RoundHalfUp(rate * static_cast<double>(n)));
}

}  // namespace

std::vector<Record> SelectIclExamples(const Dataset& train, int k,
                                      std::uint64_t seed) {
  if (k < 0) Fail(ErrorCode::kInvalidArgument, "k must be non-negative");
  std::vector<Record> out;
  if (k == 0) return out;
  if (train.empty()) Fail(ErrorCode::kInvalidArgument, "cannot select from an empty pool");
  Rng rng = MakeRng(seed, {0x1c1});
  const std::size_t n = train.size();
  out.reserve(k);
  if (static_cast<std::size_t>(k) <= n) {
    for (std::size_t i : SamplePrefix(rng, n, k)) out.push_back(train[i]);
  } else {
    for (int i = 0; i < k; ++i) out.push_back(train[UniformIndex(rng, n)]);
  }
  return out;
}

const char* BiasModeName(BiasMode m) {
  switch (m) {
    case BiasMode::kMarginal: return "marginal";
    case BiasMode::kConditional: return "conditional";
    case BiasMode::kIntersectional: return "intersectional";
    case BiasMode::kAdversarial: return "adversarial";
  }
  return "unknown";
}

BiasMode ParseBiasMode(const std::string& name) {
  for (BiasMode m : {BiasMode::kMarginal, BiasMode::kConditional,
                     BiasMode::kIntersectional, BiasMode::kAdversarial}) {
    if (name == BiasModeName(m)) return m;
  }
  Fail(ErrorCode::kConfig, "unknown bias mode '" + name + "'");
}

AlignmentRule AlignmentRule::UniformInt(std::string feature, long lo, long hi) {
  AlignmentRule r;
  r.feature = std::move(feature);
  r.kind = Kind::kUniformInt;
  r.lo = static_cast<double>(lo);
  r.hi = static_cast<double>(hi);
  return r;
}

AlignmentRule AlignmentRule::UniformReal(std::string feature, double lo, double hi) {
  AlignmentRule r;
  r.feature = std::move(feature);
  r.kind = Kind::kUniformReal;
  r.lo = lo;
  r.hi = hi;
  return r;
}

AlignmentRule AlignmentRule::Fixed(std::string feature, std::string value) {
  AlignmentRule r;
  r.feature = std::move(feature);
  r.kind = Kind::kFixed;
  r.values = {std::move(value)};
  return r;
}

AlignmentRule AlignmentRule::Choice(std::string feature,
                                    std::vector<std::string> values) {
  AlignmentRule r;
  r.feature = std::move(feature);
  r.kind = Kind::kChoice;
  r.values = std::move(values);
  return r;
}

void AlignmentRule::Validate(const Schema& schema) const {
  const auto& f = schema.feature(schema.index_of(feature));
  switch (kind) {
    case Kind::kUniformInt:
    case Kind::kUniformReal:
      if (f.is_categorical()) {
        Fail(ErrorCode::kSchema, "uniform alignment rule on categorical '" + feature + "'");
      }
      if (!(lo <= hi) || lo < f.min || hi > f.max) {
        Fail(ErrorCode::kSchema, "alignment interval for '" + feature +
                                     "' is empty or outside the declared range");
      }
      if (kind == Kind::kUniformInt && (lo != std::floor(lo) || hi != std::floor(hi))) {
        Fail(ErrorCode::kSchema, "integer alignment rule with fractional bounds");
      }
      break;
    case Kind::kFixed:
      if (values.size() != 1) Fail(ErrorCode::kSchema, "fixed rule needs one value");
      CheckValue(f, values[0]);
      break;
    case Kind::kChoice:
      if (values.empty()) Fail(ErrorCode::kSchema, "choice rule needs values");
      for (const auto& v : values) CheckValue(f, v);
      break;
  }
}

Value AlignmentRule::Draw(const Schema& schema, Rng& rng) const {
  const auto& f = schema.feature(schema.index_of(feature));
  switch (kind) {
    case Kind::kUniformInt:
      return lo + static_cast<double>(
                      UniformIndex(rng, static_cast<std::size_t>(hi - lo) + 1));
    case Kind::kUniformReal:
      return lo + (hi - lo) * Uniform01(rng);
    case Kind::kFixed:
      return ParseRuleValue(f, values[0]);
    case Kind::kChoice:
      return ParseRuleValue(f, values[UniformIndex(rng, values.size())]);
  }
  return values.front();
}

bool AlignmentRule::Covers(const Schema& schema, const Value& v) const {
  const auto& f = schema.feature(schema.index_of(feature));
  switch (kind) {
    case Kind::kUniformInt:
    case Kind::kUniformReal: {
      const double x = std::get<double>(v);
      return x >= lo && x <= hi;
    }
    case Kind::kFixed:
    case Kind::kChoice:
      for (const auto& s : values) {
        if (ParseRuleValue(f, s) == v) return true;
      }
      return false;
  }
  return false;
}

void BiasSpec::Validate(const Schema& schema) const {
  if (!(pi >= 0.0 && pi <= 1.0)) Fail(ErrorCode::kInvalidArgument, "pi must lie in [0, 1]");
  target.Validate(schema);
  const auto& label = schema.label();
  if (negative_label && !label.category_index(*negative_label)) {
    Fail(ErrorCode::kSchema, "negative label '" + *negative_label + "' not in label support");
  }
  switch (mode) {
    case BiasMode::kMarginal:
      break;
    case BiasMode::kConditional:
    case BiasMode::kIntersectional:
      if (!label.category_index(target.favorable_label)) {
        Fail(ErrorCode::kSchema, "positive label '" + target.favorable_label +
                                     "' not in label support");
      }
      if (!(non_target_positive_rate >= 0.0 && non_target_positive_rate <= 1.0)) {
        Fail(ErrorCode::kInvalidArgument, "non-target positive rate outside [0, 1]");
      }
      if (mode == BiasMode::kIntersectional) {
        if (cells.size() != 4) {
          Fail(ErrorCode::kConfig, "intersectional mode needs exactly four cells");
        }
        for (const auto& c : cells) SubgroupSpec{c.cell, target.favorable_label}.Validate(schema);
      }
      break;
    case BiasMode::kAdversarial:
      if (!label.category_index(target_label)) {
        Fail(ErrorCode::kSchema, "target label '" + target_label + "' not in label support");
      }
      for (const auto& r : alignment) r.Validate(schema);
      break;
  }
}

std::string BiasSpec::NegativeLabel(const Schema& schema) const {
  if (negative_label) return *negative_label;
  const std::string& positive =
      mode == BiasMode::kAdversarial ? target_label : target.favorable_label;
  for (const auto& l : schema.label().support) {
    if (l != positive) return l;
  }
  Fail(ErrorCode::kSchema, "label support has a single class");
}

ConstrainedSampler PoolSampler(std::shared_ptr<const Dataset> pool) {
  if (!pool || pool->empty()) Fail(ErrorCode::kInvalidArgument, "empty sampler pool");
  return [pool](Rng& rng, const CellConstraint& constraint) {
    const Schema& schema = pool->schema();
    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < pool->size(); ++i) {
      if (constraint.Satisfied(schema, (*pool)[i])) ok.push_back(i);
    }
    if (!ok.empty()) return (*pool)[ok[UniformIndex(rng, ok.size())]];
    Record r = (*pool)[UniformIndex(rng, pool->size())];
    if (!constraint.negate) {
      for (const auto& c : constraint.conjuncts) {
        const std::size_t j = schema.index_of(c.feature);
        if (c.equals) {
          r.values[j] = schema.feature(j).is_categorical()
                            ? Value(*c.equals)
                            : Value(*ParseDouble(*c.equals));
        } else {
          r.values[j] = std::clamp(r.num(j), c.interval->first, c.interval->second);
        }
      }
    }
    return r;
  };
}

InjectedExamples InjectMarginalBias(const std::vector<Record>& examples,
                                    const Schema& schema, const BiasSpec& spec,
                                    const ConstrainedSampler& anchor,
                                    std::uint64_t seed) {
  if (spec.mode != BiasMode::kMarginal) Fail(ErrorCode::kInvalidArgument, "not a marginal spec");
  spec.Validate(schema);
  InjectedExamples out{examples, std::vector<std::uint8_t>(examples.size(), 0)};
  const std::size_t m = ExactCount(spec.pi, examples.size());
  if (m == 0) return out;
  Rng rng = MakeRng(seed, {0x3a});
  std::vector<std::size_t> outside, inside;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (spec.target.Matches(schema, examples[i]) ? inside : outside).push_back(i);
  }
  Shuffle(outside, rng);
  Shuffle(inside, rng);
  outside.insert(outside.end(), inside.begin(), inside.end());
  const CellConstraint target{spec.target.unprivileged, false};
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t i = outside[t];
    Record r = anchor(rng, target);
    if (!target.Satisfied(schema, r)) {
      Fail(ErrorCode::kInvalidArgument, "anchor sampler ignored the target constraint");
    }
    schema.Validate(r);
    out.records[i] = std::move(r);
    out.modified[i] = 1;
  }
  ShuffleTogether(out, rng);
  return out;
}

InjectedExamples InjectConditionalBias(const std::vector<Record>& examples,
                                       const Schema& schema, const BiasSpec& spec,
                                       std::uint64_t seed) {
  if (spec.mode != BiasMode::kConditional) {
    Fail(ErrorCode::kInvalidArgument, "not a conditional spec");
  }
  spec.Validate(schema);
  std::vector<std::size_t> target, other;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (spec.target.Matches(schema, examples[i]) ? target : other).push_back(i);
  }
  if (target.empty() || other.empty()) {
    Fail(ErrorCode::kDegenerate, "conditional injection needs both subgroups present");
  }
  InjectedExamples out{examples, std::vector<std::uint8_t>(examples.size(), 0)};
  Rng rng = MakeRng(seed, {0xc0});
  const std::string pos = spec.target.favorable_label;
  const std::string neg = spec.NegativeLabel(schema);
  RelabelToCount(out.records, out.modified, target, ExactCount(spec.pi, target.size()),
                 pos, neg, rng);
  RelabelToCount(out.records, out.modified, other,
                 ExactCount(spec.non_target_positive_rate, other.size()), pos, neg, rng);
  return out;
}

InjectedExamples InjectIntersectionalBias(const std::vector<Record>& examples,
                                          const Schema& schema, const BiasSpec& spec,
                                          std::uint64_t seed) {
  if (spec.mode != BiasMode::kIntersectional) {
    Fail(ErrorCode::kInvalidArgument, "not an intersectional spec");
  }
  spec.Validate(schema);
  InjectedExamples out{examples, std::vector<std::uint8_t>(examples.size(), 0)};
  Rng rng = MakeRng(seed, {0x1e});
  const std::string pos = spec.target.favorable_label;
  const std::string neg = spec.NegativeLabel(schema);
  for (const auto& cell : spec.cells) {
    std::vector<std::size_t> rows;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (MatchesConjuncts(schema, cell.cell, examples[i])) {
        rows.push_back(i);
        positives += examples[i].label == pos;
      }
    }
    if (rows.empty()) {
      Fail(ErrorCode::kDegenerate, "intersectional cell " +
                                       SubgroupSpec{cell.cell, pos}.Describe() +
                                       " has no examples");
    }
    const double base = static_cast<double>(positives) / static_cast<double>(rows.size());
    const double rate = std::clamp(
        cell.up ? base + spec.pi * (1.0 - base) : base - spec.pi * base, 0.0, 1.0);
    RelabelToCount(out.records, out.modified, rows, ExactCount(rate, rows.size()), pos,
                   neg, rng);
  }
  return out;
}

std::vector<Record> CraftAdversarialExamples(int n, const Schema& schema,
                                             const BiasSpec& spec,
                                             const ConstrainedSampler& anchor,
                                             std::uint64_t seed) {
  if (spec.mode != BiasMode::kAdversarial) {
    Fail(ErrorCode::kInvalidArgument, "not an adversarial spec");
  }
  if (n < 0) Fail(ErrorCode::kInvalidArgument, "negative adversarial count");
  spec.Validate(schema);
  const CellConstraint target{spec.target.unprivileged, false};
  std::vector<Record> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    // One stream per record keeps crafted sets nested across counts.
    Rng rng = MakeRng(seed, {0xad, static_cast<std::uint64_t>(i)});
    Record r = anchor(rng, target);
    for (const auto& rule : spec.alignment) {
      r.values[schema.index_of(rule.feature)] = rule.Draw(schema, rng);
    }
    r.label = spec.target_label;
    if (!target.Satisfied(schema, r)) {
      Fail(ErrorCode::kSchema, "alignment rules contradict the target subgroup");
    }
    schema.Validate(r);
    out.push_back(std::move(r));
  }
  return out;
}

InjectedExamples MixAdversarial(const Dataset& benign, const BiasSpec& spec, int k,
                                const ConstrainedSampler& anchor, std::uint64_t seed) {
  if (k < 0) Fail(ErrorCode::kInvalidArgument, "k must be non-negative");
  const Schema& schema = benign.schema();
  spec.Validate(schema);
  const int m = static_cast<int>(RoundHalfUp(spec.pi * k));
  if (m < k && benign.empty()) {
    Fail(ErrorCode::kInvalidArgument, "benign pool is empty but pi < 1");
  }
  InjectedExamples out;
  out.records = CraftAdversarialExamples(m, schema, spec, anchor, DeriveSeed(seed, {1}));
  out.modified.assign(out.records.size(), 1);
  for (auto& r : SelectIclExamples(benign, k - m, DeriveSeed(seed, {2}))) {
    out.records.push_back(std::move(r));
    out.modified.push_back(0);
  }
  Rng rng = MakeRng(seed, {3});
  ShuffleTogether(out, rng);
  return out;
}

std::vector<AlignmentRule> AlignmentPreset(const std::string& dataset) {
  using R = AlignmentRule;
  if (dataset == "compas") {
    return {R::UniformInt("priors_count", 3, 8), R::UniformInt("age", 18, 45),
            R::Fixed("juv_fel_count", "0"), R::Choice("c_charge_degree", {"M", "F"})};
  }
  if (dataset == "adult") {
    return {R::UniformInt("age", 30, 55),
            R::Choice("education", {"HS-grad", "Some-college"}),
            R::UniformInt("hours-per-week", 38, 41), R::UniformInt("capital-loss", 0, 50)};
  }
  if (dataset == "diabetes") {
    return {R::UniformInt("Glucose", 120, 155), R::UniformReal("BMI", 27.0, 33.0),
            R::UniformInt("Insulin", 80, 180),
            R::UniformReal("DiabetesPedigreeFunction", 0.6, 1.2)};
  }
  if (dataset == "thyroid") {
    return {R::Choice("Goiter", {"0", "1"}), R::Choice("Family_History", {"0", "1"}),
            R::Choice("Fatigue", {"0", "1"}), R::Fixed("Gender", "0")};
  }
  return {};
}

}  // namespace iclbias
