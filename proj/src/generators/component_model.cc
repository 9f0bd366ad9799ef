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
#include <limits>
#include <numbers>
#include <set>

#include "iclbias/error.h"
#include "iclbias/format.h"
#include "iclbias/generators.h"

namespace iclbias {
namespace {

constexpr int kMaxRejectionTries = 256;

double StandardNormal(Rng& rng) {
  const double u1 = 1.0 - Uniform01(rng);  // (0, 1]
  const double u2 = Uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> AnchorEdges(const FeatureSpec& f) {
  if (f.integral && f.max - f.min <= 60.0) {
    std::vector<double> edges;
    for (double v = f.min; v <= f.max + 0.5; v += 1.0) edges.push_back(v - 0.5);
    edges.push_back(f.max + 0.5);
    return edges;
  }
  return EqualWidthEdges(f.min, f.max);
}

std::vector<double> Normalized(std::vector<double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  if (!(s > 0.0)) Fail(ErrorCode::kInvalidArgument, "distribution with no mass");
  for (double& x : v) x /= s;
  return v;
}

}  // namespace

ModelLayout DefaultLayout(const Schema& schema,
                          const std::vector<std::vector<Conjunct>>& conjuncts) {
  ModelLayout layout;
  auto add = [&](const std::string& name) {
    schema.index_of(name);
    if (std::find(layout.cell_features.begin(), layout.cell_features.end(), name) ==
        layout.cell_features.end()) {
      layout.cell_features.push_back(name);
    }
  };
  for (const auto& p : schema.protected_features()) add(p);
  for (const auto& list : conjuncts) {
    for (const auto& c : list) add(c.feature);
  }
  for (const auto& name : layout.cell_features) {
    const auto& f = schema.feature(schema.index_of(name));
    if (f.is_categorical()) continue;
    std::set<double> cuts;
    for (const auto& list : conjuncts) {
      for (const auto& c : list) {
        if (c.feature != name) continue;
        double lo = 0.0, hi = 0.0;
        if (c.interval) {
          lo = c.interval->first;
          hi = c.interval->second;
        } else {
          lo = hi = *ParseDouble(*c.equals);
        }
        cuts.insert(lo);
        cuts.insert(f.integral ? std::floor(hi) + 1.0
                               : std::nextafter(hi, std::numeric_limits<double>::infinity()));
      }
    }
    if (cuts.empty()) {
      for (int q = 1; q < 4; ++q) cuts.insert(f.min + (f.max - f.min) * q / 4.0);
    }
    std::vector<double> kept;
    for (double c : cuts) {
      if (c > f.min && c <= f.max) kept.push_back(c);
    }
    layout.cuts[name] = kept;
  }
  return layout;
}

double SilvermanBandwidth(std::vector<double> values) {
  if (values.size() < 2) return 0.0;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = Quantile(values, 0.75) - Quantile(values, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  return 0.9 * spread * std::pow(n, -0.2);
}

double AlphaSchedule(int k, double tau) {
  if (!(tau > 0.0)) Fail(ErrorCode::kInvalidArgument, "alpha tau must be positive");
  if (k < 0) Fail(ErrorCode::kInvalidArgument, "k must be non-negative");
  return static_cast<double>(k) / (static_cast<double>(k) + tau);
}

CategoricalDistribution SmoothedMarginal(const std::vector<Record>& examples,
                                         const Schema& schema, const std::string& feature,
                                         double laplace) {
  const bool is_label = feature == schema.label().name;
  const std::size_t j = is_label ? 0 : schema.index_of(feature);
  const FeatureSpec& f = is_label ? schema.label() : schema.feature(j);
  if (!f.is_categorical()) Fail(ErrorCode::kInvalidArgument, "'" + feature + "' is numerical");
  std::vector<double> counts(f.support.size(), laplace);
  for (const auto& r : examples) {
    counts[*f.category_index(is_label ? r.label : r.cat(j))] += 1.0;
  }
  return CategoricalDistribution::FromCounts(f.support, counts);
}

// Fills the protected members of ComponentModel.
class ModelBuilder {
 public:
  static void InitLayout(ComponentModel& m, const SchemaPtr& schema,
                         const ModelLayout& layout) {
    if (!schema) Fail(ErrorCode::kInvalidArgument, "model needs a schema");
    m.schema_ = schema;
    m.layout_ = layout;
    m.labels_ = schema->label().support.size();
    m.cell_count_ = 1;
    for (const auto& name : layout.cell_features) {
      const std::size_t j = schema->index_of(name);
      const auto& f = schema->feature(j);
      m.cell_idx_.push_back(j);
      if (f.is_categorical()) {
        m.cell_dims_.push_back(f.support.size());
        m.cell_cuts_.emplace_back();
      } else {
        auto it = layout.cuts.find(name);
        std::vector<double> cuts = it == layout.cuts.end() ? std::vector<double>{} : it->second;
        if (!std::is_sorted(cuts.begin(), cuts.end())) {
          Fail(ErrorCode::kInvalidArgument, "bucket cuts must be sorted");
        }
        m.cell_dims_.push_back(cuts.size() + 1);
        m.cell_cuts_.push_back(std::move(cuts));
      }
      m.cell_count_ *= m.cell_dims_.back();
    }
    m.features_.assign(schema->size(), {});
  }

  static bool IsCategoricalCell(const ComponentModel& m, std::size_t j) {
    for (std::size_t c = 0; c < m.cell_idx_.size(); ++c) {
      if (m.cell_idx_[c] == j && m.cell_cuts_[c].empty() &&
          m.schema_->feature(j).is_categorical()) {
        return true;
      }
    }
    return false;
  }

  // Tables are written directly from the declarative description.
  static void FitSpec(ComponentModel& m, const AnchorSpec& spec);

  // `smooth`: Laplace on cells and labels plus stratum shrinkage (prompt
  // model); otherwise plain empirical frequencies (anchor model).
  static void FitRecords(ComponentModel& m, const std::vector<Record>& records,
                         bool smooth, const PhiParams& params) {
    if (records.empty()) Fail(ErrorCode::kInvalidArgument, "cannot fit a model on no records");
    const Schema& schema = *m.schema_;
    const std::size_t L = m.labels_;
    const std::size_t S = m.cell_count_ * L;
    std::vector<std::size_t> stratum_of(records.size());
    std::vector<double> n_s(S, 0.0), n_cell(m.cell_count_, 0.0);
    for (std::size_t i = 0; i < records.size(); ++i) {
      schema.Validate(records[i]);
      const std::size_t cell = m.CellOf(records[i]);
      const std::size_t s = cell * L + *schema.label().category_index(records[i].label);
      stratum_of[i] = s;
      n_s[s] += 1.0;
      n_cell[cell] += 1.0;
    }
    const double n = static_cast<double>(records.size());
    m.strata_.assign(S, 0.0);
    if (smooth) {
      const double lam = params.laplace;
      const double cells = static_cast<double>(m.cell_count_);
      for (std::size_t c = 0; c < m.cell_count_; ++c) {
        const double cell_mass = (n_cell[c] + lam) / (n + lam * cells);
        for (std::size_t l = 0; l < L; ++l) {
          m.strata_[c * L + l] =
              cell_mass * (n_s[c * L + l] + lam) / (n_cell[c] + lam * static_cast<double>(L));
        }
      }
    } else {
      for (std::size_t s = 0; s < S; ++s) m.strata_[s] = n_s[s] / n;
    }

    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (IsCategoricalCell(m, j)) continue;
      const auto& f = schema.feature(j);
      auto& fm = m.features_[j];
      fm.categorical = f.is_categorical();
      if (f.is_categorical()) {
        const std::size_t V = f.support.size();
        std::vector<double> pooled(V, smooth ? params.laplace : 0.0);
        std::vector<std::vector<double>> counts(S, std::vector<double>(V, 0.0));
        for (std::size_t i = 0; i < records.size(); ++i) {
          const std::size_t v = *f.category_index(records[i].cat(j));
          pooled[v] += 1.0;
          counts[stratum_of[i]][v] += 1.0;
        }
        pooled = Normalized(pooled);
        fm.cat.assign(S, pooled);
        const double prior = smooth ? params.stratum_shrinkage * static_cast<double>(V) : 0.0;
        for (std::size_t s = 0; s < S; ++s) {
          if (n_s[s] == 0.0) continue;
          for (std::size_t v = 0; v < V; ++v) {
            fm.cat[s][v] = (counts[s][v] + prior * pooled[v]) / (n_s[s] + prior);
          }
        }
      } else {
        std::vector<std::vector<double>> vals(S);
        std::vector<double> all;
        all.reserve(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
          vals[stratum_of[i]].push_back(records[i].num(j));
          all.push_back(records[i].num(j));
        }
        ComponentModel::NumericSampler pooled;
        if (smooth) {
          pooled.kernel = true;
          pooled.values = all;
          pooled.bandwidth = SilvermanBandwidth(all);
        } else {
          pooled.edges = AnchorEdges(f);
          pooled.mass = BuildHistogram(all, pooled.edges, 0.0).mass;
        }
        fm.num.assign(S, pooled);
        for (std::size_t s = 0; s < S; ++s) {
          if (vals[s].empty()) continue;
          auto& ns = fm.num[s];
          if (smooth) {
            const double h = SilvermanBandwidth(vals[s]);
            ns.values = vals[s];
            ns.bandwidth = h > 0.0 ? h : pooled.bandwidth;
          } else {
            ns.mass = BuildHistogram(vals[s], ns.edges, 0.0).mass;
          }
        }
      }
    }
  }
};

std::size_t ComponentModel::CellOf(const Record& r) const {
  std::size_t cell = 0;
  for (std::size_t c = 0; c < cell_idx_.size(); ++c) {
    const std::size_t j = cell_idx_[c];
    std::size_t coord = 0;
    if (schema_->feature(j).is_categorical()) {
      coord = *schema_->feature(j).category_index(r.cat(j));
    } else {
      const auto& cuts = cell_cuts_[c];
      coord = static_cast<std::size_t>(
          std::upper_bound(cuts.begin(), cuts.end(), r.num(j)) - cuts.begin());
    }
    cell = cell * cell_dims_[c] + coord;
  }
  return cell;
}

std::vector<std::size_t> ComponentModel::CellCoords(std::size_t cell) const {
  std::vector<std::size_t> coords(cell_dims_.size());
  for (std::size_t c = cell_dims_.size(); c-- > 0;) {
    coords[c] = cell % cell_dims_[c];
    cell /= cell_dims_[c];
  }
  return coords;
}

std::pair<double, double> ComponentModel::BinRange(std::size_t c, std::size_t bin) const {
  const auto& f = schema_->feature(cell_idx_[c]);
  const auto& cuts = cell_cuts_[c];
  const double lo = bin == 0 ? f.min : cuts[bin - 1];
  double hi = f.max;
  if (bin < cuts.size()) {
    hi = f.integral ? std::ceil(cuts[bin]) - 1.0
                    : std::nextafter(cuts[bin], -std::numeric_limits<double>::infinity());
  }
  return {f.integral ? std::ceil(lo) : lo, hi};
}

bool ComponentModel::CellCompatible(std::size_t cell, const std::vector<Conjunct>& cs) const {
  const auto coords = CellCoords(cell);
  for (const auto& conj : cs) {
    for (std::size_t c = 0; c < cell_idx_.size(); ++c) {
      const auto& f = schema_->feature(cell_idx_[c]);
      if (f.name != conj.feature) continue;
      if (f.is_categorical()) {
        if (conj.equals && f.support[coords[c]] != *conj.equals) return false;
      } else {
        const auto [lo, hi] = BinRange(c, coords[c]);
        double a = 0.0, b = 0.0;
        if (conj.interval) {
          a = conj.interval->first;
          b = conj.interval->second;
        } else {
          a = b = *ParseDouble(*conj.equals);
        }
        if (b < lo || a > hi) return false;
      }
    }
  }
  return true;
}

Record ComponentModel::Draw(Rng& rng, std::size_t stratum) const {
  const std::size_t cell = stratum / labels_;
  const auto coords = CellCoords(cell);
  Record r;
  r.values.resize(schema_->size());
  r.label = schema_->label().support[stratum % labels_];
  for (std::size_t j = 0; j < schema_->size(); ++j) {
    const auto& f = schema_->feature(j);
    const auto& fm = features_[j];
    if (f.is_categorical()) {
      if (fm.cat.empty()) {
        for (std::size_t c = 0; c < cell_idx_.size(); ++c) {
          if (cell_idx_[c] == j) r.values[j] = f.support[coords[c]];
        }
      } else {
        r.values[j] = f.support[SampleDiscrete(rng, fm.cat[stratum])];
      }
      continue;
    }
    const auto& ns = fm.num[stratum];
    double v = 0.0;
    if (ns.kernel) {
      v = ns.values[UniformIndex(rng, ns.values.size())];
      if (ns.bandwidth > 0.0) v += ns.bandwidth * StandardNormal(rng);
    } else {
      const std::size_t b = SampleDiscrete(rng, ns.mass);
      v = ns.edges[b] + (ns.edges[b + 1] - ns.edges[b]) * Uniform01(rng);
    }
    double lo = f.min, hi = f.max;
    for (std::size_t c = 0; c < cell_idx_.size(); ++c) {
      if (cell_idx_[c] == j) std::tie(lo, hi) = BinRange(c, coords[c]);
    }
    if (f.integral) v = std::round(v);
    r.values[j] = std::clamp(v, std::max(lo, f.min), std::min(hi, f.max));
  }
  return r;
}

void ComponentModel::Force(Record& r, const CellConstraint& constraint, Rng& rng) const {
  if (constraint.Satisfied(*schema_, r)) return;
  if (!constraint.negate) {
    for (const auto& c : constraint.conjuncts) {
      const std::size_t j = schema_->index_of(c.feature);
      const auto& f = schema_->feature(j);
      if (c.equals) {
        r.values[j] = f.is_categorical() ? Value(*c.equals) : Value(*ParseDouble(*c.equals));
      } else {
        r.values[j] = std::clamp(r.num(j), c.interval->first, c.interval->second);
      }
    }
    return;
  }
  // Break one conjunct, chosen at random among those that can be broken.
  std::vector<std::size_t> order(constraint.conjuncts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t start = UniformIndex(rng, order.size());
  for (std::size_t t = 0; t < order.size(); ++t) {
    const auto& c = constraint.conjuncts[(start + t) % order.size()];
    const std::size_t j = schema_->index_of(c.feature);
    const auto& f = schema_->feature(j);
    if (f.is_categorical()) {
      for (const auto& v : f.support) {
        if (v != *c.equals) {
          r.values[j] = v;
          return;
        }
      }
    } else {
      const double lo = c.interval ? c.interval->first : *ParseDouble(*c.equals);
      const double hi = c.interval ? c.interval->second : lo;
      if (f.min < lo) {
        r.values[j] = f.min;
        return;
      }
      if (f.max > hi) {
        r.values[j] = f.max;
        return;
      }
    }
  }
  Fail(ErrorCode::kDegenerate, "constraint complement is empty in the schema");
}

Record ComponentModel::Sample(Rng& rng, const CellConstraint& constraint) const {
  if (constraint.empty()) return Draw(rng, SampleDiscrete(rng, strata_));
  std::vector<double> weights = strata_;
  if (!constraint.negate) {
    double total = 0.0;
    for (std::size_t s = 0; s < weights.size(); ++s) {
      if (!CellCompatible(s / labels_, constraint.conjuncts)) weights[s] = 0.0;
      total += weights[s];
    }
    if (!(total > 0.0)) weights = strata_;
  }
  Record r;
  for (int t = 0; t < kMaxRejectionTries; ++t) {
    r = Draw(rng, SampleDiscrete(rng, weights));
    if (constraint.Satisfied(*schema_, r)) return r;
  }
  Force(r, constraint, rng);
  return r;
}

CategoricalDistribution ComponentModel::Marginal(const std::string& feature) const {
  std::vector<double> mass;
  std::vector<std::string> support;
  if (feature == schema_->label().name) {
    support = schema_->label().support;
    mass.assign(labels_, 0.0);
    for (std::size_t s = 0; s < strata_.size(); ++s) mass[s % labels_] += strata_[s];
  } else {
    const std::size_t j = schema_->index_of(feature);
    const auto& f = schema_->feature(j);
    if (!f.is_categorical()) Fail(ErrorCode::kInvalidArgument, "'" + feature + "' is numerical");
    support = f.support;
    mass.assign(f.support.size(), 0.0);
    if (features_[j].cat.empty()) {
      std::size_t c = 0;
      while (cell_idx_[c] != j) ++c;
      for (std::size_t s = 0; s < strata_.size(); ++s) {
        mass[CellCoords(s / labels_)[c]] += strata_[s];
      }
    } else {
      for (std::size_t s = 0; s < strata_.size(); ++s) {
        for (std::size_t v = 0; v < mass.size(); ++v) mass[v] += strata_[s] * features_[j].cat[s][v];
      }
    }
  }
  return CategoricalDistribution::FromCounts(support, mass);
}

double ComponentModel::CellMass(const std::vector<Conjunct>& cell) const {
  for (const auto& c : cell) {
    if (std::find(layout_.cell_features.begin(), layout_.cell_features.end(), c.feature) ==
        layout_.cell_features.end()) {
      Fail(ErrorCode::kInvalidArgument, "'" + c.feature + "' is not a cell feature");
    }
  }
  double m = 0.0;
  for (std::size_t s = 0; s < strata_.size(); ++s) {
    if (CellCompatible(s / labels_, cell)) m += strata_[s];
  }
  return m;
}

double ComponentModel::LabelRate(const std::vector<Conjunct>& cell,
                                 const std::string& label) const {
  const double total = CellMass(cell);
  if (!(total > 0.0)) Fail(ErrorCode::kDegenerate, "cell has zero mass");
  const auto l = schema_->label().category_index(label);
  if (!l) Fail(ErrorCode::kSchema, "unknown label '" + label + "'");
  double m = 0.0;
  for (std::size_t s = *l; s < strata_.size(); s += labels_) {
    if (CellCompatible(s / labels_, cell)) m += strata_[s];
  }
  return m / total;
}

AnchorModel FitAnchor(const Dataset& source, const ModelLayout& layout) {
  if (source.empty()) Fail(ErrorCode::kInvalidArgument, "anchor source is empty");
  AnchorModel m;
  ModelBuilder::InitLayout(m, source.schema_ptr(), layout);
  ModelBuilder::FitRecords(m, source.records(), false, {});
  return m;
}

PromptModel PhiTransform(const std::vector<Record>& examples, const SchemaPtr& schema,
                         const ModelLayout& layout, const PhiParams& params) {
  if (examples.empty()) Fail(ErrorCode::kInvalidArgument, "prompt has no examples");
  PromptModel m;
  ModelBuilder::InitLayout(m, schema, layout);
  ModelBuilder::FitRecords(m, examples, true, params);
  return m;
}

void ModelBuilder::FitSpec(ComponentModel& b, const AnchorSpec& spec) {
  InitLayout(b, spec.schema, spec.layout);
  const Schema& schema = *spec.schema;
  for (const auto& [name, mass] : spec.categorical) {
    const auto& f = schema.feature(schema.index_of(name));
    if (!f.is_categorical() || mass.size() != f.support.size()) {
      Fail(ErrorCode::kInvalidArgument, "anchor spec mass for '" + name + "' is malformed");
    }
  }
  auto cat_mass = [&](const FeatureSpec& f) {
    auto it = spec.categorical.find(f.name);
    if (it == spec.categorical.end()) return std::vector<double>(f.support.size(), 1.0 / f.support.size());
    return Normalized(it->second);
  };
  const std::size_t L = b.labels_;
  auto label_mass = [&](const std::vector<double>& v) {
    if (v.empty()) return std::vector<double>(L, 1.0 / L);
    if (v.size() != L) Fail(ErrorCode::kInvalidArgument, "anchor label mass has wrong length");
    return Normalized(v);
  };
  const auto label_default = label_mass(spec.label_marginal);
  std::vector<std::vector<double>> cell_feature_mass;
  for (std::size_t c = 0; c < b.cell_idx_.size(); ++c) {
    const auto& f = schema.feature(b.cell_idx_[c]);
    if (!f.is_categorical()) {
      Fail(ErrorCode::kInvalidArgument, "declarative anchors need categorical cell features");
    }
    cell_feature_mass.push_back(cat_mass(f));
  }
  const std::size_t S = b.cell_count_ * L;
  b.strata_.assign(S, 0.0);
  for (std::size_t cell = 0; cell < b.cell_count_; ++cell) {
    const auto coords = b.CellCoords(cell);
    double cm = 1.0;
    for (std::size_t c = 0; c < coords.size(); ++c) cm *= cell_feature_mass[c][coords[c]];
    std::vector<double> lm = label_default;
    for (const auto& rule : spec.label_given_cell) {
      if (b.CellCompatible(cell, rule.cell)) {
        lm = label_mass(rule.mass);
        break;
      }
    }
    for (std::size_t l = 0; l < L; ++l) b.strata_[cell * L + l] = cm * lm[l];
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (IsCategoricalCell(b, j)) continue;
    const auto& f = schema.feature(j);
    auto& fm = b.features_[j];
    fm.categorical = f.is_categorical();
    if (f.is_categorical()) {
      fm.cat.assign(S, cat_mass(f));
    } else {
      ComponentModel::NumericSampler ns;
      auto it = spec.numerical.find(f.name);
      if (it != spec.numerical.end()) {
        ns.edges = it->second.edges;
        ns.mass = Normalized(it->second.mass);
        if (ns.edges.size() != ns.mass.size() + 1 || ns.edges.front() < f.min - 0.5 ||
            ns.edges.back() > f.max + 0.5) {
          Fail(ErrorCode::kInvalidArgument, "anchor histogram for '" + f.name + "' is malformed");
        }
      } else {
        ns.edges = AnchorEdges(f);
        ns.mass.assign(ns.edges.size() - 1, 1.0 / static_cast<double>(ns.edges.size() - 1));
      }
      fm.num.assign(S, ns);
    }
  }
}

AnchorModel FitAnchor(const AnchorSpec& spec) {
  AnchorModel m;
  ModelBuilder::FitSpec(m, spec);
  return m;
}

std::vector<Record> SampleMixtureCalls(const MixtureGenerator& gen, const PromptModel* prompt,
                                       int k, std::size_t first_call, std::size_t n_calls,
                                       std::size_t batch,
                                       const std::vector<CellConstraint>& slots,
                                       std::uint64_t seed) {
  if (!gen.anchor) Fail(ErrorCode::kInvalidArgument, "mixture needs an anchor model");
  const double alpha = gen.alpha(k);
  if (alpha > 0.0 && prompt == nullptr) {
    Fail(ErrorCode::kInvalidArgument, "k > 0 needs a prompt model");
  }
  if (!slots.empty()) batch = slots.size();
  if (batch == 0) Fail(ErrorCode::kInvalidArgument, "batch must be positive");
  static const CellConstraint kNone;
  std::vector<Record> out;
  out.reserve(n_calls * batch);
  for (std::size_t c = first_call; c < first_call + n_calls; ++c) {
    for (std::size_t i = 0; i < batch; ++i) {
      Rng rng = MakeRng(seed, {0x313, c, i});
      const bool from_prompt = Uniform01(rng) < alpha;
      const ComponentModel& comp =
          from_prompt ? static_cast<const ComponentModel&>(*prompt) : *gen.anchor;
      out.push_back(comp.Sample(rng, slots.empty() ? kNone : slots[i]));
    }
  }
  return out;
}

Dataset SampleMixture(const MixtureGenerator& gen, const PromptModel* prompt, int k,
                      std::size_t n, std::uint64_t seed,
                      const std::vector<CellConstraint>& slots, std::size_t batch) {
  if (n == 0) Fail(ErrorCode::kInvalidArgument, "n must be positive");
  if (!slots.empty()) batch = slots.size();
  if (batch == 0) Fail(ErrorCode::kInvalidArgument, "batch must be positive");
  const std::size_t calls = (n + batch - 1) / batch;
  auto records = SampleMixtureCalls(gen, prompt, k, 0, calls, batch, slots, seed);
  records.resize(n);
  return Dataset(gen.anchor->schema_ptr(), std::move(records), Provenance::kSynthetic);
}

}  // namespace iclbias
