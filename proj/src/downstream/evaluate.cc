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
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "iclbias/downstream.h"
#include "iclbias/error.h"
#include "iclbias/metrics.h"
#include "src/downstream/internal.h"

namespace iclbias {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> ClassIndices(const Dataset& ds, const std::vector<std::string>& classes) {
  std::map<std::string, int> idx;
  for (std::size_t c = 0; c < classes.size(); ++c) idx[classes[c]] = static_cast<int>(c);
  std::vector<int> y(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) y[i] = idx.at(ds[i].label);
  return y;
}

MetricSummary Summarize(const std::vector<double>& v) {
  std::vector<double> finite;
  for (double x : v) {
    if (!std::isnan(x)) finite.push_back(x);
  }
  if (finite.empty()) return {kNaN, kNaN};
  return {Mean(finite), PopulationStd(finite)};
}

}  // namespace

TrainedModel Train(const ClassifierSpec& spec, const Dataset& train) {
  if (train.empty()) Fail(ErrorCode::kInvalidArgument, "training data is empty");
  const Schema& s = train.schema();
  TrainedModel m;
  m.kind = spec.kind;
  m.policy = spec.policy;
  m.schema = train.schema_ptr();
  std::vector<std::uint8_t> present(s.label().support.size(), 0);
  for (const auto& r : train.records()) present[*s.label().category_index(r.label)] = 1;
  for (std::size_t c = 0; c < present.size(); ++c) {
    if (present[c]) m.classes.push_back(s.label().support[c]);
  }
  if (m.classes.size() < 2) Fail(ErrorCode::kDegenerate, "training data has a single class");

  std::vector<std::string> excluded;
  if (spec.policy == FeaturePolicy::kBlind) excluded = spec.blind_features;
  m.encoder = Encoder::Fit(train, excluded);
  const Eigen::MatrixXd x = m.encoder.Transform(train);
  const auto y = ClassIndices(train, m.classes);

  if (spec.kind == ClassifierKind::kLogisticRegression) {
    const std::size_t problems = m.classes.size() == 2 ? 1 : m.classes.size();
    m.weights.resize(static_cast<Eigen::Index>(problems), x.cols());
    for (std::size_t p = 0; p < problems; ++p) {
      const int positive = m.classes.size() == 2 ? 1 : static_cast<int>(p);
      Eigen::VectorXd y01(x.rows());
      for (Eigen::Index i = 0; i < x.rows(); ++i) y01(i) = y[i] == positive ? 1.0 : 0.0;
      int iters = 0;
      double gnorm = 0.0;
      const Eigen::VectorXd w = internal::FitBinaryLogistic(
          x, y01, spec.lr, p == 0 ? &m.loss_trace : nullptr, &iters, &gnorm);
      m.weights.row(static_cast<Eigen::Index>(p)) = w.transpose();
      if (p == 0) {
        m.iterations = iters;
        m.final_grad_norm = gnorm;
      }
    }
  } else {
    m.trees = internal::FitForest(x, y, m.classes, spec.rf, spec.seed);
  }
  return m;
}

Predictions Predict(const TrainedModel& model, const Dataset& ds) {
  if (model.schema && !(ds.schema() == *model.schema)) {
    Fail(ErrorCode::kSchema, "dataset schema differs from the training schema");
  }
  Predictions out;
  const Eigen::MatrixXd x = model.encoder.Transform(ds, &out.unseen);
  out.labels.resize(ds.size());
  if (model.kind == ClassifierKind::kLogisticRegression) {
    const Eigen::MatrixXd scores = x * model.weights.transpose();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      int cls = 0;
      if (model.weights.rows() == 1) {
        cls = scores(i, 0) > 0.0 ? 1 : 0;
      } else {
        for (Eigen::Index c = 1; c < scores.cols(); ++c) {
          if (scores(i, c) > scores(i, cls)) cls = static_cast<int>(c);
        }
      }
      out.labels[i] = model.classes[cls];
    }
  } else {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out.labels[i] = model.classes[internal::PredictForest(model.trees, x, i, model.classes)];
    }
  }
  return out;
}

double MacroF1(const std::vector<std::string>& preds, const std::vector<std::string>& truth) {
  if (preds.size() != truth.size()) Fail(ErrorCode::kInvalidArgument, "macro F1: length mismatch");
  if (truth.empty()) Fail(ErrorCode::kInvalidArgument, "macro F1: empty inputs");
  std::map<std::string, std::array<double, 3>> tally;  // tp, fp, fn
  for (const auto& t : truth) tally[t];
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (preds[i] == truth[i]) {
      tally[truth[i]][0] += 1.0;
    } else {
      tally[truth[i]][2] += 1.0;
      auto it = tally.find(preds[i]);
      if (it != tally.end()) it->second[1] += 1.0;
    }
  }
  double sum = 0.0;
  for (const auto& [label, c] : tally) {
    const double denom = 2.0 * c[0] + c[1] + c[2];
    sum += denom > 0.0 ? 2.0 * c[0] / denom : 0.0;
  }
  return sum / static_cast<double>(tally.size());
}

std::vector<FeatureImportance> MdiImportance(const TrainedModel& model) {
  if (model.kind != ClassifierKind::kRandomForest) {
    Fail(ErrorCode::kInvalidArgument, "MDI needs a random forest");
  }
  if (!model.schema) Fail(ErrorCode::kSchema, "model has no schema");
  const Schema& s = *model.schema;
  const auto& cols = model.encoder.columns();
  std::vector<double> per_col(cols.size(), 0.0);
  for (const auto& t : model.trees) {
    std::vector<double> local(cols.size(), 0.0);
    double total = 0.0;
    for (const auto& n : t.nodes) {
      if (n.column < 0) continue;
      local[n.column] += n.decrease;
      total += n.decrease;
    }
    if (total <= 0.0) continue;
    for (std::size_t c = 0; c < cols.size(); ++c) per_col[c] += local[c] / total;
  }
  std::vector<FeatureImportance> out(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) out[j].feature = s.feature(j).name;
  double total = 0.0;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out[cols[c].feature].value += per_col[c];
    total += per_col[c];
  }
  if (total > 0.0) {
    for (auto& f : out) f.value /= total;
  }
  return out;
}

EvalReport EvaluateDownstream(const ClassifierSpec& spec, const Dataset& synthetic,
                              const Dataset& real_test, const SubgroupSpec& sub,
                              const std::vector<std::uint64_t>& seeds, double train_fraction) {
  if (real_test.empty()) Fail(ErrorCode::kInvalidArgument, "real test set is empty");
  if (seeds.empty()) Fail(ErrorCode::kInvalidArgument, "need at least one seed");
  sub.Validate(real_test.schema());
  const auto membership = SubgroupMembership(real_test, sub);
  const auto n_unpriv = std::count(membership.begin(), membership.end(), 1);
  if (n_unpriv == 0 || n_unpriv == static_cast<long>(membership.size())) {
    Fail(ErrorCode::kDegenerate, "subgroup is degenerate in the real test set");
  }
  std::vector<std::string> truth;
  truth.reserve(real_test.size());
  for (const auto& r : real_test.records()) truth.push_back(r.label);

  ClassifierSpec s = spec;
  if (s.policy == FeaturePolicy::kBlind && s.blind_features.empty()) {
    s.blind_features = sub.features();
  }
  const std::vector<std::string> protected_feats = sub.features();

  EvalReport rep;
  std::vector<double> f1, spd, eo, eod, pm;
  std::map<std::string, double> mdi_sum;
  for (auto seed : seeds) {
    const Split split = SplitDataset(synthetic, train_fraction, seed);
    s.seed = seed;
    const TrainedModel m = Train(s, split.train);
    const Predictions p = Predict(m, real_test);
    SeedEval ev;
    ev.seed = seed;
    ev.unseen = p.unseen;
    ev.macro_f1 = MacroF1(p.labels, truth);
    ev.spd_d = SpdOfLabels(p.labels, membership, sub.favorable_label);
    try {
      ev.eod_d = Eod(p.labels, truth, membership, sub.favorable_label);
      ev.eo_d = Eo(p.labels, truth, membership, sub.favorable_label);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerate) throw;
      ev.eo_d = ev.eod_d = kNaN;
      rep.eo_undefined = true;
    }
    ev.protected_mdi = kNaN;
    if (m.kind == ClassifierKind::kRandomForest) {
      const auto mdi = MdiImportance(m);
      ev.protected_mdi = 0.0;
      for (const auto& f : mdi) {
        mdi_sum[f.feature] += f.value;
        if (std::find(protected_feats.begin(), protected_feats.end(), f.feature) !=
            protected_feats.end()) {
          ev.protected_mdi += f.value;
        }
      }
    }
    f1.push_back(ev.macro_f1);
    spd.push_back(ev.spd_d);
    eo.push_back(ev.eo_d);
    eod.push_back(ev.eod_d);
    pm.push_back(ev.protected_mdi);
    rep.per_seed.push_back(ev);
  }
  rep.macro_f1 = Summarize(f1);
  rep.spd_d = Summarize(spd);
  rep.eo_d = Summarize(eo);
  rep.eod_d = Summarize(eod);
  rep.protected_mdi = Summarize(pm);
  if (spec.kind == ClassifierKind::kRandomForest) {
    for (std::size_t j = 0; j < real_test.schema().size(); ++j) {
      const auto& name = real_test.schema().feature(j).name;
      rep.mdi.push_back({name, mdi_sum[name] / static_cast<double>(seeds.size())});
    }
  }
  return rep;
}

}  // namespace iclbias
