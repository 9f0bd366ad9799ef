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

// Downstream classifiers trained on synthetic data, scored on real data.

#ifndef ICLBIAS_DOWNSTREAM_H_
#define ICLBIAS_DOWNSTREAM_H_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iclbias/data.h"

namespace iclbias {

enum class ClassifierKind { kLogisticRegression, kRandomForest };
enum class FeaturePolicy { kAware, kBlind };

const char* ClassifierName(ClassifierKind k);
ClassifierKind ParseClassifier(const std::string& name);
const char* PolicyName(FeaturePolicy p);
FeaturePolicy ParsePolicy(const std::string& name);

struct LogisticParams {
  double l2 = 1e-3;
  double step = 0.1;
  double grad_tol = 1e-6;
  int max_iter = 5000;
};

struct ForestParams {
  int trees = 100;
  int max_depth = 8;
  int min_leaf = 2;
  bool bootstrap = true;
};

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::kLogisticRegression;
  FeaturePolicy policy = FeaturePolicy::kAware;
  // Features removed under the blind policy (the subgroup's conjuncts).
  std::vector<std::string> blind_features;
  std::uint64_t seed = 0;
  LogisticParams lr;
  ForestParams rf;
};

// One-hot encoding over categories seen in training plus z-scored
// numericals. Unseen categories encode as an all-zero block.
class Encoder {
 public:
  struct Column {
    std::size_t feature = 0;  // schema index
    std::string category;     // empty for numerical columns
    double mean = 0.0;
    double scale = 1.0;
  };

  static Encoder Fit(const Dataset& train, const std::vector<std::string>& excluded);

  std::size_t width() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  // Design matrix with a trailing bias column of ones.
  Eigen::MatrixXd Transform(const Dataset& ds, std::size_t* unseen = nullptr) const;

 private:
  friend class ModelIo;
  std::vector<Column> columns_;
};

struct TreeNode {
  int column = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1, right = -1;
  int label = -1;  // class index at leaves
  double decrease = 0.0;  // weighted impurity decrease of the split
};

struct Tree {
  std::vector<TreeNode> nodes;
};

struct TrainedModel {
  ClassifierKind kind = ClassifierKind::kLogisticRegression;
  FeaturePolicy policy = FeaturePolicy::kAware;
  SchemaPtr schema;
  Encoder encoder;
  std::vector<std::string> classes;  // label support order, present in train
  // Logistic: one row per binary problem (a single row for two classes),
  // width + 1 columns with the bias last.
  Eigen::MatrixXd weights;
  std::vector<Tree> trees;
  std::vector<double> loss_trace;  // accepted losses, first problem
  int iterations = 0;
  double final_grad_norm = 0.0;
};

// Throws kDegenerate on single-class training data.
TrainedModel Train(const ClassifierSpec& spec, const Dataset& train);

struct Predictions {
  std::vector<std::string> labels;
  std::size_t unseen = 0;  // records with an unseen category
};

Predictions Predict(const TrainedModel& model, const Dataset& ds);

double MacroF1(const std::vector<std::string>& preds, const std::vector<std::string>& truth);

struct FeatureImportance {
  std::string feature;
  double value = 0.0;
};

// Per schema feature, in schema order; excluded features report 0.
std::vector<FeatureImportance> MdiImportance(const TrainedModel& model);

struct LogisticObjective {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// Mean log-loss plus l2 / 2 * |w|^2 over all but the bias (last) weight.
LogisticObjective LogisticLossGrad(const Eigen::MatrixXd& x, const Eigen::VectorXd& y01,
                                   const Eigen::VectorXd& w, double l2);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct SeedEval {
  std::uint64_t seed = 0;
  double macro_f1 = 0.0;
  double spd_d = 0.0;
  double eo_d = 0.0;   // NaN when undefined
  double eod_d = 0.0;  // NaN when undefined
  double protected_mdi = 0.0;  // NaN for logistic models
  std::size_t unseen = 0;
};

struct EvalReport {
  MetricSummary macro_f1, spd_d, eo_d, eod_d, protected_mdi;
  std::vector<FeatureImportance> mdi;  // seed mean, forests only
  std::vector<SeedEval> per_seed;
  bool eo_undefined = false;
};

// For every seed: split `synthetic` (train_fraction), train with that seed,
// predict `real_test` and score it. Throws kDegenerate when the subgroup
// or its complement is absent from real_test.
EvalReport EvaluateDownstream(const ClassifierSpec& spec, const Dataset& synthetic,
                              const Dataset& real_test, const SubgroupSpec& sub,
                              const std::vector<std::uint64_t>& seeds,
                              double train_fraction = 0.8);

// Versioned binary dump plus a plain-text sidecar (`path` + ".txt").
void SaveModel(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel LoadModel(const std::filesystem::path& path, SchemaPtr schema);
std::string ModelSummary(const TrainedModel& model);

}  // namespace iclbias

#endif  // ICLBIAS_DOWNSTREAM_H_
