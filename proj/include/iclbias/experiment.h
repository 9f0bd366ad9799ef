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

// Config-driven sweeps (propagation, attack, mitigation) and report files.

#ifndef ICLBIAS_EXPERIMENT_H_
#define ICLBIAS_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iclbias/data.h"
#include "iclbias/downstream.h"
#include "iclbias/generators.h"
#include "iclbias/mitigation.h"
#include "iclbias/prompt.h"

namespace iclbias {

enum class ExperimentFamily { kPropagation, kAttack, kMitigation };

const char* FamilyName(ExperimentFamily f);
ExperimentFamily ParseFamily(const std::string& name);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::kRandomForest;
  std::vector<FeaturePolicy> policies{FeaturePolicy::kAware, FeaturePolicy::kBlind};
  LogisticParams lr;
  ForestParams rf;
};

struct GeneratorConfig {
  enum class Kind { kSimulated, kEndpoint };
  Kind kind = Kind::kSimulated;
  double alpha_tau = kDefaultAlphaTau;
  EndpointConfig endpoint;  // endpoint kind only

  std::string Tag() const;
};

struct ExperimentConfig {
  std::string name;
  std::string dataset_name;  // selects the alignment preset
  std::filesystem::path schema_path, train_path, test_path;
  bool clamp_numericals = false;
  SubgroupSpec subgroup;
  GeneratorConfig generator;
  TemplateId template_id = TemplateId::kUnconstrained;
  TemplateContext context;
  // Injection template; `pi` is overwritten per grid point and `target`
  // always equals `subgroup`.
  BiasSpec bias;
  std::vector<int> k_grid{20, 40, 60, 80};
  std::vector<double> pi_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t n_synthetic = 5000;
  int refresh_period = kDefaultRefreshPeriod;
  int blocks = 5;
  // Prompt size of the anchor-prompted reference; nullopt matches k.
  std::optional<int> reference_k;
  std::vector<MitigationStrategy> strategies{
      MitigationStrategy::kNone, MitigationStrategy::kRandomSubset,
      MitigationStrategy::kGroupBalanced, MitigationStrategy::kFairSpd,
      MitigationStrategy::kCorrelationFilter};
  MitigationConfig mitigation;  // strategy field ignored
  std::vector<ClassifierConfig> classifiers;
  double train_fraction = 0.8;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int workers = 1;
  std::filesystem::path output_dir = "out";
  bool persist_synthetic = true;
  bool dump_prompts = false;

  // Throws kConfig.
  void Validate() const;
  int SamplesPerCall() const { return iclbias::SamplesPerCall(template_id); }
};

// Unknown keys are errors. Relative dataset paths resolve against base_dir.
ExperimentConfig ParseConfig(const std::string& json_text,
                             const std::filesystem::path& base_dir = {});
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// One row per (config point, seed, classifier, policy). NaN cells are
// written as NA; `status` explains them.
struct ReportRow {
  std::string experiment;
  std::string mode;  // bias mode
  std::string generator;
  std::string classifier;  // empty when no classifier ran
  std::string policy;
  std::string mitigation = "none";
  int k = 0;
  double pi = 0.0;
  std::uint64_t seed = 0;
  double k_effective = 0.0;  // mean prompt size after mitigation
  double alpha = 0.0;
  double drift_prompt = 0.0;
  double drift_generated = 0.0;
  double p_target_prompt = 0.0;
  double p_target_generated = 0.0;
  double p_target_reference = 0.0;
  double spd_prompt = 0.0;  // mean over prompt refreshes
  double spd_prompt_max_abs = 0.0;
  double spd_s = 0.0;       // block mean
  double spd_s_std = 0.0;
  double spd_d = 0.0;
  double eo_d = 0.0;
  double eod_d = 0.0;
  double f1_r = 0.0;
  double mdi_protected = 0.0;
  double aligned_mass_target = 0.0;
  double aligned_mass_other = 0.0;
  double dropped = 0.0;  // mean examples removed per refresh
  double mitigation_degenerate = 0.0;  // refreshes flagged degenerate
  double attack_success = 0.0;  // 1, 0 or NaN without a pi = 0 baseline
  std::string status = "ok";
};

struct BetaFit {
  std::string experiment;
  int k = 0;
  std::string seed;  // a seed or "pooled"
  double alpha = 0.0;
  double beta = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
  std::string status = "ok";
};

struct CellRate {
  std::string experiment;
  int k = 0;
  double pi = 0.0;
  std::uint64_t seed = 0;
  std::string cell;
  std::size_t n_prompt = 0;
  double rate_prompt = 0.0;
  std::size_t n_generated = 0;
  double rate_generated = 0.0;
};

struct AlignmentMass {
  std::string experiment;
  std::string mitigation;
  int k = 0;
  double pi = 0.0;
  std::uint64_t seed = 0;
  std::string feature;  // "all" for the joint event
  double target = 0.0;
  double other = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<BetaFit> fits;
  std::vector<CellRate> cells;
  std::vector<AlignmentMass> alignment;
  std::vector<std::string> audit_jsonl;
  std::vector<std::string> generation_log_jsonl;
};

ExperimentReport RunPropagation(const ExperimentConfig& config);
ExperimentReport RunAttack(const ExperimentConfig& config);
ExperimentReport RunMitigation(const ExperimentConfig& config);
ExperimentReport RunExperiment(ExperimentFamily family, const ExperimentConfig& config);

// A single grid point, as the runner generates it.
struct GeneratedPoint {
  Dataset synthetic;
  Dataset prompt_union;  // all refreshed prompts, concatenated
  std::string first_prompt;
  double k_effective = 0.0;
  double spd_prompt = 0.0;
  double spd_prompt_max_abs = 0.0;
  double dropped = 0.0;
  int mitigation_degenerate = 0;
  std::vector<std::string> audit_jsonl;
  std::vector<std::string> generation_log_jsonl;
};

GeneratedPoint GeneratePoint(const ExperimentConfig& config, ExperimentFamily family, int k,
                             double pi, std::uint64_t seed,
                             MitigationStrategy strategy = MitigationStrategy::kNone);

enum class ReportFormat { kCsv, kJson };
ReportFormat ParseReportFormat(const std::string& name);

// Rows sorted by (experiment, k, pi, seed) then the tag columns.
void SortRows(std::vector<ReportRow>& rows);
std::vector<std::string> ReportColumns();
// Cell lookup by column name. Throws kInvalidArgument for an unknown or
// mismatched column; NA cells read as NaN.
double RowNumber(const ReportRow& row, const std::string& column);
const std::string& RowText(const ReportRow& row, const std::string& column);
std::string RowsToCsv(const std::vector<ReportRow>& rows);
std::string RowsToJson(const std::vector<ReportRow>& rows);
std::vector<ReportRow> RowsFromCsv(const std::string& text);
std::vector<ReportRow> RowsFromJson(const std::string& text);

// Writes report.{csv|json}, fits.csv, cells.csv, alignment.csv and the
// JSON-lines audits that are non-empty. Throws on an empty report.
void EmitReport(const ExperimentReport& report, const std::filesystem::path& dir,
                ReportFormat format);

}  // namespace iclbias

#endif  // ICLBIAS_EXPERIMENT_H_
