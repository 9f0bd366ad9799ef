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
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "iclbias/error.h"
#include "iclbias/experiment.h"
#include "iclbias/format.h"
#include "iclbias/metrics.h"
#include "json.hpp"

namespace iclbias {
namespace {

using json = nlohmann::ordered_json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Seed-stream tags. Prompt construction depends on (seed, k, refresh) only,
// so every pi and every mitigation strategy sees the same base draws.
constexpr std::uint64_t kTagExamples = 0xe1;
constexpr std::uint64_t kTagMitigation = 0xe2;
constexpr std::uint64_t kTagGenerate = 0xe3;
constexpr std::uint64_t kTagRefExamples = 0xe4;
constexpr std::uint64_t kTagRefGenerate = 0xe5;

struct Context {
  const ExperimentConfig* cfg = nullptr;
  SchemaPtr schema;
  std::shared_ptr<const Dataset> train;
  std::optional<Dataset> test;
  ModelLayout layout;
  std::shared_ptr<const AnchorModel> anchor;
  MixtureGenerator gen;
  ConstrainedSampler sampler;
  PromptTemplate tpl;
  TemplateContext tctx;
  std::vector<CellConstraint> slots;
  std::size_t batch = 2;
  BiasMode mode = BiasMode::kMarginal;
};

Context Prepare(const ExperimentConfig& cfg, ExperimentFamily family) {
  cfg.Validate();
  Context c;
  c.cfg = &cfg;
  c.schema = std::make_shared<const Schema>(LoadSchema(cfg.schema_path));
  const IngestOptions io{cfg.clamp_numericals};
  c.train = std::make_shared<const Dataset>(LoadDataset(cfg.train_path, c.schema, io));
  if (c.train->empty()) Fail(ErrorCode::kConfig, "training data is empty");
  if (!cfg.test_path.empty()) c.test = LoadDataset(cfg.test_path, c.schema, io);

  c.mode = cfg.bias.mode;
  try {
    cfg.subgroup.Validate(*c.schema);
    if (family == ExperimentFamily::kPropagation) {
      if (c.mode == BiasMode::kAdversarial) {
        Fail(ErrorCode::kConfig, "propagation runs need a marginal, conditional or "
                                 "intersectional bias mode");
      }
    } else {
      if (c.mode != BiasMode::kAdversarial) {
        Fail(ErrorCode::kConfig, "attack and mitigation runs need the adversarial bias mode");
      }
      if (cfg.bias.alignment.empty()) Fail(ErrorCode::kConfig, "no alignment rules");
    }
    if (!cfg.classifiers.empty() && !c.test) {
      Fail(ErrorCode::kConfig, "classifiers need a dataset.test path");
    }
    BiasSpec probe = cfg.bias;
    probe.target = cfg.subgroup;
    probe.pi = 0.0;
    probe.Validate(*c.schema);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    Fail(ErrorCode::kConfig, e.what());
  }

  std::vector<std::vector<Conjunct>> conj{cfg.subgroup.unprivileged};
  for (const auto& cell : cfg.bias.cells) conj.push_back(cell.cell);
  c.layout = DefaultLayout(*c.schema, conj);
  c.anchor = std::make_shared<const AnchorModel>(FitAnchor(*c.train, c.layout));
  c.gen = MixtureGenerator{c.anchor, cfg.generator.alpha_tau};
  if (cfg.generator.kind == GeneratorConfig::Kind::kSimulated) {
    auto anchor = c.anchor;
    c.sampler = [anchor](Rng& rng, const CellConstraint& cc) { return anchor->Sample(rng, cc); };
  } else {
    c.sampler = PoolSampler(c.train);
  }

  c.tpl = BuiltinTemplate(cfg.template_id);
  c.tctx = cfg.context;
  if (c.tctx.unprivileged_name.empty()) c.tctx.unprivileged_name = cfg.subgroup.Describe();
  if (c.tctx.privileged_name.empty()) {
    c.tctx.privileged_name = "not (" + cfg.subgroup.Describe() + ")";
  }
  for (const auto& cell : cfg.bias.cells) c.tctx.cells.push_back(cell.cell);
  c.batch = static_cast<std::size_t>(cfg.SamplesPerCall());
  if (cfg.template_id == TemplateId::kBalanced) {
    c.slots = {CellConstraint{cfg.subgroup.unprivileged, false},
               CellConstraint{cfg.subgroup.unprivileged, true}};
  } else if (cfg.template_id == TemplateId::kIntersectionalBalanced) {
    for (const auto& cell : cfg.bias.cells) c.slots.push_back(CellConstraint{cell.cell, false});
  }
  return c;
}

BiasSpec SpecAt(const Context& c, double pi) {
  BiasSpec spec = c.cfg->bias;
  spec.target = c.cfg->subgroup;
  spec.pi = pi;
  return spec;
}

std::vector<Record> BalancedSelect(const Dataset& train, const std::vector<CellConstraint>& groups,
                                   int k, std::uint64_t seed) {
  std::vector<Record> out;
  const int g_count = static_cast<int>(groups.size());
  for (int g = 0; g < g_count; ++g) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (groups[g].Satisfied(train.schema(), train[i])) idx.push_back(i);
    }
    if (idx.empty()) Fail(ErrorCode::kDegenerate, "a prompt group is absent from the training data");
    const int kg = k / g_count + (g < k % g_count ? 1 : 0);
    for (auto& r : SelectIclExamples(train.Select(idx), kg, DeriveSeed(seed, {static_cast<std::uint64_t>(g)}))) {
      out.push_back(std::move(r));
    }
  }
  Rng rng = MakeRng(seed, {0xba1});
  const auto perm = SamplePrefix(rng, out.size(), out.size());
  std::vector<Record> shuffled;
  shuffled.reserve(out.size());
  for (auto i : perm) shuffled.push_back(std::move(out[i]));
  return shuffled;
}

std::vector<Record> BuildPrompt(const Context& c, const BiasSpec& spec, int k, std::uint64_t s) {
  if (k == 0) return {};
  const Schema& schema = *c.schema;
  switch (spec.mode) {
    case BiasMode::kMarginal: {
      auto ex = SelectIclExamples(*c.train, k, s);
      return InjectMarginalBias(ex, schema, spec, c.sampler, DeriveSeed(s, {1})).records;
    }
    case BiasMode::kConditional: {
      auto ex = BalancedSelect(*c.train,
                               {CellConstraint{spec.target.unprivileged, false},
                                CellConstraint{spec.target.unprivileged, true}},
                               k, s);
      return InjectConditionalBias(ex, schema, spec, DeriveSeed(s, {1})).records;
    }
    case BiasMode::kIntersectional: {
      std::vector<CellConstraint> groups;
      for (const auto& cell : spec.cells) groups.push_back(CellConstraint{cell.cell, false});
      auto ex = BalancedSelect(*c.train, groups, k, s);
      return InjectIntersectionalBias(ex, schema, spec, DeriveSeed(s, {1})).records;
    }
    case BiasMode::kAdversarial:
      return MixAdversarial(*c.train, spec, k, c.sampler, s).records;
  }
  return {};
}

struct PromptOutcome {
  std::vector<Record> examples;
  std::size_t dropped = 0;
  bool degenerate = false;
  std::string audit;  // JSON line, empty without mitigation
};

using PromptFn = std::function<PromptOutcome(std::size_t refresh)>;

double SafeSpd(const Context& c, const std::vector<Record>& recs) {
  if (recs.empty()) return kNaN;
  try {
    return Spd(Dataset(c.schema, recs, Provenance::kPrompt), c.cfg->subgroup);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerate) throw;
    return kNaN;
  }
}

// Runs the refresh loop for one grid point.
GeneratedPoint Produce(const Context& c, int k_nominal, const PromptFn& fn,
                       std::uint64_t gen_seed, bool want_prompt) {
  const ExperimentConfig& cfg = *c.cfg;
  const std::size_t n = cfg.n_synthetic;
  const std::size_t calls = (n + c.batch - 1) / c.batch;
  const auto period = static_cast<std::size_t>(cfg.refresh_period);
  const std::size_t refreshes = (calls + period - 1) / period;

  std::map<std::size_t, PromptOutcome> outcomes;
  std::mutex mu;
  auto outcome = [&](std::size_t r) -> const PromptOutcome& {
    std::lock_guard<std::mutex> lock(mu);
    auto it = outcomes.find(r);
    if (it == outcomes.end()) it = outcomes.emplace(r, fn(r)).first;
    return it->second;
  };

  GeneratedPoint pt{Dataset(c.schema, {}, Provenance::kSynthetic),
                    Dataset(c.schema, {}, Provenance::kPrompt), {}, 0.0, 0.0, 0.0, 0.0, 0, {}, {}};
  std::vector<Record> records;
  if (cfg.generator.kind == GeneratorConfig::Kind::kSimulated) {
    records.reserve(calls * c.batch);
    for (std::size_t r = 0; r < refreshes; ++r) {
      const PromptOutcome& po = outcome(r);
      std::optional<PromptModel> pm;
      if (!po.examples.empty()) pm = PhiTransform(po.examples, c.schema, c.layout);
      const std::size_t first = r * period;
      auto recs = SampleMixtureCalls(c.gen, pm ? &*pm : nullptr,
                                     static_cast<int>(po.examples.size()), first,
                                     std::min(period, calls - first), c.batch, c.slots, gen_seed);
      for (auto& rec : recs) records.push_back(std::move(rec));
    }
    records.resize(n);
  } else {
    EndpointConfig e = cfg.generator.endpoint;
    e.batch = static_cast<int>(c.batch);
    e.refresh_period = cfg.refresh_period;
    BundleFactory factory = [&](std::size_t r) {
      return ComposePrompt(c.tpl, outcome(r).examples, *c.schema, c.tctx, r);
    };
    LlmResult res = LlmGenerate(e, c.schema, factory, n);
    records = res.data.records();
    std::istringstream lines(res.log.ToJsonl());
    for (std::string line; std::getline(lines, line);) {
      if (!line.empty()) pt.generation_log_jsonl.push_back(line);
    }
  }
  pt.synthetic = Dataset(c.schema, std::move(records), Provenance::kSynthetic);

  std::vector<Record> all;
  double k_sum = 0.0, spd_sum = 0.0, dropped_sum = 0.0;
  std::size_t spd_n = 0;
  for (std::size_t r = 0; r < refreshes; ++r) {
    const PromptOutcome& po = outcome(r);
    k_sum += static_cast<double>(po.examples.size());
    dropped_sum += static_cast<double>(po.dropped);
    pt.mitigation_degenerate += po.degenerate ? 1 : 0;
    const double s = SafeSpd(c, po.examples);
    if (!std::isnan(s)) {
      spd_sum += s;
      pt.spd_prompt_max_abs = std::max(pt.spd_prompt_max_abs, std::fabs(s));
      ++spd_n;
    }
    if (!po.audit.empty()) pt.audit_jsonl.push_back(po.audit);
    all.insert(all.end(), po.examples.begin(), po.examples.end());
  }
  if (spd_n == 0) pt.spd_prompt_max_abs = kNaN;
  pt.k_effective = k_sum / static_cast<double>(refreshes);
  pt.dropped = dropped_sum / static_cast<double>(refreshes);
  pt.spd_prompt = spd_n ? spd_sum / static_cast<double>(spd_n) : kNaN;
  pt.prompt_union = Dataset(c.schema, std::move(all), Provenance::kPrompt);
  if (want_prompt) {
    pt.first_prompt = ComposePrompt(c.tpl, outcome(0).examples, *c.schema, c.tctx, 0).rendered;
  }
  (void)k_nominal;
  return pt;
}

PromptFn MakePromptFn(const Context& c, const BiasSpec& spec, int k, std::uint64_t seed,
                      MitigationStrategy strategy, double pi) {
  return [&c, spec, k, seed, strategy, pi](std::size_t r) {
    PromptOutcome po;
    const auto rr = static_cast<std::uint64_t>(r);
    const auto kk = static_cast<std::uint64_t>(k);
    po.examples = BuildPrompt(c, spec, k, DeriveSeed(seed, {kTagExamples, kk, rr}));
    if (strategy == MitigationStrategy::kNone) return po;
    MitigationConfig mc = c.cfg->mitigation;
    mc.strategy = strategy;
    MitigationResult res = ApplyMitigation(mc, po.examples, *c.schema, c.cfg->subgroup,
                                           DeriveSeed(seed, {kTagMitigation, kk, rr}));
    po.dropped = res.removed.size();
    po.degenerate = res.degenerate;
    json line;
    line["k"] = k;
    line["pi"] = pi;
    line["seed"] = seed;
    line["mitigation"] = MitigationName(strategy);
    line["refresh"] = r;
    line["kept"] = res.kept.size();
    line["removed"] = res.removed;
    line["degenerate"] = res.degenerate;
    line["shortfall"] = res.shortfall;
    line["spd_trace"] = res.spd_trace;
    po.audit = line.dump();
    po.examples = std::move(res.pool);
    return po;
  };
}

PromptFn MakeReferenceFn(const Context& c, int k_ref, std::uint64_t seed, int k) {
  return [&c, k_ref, seed, k](std::size_t r) {
    PromptOutcome po;
    Rng rng = MakeRng(seed, {kTagRefExamples, static_cast<std::uint64_t>(k),
                             static_cast<std::uint64_t>(r)});
    for (int i = 0; i < k_ref; ++i) po.examples.push_back(c.anchor->Sample(rng));
    return po;
  };
}

std::string PositiveLabel(const Context& c) {
  if (c.mode == BiasMode::kAdversarial && !c.cfg->bias.target_label.empty()) {
    return c.cfg->bias.target_label;
  }
  return c.cfg->subgroup.favorable_label;
}

// Marginal mode: subgroup frequency. Other modes: positive-label rate inside
// the subgroup.
double TargetProbability(const Context& c, const Dataset& ds) {
  if (ds.empty()) return kNaN;
  const auto& sub = c.cfg->subgroup;
  double in = 0.0, pos = 0.0;
  for (const auto& r : ds.records()) {
    if (!sub.Matches(*c.schema, r)) continue;
    in += 1.0;
    pos += r.label == PositiveLabel(c) ? 1.0 : 0.0;
  }
  if (c.mode == BiasMode::kMarginal) return in / static_cast<double>(ds.size());
  return in > 0.0 ? pos / in : kNaN;
}

std::string PointName(const Context& c, int k, double pi, std::uint64_t seed,
                      MitigationStrategy strategy) {
  return std::string(BiasModeName(c.mode)) + "_k" + std::to_string(k) + "_pi" +
         FormatDouble(pi) + "_s" + std::to_string(seed) + "_" + MitigationName(strategy);
}

void Persist(const Context& c, const GeneratedPoint& pt, const std::string& name) {
  const auto& cfg = *c.cfg;
  if (cfg.persist_synthetic) WriteCsv(pt.synthetic, cfg.output_dir / "synthetic" / (name + ".csv"));
  if (cfg.dump_prompts) {
    std::ofstream out(cfg.output_dir / "prompts" / (name + ".txt"), std::ios::binary);
    if (!out) Fail(ErrorCode::kIo, "cannot write prompt dump " + name);
    out << pt.first_prompt;
  }
}

void PrepareOutputDirs(const ExperimentConfig& cfg) {
  std::error_code ec;
  if (cfg.persist_synthetic) std::filesystem::create_directories(cfg.output_dir / "synthetic", ec);
  if (!ec && cfg.dump_prompts) std::filesystem::create_directories(cfg.output_dir / "prompts", ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create " + cfg.output_dir.string() + ": " + ec.message());
}

template <typename F>
void ParallelFor(std::size_t n, int workers, F&& f) {
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      f(i);
    }
  };
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < w; ++t) threads.emplace_back(loop);
  loop();
  for (auto& t : threads) t.join();
}

std::string StatusOf(const Error& e) {
  return std::string(e.code() == ErrorCode::kDegenerate ? "degenerate: " : "error: ") + e.what();
}

void FillNaN(ReportRow& row) {
  for (double* v : {&row.k_effective, &row.drift_prompt, &row.drift_generated,
                    &row.p_target_prompt, &row.p_target_generated, &row.p_target_reference,
                    &row.spd_prompt, &row.spd_prompt_max_abs, &row.spd_s, &row.spd_s_std,
                    &row.spd_d, &row.eo_d, &row.eod_d, &row.f1_r, &row.mdi_protected,
                    &row.aligned_mass_target, &row.aligned_mass_other, &row.dropped,
                    &row.mitigation_degenerate, &row.attack_success}) {
    *v = kNaN;
  }
}

ReportRow BaseRow(const Context& c, int k, double pi, std::uint64_t seed,
                  MitigationStrategy strategy) {
  ReportRow row;
  row.experiment = c.cfg->name;
  row.mode = BiasModeName(c.mode);
  row.generator = c.cfg->generator.Tag();
  row.mitigation = MitigationName(strategy);
  row.k = k;
  row.pi = pi;
  row.seed = seed;
  row.alpha = c.gen.alpha(k);
  row.drift_prompt = row.drift_generated = row.p_target_reference = kNaN;
  row.spd_d = row.eo_d = row.eod_d = row.f1_r = row.mdi_protected = kNaN;
  row.aligned_mass_target = row.aligned_mass_other = kNaN;
  row.attack_success = kNaN;
  return row;
}

// Shared point measurements; fills `row` and returns false on a degenerate
// SPD_S (the status is set).
void MeasurePoint(const Context& c, const GeneratedPoint& pt, ReportRow& row) {
  row.k_effective = pt.k_effective;
  row.spd_prompt = pt.spd_prompt;
  row.spd_prompt_max_abs = pt.spd_prompt_max_abs;
  row.dropped = pt.dropped;
  row.mitigation_degenerate = pt.mitigation_degenerate;
  row.p_target_prompt = TargetProbability(c, pt.prompt_union);
  row.p_target_generated = TargetProbability(c, pt.synthetic);
  try {
    const auto stats = ComputeBlockStats(
        pt.synthetic, [&](const Dataset& d) { return Spd(d, c.cfg->subgroup); }, c.cfg->blocks);
    row.spd_s = stats.mean;
    row.spd_s_std = stats.stddev;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerate) throw;
    row.spd_s = row.spd_s_std = kNaN;
    row.status = StatusOf(e);
  }
}

std::vector<CellRate> CellRates(const Context& c, const GeneratedPoint& pt, int k, double pi,
                                std::uint64_t seed) {
  std::vector<std::pair<std::string, CellConstraint>> cells;
  if (c.mode == BiasMode::kIntersectional) {
    for (const auto& cell : c.cfg->bias.cells) {
      SubgroupSpec d{cell.cell, ""};
      cells.emplace_back(d.Describe(), CellConstraint{cell.cell, false});
    }
  } else {
    cells.emplace_back("unprivileged", CellConstraint{c.cfg->subgroup.unprivileged, false});
    cells.emplace_back("privileged", CellConstraint{c.cfg->subgroup.unprivileged, true});
  }
  const std::string pos = PositiveLabel(c);
  std::vector<CellRate> out;
  for (const auto& [name, cc] : cells) {
    CellRate cr{c.cfg->name, k, pi, seed, name};
    double pp = 0.0, pg = 0.0;
    for (const auto& r : pt.prompt_union.records()) {
      if (!cc.Satisfied(*c.schema, r)) continue;
      ++cr.n_prompt;
      pp += r.label == pos;
    }
    for (const auto& r : pt.synthetic.records()) {
      if (!cc.Satisfied(*c.schema, r)) continue;
      ++cr.n_generated;
      pg += r.label == pos;
    }
    cr.rate_prompt = cr.n_prompt ? pp / static_cast<double>(cr.n_prompt) : kNaN;
    cr.rate_generated = cr.n_generated ? pg / static_cast<double>(cr.n_generated) : kNaN;
    out.push_back(cr);
  }
  return out;
}

std::vector<AlignmentMass> AlignedMass(const Context& c, const Dataset& ds, int k, double pi,
                                       std::uint64_t seed, MitigationStrategy strategy) {
  const auto& rules = c.cfg->bias.alignment;
  const Schema& schema = *c.schema;
  std::vector<std::size_t> idx;
  for (const auto& rule : rules) idx.push_back(schema.index_of(rule.feature));
  const std::size_t m = rules.size();
  std::vector<double> in_t(m + 1, 0.0), in_o(m + 1, 0.0);
  double n_t = 0.0, n_o = 0.0;
  for (const auto& r : ds.records()) {
    const bool target = c.cfg->subgroup.Matches(schema, r);
    (target ? n_t : n_o) += 1.0;
    auto& acc = target ? in_t : in_o;
    bool all = true;
    for (std::size_t j = 0; j < m; ++j) {
      const bool ok = rules[j].Covers(schema, r.values[idx[j]]);
      acc[j] += ok;
      all = all && ok;
    }
    acc[m] += all;
  }
  std::vector<AlignmentMass> out;
  for (std::size_t j = 0; j <= m; ++j) {
    AlignmentMass a{c.cfg->name, MitigationName(strategy), k, pi, seed,
                    j < m ? rules[j].feature : "all"};
    a.target = n_t > 0 ? in_t[j] / n_t : kNaN;
    a.other = n_o > 0 ? in_o[j] / n_o : kNaN;
    out.push_back(a);
  }
  return out;
}

std::string ClassifierTag(ClassifierKind k) { return ClassifierName(k); }

std::vector<ReportRow> Downstream(const Context& c, const GeneratedPoint& pt,
                                  const ReportRow& base) {
  const auto& cfg = *c.cfg;
  if (cfg.classifiers.empty()) return {base};
  std::vector<ReportRow> rows;
  for (const auto& cc : cfg.classifiers) {
    for (auto policy : cc.policies) {
      ReportRow row = base;
      row.classifier = ClassifierTag(cc.kind);
      row.policy = PolicyName(policy);
      ClassifierSpec spec;
      spec.kind = cc.kind;
      spec.policy = policy;
      spec.lr = cc.lr;
      spec.rf = cc.rf;
      spec.blind_features = cfg.subgroup.features();
      try {
        const EvalReport ev =
            EvaluateDownstream(spec, pt.synthetic, *c.test, cfg.subgroup, {base.seed},
                               cfg.train_fraction);
        const SeedEval& s = ev.per_seed.front();
        row.f1_r = s.macro_f1;
        row.spd_d = s.spd_d;
        row.eo_d = s.eo_d;
        row.eod_d = s.eod_d;
        row.mdi_protected = s.protected_mdi;
        if (ev.eo_undefined && row.status == "ok") row.status = "degenerate: EO undefined";
      } catch (const Error& e) {
        row.status = StatusOf(e);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

ExperimentReport RunAttackLike(const ExperimentConfig& cfg, ExperimentFamily family) {
  const Context c = Prepare(cfg, family);
  PrepareOutputDirs(cfg);
  std::vector<MitigationStrategy> strategies{MitigationStrategy::kNone};
  if (family == ExperimentFamily::kMitigation) strategies = cfg.strategies;

  struct Job {
    int k;
    double pi;
    std::uint64_t seed;
    MitigationStrategy strategy;
  };
  std::vector<Job> jobs;
  for (int k : cfg.k_grid) {
    for (double pi : cfg.pi_grid) {
      for (auto seed : cfg.seeds) {
        for (auto s : strategies) jobs.push_back({k, pi, seed, s});
      }
    }
  }
  struct JobOut {
    std::vector<ReportRow> rows;
    std::vector<AlignmentMass> alignment;
    std::vector<std::string> audit, log;
  };
  std::vector<JobOut> outs(jobs.size());
  ParallelFor(jobs.size(), cfg.workers, [&](std::size_t i) {
    const Job& j = jobs[i];
    ReportRow base = BaseRow(c, j.k, j.pi, j.seed, j.strategy);
    try {
      const GeneratedPoint pt =
          Produce(c, j.k, MakePromptFn(c, SpecAt(c, j.pi), j.k, j.seed, j.strategy, j.pi),
                  DeriveSeed(j.seed, {kTagGenerate, static_cast<std::uint64_t>(j.k)}),
                  cfg.dump_prompts);
      Persist(c, pt, PointName(c, j.k, j.pi, j.seed, j.strategy));
      MeasurePoint(c, pt, base);
      outs[i].alignment = AlignedMass(c, pt.synthetic, j.k, j.pi, j.seed, j.strategy);
      const auto joint = outs[i].alignment.back();
      base.aligned_mass_target = joint.target;
      base.aligned_mass_other = joint.other;
      outs[i].audit = pt.audit_jsonl;
      outs[i].log = pt.generation_log_jsonl;
      outs[i].rows = Downstream(c, pt, base);
    } catch (const Error& e) {
      FillNaN(base);
      base.status = StatusOf(e);
      outs[i].rows = {base};
    }
  });

  ExperimentReport rep;
  for (auto& o : outs) {
    for (auto& r : o.rows) rep.rows.push_back(std::move(r));
    for (auto& a : o.alignment) rep.alignment.push_back(std::move(a));
    for (auto& a : o.audit) rep.audit_jsonl.push_back(std::move(a));
    for (auto& l : o.log) rep.generation_log_jsonl.push_back(std::move(l));
  }
  // Attack success against the pi = 0 row of the same point.
  std::map<std::tuple<int, std::uint64_t, std::string, std::string, std::string>, double> base0;
  for (const auto& r : rep.rows) {
    if (r.pi == 0.0) base0[{r.k, r.seed, r.mitigation, r.classifier, r.policy}] = r.spd_s;
  }
  for (auto& r : rep.rows) {
    auto it = base0.find({r.k, r.seed, r.mitigation, r.classifier, r.policy});
    if (it == base0.end() || std::isnan(it->second) || std::isnan(r.spd_s)) continue;
    r.attack_success = std::fabs(r.spd_s) - std::fabs(it->second) > 0.1 ? 1.0 : 0.0;
  }
  SortRows(rep.rows);
  return rep;
}

}  // namespace

ExperimentReport RunPropagation(const ExperimentConfig& cfg) {
  const Context c = Prepare(cfg, ExperimentFamily::kPropagation);
  PrepareOutputDirs(cfg);
  const std::size_t nk = cfg.k_grid.size(), ns = cfg.seeds.size(), np = cfg.pi_grid.size();

  // Phase 1: the anchor-prompted reference per (k, seed).
  std::vector<std::optional<Dataset>> refs(nk * ns);
  std::vector<std::string> ref_errors(nk * ns);
  ParallelFor(nk * ns, cfg.workers, [&](std::size_t i) {
    const int k = cfg.k_grid[i / ns];
    const std::uint64_t seed = cfg.seeds[i % ns];
    const int k_ref = cfg.reference_k ? *cfg.reference_k : k;
    try {
      auto pt = Produce(c, k_ref, MakeReferenceFn(c, k_ref, seed, k),
                        DeriveSeed(seed, {kTagRefGenerate, static_cast<std::uint64_t>(k)}),
                        false);
      refs[i] = std::move(pt.synthetic);
    } catch (const Error& e) {
      ref_errors[i] = StatusOf(e);
    }
  });

  // Phase 2: every (k, pi, seed).
  struct JobOut {
    ReportRow row;
    std::vector<CellRate> cells;
    std::vector<std::string> log;
  };
  std::vector<JobOut> outs(nk * np * ns);
  ParallelFor(outs.size(), cfg.workers, [&](std::size_t i) {
    const std::size_t ki = i / (np * ns), pi_i = (i / ns) % np, si = i % ns;
    const int k = cfg.k_grid[ki];
    const double pi = cfg.pi_grid[pi_i];
    const std::uint64_t seed = cfg.seeds[si];
    ReportRow row = BaseRow(c, k, pi, seed, MitigationStrategy::kNone);
    try {
      const GeneratedPoint pt =
          Produce(c, k, MakePromptFn(c, SpecAt(c, pi), k, seed, MitigationStrategy::kNone, pi),
                  DeriveSeed(seed, {kTagGenerate, static_cast<std::uint64_t>(k)}),
                  cfg.dump_prompts);
      Persist(c, pt, PointName(c, k, pi, seed, MitigationStrategy::kNone));
      MeasurePoint(c, pt, row);
      const auto& ref = refs[ki * ns + si];
      if (ref) {
        row.p_target_reference = TargetProbability(c, *ref);
        if (!pt.prompt_union.empty()) row.drift_prompt = DriftScore(pt.prompt_union, *ref).total;
        row.drift_generated = DriftScore(pt.synthetic, *ref).total;
      } else if (row.status == "ok") {
        row.status = "reference " + ref_errors[ki * ns + si];
      }
      outs[i].cells = CellRates(c, pt, k, pi, seed);
      outs[i].log = pt.generation_log_jsonl;
    } catch (const Error& e) {
      FillNaN(row);
      row.status = StatusOf(e);
    }
    outs[i].row = row;
  });

  ExperimentReport rep;
  for (auto& o : outs) {
    rep.rows.push_back(o.row);
    for (auto& cr : o.cells) rep.cells.push_back(std::move(cr));
    for (auto& l : o.log) rep.generation_log_jsonl.push_back(std::move(l));
  }

  // Drift-on-drift slope per (k, seed) over the pi grid, then pooled.
  for (std::size_t ki = 0; ki < nk; ++ki) {
    std::vector<double> px, py;
    for (std::size_t si = 0; si <= ns; ++si) {
      const bool pooled = si == ns;
      std::vector<double> xs, ys;
      for (std::size_t p = 0; p < np; ++p) {
        for (std::size_t s = 0; s < ns; ++s) {
          if (!pooled && s != si) continue;
          const auto& r = outs[ki * np * ns + p * ns + s].row;
          if (std::isnan(r.drift_prompt) || std::isnan(r.drift_generated)) continue;
          xs.push_back(r.drift_prompt);
          ys.push_back(r.drift_generated);
        }
      }
      BetaFit fit;
      fit.experiment = cfg.name;
      fit.k = cfg.k_grid[ki];
      fit.seed = pooled ? "pooled" : std::to_string(cfg.seeds[si]);
      fit.alpha = c.gen.alpha(fit.k);
      fit.points = xs.size();
      try {
        const auto ols = OlsFit(xs, ys);
        fit.beta = ols.slope;
        fit.intercept = ols.intercept;
        fit.r_squared = ols.r_squared;
      } catch (const Error& e) {
        fit.beta = fit.intercept = fit.r_squared = kNaN;
        fit.status = StatusOf(e);
      }
      rep.fits.push_back(fit);
    }
  }
  SortRows(rep.rows);
  return rep;
}

ExperimentReport RunAttack(const ExperimentConfig& cfg) {
  return RunAttackLike(cfg, ExperimentFamily::kAttack);
}

ExperimentReport RunMitigation(const ExperimentConfig& cfg) {
  return RunAttackLike(cfg, ExperimentFamily::kMitigation);
}

ExperimentReport RunExperiment(ExperimentFamily family, const ExperimentConfig& cfg) {
  switch (family) {
    case ExperimentFamily::kPropagation: return RunPropagation(cfg);
    case ExperimentFamily::kAttack: return RunAttack(cfg);
    case ExperimentFamily::kMitigation: return RunMitigation(cfg);
  }
  Fail(ErrorCode::kConfig, "unknown family");
}

GeneratedPoint GeneratePoint(const ExperimentConfig& cfg, ExperimentFamily family, int k,
                             double pi, std::uint64_t seed, MitigationStrategy strategy) {
  const Context c = Prepare(cfg, family);
  if (k < 0) Fail(ErrorCode::kInvalidArgument, "k must be non-negative");
  if (!(pi >= 0.0 && pi <= 1.0)) Fail(ErrorCode::kInvalidArgument, "pi must lie in [0, 1]");
  return Produce(c, k, MakePromptFn(c, SpecAt(c, pi), k, seed, strategy, pi),
                 DeriveSeed(seed, {kTagGenerate, static_cast<std::uint64_t>(k)}), true);
}

}  // namespace iclbias
