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

#include <fstream>
#include <set>
#include <sstream>

#include "iclbias/error.h"
#include "iclbias/experiment.h"
#include "iclbias/format.h"
#include "json.hpp"

namespace iclbias {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void Bad(const std::string& where, const std::string& what) {
  Fail(ErrorCode::kConfig, where + ": " + what);
}

void CheckKeys(const json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) Bad(where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) Bad(where, "unknown key '" + key + "'");
  }
}

const json& Required(const json& j, const std::string& where, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) Bad(where, "missing key '" + key + "'");
  return *it;
}

std::string Str(const json& j, const std::string& where) {
  if (!j.is_string()) Bad(where, "expected a string");
  return j.get<std::string>();
}

double Num(const json& j, const std::string& where) {
  if (!j.is_number()) Bad(where, "expected a number");
  return j.get<double>();
}

long Int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) Bad(where, "expected an integer");
  return j.get<long>();
}

bool Bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) Bad(where, "expected a boolean");
  return j.get<bool>();
}

const json& Arr(const json& j, const std::string& where) {
  if (!j.is_array()) Bad(where, "expected an array");
  return j;
}

// Categorical values may be written as strings or bare integers.
std::string ValueString(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  if (j.is_number()) return FormatDouble(j.get<double>());
  Bad(where, "expected a string or number");
}

Conjunct ParseConjunct(const json& j, const std::string& where) {
  CheckKeys(j, where, {"feature", "equals", "interval"});
  const std::string f = Str(Required(j, where, "feature"), where + ".feature");
  const bool eq = j.contains("equals"), iv = j.contains("interval");
  if (eq == iv) Bad(where, "exactly one of 'equals' and 'interval' is required");
  if (eq) return Conjunct::Equals(f, ValueString(j["equals"], where + ".equals"));
  const auto& a = Arr(j["interval"], where + ".interval");
  if (a.size() != 2) Bad(where, "interval needs two bounds");
  return Conjunct::Within(f, Num(a[0], where), Num(a[1], where));
}

std::vector<Conjunct> ParseConjuncts(const json& j, const std::string& where) {
  std::vector<Conjunct> out;
  std::size_t i = 0;
  for (const auto& c : Arr(j, where)) {
    out.push_back(ParseConjunct(c, where + "[" + std::to_string(i++) + "]"));
  }
  return out;
}

AlignmentRule ParseRule(const json& j, const std::string& where) {
  CheckKeys(j, where, {"feature", "uniform_int", "uniform_real", "fixed", "choice"});
  const std::string f = Str(Required(j, where, "feature"), where + ".feature");
  if (j.size() != 2) Bad(where, "a rule needs exactly one generator key");
  if (j.contains("uniform_int") || j.contains("uniform_real")) {
    const bool integral = j.contains("uniform_int");
    const auto& a = Arr(j[integral ? "uniform_int" : "uniform_real"], where);
    if (a.size() != 2) Bad(where, "range needs two bounds");
    if (integral) return AlignmentRule::UniformInt(f, Int(a[0], where), Int(a[1], where));
    return AlignmentRule::UniformReal(f, Num(a[0], where), Num(a[1], where));
  }
  if (j.contains("fixed")) return AlignmentRule::Fixed(f, ValueString(j["fixed"], where));
  std::vector<std::string> values;
  for (const auto& v : Arr(j["choice"], where)) values.push_back(ValueString(v, where));
  return AlignmentRule::Choice(f, std::move(values));
}

void ParseDataset(const json& j, const std::filesystem::path& base, ExperimentConfig& cfg) {
  const std::string w = "dataset";
  CheckKeys(j, w, {"name", "schema", "train", "test", "clamp_numericals"});
  auto path = [&](const std::string& key) {
    std::filesystem::path p = Str(Required(j, w, key), w + "." + key);
    return p.is_absolute() || base.empty() ? p : base / p;
  };
  cfg.dataset_name = Str(Required(j, w, "name"), w + ".name");
  cfg.schema_path = path("schema");
  cfg.train_path = path("train");
  if (j.contains("test")) cfg.test_path = path("test");
  if (j.contains("clamp_numericals")) cfg.clamp_numericals = Bool(j["clamp_numericals"], w);
}

void ParseGenerator(const json& j, ExperimentConfig& cfg) {
  const std::string w = "generator";
  const std::string kind = Str(Required(j, w, "kind"), w + ".kind");
  if (kind == "simulated") {
    CheckKeys(j, w, {"kind", "alpha_tau"});
    cfg.generator.kind = GeneratorConfig::Kind::kSimulated;
    if (j.contains("alpha_tau")) cfg.generator.alpha_tau = Num(j["alpha_tau"], w + ".alpha_tau");
    return;
  }
  if (kind != "endpoint") Bad(w, "kind must be 'simulated' or 'endpoint'");
  CheckKeys(j, w, {"kind", "base_url", "path", "model", "temperature", "max_retries",
                   "timeout_s", "max_in_flight", "max_parse_failure_rate", "api_key_env"});
  auto& e = cfg.generator.endpoint;
  cfg.generator.kind = GeneratorConfig::Kind::kEndpoint;
  e.base_url = Str(Required(j, w, "base_url"), w + ".base_url");
  e.model = Str(Required(j, w, "model"), w + ".model");
  if (j.contains("path")) e.path = Str(j["path"], w + ".path");
  if (j.contains("temperature")) e.temperature = Num(j["temperature"], w + ".temperature");
  if (j.contains("max_retries")) e.max_retries = static_cast<int>(Int(j["max_retries"], w));
  if (j.contains("timeout_s")) e.timeout_s = Num(j["timeout_s"], w + ".timeout_s");
  if (j.contains("max_in_flight")) {
    e.max_in_flight = static_cast<int>(Int(j["max_in_flight"], w));
  }
  if (j.contains("max_parse_failure_rate")) {
    e.max_parse_failure_rate = Num(j["max_parse_failure_rate"], w);
  }
  if (j.contains("api_key_env")) e.api_key_env = Str(j["api_key_env"], w + ".api_key_env");
}

void ParseTemplateBlock(const json& j, ExperimentConfig& cfg) {
  const std::string w = "template";
  if (j.is_string()) {
    cfg.template_id = ParseTemplateId(j.get<std::string>());
    return;
  }
  CheckKeys(j, w, {"id", "domain", "unprivileged", "privileged"});
  cfg.template_id = ParseTemplateId(Str(Required(j, w, "id"), w + ".id"));
  if (j.contains("domain")) cfg.context.domain = Str(j["domain"], w + ".domain");
  if (j.contains("unprivileged")) {
    cfg.context.unprivileged_name = Str(j["unprivileged"], w + ".unprivileged");
  }
  if (j.contains("privileged")) {
    cfg.context.privileged_name = Str(j["privileged"], w + ".privileged");
  }
}

void ParseBias(const json& j, ExperimentConfig& cfg) {
  const std::string w = "bias";
  CheckKeys(j, w, {"mode", "target_label", "negative_label", "non_target_positive_rate",
                   "cells", "alignment"});
  auto& b = cfg.bias;
  b.mode = ParseBiasMode(Str(Required(j, w, "mode"), w + ".mode"));
  if (j.contains("target_label")) b.target_label = ValueString(j["target_label"], w);
  if (j.contains("negative_label")) b.negative_label = ValueString(j["negative_label"], w);
  if (j.contains("non_target_positive_rate")) {
    b.non_target_positive_rate = Num(j["non_target_positive_rate"], w);
  }
  if (j.contains("cells")) {
    std::size_t i = 0;
    for (const auto& c : Arr(j["cells"], w + ".cells")) {
      const std::string cw = w + ".cells[" + std::to_string(i++) + "]";
      CheckKeys(c, cw, {"cell", "up"});
      b.cells.push_back({ParseConjuncts(Required(c, cw, "cell"), cw + ".cell"),
                         Bool(Required(c, cw, "up"), cw + ".up")});
    }
  }
  if (j.contains("alignment")) {
    const auto& a = j["alignment"];
    if (a.is_string()) {
      if (a.get<std::string>() != "preset") Bad(w + ".alignment", "expected 'preset' or rules");
      b.alignment = AlignmentPreset(cfg.dataset_name);
      if (b.alignment.empty()) {
        Bad(w + ".alignment", "no preset for dataset '" + cfg.dataset_name + "'");
      }
    } else {
      std::size_t i = 0;
      for (const auto& r : Arr(a, w + ".alignment")) {
        b.alignment.push_back(ParseRule(r, w + ".alignment[" + std::to_string(i++) + "]"));
      }
    }
  }
}

void ParseMitigationBlock(const json& j, ExperimentConfig& cfg) {
  const std::string w = "mitigation";
  CheckKeys(j, w, {"strategies", "epsilon", "drop_fraction", "k_star"});
  if (j.contains("strategies")) {
    cfg.strategies.clear();
    for (const auto& s : Arr(j["strategies"], w + ".strategies")) {
      cfg.strategies.push_back(ParseMitigation(Str(s, w + ".strategies")));
    }
  }
  if (j.contains("epsilon")) cfg.mitigation.epsilon = Num(j["epsilon"], w + ".epsilon");
  if (j.contains("drop_fraction")) {
    cfg.mitigation.drop_fraction = Num(j["drop_fraction"], w + ".drop_fraction");
  }
  if (j.contains("k_star") && !j["k_star"].is_null()) {
    cfg.mitigation.k_star = static_cast<int>(Int(j["k_star"], w + ".k_star"));
  }
}

ClassifierConfig ParseClassifierBlock(const json& j, const std::string& w) {
  CheckKeys(j, w, {"kind", "policies", "trees", "max_depth", "min_leaf", "bootstrap", "l2",
                   "step", "grad_tol", "max_iter"});
  ClassifierConfig c;
  try {
    c.kind = ParseClassifier(Str(Required(j, w, "kind"), w + ".kind"));
    if (j.contains("policies")) {
      c.policies.clear();
      for (const auto& p : Arr(j["policies"], w + ".policies")) {
        c.policies.push_back(ParsePolicy(Str(p, w + ".policies")));
      }
    }
  } catch (const Error& e) {
    Bad(w, e.what());
  }
  if (j.contains("trees")) c.rf.trees = static_cast<int>(Int(j["trees"], w + ".trees"));
  if (j.contains("max_depth")) c.rf.max_depth = static_cast<int>(Int(j["max_depth"], w));
  if (j.contains("min_leaf")) c.rf.min_leaf = static_cast<int>(Int(j["min_leaf"], w));
  if (j.contains("bootstrap")) c.rf.bootstrap = Bool(j["bootstrap"], w + ".bootstrap");
  if (j.contains("l2")) c.lr.l2 = Num(j["l2"], w + ".l2");
  if (j.contains("step")) c.lr.step = Num(j["step"], w + ".step");
  if (j.contains("grad_tol")) c.lr.grad_tol = Num(j["grad_tol"], w + ".grad_tol");
  if (j.contains("max_iter")) c.lr.max_iter = static_cast<int>(Int(j["max_iter"], w));
  return c;
}

}  // namespace

const char* FamilyName(ExperimentFamily f) {
  switch (f) {
    case ExperimentFamily::kPropagation: return "propagation";
    case ExperimentFamily::kAttack: return "attack";
    case ExperimentFamily::kMitigation: return "mitigation";
  }
  return "?";
}

ExperimentFamily ParseFamily(const std::string& name) {
  if (name == "propagation" || name == "propagate") return ExperimentFamily::kPropagation;
  if (name == "attack") return ExperimentFamily::kAttack;
  if (name == "mitigation" || name == "mitigate") return ExperimentFamily::kMitigation;
  Fail(ErrorCode::kConfig, "unknown experiment family '" + name + "'");
}

std::string GeneratorConfig::Tag() const {
  if (kind == Kind::kSimulated) return "simulated(tau=" + FormatDouble(alpha_tau) + ")";
  return "endpoint(" + endpoint.model + ")";
}

void ExperimentConfig::Validate() const {
  auto bad = [](const std::string& m) { Fail(ErrorCode::kConfig, m); };
  if (name.empty()) bad("name is empty");
  if (k_grid.empty()) bad("k_grid is empty");
  if (pi_grid.empty()) bad("pi_grid is empty");
  if (seeds.empty()) bad("seeds is empty");
  for (int k : k_grid) {
    if (k < 0) bad("k_grid entries must be >= 0");
  }
  for (double p : pi_grid) {
    if (!(p >= 0.0 && p <= 1.0)) bad("pi_grid entries must lie in [0, 1]");
  }
  if (blocks < 1) bad("blocks must be >= 1");
  if (n_synthetic < static_cast<std::size_t>(blocks)) bad("n_synthetic must be >= blocks");
  if (refresh_period < 1) bad("refresh_period must be >= 1");
  if (workers < 1) bad("workers must be >= 1");
  if (reference_k && *reference_k < 0) bad("reference_k must be >= 0");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) bad("train_fraction must lie in (0, 1)");
  if (!(generator.alpha_tau > 0.0)) bad("alpha_tau must be positive");
  if (subgroup.unprivileged.empty()) bad("subgroup has no conjuncts");
  if (subgroup.favorable_label.empty()) bad("subgroup favorable_label is empty");
  if (strategies.empty()) bad("mitigation strategies are empty");
  mitigation.Validate();
  if (generator.kind == GeneratorConfig::Kind::kEndpoint) {
    EndpointConfig e = generator.endpoint;
    e.batch = SamplesPerCall();
    e.refresh_period = refresh_period;
    e.Validate();
  }
  for (const auto& c : classifiers) {
    if (c.policies.empty()) bad("classifier without policies");
    if (c.rf.trees < 1 || c.rf.max_depth < 1 || c.rf.min_leaf < 1) bad("bad forest parameters");
    if (c.lr.max_iter < 0 || !(c.lr.step > 0.0) || c.lr.l2 < 0.0) bad("bad logistic parameters");
  }
  if (template_id == TemplateId::kIntersectionalBalanced && bias.cells.size() != 4) {
    bad("the intersectional template needs four bias cells");
  }
}

namespace {

ExperimentConfig ParseConfigImpl(const std::string& json_text,
                                 const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  const std::string w = "config";
  CheckKeys(j, w, {"name", "dataset", "subgroup", "generator", "template", "bias", "k_grid",
                   "pi_grid", "n_synthetic", "refresh_period", "blocks", "reference_k",
                   "mitigation", "classifiers", "train_fraction", "seeds", "workers",
                   "output_dir", "persist_synthetic", "dump_prompts"});
  ExperimentConfig cfg;
  cfg.name = Str(Required(j, w, "name"), "name");
  ParseDataset(Required(j, w, "dataset"), base_dir, cfg);
  {
    const auto& s = Required(j, w, "subgroup");
    CheckKeys(s, "subgroup", {"unprivileged", "favorable_label"});
    cfg.subgroup.unprivileged =
        ParseConjuncts(Required(s, "subgroup", "unprivileged"), "subgroup.unprivileged");
    cfg.subgroup.favorable_label =
        ValueString(Required(s, "subgroup", "favorable_label"), "subgroup.favorable_label");
  }
  if (j.contains("generator")) ParseGenerator(j["generator"], cfg);
  if (j.contains("template")) ParseTemplateBlock(j["template"], cfg);
  if (j.contains("bias")) ParseBias(j["bias"], cfg);
  cfg.bias.target = cfg.subgroup;
  if (j.contains("k_grid")) {
    cfg.k_grid.clear();
    for (const auto& k : Arr(j["k_grid"], "k_grid")) {
      cfg.k_grid.push_back(static_cast<int>(Int(k, "k_grid")));
    }
  }
  if (j.contains("pi_grid")) {
    cfg.pi_grid.clear();
    for (const auto& p : Arr(j["pi_grid"], "pi_grid")) cfg.pi_grid.push_back(Num(p, "pi_grid"));
  }
  if (j.contains("n_synthetic")) {
    const long n = Int(j["n_synthetic"], "n_synthetic");
    if (n < 1) Bad("n_synthetic", "must be positive");
    cfg.n_synthetic = static_cast<std::size_t>(n);
  }
  if (j.contains("refresh_period")) {
    cfg.refresh_period = static_cast<int>(Int(j["refresh_period"], "refresh_period"));
  }
  if (j.contains("blocks")) cfg.blocks = static_cast<int>(Int(j["blocks"], "blocks"));
  if (j.contains("reference_k")) {
    const auto& r = j["reference_k"];
    if (r.is_string()) {
      if (r.get<std::string>() != "matched") Bad("reference_k", "expected 'matched' or an int");
    } else {
      cfg.reference_k = static_cast<int>(Int(r, "reference_k"));
    }
  }
  if (j.contains("mitigation")) ParseMitigationBlock(j["mitigation"], cfg);
  if (j.contains("classifiers")) {
    std::size_t i = 0;
    for (const auto& c : Arr(j["classifiers"], "classifiers")) {
      cfg.classifiers.push_back(
          ParseClassifierBlock(c, "classifiers[" + std::to_string(i++) + "]"));
    }
  }
  if (j.contains("train_fraction")) cfg.train_fraction = Num(j["train_fraction"], "train_fraction");
  if (j.contains("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : Arr(j["seeds"], "seeds")) {
      const long v = Int(s, "seeds");
      if (v < 0) Bad("seeds", "must be non-negative");
      cfg.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  }
  if (j.contains("workers")) cfg.workers = static_cast<int>(Int(j["workers"], "workers"));
  if (j.contains("output_dir")) cfg.output_dir = Str(j["output_dir"], "output_dir");
  if (j.contains("persist_synthetic")) {
    cfg.persist_synthetic = Bool(j["persist_synthetic"], "persist_synthetic");
  }
  if (j.contains("dump_prompts")) cfg.dump_prompts = Bool(j["dump_prompts"], "dump_prompts");
  cfg.Validate();
  return cfg;
}

}  // namespace

ExperimentConfig ParseConfig(const std::string& json_text, const std::filesystem::path& base_dir) {
  try {
    return ParseConfigImpl(json_text, base_dir);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    Fail(ErrorCode::kConfig, e.what());
  }
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), path.parent_path());
}

}  // namespace iclbias
