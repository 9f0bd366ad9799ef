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

// Command-line front end. Links only the C interface.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "iclbias/iclbias.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitDegenerate = 3;

int ExitFor(icb_status s) {
  switch (s) {
    case ICB_OK: return kExitOk;
    case ICB_CONFIG: return kExitConfig;
    case ICB_DEGENERATE: return kExitDegenerate;
    default: return kExitRuntime;
  }
}

int Report(icb_status s, const char* what) {
  if (s != ICB_OK) {
    std::fprintf(stderr, "iclbias: %s failed (%s): %s\n", what, icb_status_name(s),
                 icb_last_error());
  }
  return ExitFor(s);
}

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  std::optional<int> workers;
  bool dump_prompts = false;
  std::string input;
};

icb_format Format(const std::string& f) { return f == "json" ? ICB_JSON : ICB_CSV; }

// Loads the config and applies flag overrides.
int Load(const Options& o, icb_config** cfg) {
  // Any failure to load the config file is a config error for the exit code.
  if (Report(icb_config_load(o.config.c_str(), cfg), "loading config")) return kExitConfig;
  icb_status s = ICB_OK;
  if (!o.out.empty()) s = icb_config_set_output_dir(*cfg, o.out.c_str());
  if (s == ICB_OK && o.seed) s = icb_config_set_seed(*cfg, *o.seed);
  if (s == ICB_OK && o.workers) s = icb_config_set_workers(*cfg, *o.workers);
  if (s == ICB_OK && o.dump_prompts) s = icb_config_set_dump_prompts(*cfg, 1);
  if (s != ICB_OK) {
    icb_config_free(*cfg);
    *cfg = nullptr;
    return Report(s == ICB_INVALID_ARGUMENT ? ICB_CONFIG : s, "applying flags");
  }
  return kExitOk;
}

int RunFamily(const Options& o, icb_family family) {
  icb_config* cfg = nullptr;
  if (int rc = Load(o, &cfg)) return rc;
  icb_report* rep = nullptr;
  int rc = Report(icb_run(cfg, family, &rep), "run");
  if (rc == kExitOk) {
    const char* dir = nullptr;
    icb_config_output_dir(cfg, &dir);
    rc = Report(icb_report_write(rep, dir, Format(o.format)), "writing report");
    if (rc == kExitOk) {
      std::printf("%zu rows written to %s\n", icb_report_rows(rep), dir);
    }
  }
  icb_report_free(rep);
  icb_config_free(cfg);
  return rc;
}

int Generate(const Options& o) {
  icb_config* cfg = nullptr;
  if (int rc = Load(o, &cfg)) return rc;
  const char* dir = nullptr;
  icb_config_output_dir(cfg, &dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::string csv = (std::filesystem::path(dir) / "synthetic.csv").string();
  const std::string prompt = (std::filesystem::path(dir) / "prompt.txt").string();
  int rc = Report(icb_generate(cfg, csv.c_str(), o.dump_prompts ? prompt.c_str() : nullptr),
                  "generate");
  if (rc == kExitOk) std::printf("synthetic data written to %s\n", csv.c_str());
  icb_config_free(cfg);
  return rc;
}

int Reformat(const Options& o) {
  const std::string ext = std::filesystem::path(o.input).extension().string();
  icb_report* rep = nullptr;
  if (int rc = Report(icb_report_load(o.input.c_str(), ext == ".json" ? ICB_JSON : ICB_CSV, &rep),
                      "loading report")) {
    return rc;
  }
  int rc = kExitOk;
  if (o.out.empty()) {
    char* text = nullptr;
    rc = Report(icb_report_serialize(rep, Format(o.format), &text), "serializing report");
    if (rc == kExitOk) std::fputs(text, stdout);
    icb_string_free(text);
  } else {
    rc = Report(icb_report_write(rep, o.out.c_str(), Format(o.format)), "writing report");
  }
  icb_report_free(rep);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-context bias propagation, attack and mitigation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(icb_version()));
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory (overrides output_dir)");
    sub->add_option("--seed", o.seed, "Run a single seed");
    sub->add_option("--format", o.format, "Report format")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--dump-prompts", o.dump_prompts, "Write rendered prompts");
  };
  auto* propagate = app.add_subcommand("propagate", "Bias propagation sweep");
  auto* attack = app.add_subcommand("attack", "Feature-aligned injection attack");
  auto* mitigate = app.add_subcommand("mitigate", "Prompt-level mitigations under attack");
  auto* generate = app.add_subcommand("generate", "Generate one synthetic dataset");
  for (auto* s : {propagate, attack, mitigate, generate}) add_common(s);
  auto* report = app.add_subcommand("report", "Convert or print a report");
  report->add_option("--input", o.input, "Report CSV or JSON")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--out", o.out, "Output directory (stdout when omitted)");
  report->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (*propagate) return RunFamily(o, ICB_PROPAGATION);
  if (*attack) return RunFamily(o, ICB_ATTACK);
  if (*mitigate) return RunFamily(o, ICB_MITIGATION);
  if (*generate) return Generate(o);
  return Reformat(o);
}
