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

#include "iclbias/iclbias.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include "iclbias/error.h"
#include "iclbias/experiment.h"
#include "iclbias/metrics.h"

struct icb_config {
  iclbias::ExperimentConfig cfg;
};

struct icb_report {
  iclbias::ExperimentReport report;
};

namespace {

thread_local std::string g_last_error;

icb_status ToStatus(iclbias::ErrorCode c) {
  using iclbias::ErrorCode;
  switch (c) {
    case ErrorCode::kInvalidArgument: return ICB_INVALID_ARGUMENT;
    case ErrorCode::kSchema: return ICB_SCHEMA;
    case ErrorCode::kParse: return ICB_PARSE;
    case ErrorCode::kDegenerate: return ICB_DEGENERATE;
    case ErrorCode::kIo: return ICB_IO;
    case ErrorCode::kTransport: return ICB_TRANSPORT;
    case ErrorCode::kConfig: return ICB_CONFIG;
  }
  return ICB_INTERNAL;
}

template <typename F>
icb_status Guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return ICB_OK;
  } catch (const iclbias::Error& e) {
    g_last_error = e.what();
    return ToStatus(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ICB_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return ICB_INTERNAL;
  }
}

icb_status Null(const char* what) {
  g_last_error = std::string(what) + " is NULL";
  return ICB_INVALID_ARGUMENT;
}

iclbias::ExperimentFamily Family(icb_family f) {
  switch (f) {
    case ICB_PROPAGATION: return iclbias::ExperimentFamily::kPropagation;
    case ICB_ATTACK: return iclbias::ExperimentFamily::kAttack;
    case ICB_MITIGATION: return iclbias::ExperimentFamily::kMitigation;
  }
  iclbias::Fail(iclbias::ErrorCode::kInvalidArgument, "unknown family");
}

const iclbias::ReportRow& Row(const icb_report* r, size_t i) {
  if (i >= r->report.rows.size()) iclbias::Fail(iclbias::ErrorCode::kInvalidArgument, "row out of range");
  return r->report.rows[i];
}

}  // namespace

extern "C" {

const char* icb_version(void) { return "0.1.0"; }

const char* icb_last_error(void) { return g_last_error.c_str(); }

const char* icb_status_name(icb_status s) {
  switch (s) {
    case ICB_OK: return "ok";
    case ICB_INVALID_ARGUMENT: return "invalid_argument";
    case ICB_SCHEMA: return "schema";
    case ICB_PARSE: return "parse";
    case ICB_DEGENERATE: return "degenerate";
    case ICB_IO: return "io";
    case ICB_TRANSPORT: return "transport";
    case ICB_CONFIG: return "config";
    case ICB_INTERNAL: return "internal";
  }
  return "unknown";
}

icb_status icb_config_load(const char* path, icb_config** out) {
  if (!path) return Null("path");
  if (!out) return Null("out");
  return Guard([&] { *out = new icb_config{iclbias::LoadConfig(path)}; });
}

icb_status icb_config_parse(const char* json_text, const char* base_dir, icb_config** out) {
  if (!json_text) return Null("json_text");
  if (!out) return Null("out");
  return Guard([&] {
    *out = new icb_config{iclbias::ParseConfig(json_text, base_dir ? base_dir : "")};
  });
}

void icb_config_free(icb_config* config) { delete config; }

icb_status icb_config_set_workers(icb_config* config, int workers) {
  if (!config) return Null("config");
  return Guard([&] {
    if (workers < 1) iclbias::Fail(iclbias::ErrorCode::kConfig, "workers must be >= 1");
    config->cfg.workers = workers;
  });
}

icb_status icb_config_set_seed(icb_config* config, uint64_t seed) {
  if (!config) return Null("config");
  return Guard([&] { config->cfg.seeds = {seed}; });
}

icb_status icb_config_set_output_dir(icb_config* config, const char* dir) {
  if (!config) return Null("config");
  if (!dir) return Null("dir");
  return Guard([&] { config->cfg.output_dir = dir; });
}

icb_status icb_config_set_dump_prompts(icb_config* config, int enabled) {
  if (!config) return Null("config");
  return Guard([&] { config->cfg.dump_prompts = enabled != 0; });
}

icb_status icb_config_output_dir(const icb_config* config, const char** out) {
  if (!config) return Null("config");
  if (!out) return Null("out");
  *out = config->cfg.output_dir.c_str();
  return ICB_OK;
}

icb_status icb_run(const icb_config* config, icb_family family, icb_report** out) {
  if (!config) return Null("config");
  if (!out) return Null("out");
  return Guard([&] {
    *out = new icb_report{iclbias::RunExperiment(Family(family), config->cfg)};
  });
}

icb_status icb_generate(const icb_config* config, const char* csv_path,
                        const char* prompt_path) {
  if (!config) return Null("config");
  if (!csv_path) return Null("csv_path");
  return Guard([&] {
    const auto& c = config->cfg;
    const auto family = c.bias.mode == iclbias::BiasMode::kAdversarial
                            ? iclbias::ExperimentFamily::kAttack
                            : iclbias::ExperimentFamily::kPropagation;
    const auto pt = iclbias::GeneratePoint(c, family, c.k_grid.front(),
                                           c.pi_grid.front(), c.seeds.front());
    iclbias::WriteCsv(pt.synthetic, csv_path);
    if (prompt_path) {
      std::ofstream f(prompt_path, std::ios::binary);
      if (!f) iclbias::Fail(iclbias::ErrorCode::kIo, std::string("cannot write ") + prompt_path);
      f << pt.first_prompt;
    }
  });
}

icb_status icb_report_write(const icb_report* report, const char* dir, icb_format format) {
  if (!report) return Null("report");
  if (!dir) return Null("dir");
  return Guard([&] {
    iclbias::EmitReport(report->report, dir,
                        format == ICB_JSON ? iclbias::ReportFormat::kJson
                                           : iclbias::ReportFormat::kCsv);
  });
}

icb_status icb_report_load(const char* path, icb_format format, icb_report** out) {
  if (!path) return Null("path");
  if (!out) return Null("out");
  return Guard([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) iclbias::Fail(iclbias::ErrorCode::kIo, std::string("cannot read ") + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto* r = new icb_report;
    try {
      r->report.rows = format == ICB_JSON ? iclbias::RowsFromJson(ss.str())
                                          : iclbias::RowsFromCsv(ss.str());
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

size_t icb_report_rows(const icb_report* report) {
  return report ? report->report.rows.size() : 0;
}

icb_status icb_report_value(const icb_report* report, size_t row, const char* column,
                            double* out) {
  if (!report) return Null("report");
  if (!column) return Null("column");
  if (!out) return Null("out");
  return Guard([&] { *out = iclbias::RowNumber(Row(report, row), column); });
}

icb_status icb_report_text(const icb_report* report, size_t row, const char* column,
                           const char** out) {
  if (!report) return Null("report");
  if (!column) return Null("column");
  if (!out) return Null("out");
  return Guard([&] { *out = iclbias::RowText(Row(report, row), column).c_str(); });
}

icb_status icb_report_serialize(const icb_report* report, icb_format format, char** out) {
  if (!report) return Null("report");
  if (!out) return Null("out");
  return Guard([&] {
    auto rows = report->report.rows;
    iclbias::SortRows(rows);
    const std::string s =
        format == ICB_JSON ? iclbias::RowsToJson(rows) : iclbias::RowsToCsv(rows);
    char* buf = new char[s.size() + 1];
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out = buf;
  });
}

void icb_report_free(icb_report* report) { delete report; }

void icb_string_free(char* s) { delete[] s; }

namespace {

void CheckMass(const double* v, size_t n) {
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (!(v[i] >= 0.0)) iclbias::Fail(iclbias::ErrorCode::kInvalidArgument, "negative or NaN mass");
    sum += v[i];
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    iclbias::Fail(iclbias::ErrorCode::kInvalidArgument, "masses do not sum to 1");
  }
}

}  // namespace

icb_status icb_tvd(const double* p, const double* q, size_t n, double* out) {
  if (!p || !q || !out) return Null("argument");
  return Guard([&] {
    CheckMass(p, n);
    CheckMass(q, n);
    std::vector<std::string> support;
    for (size_t i = 0; i < n; ++i) support.push_back(std::to_string(i));
    auto a = iclbias::CategoricalDistribution::FromCounts(support, {p, n});
    auto b = iclbias::CategoricalDistribution::FromCounts(support, {q, n});
    *out = iclbias::Tvd(a, b);
  });
}

icb_status icb_jsd(const double* p, const double* q, size_t n, double* out) {
  if (!p || !q || !out) return Null("argument");
  return Guard([&] {
    CheckMass(p, n);
    CheckMass(q, n);
    *out = iclbias::Jsd(std::span<const double>(p, n), {q, n});
  });
}

icb_status icb_spd(const char* const* labels, const uint8_t* unprivileged, size_t n,
                   const char* favorable, double* out) {
  if (!labels || !unprivileged || !favorable || !out) return Null("argument");
  return Guard([&] {
    std::vector<std::string> ls;
    for (size_t i = 0; i < n; ++i) {
      if (!labels[i]) iclbias::Fail(iclbias::ErrorCode::kInvalidArgument, "NULL label");
      ls.emplace_back(labels[i]);
    }
    *out = iclbias::SpdOfLabels(ls, {unprivileged, n}, favorable);
  });
}

icb_status icb_alpha_schedule(int k, double tau, double* out) {
  if (!out) return Null("out");
  return Guard([&] { *out = iclbias::AlphaSchedule(k, tau); });
}

}  // extern "C"
