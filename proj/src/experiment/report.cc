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
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

#include "iclbias/error.h"
#include "iclbias/experiment.h"
#include "iclbias/format.h"
#include "json.hpp"

namespace iclbias {
namespace {

using json = nlohmann::ordered_json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Column table: name plus accessors for text and numeric cells.
struct Column {
  const char* name;
  std::string ReportRow::*text = nullptr;
  double ReportRow::*real = nullptr;
  int kind = 0;  // 0 text, 1 real, 2 k, 3 seed
};

const std::vector<Column>& Columns() {
  static const std::vector<Column> cols = {
      {"experiment", &ReportRow::experiment},
      {"mode", &ReportRow::mode},
      {"generator", &ReportRow::generator},
      {"classifier", &ReportRow::classifier},
      {"policy", &ReportRow::policy},
      {"mitigation", &ReportRow::mitigation},
      {"k", nullptr, nullptr, 2},
      {"pi", nullptr, &ReportRow::pi, 1},
      {"seed", nullptr, nullptr, 3},
      {"k_effective", nullptr, &ReportRow::k_effective, 1},
      {"alpha", nullptr, &ReportRow::alpha, 1},
      {"drift_prompt", nullptr, &ReportRow::drift_prompt, 1},
      {"drift_generated", nullptr, &ReportRow::drift_generated, 1},
      {"p_target_prompt", nullptr, &ReportRow::p_target_prompt, 1},
      {"p_target_generated", nullptr, &ReportRow::p_target_generated, 1},
      {"p_target_reference", nullptr, &ReportRow::p_target_reference, 1},
      {"spd_prompt", nullptr, &ReportRow::spd_prompt, 1},
      {"spd_prompt_max_abs", nullptr, &ReportRow::spd_prompt_max_abs, 1},
      {"spd_s", nullptr, &ReportRow::spd_s, 1},
      {"spd_s_std", nullptr, &ReportRow::spd_s_std, 1},
      {"spd_d", nullptr, &ReportRow::spd_d, 1},
      {"eo_d", nullptr, &ReportRow::eo_d, 1},
      {"eod_d", nullptr, &ReportRow::eod_d, 1},
      {"f1_r", nullptr, &ReportRow::f1_r, 1},
      {"mdi_protected", nullptr, &ReportRow::mdi_protected, 1},
      {"aligned_mass_target", nullptr, &ReportRow::aligned_mass_target, 1},
      {"aligned_mass_other", nullptr, &ReportRow::aligned_mass_other, 1},
      {"dropped", nullptr, &ReportRow::dropped, 1},
      {"mitigation_degenerate", nullptr, &ReportRow::mitigation_degenerate, 1},
      {"attack_success", nullptr, &ReportRow::attack_success, 1},
      {"status", &ReportRow::status},
  };
  return cols;
}

std::string Num(double v) { return std::isnan(v) ? "NA" : FormatDouble(v); }

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double ParseCell(const std::string& s, const std::string& col) {
  if (s == "NA") return kNaN;
  auto v = ParseDouble(s);
  if (!v) Fail(ErrorCode::kParse, "report column " + col + ": bad number '" + s + "'");
  return *v;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::string Lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace

ReportFormat ParseReportFormat(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  Fail(ErrorCode::kConfig, "unknown report format '" + name + "'");
}

void SortRows(std::vector<ReportRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.experiment, a.k, a.pi, a.seed, a.mitigation, a.generator, a.classifier,
                    a.policy) < std::tie(b.experiment, b.k, b.pi, b.seed, b.mitigation,
                                         b.generator, b.classifier, b.policy);
  });
}

std::vector<std::string> ReportColumns() {
  std::vector<std::string> out;
  for (const auto& c : Columns()) out.push_back(c.name);
  return out;
}

double RowNumber(const ReportRow& row, const std::string& column) {
  for (const auto& c : Columns()) {
    if (column != c.name) continue;
    switch (c.kind) {
      case 0: break;
      case 1: return row.*(c.real);
      case 2: return row.k;
      default: return static_cast<double>(row.seed);
    }
  }
  Fail(ErrorCode::kInvalidArgument, "no numeric column '" + column + "'");
}

const std::string& RowText(const ReportRow& row, const std::string& column) {
  for (const auto& c : Columns()) {
    if (column == c.name && c.kind == 0) return row.*(c.text);
  }
  Fail(ErrorCode::kInvalidArgument, "no text column '" + column + "'");
}

std::string RowsToCsv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  const auto& cols = Columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i].name;
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out << ',';
      const auto& c = cols[i];
      switch (c.kind) {
        case 0: out << CsvField(r.*(c.text)); break;
        case 1: out << Num(r.*(c.real)); break;
        case 2: out << r.k; break;
        default: out << r.seed; break;
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string RowsToJson(const std::vector<ReportRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json o = json::object();
    for (const auto& c : Columns()) {
      switch (c.kind) {
        case 0: o[c.name] = r.*(c.text); break;
        case 1: {
          const double v = r.*(c.real);
          if (std::isnan(v)) {
            o[c.name] = nullptr;
          } else {
            o[c.name] = v;
          }
          break;
        }
        case 2: o[c.name] = r.k; break;
        default: o[c.name] = r.seed; break;
      }
    }
    arr.push_back(std::move(o));
  }
  return arr.dump(1) + "\n";
}

std::vector<ReportRow> RowsFromCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kParse, "report CSV is empty");
  const auto header = SplitCsvLine(line);
  if (header != ReportColumns()) Fail(ErrorCode::kParse, "report CSV header mismatch");
  const auto& cols = Columns();
  std::vector<ReportRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = SplitCsvLine(line);
    if (cells.size() != cols.size()) {
      Fail(ErrorCode::kParse, "report CSV line " + std::to_string(lineno) + ": wrong cell count");
    }
    ReportRow r;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto& c = cols[i];
      switch (c.kind) {
        case 0: r.*(c.text) = cells[i]; break;
        case 1: r.*(c.real) = ParseCell(cells[i], c.name); break;
        case 2: r.k = static_cast<int>(ParseCell(cells[i], c.name)); break;
        default: r.seed = std::stoull(cells[i]); break;
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ReportRow> RowsFromJson(const std::string& text) {
  json arr;
  try {
    arr = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("report JSON: ") + e.what());
  }
  if (!arr.is_array()) Fail(ErrorCode::kParse, "report JSON root is not an array");
  std::vector<ReportRow> rows;
  try {
    for (const auto& o : arr) {
      ReportRow r;
      for (const auto& c : Columns()) {
        const auto& v = o.at(c.name);
        switch (c.kind) {
          case 0: r.*(c.text) = v.get<std::string>(); break;
          case 1: r.*(c.real) = v.is_null() ? kNaN : v.get<double>(); break;
          case 2: r.k = v.get<int>(); break;
          default: r.seed = v.get<std::uint64_t>(); break;
        }
      }
      rows.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("report JSON: ") + e.what());
  }
  return rows;
}

void EmitReport(const ExperimentReport& report, const std::filesystem::path& dir,
                ReportFormat format) {
  if (report.rows.empty()) Fail(ErrorCode::kInvalidArgument, "report has no rows");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<ReportRow> rows = report.rows;
  SortRows(rows);
  if (format == ReportFormat::kCsv) {
    WriteText(dir / "report.csv", RowsToCsv(rows));
  } else {
    WriteText(dir / "report.json", RowsToJson(rows));
  }
  if (!report.fits.empty()) {
    std::ostringstream out;
    out << "experiment,k,seed,alpha,beta,intercept,r_squared,points,status\n";
    for (const auto& f : report.fits) {
      out << CsvField(f.experiment) << ',' << f.k << ',' << f.seed << ',' << Num(f.alpha) << ','
          << Num(f.beta) << ',' << Num(f.intercept) << ',' << Num(f.r_squared) << ','
          << f.points << ',' << CsvField(f.status) << '\n';
    }
    WriteText(dir / "fits.csv", out.str());
  }
  if (!report.cells.empty()) {
    std::ostringstream out;
    out << "experiment,k,pi,seed,cell,n_prompt,rate_prompt,n_generated,rate_generated\n";
    for (const auto& c : report.cells) {
      out << CsvField(c.experiment) << ',' << c.k << ',' << Num(c.pi) << ',' << c.seed << ','
          << CsvField(c.cell) << ',' << c.n_prompt << ',' << Num(c.rate_prompt) << ','
          << c.n_generated << ',' << Num(c.rate_generated) << '\n';
    }
    WriteText(dir / "cells.csv", out.str());
  }
  if (!report.alignment.empty()) {
    std::ostringstream out;
    out << "experiment,mitigation,k,pi,seed,feature,target,other\n";
    for (const auto& a : report.alignment) {
      out << CsvField(a.experiment) << ',' << a.mitigation << ',' << a.k << ',' << Num(a.pi)
          << ',' << a.seed << ',' << CsvField(a.feature) << ',' << Num(a.target) << ','
          << Num(a.other) << '\n';
    }
    WriteText(dir / "alignment.csv", out.str());
  }
  if (!report.audit_jsonl.empty()) {
    WriteText(dir / "mitigation_audit.jsonl", Lines(report.audit_jsonl));
  }
  if (!report.generation_log_jsonl.empty()) {
    WriteText(dir / "generation_log.jsonl", Lines(report.generation_log_jsonl));
  }
}

}  // namespace iclbias
