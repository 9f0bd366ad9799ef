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

#include <cmath>
#include <cstdlib>
#include <future>
#include <map>

#include "httplib.h"
#include "iclbias/error.h"
#include "iclbias/generators.h"
#include "json.hpp"

namespace iclbias {
namespace {

using Json = nlohmann::ordered_json;

// Minimum number of finished calls before the parse-failure rate is judged.
constexpr std::size_t kMinCallsForFailureRate = 5;

struct CallResult {
  GenerationLogEntry entry;
  std::vector<Record> records;
};

std::string RequestBody(const EndpointConfig& cfg, const PromptBundle& b) {
  Json body;
  body["model"] = cfg.model;
  body["messages"] = Json::array({
      Json{{"role", "system"}, {"content", b.system_text}},
      Json{{"role", "user"}, {"content", b.user_text}},
  });
  body["temperature"] = cfg.temperature;
  return body.dump();
}

CallResult RunCall(const EndpointConfig& cfg, const Schema& schema, const PromptBundle& b,
                   std::size_t call_index, bool refresh, const std::string& api_key) {
  CallResult res;
  res.entry.call_index = call_index;
  res.entry.refresh = refresh;
  httplib::Client cli(cfg.base_url);
  const auto secs = static_cast<time_t>(cfg.timeout_s);
  const auto usecs = static_cast<time_t>((cfg.timeout_s - std::floor(cfg.timeout_s)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
  const std::string body = RequestBody(cfg, b);
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    res.entry.attempts = attempt + 1;
    auto http = cli.Post(cfg.path, headers, body, "application/json");
    if (!http || http->status != 200) {
      res.entry.outcome = "transport_error";
      res.entry.dropped.push_back(
          http ? "HTTP status " + std::to_string(http->status)
               : "transport: " + httplib::to_string(http.error()));
      continue;
    }
    std::string content;
    try {
      const Json j = Json::parse(http->body);
      content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      res.entry.outcome = "transport_error";
      res.entry.dropped.push_back(std::string("malformed completion envelope: ") + e.what());
      continue;
    }
    try {
      auto parsed = ParseGeneration(content, schema, b.samples_per_call);
      res.entry.outcome = "ok";
      res.entry.accepted = parsed.records.size();
      for (auto& e : parsed.row_errors) res.entry.dropped.push_back(std::move(e));
      res.records = std::move(parsed.records);
      return res;
    } catch (const Error& e) {
      res.entry.outcome = "parse_error";
      res.entry.dropped.push_back(e.what());
    }
  }
  return res;
}

}  // namespace

void EndpointConfig::Validate() const {
  if (base_url.empty()) Fail(ErrorCode::kConfig, "endpoint base_url is empty");
  if (model.empty()) Fail(ErrorCode::kConfig, "endpoint model is empty");
  if (max_retries < 0) Fail(ErrorCode::kConfig, "max_retries must be >= 0");
  if (!(timeout_s > 0.0)) Fail(ErrorCode::kConfig, "timeout_s must be positive");
  if (batch < 1) Fail(ErrorCode::kConfig, "batch must be >= 1");
  if (max_in_flight < 1) Fail(ErrorCode::kConfig, "max_in_flight must be >= 1");
  if (refresh_period < 1) Fail(ErrorCode::kConfig, "refresh_period must be >= 1");
  if (!(max_parse_failure_rate >= 0.0 && max_parse_failure_rate <= 1.0)) {
    Fail(ErrorCode::kConfig, "max_parse_failure_rate must lie in [0, 1]");
  }
}

std::string GenerationLog::ToJsonl() const {
  std::string out;
  for (const auto& e : entries) {
    Json j;
    j["call_index"] = e.call_index;
    j["refresh"] = e.refresh;
    j["attempts"] = e.attempts;
    j["outcome"] = e.outcome;
    j["accepted"] = e.accepted;
    j["dropped"] = e.dropped;
    j["model"] = model;
    j["temperature"] = temperature;
    out += j.dump() + "\n";
  }
  return out;
}

LlmResult LlmGenerate(const EndpointConfig& cfg, const SchemaPtr& schema,
                      const BundleFactory& bundles, std::size_t n_total) {
  cfg.Validate();
  if (n_total == 0) Fail(ErrorCode::kInvalidArgument, "n_total must be positive");
  const char* key_env = std::getenv(cfg.api_key_env.c_str());
  const std::string api_key = key_env ? key_env : "";
  const auto batch = static_cast<std::size_t>(cfg.batch);
  const std::size_t planned = (n_total + batch - 1) / batch;
  const std::size_t budget = planned * static_cast<std::size_t>(cfg.max_retries + 1);

  GenerationLog log;
  log.model = cfg.model;
  log.temperature = cfg.temperature;
  std::vector<Record> rows;
  std::map<std::size_t, PromptBundle> cache;
  std::size_t next_call = 0, parse_failures = 0;
  while (rows.size() < n_total) {
    if (next_call >= budget) {
      Fail(ErrorCode::kParse, "call budget exhausted with " + std::to_string(rows.size()) +
                                  " of " + std::to_string(n_total) + " valid rows");
    }
    // Each wave covers at most the rows still missing.
    const std::size_t missing_calls = (n_total - rows.size() + batch - 1) / batch;
    const std::size_t wave = std::min<std::size_t>(
        {static_cast<std::size_t>(cfg.max_in_flight), missing_calls, budget - next_call});
    std::vector<std::future<CallResult>> futures;
    for (std::size_t w = 0; w < wave; ++w) {
      const std::size_t call = next_call + w;
      const std::size_t refresh_counter = call / cfg.refresh_period;
      auto it = cache.find(refresh_counter);
      if (it == cache.end()) {
        cache.clear();
        it = cache.emplace(refresh_counter, bundles(refresh_counter)).first;
        if (it->second.samples_per_call != cfg.batch) {
          Fail(ErrorCode::kConfig, "template asks for " +
                                       std::to_string(it->second.samples_per_call) +
                                       " samples per call but batch is " +
                                       std::to_string(cfg.batch));
        }
      }
      futures.push_back(std::async(std::launch::async, RunCall, std::cref(cfg),
                                   std::cref(*schema), it->second, call,
                                   RefreshPolicy(call, cfg.refresh_period), api_key));
    }
    next_call += wave;
    for (auto& f : futures) {
      CallResult res = f.get();
      const std::string outcome = res.entry.outcome;
      log.entries.push_back(res.entry);
      if (outcome == "transport_error") {
        Fail(ErrorCode::kTransport, "call " + std::to_string(res.entry.call_index) +
                                        " failed after " + std::to_string(res.entry.attempts) +
                                        " attempts: " + res.entry.dropped.back());
      }
      if (outcome == "parse_error") ++parse_failures;
      for (auto& r : res.records) {
        if (rows.size() < n_total) rows.push_back(std::move(r));
      }
    }
    if (log.entries.size() >= kMinCallsForFailureRate &&
        static_cast<double>(parse_failures) / static_cast<double>(log.entries.size()) >
            cfg.max_parse_failure_rate) {
      Fail(ErrorCode::kParse, "parse-failure rate above threshold after " +
                                  std::to_string(log.entries.size()) + " calls");
    }
  }
  return LlmResult{Dataset(schema, std::move(rows), Provenance::kSynthetic), std::move(log)};
}

}  // namespace iclbias
