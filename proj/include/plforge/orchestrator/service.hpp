// Copyright 2026 The plforge Authors
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

// HTTP JSON API over the store.
//
//   GET  /review-tasks?status=&kind=          tasks plus per-status counts
//   POST /review-tasks/{id}/verdict           {verdict, note, version}
//   POST /review-tasks/{id}/edit              {payload, note, version}
//   POST /eval/submissions                    {task_id | task, completion}
//   GET  /eval/reports/{id}                   JSON, or text/plain on request
//   POST /pipeline/runs                       {documents | input (JSONL text)} -> 202
//   GET  /pipeline/runs/{id}/report           202 while running
//   GET  /translations/{prompt_id}/candidates
//   POST /translations/{prompt_id}/adjudicate {language, winner, version, note}
//
// Status codes: 400 malformed request, 401 missing/wrong bearer token,
// 404 unknown record, 409 stale version, 415 non-JSON body, 422 illegal
// state transition or invalid edit, 503 evaluation infrastructure failure.
// When the configured environment variable holds a token, every request
// needs "Authorization: Bearer <token>".

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "plforge/corpus/pipeline.hpp"
#include "plforge/eval/report.hpp"
#include "plforge/orchestrator/store.hpp"

namespace plforge::orchestrator {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token_env = "PLFORGE_API_TOKEN";
  std::optional<eval::RunnerAdapter> adapter;  // enables /eval/submissions
  SandboxPolicy policy;
  std::vector<eval::BenchmarkTask> benchmark;  // resolves submissions by task_id
  corpus::PipelineConfig pipeline;
  std::filesystem::path static_dir;  // optional, served at /
};

namespace detail {

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                       json extra = json::object()) {
  extra["error"] = code;
  extra["message"] = message;
  send_json(res, status, extra);
}

// Record ids may contain '/', so routes capture the decoded remainder.
inline std::string capture(const httplib::Request& req) { return req.matches[1].str(); }

inline bool wants_text(const httplib::Request& req) {
  auto accept = req.get_header_value("Accept");
  return accept.find("text/plain") != std::string::npos && accept.find("application/json") == std::string::npos;
}

inline json review_view(const StoreRecord& r) {
  json j = r.payload;
  j["version"] = r.version;
  j["updated"] = r.updated;
  return j;
}

}  // namespace detail

class Service {
 public:
  Service(Store& store, ServiceConfig config) : store_(store), config_(std::move(config)) {
    if (const char* t = std::getenv(config_.token_env.c_str()); t && *t) token_ = t;
    if (config_.adapter) config_.adapter->validate();
    for (const auto& r : store_.list(RecordKind::corpus_doc))
      if (starts_with(r.id, "pipeline-run/")) ++run_counter_;
    for (const auto& r : store_.list(RecordKind::eval_report))
      if (starts_with(r.id, "submission-")) ++submission_counter_;
    routes();
  }

  ~Service() {
    stop();
    wait_for_jobs();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  httplib::Server& server() { return server_; }

  // Blocks until stop().
  bool listen() { return server_.listen(config_.host, config_.port); }

  // Binds an ephemeral port and serves on a background thread.
  int start_background() {
    int port = server_.bind_to_any_port(config_.host);
    if (port < 0) throw Error("cannot bind " + config_.host);
    listener_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  void stop() {
    server_.stop();
    if (listener_.joinable()) listener_.join();
  }

  void wait_for_jobs() {
    std::unique_lock lock(jobs_mu_);
    jobs_cv_.wait(lock, [&] { return running_jobs_ == 0; });
  }

 private:
  struct Job {
    std::string status = "running";
    json report;
    std::string table;
    std::string error;
  };

  Store& store_;
  ServiceConfig config_;
  std::string token_;
  httplib::Server server_;
  std::thread listener_;

  std::mutex jobs_mu_;
  std::condition_variable jobs_cv_;
  std::map<std::string, Job> jobs_;
  int running_jobs_ = 0;
  std::atomic<std::uint64_t> run_counter_{0};
  std::atomic<std::uint64_t> submission_counter_{0};

  // Parses a JSON body or answers 415/400 and returns nullopt.
  static std::optional<json> body_json(const httplib::Request& req, httplib::Response& res) {
    auto ct = req.get_header_value("Content-Type");
    if (!ct.empty() && ct.find("json") == std::string::npos) {
      detail::send_error(res, 415, "unsupported_media_type", "request body must be application/json");
      return std::nullopt;
    }
    try {
      auto j = json::parse(req.body.empty() ? "{}" : req.body);
      if (!j.is_object()) throw std::runtime_error("body must be a JSON object");
      return j;
    } catch (const std::exception& e) {
      detail::send_error(res, 400, "bad_request", e.what());
      return std::nullopt;
    }
  }

  static std::optional<std::uint64_t> body_version(const json& body, httplib::Response& res) {
    if (!body.contains("version") || !body["version"].is_number_unsigned()) {
      detail::send_error(res, 400, "bad_request", "a numeric 'version' is required");
      return std::nullopt;
    }
    return body["version"].get<std::uint64_t>();
  }

  void routes() {
    server_.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (token_.empty()) return httplib::Server::HandlerResponse::Unhandled;
      if (req.get_header_value("Authorization") == "Bearer " + token_)
        return httplib::Server::HandlerResponse::Unhandled;
      res.set_header("WWW-Authenticate", "Bearer");
      detail::send_error(res, 401, "unauthorized", "missing or invalid bearer token");
      return httplib::Server::HandlerResponse::Handled;
    });
    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const NotFoundError& e) {
        detail::send_error(res, 404, "not_found", e.what());
      } catch (const ConflictError& e) {
        detail::send_error(res, 409, "conflict", e.what(), {{"current_version", e.current_version()}});
      } catch (const sft::IllegalTransition& e) {
        detail::send_error(res, 422, "illegal_transition", e.what());
      } catch (const ArgumentError& e) {
        detail::send_error(res, 422, "invalid", e.what());
      } catch (const std::exception& e) {
        detail::send_error(res, 500, "internal", e.what());
      }
    });
    if (!config_.static_dir.empty()) server_.set_mount_point("/", config_.static_dir.string());

    server_.Get("/review-tasks", [this](const auto& req, auto& res) { list_tasks(req, res); });
    server_.Post(R"(/review-tasks/(.+)/verdict)", [this](const auto& req, auto& res) { verdict(req, res); });
    server_.Post(R"(/review-tasks/(.+)/edit)", [this](const auto& req, auto& res) { edit(req, res); });
    server_.Post("/eval/submissions", [this](const auto& req, auto& res) { submit(req, res); });
    server_.Get(R"(/eval/reports/(.+))", [this](const auto& req, auto& res) { eval_report(req, res); });
    server_.Post("/pipeline/runs", [this](const auto& req, auto& res) { start_run(req, res); });
    server_.Get(R"(/pipeline/runs/([^/]+)/report)", [this](const auto& req, auto& res) { run_report(req, res); });
    server_.Get(R"(/translations/(.+)/candidates)", [this](const auto& req, auto& res) { candidates(req, res); });
    server_.Post(R"(/translations/(.+)/adjudicate)", [this](const auto& req, auto& res) { adjudicate(req, res); });
  }

  // --- review queue -------------------------------------------------------

  void list_tasks(const httplib::Request& req, httplib::Response& res) {
    std::optional<sft::TaskStatus> status;
    std::optional<sft::TaskKind> kind;
    try {
      if (req.has_param("status")) status = sft::parse_task_status(req.get_param_value("status"));
      if (req.has_param("kind")) kind = sft::parse_task_kind(req.get_param_value("kind"));
    } catch (const std::exception& e) {
      return detail::send_error(res, 400, "bad_request", e.what());
    }
    json tasks = json::array();
    json counts = {{"pending", 0}, {"accepted", 0}, {"rejected", 0}, {"edited", 0}};
    for (const auto& r : store_.list(RecordKind::review_task)) {
      auto t = sft::ReviewTask::from_json(r.payload);
      if (kind && t.kind != *kind) continue;
      counts[std::string(sft::to_string(t.status))] = counts[std::string(sft::to_string(t.status))].get<int>() + 1;
      if (status && t.status != *status) continue;
      tasks.push_back(detail::review_view(r));
    }
    detail::send_json(res, 200, {{"tasks", tasks}, {"counts", counts}});
  }

  // Writes `task` at `expected`, plus any follow-up task it opens.
  StoreRecord write_task(const sft::ReviewTask& task, std::uint64_t expected) {
    std::vector<Mutation> muts{{RecordKind::review_task, task.id, task.to_json(), expected}};
    if (auto next = sft::downstream_task(task); next && !store_.get(RecordKind::review_task, next->id))
      muts.push_back({RecordKind::review_task, next->id, next->to_json(), 0});
    return store_.commit(muts).front();
  }

  void verdict(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto version = body_version(*body, res);
    if (!version) return;
    const auto id = detail::capture(req);
    auto rec = store_.require(RecordKind::review_task, id);
    if (rec.version != *version)
      return detail::send_error(res, 409, "conflict",
                                "task " + id + " is at version " + std::to_string(rec.version),
                                {{"current_version", rec.version}});
    sft::Verdict v;
    try {
      v = sft::parse_verdict(body->value("verdict", std::string()));
    } catch (const std::exception& e) {
      return detail::send_error(res, 400, "bad_request", e.what());
    }
    auto task = sft::apply_verdict(sft::ReviewTask::from_json(rec.payload), v, body->value("note", std::string()));
    detail::send_json(res, 200, detail::review_view(write_task(task, *version)));
  }

  void edit(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto version = body_version(*body, res);
    if (!version) return;
    if (!body->contains("payload")) return detail::send_error(res, 400, "bad_request", "'payload' is required");
    const auto id = detail::capture(req);
    auto rec = store_.require(RecordKind::review_task, id);
    if (rec.version != *version)
      return detail::send_error(res, 409, "conflict",
                                "task " + id + " is at version " + std::to_string(rec.version),
                                {{"current_version", rec.version}});
    auto task = sft::apply_edit(sft::ReviewTask::from_json(rec.payload), (*body)["payload"],
                                body->value("note", std::string()));
    detail::send_json(res, 200, detail::review_view(write_task(task, *version)));
  }

  // --- evaluation ---------------------------------------------------------

  void submit(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    if (!config_.adapter)
      return detail::send_error(res, 503, "infrastructure", "no evaluation adapter configured");
    if (!body->contains("completion") || !(*body)["completion"].is_string())
      return detail::send_error(res, 400, "bad_request", "'completion' string is required");
    eval::BenchmarkTask task;
    if (body->contains("task")) {
      try {
        task = eval::BenchmarkTask::from_json((*body)["task"]);
      } catch (const std::exception& e) {
        return detail::send_error(res, 400, "bad_request", e.what());
      }
    } else {
      auto id = body->value("task_id", std::string());
      auto it = std::find_if(config_.benchmark.begin(), config_.benchmark.end(),
                             [&](const auto& t) { return t.task_id == id; });
      if (it == config_.benchmark.end()) return detail::send_error(res, 404, "not_found", "unknown task '" + id + "'");
      task = *it;
    }
    eval::EvalVerdict verdict;
    try {
      verdict = eval::execute((*body)["completion"].get<std::string>(), task, *config_.adapter, config_.policy);
    } catch (const eval::InfrastructureError& e) {
      return detail::send_error(res, 503, "infrastructure", e.what());
    }
    const auto id = "submission-" + std::to_string(++submission_counter_);
    json payload = {{"kind", "submission"},
                    {"task_id", task.task_id},
                    {"completion", (*body)["completion"]},
                    {"verdict", verdict.to_json()}};
    auto rec = store_.put(RecordKind::eval_report, id, payload, 0);
    detail::send_json(res, 201, {{"id", id}, {"version", rec.version}, {"verdict", verdict.to_json()}});
  }

  void eval_report(const httplib::Request& req, httplib::Response& res) {
    auto rec = store_.require(RecordKind::eval_report, detail::capture(req));
    if (detail::wants_text(req)) {
      std::string text;
      if (rec.payload.contains("pass_at")) {
        text = eval::render_leaderboard(std::vector<eval::EvalReport>{eval::EvalReport::from_json(rec.payload)}).text();
      } else {
        const auto& v = rec.payload.at("verdict");
        text = v.at("class").get<std::string>() + "\n" + v.value("output", std::string());
      }
      res.status = 200;
      res.set_content(text, "text/plain");
      return;
    }
    json j = {{"id", rec.id}, {"version", rec.version}, {"report", rec.payload}};
    detail::send_json(res, 200, j);
  }

  // --- corpus pipeline jobs -----------------------------------------------

  void start_run(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    std::vector<corpus::RawDocument> docs;
    try {
      if (body->contains("documents")) {
        for (const auto& d : (*body)["documents"]) docs.push_back(corpus::RawDocument::from_json(d));
      } else if (body->contains("input")) {
        for (const auto& d : read_jsonl_text((*body)["input"].get<std::string>()))
          docs.push_back(corpus::RawDocument::from_json(d));
      } else {
        return detail::send_error(res, 400, "bad_request", "'documents' or 'input' is required");
      }
    } catch (const std::exception& e) {
      return detail::send_error(res, 400, "bad_request", e.what());
    }
    const auto id = "run-" + std::to_string(++run_counter_);
    {
      std::lock_guard lock(jobs_mu_);
      jobs_[id] = Job{};
      ++running_jobs_;
    }
    std::thread([this, id, docs = std::move(docs)]() mutable {
      Job done;
      try {
        for (auto& d : docs)
          if (d.token_count == 0) d.recount(*config_.pipeline.tokenizer);
        auto result = corpus::run_pipeline(std::move(docs), config_.pipeline);
        done.status = "done";
        done.report = result.report.to_json();
        done.table = result.report.render_table();
        store_.put(RecordKind::corpus_doc, "pipeline-run/" + id,
                   {{"run", id}, {"status", "done"}, {"report", done.report}, {"table", done.table},
                    {"kept", result.refined.size()}});
      } catch (const std::exception& e) {
        done.status = "failed";
        done.error = e.what();
      }
      std::lock_guard lock(jobs_mu_);
      jobs_[id] = std::move(done);
      --running_jobs_;
      jobs_cv_.notify_all();
    }).detach();
    detail::send_json(res, 202, {{"id", id}, {"status", "running"}});
  }

  void run_report(const httplib::Request& req, httplib::Response& res) {
    const auto id = detail::capture(req);
    {
      std::lock_guard lock(jobs_mu_);
      if (auto it = jobs_.find(id); it != jobs_.end()) {
        const auto& job = it->second;
        if (job.status == "running") return detail::send_json(res, 202, {{"id", id}, {"status", "running"}});
        if (job.status == "failed")
          return detail::send_json(res, 200, {{"id", id}, {"status", "failed"}, {"error", job.error}});
        if (detail::wants_text(req)) {
          res.set_content(job.table, "text/plain");
          return;
        }
        return detail::send_json(res, 200, {{"id", id}, {"status", "done"}, {"report", job.report}, {"table", job.table}});
      }
    }
    auto rec = store_.require(RecordKind::corpus_doc, "pipeline-run/" + id);
    detail::send_json(res, 200,
                      {{"id", id}, {"status", "done"}, {"report", rec.payload["report"]}, {"table", rec.payload["table"]}});
  }

  // --- translations -------------------------------------------------------

  void candidates(const httplib::Request& req, httplib::Response& res) {
    const auto prompt_id = detail::capture(req);
    json selections = json::array();
    for (const auto& r : store_.list(RecordKind::translation_audit, [&](const StoreRecord& r) {
           return r.payload.value("prompt_id", std::string()) == prompt_id;
         })) {
      json s = r.payload;
      s["record_id"] = r.id;
      s["version"] = r.version;
      selections.push_back(std::move(s));
    }
    if (selections.empty()) return detail::send_error(res, 404, "not_found", "no candidates for '" + prompt_id + "'");
    detail::send_json(res, 200, {{"prompt_id", prompt_id}, {"selections", selections}});
  }

  void adjudicate(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto version = body_version(*body, res);
    if (!version) return;
    const auto prompt_id = detail::capture(req);
    const auto language = body->value("language", std::string());
    if (!body->contains("winner") || !(*body)["winner"].is_number_unsigned())
      return detail::send_error(res, 400, "bad_request", "'winner' candidate index is required");
    const auto record_id = translation_record_id(prompt_id, language);
    auto rec = store_.require(RecordKind::translation_audit, record_id);
    if (rec.version != *version)
      return detail::send_error(res, 409, "conflict",
                                record_id + " is at version " + std::to_string(rec.version),
                                {{"current_version", rec.version}});
    const auto winner = (*body)["winner"].get<std::size_t>();
    const auto& pool = rec.payload.at("candidates");
    if (winner >= pool.size() || pool[winner].value("text", std::string()).empty())
      return detail::send_error(res, 422, "invalid", "candidate " + std::to_string(winner) + " cannot win");
    json payload = rec.payload;
    payload["override"] = {{"winner", winner}, {"note", body->value("note", std::string())}};
    auto out = store_.put(RecordKind::translation_audit, record_id, payload, *version);
    json j = out.payload;
    j["record_id"] = out.id;
    j["version"] = out.version;
    detail::send_json(res, 200, j);
  }

 public:
  static std::string translation_record_id(const std::string& prompt_id, const std::string& language) {
    return prompt_id + "/" + language;
  }
};

}  // namespace plforge::orchestrator
