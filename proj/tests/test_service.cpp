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

#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "eval_fixtures.hpp"
#include "plforge/orchestrator/service.hpp"

namespace plforge::orchestrator {
namespace {

using eval::testing::stub_adapter;
using eval::testing::stub_tasks;
using eval::testing::test_policy;

json triage_task(const std::string& snippet) {
  sft::ReviewTask t;
  t.id = "triage:" + snippet;
  t.kind = sft::TaskKind::sample_triage;
  t.payload = {{"snippet_id", snippet}, {"code", "fn main():\n    print(1)\n"}, {"seed_prompt", "Print one."}};
  return t.to_json();
}

json refine_task(const std::string& snippet) {
  sft::ReviewTask t;
  t.id = "refine:" + snippet;
  t.kind = sft::TaskKind::prompt_refine;
  t.payload = {{"snippet_id", snippet}, {"variants", json::array()}};
  return t.to_json();
}

json audit_record() {
  return {{"prompt_id", "s0#4"},
          {"language", "es"},
          {"winner", 1},
          {"escalated", false},
          {"notes", json::array()},
          {"candidates", {{{"system", "a"}, {"index", 0}, {"text", "hola"}},
                          {{"system", "b"}, {"index", 0}, {"text", "buenas"}},
                          {{"system", "c"}, {"index", 0}, {"text", ""}}}}};
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override { ::unsetenv("PLFORGE_TEST_TOKEN"); }

  void start(bool with_adapter = true, std::string token = {}) {
    if (!token.empty()) ::setenv("PLFORGE_TEST_TOKEN", token.c_str(), 1);
    store_ = std::make_unique<Store>(dir_.path() / "store");
    store_->put(RecordKind::review_task, "triage:a", triage_task("a"));
    store_->put(RecordKind::review_task, "triage:b", triage_task("b"));
    store_->put(RecordKind::review_task, "refine:c", refine_task("c"));
    store_->put(RecordKind::translation_audit, Service::translation_record_id("s0#4", "es"), audit_record());
    ServiceConfig cfg;
    cfg.token_env = "PLFORGE_TEST_TOKEN";
    if (with_adapter) cfg.adapter = stub_adapter();
    cfg.policy = test_policy(std::chrono::seconds(2));
    cfg.benchmark = stub_tasks();
    service_ = std::make_unique<Service>(*store_, cfg);
    port_ = service_->start_background();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(30, 0);
    if (!token.empty()) client_->set_bearer_token_auth(token);
  }

  void TearDown() override {
    if (service_) service_->stop();
    service_.reset();
    store_.reset();
    ::unsetenv("PLFORGE_TEST_TOKEN");
  }

  httplib::Result post(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  static json body(const httplib::Result& r) { return json::parse(r->body); }

  EphemeralDir dir_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

TEST_F(ServiceTest, ListsPendingTasksWithCounts) {
  start(false);
  auto r = client_->Get("/review-tasks?status=pending&kind=sample_triage");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  auto j = body(r);
  EXPECT_EQ(j["tasks"].size(), 2u);
  EXPECT_EQ(j["tasks"][0]["version"], 1);
  EXPECT_EQ(j["counts"]["pending"], 2);
  EXPECT_EQ(client_->Get("/review-tasks?status=bogus")->status, 400);
}

TEST_F(ServiceTest, VerdictBumpsVersionAndOpensRefinement) {
  start(false);
  auto r = post("/review-tasks/triage:a/verdict", {{"verdict", "accept"}, {"note", "ok"}, {"version", 1}});
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  auto j = body(r);
  EXPECT_EQ(j["status"], "accepted");
  EXPECT_EQ(j["version"], 2);
  EXPECT_EQ(store_->require(RecordKind::review_task, "triage:a").version, 2u);
  auto next = store_->get(RecordKind::review_task, "refine:a");
  ASSERT_TRUE(next);
  EXPECT_EQ(next->payload["status"], "pending");
}

TEST_F(ServiceTest, SecondVerdictOnSameVersionConflicts) {
  start(false);
  ASSERT_EQ(post("/review-tasks/triage:a/verdict", {{"verdict", "accept"}, {"version", 1}})->status, 200);
  auto r = post("/review-tasks/triage:a/verdict", {{"verdict", "reject"}, {"version", 1}});
  ASSERT_EQ(r->status, 409);
  EXPECT_EQ(body(r)["current_version"], 2);
  EXPECT_EQ(store_->require(RecordKind::review_task, "triage:a").payload["status"], "accepted");
}

TEST_F(ServiceTest, ConcurrentVerdictsHaveOneWinner) {
  start(false);
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", port_);
      json b = {{"verdict", i % 2 ? "accept" : "reject"}, {"version", 1}};
      auto r = c.Post("/review-tasks/triage:b/verdict", b.dump(), "application/json");
      if (r && r->status == 200) ++ok;
      if (r && r->status == 409) ++conflict;
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 1);
  EXPECT_EQ(conflict.load(), 7);
  EXPECT_EQ(store_->require(RecordKind::review_task, "triage:b").version, 2u);
}

TEST_F(ServiceTest, VerdictOnRejectedTaskIsIllegal) {
  start(false);
  ASSERT_EQ(post("/review-tasks/triage:a/verdict", {{"verdict", "reject"}, {"version", 1}})->status, 200);
  auto r = post("/review-tasks/triage:a/verdict", {{"verdict", "accept"}, {"version", 2}});
  ASSERT_EQ(r->status, 422);
  EXPECT_EQ(body(r)["error"], "illegal_transition");
  EXPECT_NE(body(r)["message"].get<std::string>().find("rejected"), std::string::npos);
}

TEST_F(ServiceTest, VerdictErrors) {
  start(false);
  EXPECT_EQ(post("/review-tasks/nope/verdict", {{"verdict", "accept"}, {"version", 1}})->status, 404);
  EXPECT_EQ(post("/review-tasks/triage:a/verdict", {{"verdict", "accept"}})->status, 400);
  EXPECT_EQ(post("/review-tasks/triage:a/verdict", {{"verdict", "maybe"}, {"version", 1}})->status, 400);
  EXPECT_EQ(client_->Post("/review-tasks/triage:a/verdict", "verdict=accept", "text/plain")->status, 415);
  EXPECT_EQ(client_->Post("/review-tasks/triage:a/verdict", "{not json", "application/json")->status, 400);
}

TEST_F(ServiceTest, EditPersistsVariants) {
  start(false);
  json variants = {"Write hello.", "Print a greeting.", "Say hello.", "Emit hello world."};
  auto r = post("/review-tasks/refine:c/edit", {{"payload", {{"snippet_id", "c"}, {"variants", variants}}}, {"version", 1}});
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(body(r)["status"], "edited");
  EXPECT_EQ(body(r)["version"], 2);
  EXPECT_EQ(store_->require(RecordKind::review_task, "refine:c").payload["payload"]["variants"], variants);
}

TEST_F(ServiceTest, DuplicateParaphraseEditIsBlocked) {
  start(false);
  json variants = {"Write hello.", "write   HELLO.", "Say hello.", "Emit hello world."};
  auto r = post("/review-tasks/refine:c/edit", {{"payload", {{"variants", variants}}}, {"version", 1}});
  ASSERT_EQ(r->status, 422);
  EXPECT_NE(body(r)["message"].get<std::string>().find("duplicates variant 1"), std::string::npos);
  EXPECT_EQ(store_->require(RecordKind::review_task, "refine:c").version, 1u);
}

TEST_F(ServiceTest, BearerTokenRequiredWhenConfigured) {
  start(false, "s3cret");
  EXPECT_EQ(client_->Get("/review-tasks")->status, 200);
  httplib::Client anon("127.0.0.1", port_);
  EXPECT_EQ(anon.Get("/review-tasks")->status, 401);
  anon.set_bearer_token_auth("wrong");
  EXPECT_EQ(anon.Get("/review-tasks")->status, 401);
}

TEST_F(ServiceTest, SubmissionVerdicts) {
  start(true);
  const auto tasks = stub_tasks();
  auto pass = post("/eval/submissions", {{"task_id", tasks[0].task_id}, {"completion", tasks[0].canonical_solution}});
  ASSERT_EQ(pass->status, 201) << pass->body;
  EXPECT_EQ(body(pass)["verdict"]["class"], "PASSED");
  const auto id = body(pass)["id"].get<std::string>();

  auto fail = post("/eval/submissions", {{"task_id", tasks[0].task_id}, {"completion", "    return 0\n"}});
  ASSERT_EQ(fail->status, 201);
  EXPECT_EQ(body(fail)["verdict"]["class"], "TEST_FAILURE");

  auto start_t = std::chrono::steady_clock::now();
  auto loop = post("/eval/submissions", {{"task_id", tasks[0].task_id}, {"completion", "    while True:\n        pass\n"}});
  EXPECT_LT(std::chrono::steady_clock::now() - start_t, std::chrono::milliseconds(2500));
  ASSERT_EQ(loop->status, 201);
  EXPECT_EQ(body(loop)["verdict"]["class"], "TIMEOUT");

  auto rep = client_->Get("/eval/reports/" + id);
  ASSERT_EQ(rep->status, 200);
  EXPECT_EQ(body(rep)["report"]["verdict"]["class"], "PASSED");
  auto text = client_->Get("/eval/reports/" + id, {{"Accept", "text/plain"}});
  ASSERT_EQ(text->status, 200);
  EXPECT_EQ(text->get_header_value("Content-Type"), "text/plain");
  EXPECT_EQ(text->body.substr(0, 6), "PASSED");
  EXPECT_EQ(client_->Get("/eval/reports/missing")->status, 404);
  EXPECT_EQ(post("/eval/submissions", {{"task_id", "nope"}, {"completion", ""}})->status, 404);
}

TEST_F(ServiceTest, SubmissionWithoutAdapterIsUnavailable) {
  start(false);
  EXPECT_EQ(post("/eval/submissions", {{"task_id", "stub/0"}, {"completion", ""}})->status, 503);
}

TEST_F(ServiceTest, StoredEvalReportRendersLeaderboardText) {
  start(false);
  eval::EvalReport report;
  report.model = "tiny";
  report.model_type = "Open";
  report.params = "7B";
  report.pass_at[1] = 0.5;
  store_->put(RecordKind::eval_report, "tiny", report.to_json());
  auto r = client_->Get("/eval/reports/tiny", {{"Accept", "text/plain"}});
  ASSERT_EQ(r->status, 200);
  EXPECT_NE(r->body.find("| tiny"), std::string::npos);
  EXPECT_NE(r->body.find("50.0%"), std::string::npos);
}

TEST_F(ServiceTest, PipelineRunIsPolledToCompletion) {
  start(false);
  json docs = json::array();
  for (int i = 0; i < 3; ++i)
    docs.push_back({{"id", "d" + std::to_string(i)},
                    {"body", "fn main():\n    let x = " + std::to_string(i) + "\n    print(x)\n"},
                    {"source", "test"}});
  auto r = post("/pipeline/runs", {{"documents", docs}});
  ASSERT_EQ(r->status, 202) << r->body;
  const auto id = body(r)["id"].get<std::string>();
  int status = 0;
  json report;
  for (int i = 0; i < 200; ++i) {
    auto p = client_->Get("/pipeline/runs/" + id + "/report");
    ASSERT_TRUE(p);
    status = p->status;
    if (status == 200) {
      report = body(p);
      break;
    }
    EXPECT_EQ(status, 202);
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ASSERT_EQ(status, 200);
  EXPECT_EQ(report["status"], "done");
  EXPECT_TRUE(report["report"].is_object());
  EXPECT_TRUE(store_->get(RecordKind::corpus_doc, "pipeline-run/" + id));
  EXPECT_EQ(client_->Get("/pipeline/runs/run-999/report")->status, 404);
  EXPECT_EQ(post("/pipeline/runs", json::object())->status, 400);
}

TEST_F(ServiceTest, TranslationCandidatesAndAdjudication) {
  start(false);
  auto c = client_->Get("/translations/s0%234/candidates");
  ASSERT_EQ(c->status, 200) << c->body;
  auto sel = body(c)["selections"];
  ASSERT_EQ(sel.size(), 1u);
  EXPECT_EQ(sel[0]["language"], "es");
  EXPECT_EQ(sel[0]["version"], 1);

  auto a = post("/translations/s0%234/adjudicate", {{"language", "es"}, {"winner", 0}, {"version", 1}, {"note", "tone"}});
  ASSERT_EQ(a->status, 200) << a->body;
  EXPECT_EQ(body(a)["override"]["winner"], 0);
  EXPECT_EQ(body(a)["version"], 2);

  EXPECT_EQ(post("/translations/s0%234/adjudicate", {{"language", "es"}, {"winner", 0}, {"version", 1}})->status, 409);
  EXPECT_EQ(post("/translations/s0%234/adjudicate", {{"language", "es"}, {"winner", 2}, {"version", 2}})->status, 422);
  EXPECT_EQ(post("/translations/s0%234/adjudicate", {{"language", "es"}, {"winner", 9}, {"version", 2}})->status, 422);
  EXPECT_EQ(post("/translations/s0%234/adjudicate", {{"language", "de"}, {"winner", 0}, {"version", 1}})->status, 404);
  EXPECT_EQ(client_->Get("/translations/none/candidates")->status, 404);
}

TEST_F(ServiceTest, IdsWithSlashesRoute) {
  start(false);
  store_->put(RecordKind::review_task, "triage:repo/src/a.mojo", triage_task("repo/src/a.mojo"));
  auto r = post("/review-tasks/triage:repo%2Fsrc%2Fa.mojo/verdict", {{"verdict", "accept"}, {"version", 1}});
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(body(r)["id"], "triage:repo/src/a.mojo");
  EXPECT_TRUE(store_->get(RecordKind::review_task, "refine:repo/src/a.mojo"));

  auto audit = audit_record();
  audit["prompt_id"] = "repo/src/a.mojo#2";
  store_->put(RecordKind::translation_audit, Service::translation_record_id("repo/src/a.mojo#2", "es"), audit);
  auto c = client_->Get("/translations/repo%2Fsrc%2Fa.mojo%232/candidates");
  ASSERT_EQ(c->status, 200) << c->body;
  EXPECT_EQ(body(c)["prompt_id"], "repo/src/a.mojo#2");
}

TEST_F(ServiceTest, StateSurvivesRestart) {
  start(false);
  ASSERT_EQ(post("/review-tasks/triage:a/verdict", {{"verdict", "accept"}, {"version", 1}})->status, 200);
  service_->stop();
  service_.reset();
  store_.reset();
  Store reopened(dir_.path() / "store");
  EXPECT_EQ(reopened.require(RecordKind::review_task, "triage:a").payload["status"], "accepted");
  EXPECT_EQ(reopened.require(RecordKind::review_task, "triage:a").version, 2u);
}

}  // namespace
}  // namespace plforge::orchestrator
