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

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "plforge/orchestrator/plan.hpp"
#include "plforge/orchestrator/store.hpp"
#include "plforge/sandbox.hpp"

namespace plforge::orchestrator {
namespace {

// ---------------------------------------------------------------------------
// Training plan

TEST(PlanTest, EffectiveBatchOnEightDevices) {
  auto p = compute_plan(32, 8, 8, 3200, 3);
  EXPECT_EQ(p.effective_batch, 2048u);
  EXPECT_EQ(p.steps_per_epoch, 1u);
}

TEST(PlanTest, FinetuneTotalSteps) {
  auto p = compute_plan(8, 4, 1, 3200, 3);
  EXPECT_EQ(p.total_steps, 300u);
  EXPECT_TRUE(p.warnings.empty());
}

TEST(PlanTest, TooFewSamplesWarns) {
  auto p = compute_plan(8, 4, 1, 31, 3);
  EXPECT_EQ(p.total_steps, 0u);
  ASSERT_EQ(p.warnings.size(), 1u);
  EXPECT_NE(p.warnings[0].find("31"), std::string::npos);
}

TEST(PlanTest, RejectsNonPositiveInputs) {
  EXPECT_THROW(compute_plan(0, 8, 8, 10, 1), ArgumentError);
  EXPECT_THROW(compute_plan(32, -1, 8, 10, 1), ArgumentError);
  EXPECT_THROW(compute_plan(32, 8, 8, 0, 1), ArgumentError);
  EXPECT_THROW(compute_plan(32, 8, 8, 10, 0), ArgumentError);
  EXPECT_THROW(compute_plan(32, 8, 8, 10, 1, 0), ArgumentError);
}

TEST(PlanTest, RejectsOverflow) {
  const std::int64_t big = std::int64_t{1} << 40;
  EXPECT_THROW(compute_plan(big, big, 1, 10, 1), ArgumentError);
}

// Counts full batches by drawing samples one batch at a time.
std::uint64_t simulate_batches(std::uint64_t samples, std::uint64_t batch) {
  std::uint64_t steps = 0;
  while (samples >= batch) {
    samples -= batch;
    ++steps;
  }
  return steps;
}

TEST(PlanTest, MatchesBatchSimulation) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> small(1, 64), devs(1, 16), n(1, 1'000'000), epochs(1, 5);
  for (int i = 0; i < 300; ++i) {
    auto bd = small(rng), ga = small(rng), nd = devs(rng), ns = n(rng), e = epochs(rng);
    auto p = compute_plan(bd, ga, nd, ns, e);
    SCOPED_TRACE(p.to_json().dump());
    EXPECT_EQ(p.effective_batch, static_cast<std::uint64_t>(bd * ga * nd));
    EXPECT_EQ(p.steps_per_epoch, simulate_batches(ns, bd * ga * nd));
    std::uint64_t total = 0;
    for (int epoch = 0; epoch < e; ++epoch) total += simulate_batches(ns, bd * ga);
    EXPECT_EQ(p.total_steps, total);
  }
}

TEST(PlanTest, RenderListsComputedFields) {
  auto text = compute_plan(32, 8, 8, 3200, 3).render();
  EXPECT_NE(text.find("effective batch (B_e)       2048"), std::string::npos);
  EXPECT_NE(text.find("total steps (T)             36"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Checkpoint policy

TEST(CheckpointTest, IntervalStepAlwaysSaves) {
  auto d = checkpoint_decision(250, 99.0, {0.1, 0.2}, 250);
  EXPECT_TRUE(d.save());
  EXPECT_EQ(d.reasons(), std::vector<std::string>{"interval"});
}

TEST(CheckpointTest, StrictNewMinimumSaves) {
  std::vector<double> history(122, 1.0);
  auto d = checkpoint_decision(123, 0.5, history);
  EXPECT_TRUE(d.save());
  EXPECT_EQ(d.reasons(), std::vector<std::string>{"best_loss"});
  EXPECT_DOUBLE_EQ(d.running_min, 0.5);
}

TEST(CheckpointTest, AboveRunningMinimumSkips) {
  std::vector<double> history(122, 1.0);
  history[40] = 0.25;
  auto d = checkpoint_decision(123, 0.5, history);
  EXPECT_FALSE(d.save());
  EXPECT_DOUBLE_EQ(d.running_min, 0.25);
}

TEST(CheckpointTest, TieWithMinimumSkips) {
  auto d = checkpoint_decision(3, 0.5, {0.7, 0.5});
  EXPECT_FALSE(d.save());
}

TEST(CheckpointTest, BothReasonsRecorded) {
  auto d = checkpoint_decision(4, 0.1, {0.7, 0.5, 0.6}, 2);
  EXPECT_EQ(d.reasons(), (std::vector<std::string>{"interval", "best_loss"}));
  EXPECT_EQ(d.to_json()["action"], "save");
}

TEST(CheckpointTest, FirstStepSaves) { EXPECT_TRUE(checkpoint_decision(1, 3.0, {}).save()); }

TEST(CheckpointTest, NanNeverBecomesMinimum) {
  auto d = checkpoint_decision(2, std::nan(""), {1.0});
  EXPECT_FALSE(d.save());
  EXPECT_FALSE(checkpoint_decision(3, 0.9, {1.0, std::nan("")}).running_min != 0.9);
}

TEST(CheckpointTest, RejectsStepZero) { EXPECT_THROW(checkpoint_decision(0, 1.0, {}), ArgumentError); }

// Save set computed directly from the definition.
std::set<std::uint64_t> expected_saves(const std::vector<double>& losses, std::uint64_t interval) {
  std::set<std::uint64_t> out;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const std::uint64_t s = i + 1;
    bool below_all = true;
    for (std::size_t j = 0; j < i; ++j)
      if (!(losses[i] < losses[j])) below_all = false;
    if (s % interval == 0 || below_all) out.insert(s);
  }
  return out;
}

TEST(CheckpointTest, PropertyOnRandomSequences) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 300), level(0, 40), ivl(1, 60);
  for (int seq = 0; seq < 10'000; ++seq) {
    const auto n = len(rng);
    const std::uint64_t interval = seq % 5 == 0 ? 250 : ivl(rng);
    std::vector<double> losses;
    for (int i = 0; i < n; ++i) losses.push_back(level(rng) / 8.0);  // coarse levels force ties
    auto want = expected_saves(losses, interval);

    CheckpointTracker tracker(interval);
    for (double l : losses) tracker.observe(l);
    auto saved = tracker.saved_steps();
    ASSERT_EQ(std::set<std::uint64_t>(saved.begin(), saved.end()), want) << "sequence " << seq;

    if (seq % 50 == 0) {
      for (std::size_t i = 0; i < losses.size(); ++i) {
        std::vector<double> history(losses.begin(), losses.begin() + static_cast<std::ptrdiff_t>(i));
        EXPECT_EQ(checkpoint_decision(i + 1, losses[i], history, interval).save(), want.count(i + 1) == 1);
      }
    }
  }
}

TEST(CheckpointTest, TrackerRetainsBestStep) {
  CheckpointTracker t(10);
  for (double l : {3.0, 2.0, 2.5, 1.0, 1.5}) t.observe(l);
  EXPECT_EQ(t.best_step(), 4u);
  EXPECT_EQ(t.saved_steps(), (std::vector<std::uint64_t>{1, 2, 4}));
  EXPECT_EQ(t.to_json()["best_step"], 4);
}

// ---------------------------------------------------------------------------
// Ablation grid

TEST(GridTest, DefaultAxesGiveFiftySixCells) {
  auto cells = plan_ablation_grid(default_token_axis(), default_instruction_axis());
  ASSERT_EQ(cells.size(), 56u);
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  for (const auto& c : cells) {
    EXPECT_EQ(c.status, "planned");
    EXPECT_FALSE(c.result.has_value());
    seen.insert({c.tokens, c.instructions});
  }
  EXPECT_EQ(seen.size(), 56u);
  EXPECT_EQ(cells.back().tokens, 6'000'000u);
  EXPECT_EQ(cells.back().instructions, 3200u);
}

TEST(GridTest, SingleCell) {
  auto cells = plan_ablation_grid({0}, {0});
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_TRUE(cells[0].to_json()["result"].is_null());
}

TEST(GridTest, RejectsDuplicatesAndEmptyAxes) {
  EXPECT_THROW(plan_ablation_grid({0, 1'000'000, 0}, {0}), ArgumentError);
  EXPECT_THROW(plan_ablation_grid({0}, {}), ArgumentError);
}

TEST(GridTest, ParsesAxisValues) {
  EXPECT_EQ(parse_axis("0,1M,2.5M,500,1.5K"), (std::vector<std::uint64_t>{0, 1'000'000, 2'500'000, 500, 1500}));
  EXPECT_THROW(parse_axis_value("abc"), ArgumentError);
  EXPECT_THROW(parse_axis_value("1.5"), ArgumentError);
  EXPECT_THROW(parse_axis_value(""), ArgumentError);
}

// ---------------------------------------------------------------------------
// Store

json review_payload(const std::string& id, const std::string& status = "pending") {
  return {{"id", id}, {"kind", "sample_triage"}, {"payload", {{"snippet_id", id}}}, {"status", status},
          {"verdict_note", ""}};
}

TEST(StoreTest, RoundTripKeepsPayloadBytes) {
  EphemeralDir dir;
  const json payload = json::parse(R"({"z":1,"a":[1.5,"é",null],"nested":{"k":"v"}})");
  {
    Store store(dir.path());
    auto rec = store.put(RecordKind::sft_pair, "p1", payload);
    EXPECT_EQ(rec.version, 1u);
    EXPECT_EQ(store.require(RecordKind::sft_pair, "p1").payload.dump(), payload.dump());
  }
  Store reopened(dir.path());
  auto rec = reopened.require(RecordKind::sft_pair, "p1");
  EXPECT_EQ(rec.payload.dump(), payload.dump());
  EXPECT_EQ(rec.version, 1u);
  EXPECT_FALSE(rec.created.empty());
}

TEST(StoreTest, VersionsIncreasePerMutation) {
  EphemeralDir dir;
  Store store(dir.path());
  std::uint64_t last = 0;
  for (int i = 0; i < 20; ++i) {
    auto rec = store.put(RecordKind::plan, "plan", {{"i", i}});
    EXPECT_EQ(rec.version, last + 1);
    last = rec.version;
  }
}

TEST(StoreTest, StaleVersionConflicts) {
  EphemeralDir dir;
  Store store(dir.path());
  store.put(RecordKind::plan, "x", {{"a", 1}}, 0);
  store.put(RecordKind::plan, "x", {{"a", 2}}, 1);
  try {
    store.put(RecordKind::plan, "x", {{"a", 3}}, 1);
    FAIL() << "expected conflict";
  } catch (const ConflictError& e) {
    EXPECT_EQ(e.current_version(), 2u);
  }
  EXPECT_THROW(store.put(RecordKind::plan, "x", {}, 0), ConflictError);
  EXPECT_EQ(store.require(RecordKind::plan, "x").payload["a"], 2);
}

TEST(StoreTest, MissingRecord) {
  EphemeralDir dir;
  Store store(dir.path());
  EXPECT_FALSE(store.get(RecordKind::plan, "nope"));
  EXPECT_THROW(store.require(RecordKind::plan, "nope"), NotFoundError);
}

TEST(StoreTest, ReviewTransitionsEnforced) {
  EphemeralDir dir;
  Store store(dir.path());
  store.put(RecordKind::review_task, "t1", review_payload("t1"));
  store.put(RecordKind::review_task, "t1", review_payload("t1", "rejected"));
  EXPECT_THROW(store.put(RecordKind::review_task, "t1", review_payload("t1", "accepted")), sft::IllegalTransition);
  EXPECT_THROW(store.put(RecordKind::review_task, "t2", review_payload("other")), ArgumentError);
}

TEST(StoreTest, StateMachineAdmitsOnlyListedTransitions) {
  const std::vector<std::string> states = {"pending", "accepted", "rejected", "edited"};
  const std::set<std::pair<std::string, std::string>> legal = {
      {"pending", "accepted"}, {"pending", "rejected"}, {"pending", "edited"},
      {"edited", "accepted"},  {"edited", "rejected"}};
  for (const auto& from : states)
    for (const auto& to : states) {
      if (from == to) continue;
      EphemeralDir dir;
      Store store(dir.path());
      // Reach `from` through a legal path first.
      store.put(RecordKind::review_task, "t", review_payload("t"));
      if (from == "accepted" || from == "rejected" || from == "edited")
        store.put(RecordKind::review_task, "t", review_payload("t", from));
      bool ok = true;
      try {
        store.put(RecordKind::review_task, "t", review_payload("t", to));
      } catch (const sft::IllegalTransition&) {
        ok = false;
      }
      EXPECT_EQ(ok, legal.count({from, to}) == 1) << from << " -> " << to;
    }
}

TEST(StoreTest, CommitIsAllOrNothing) {
  EphemeralDir dir;
  Store store(dir.path());
  store.put(RecordKind::plan, "a", {{"v", 1}});
  const auto log_before = read_file(dir.path() / "log.jsonl");
  EXPECT_THROW(store.commit({{RecordKind::plan, "b", {{"v", 1}}, 0}, {RecordKind::plan, "a", {{"v", 2}}, 7}}),
               ConflictError);
  EXPECT_FALSE(store.get(RecordKind::plan, "b"));
  EXPECT_EQ(store.require(RecordKind::plan, "a").payload["v"], 1);
  EXPECT_EQ(read_file(dir.path() / "log.jsonl"), log_before);

  auto written = store.commit({{RecordKind::plan, "b", {{"v", 1}}, 0}, {RecordKind::plan, "b", {{"v", 2}}, 1}});
  ASSERT_EQ(written.size(), 2u);
  EXPECT_EQ(store.require(RecordKind::plan, "b").version, 2u);
}

TEST(StoreTest, TornTrailingLineIsDropped) {
  EphemeralDir dir;
  {
    Store store(dir.path());
    store.put(RecordKind::plan, "a", {{"v", 1}});
  }
  {
    std::ofstream log(dir.path() / "log.jsonl", std::ios::app);
    log << R"({"txn":2,"ops":[{"kind":"plan","id":"b")";
  }
  Store store(dir.path());
  EXPECT_TRUE(store.get(RecordKind::plan, "a"));
  EXPECT_FALSE(store.get(RecordKind::plan, "b"));
  store.put(RecordKind::plan, "c", {{"v", 1}});
  auto lines = split_lines(read_file(dir.path() / "log.jsonl"));
  for (const auto& l : lines)
    if (!is_blank(l)) EXPECT_NO_THROW((void)json::parse(l));
}

TEST(StoreTest, CorruptMiddleLineFailsToOpen) {
  EphemeralDir dir;
  {
    Store store(dir.path());
    store.put(RecordKind::plan, "a", {{"v", 1}});
  }
  auto text = read_file(dir.path() / "log.jsonl");
  write_file(dir.path() / "log.jsonl", "garbage\n" + text);
  EXPECT_THROW(Store{dir.path()}, StoreError);
}

TEST(StoreTest, SecondOpenIsLockedOut) {
  EphemeralDir dir;
  Store first(dir.path());
  EXPECT_THROW(Store{dir.path()}, StoreError);
}

TEST(StoreTest, ExportImportRoundTrip) {
  EphemeralDir a, b;
  std::string dump;
  {
    Store src(a.path());
    src.put(RecordKind::plan, "p", {{"v", 1}});
    src.put(RecordKind::plan, "p", {{"v", 2}});
    src.put(RecordKind::review_task, "t", review_payload("t"));
    dump = src.export_jsonl();
  }
  Store dst(b.path());
  EXPECT_EQ(dst.import_jsonl(dump), 2u);
  EXPECT_EQ(dst.require(RecordKind::plan, "p").version, 2u);
  EXPECT_EQ(dst.export_jsonl(), dump);
  EXPECT_THROW(dst.import_jsonl(dump), ConflictError);
}

TEST(StoreTest, ListFiltersByKindAndPredicate) {
  EphemeralDir dir;
  Store store(dir.path());
  store.put(RecordKind::plan, "a", {{"keep", true}});
  store.put(RecordKind::plan, "b", {{"keep", false}});
  store.put(RecordKind::sft_pair, "c", {{"keep", true}});
  auto kept = store.list(RecordKind::plan, [](const StoreRecord& r) { return r.payload["keep"].get<bool>(); });
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, "a");
  EXPECT_EQ(store.size(), 3u);
}

TEST(StoreTest, RecordKindNames) {
  for (auto k : kRecordKinds) EXPECT_EQ(parse_record_kind(to_string(k)), k);
  EXPECT_THROW(parse_record_kind("blob"), ArgumentError);
}

}  // namespace
}  // namespace plforge::orchestrator
