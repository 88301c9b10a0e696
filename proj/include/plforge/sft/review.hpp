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

// Human review tasks and their state machine. The tool records verdicts; it
// never decides them.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "plforge/common.hpp"

namespace plforge::sft {

enum class TaskKind { sample_triage, prompt_refine, translation_adjudicate, solution_author };
enum class TaskStatus { pending, accepted, rejected, edited };

inline std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::sample_triage: return "sample_triage";
    case TaskKind::prompt_refine: return "prompt_refine";
    case TaskKind::translation_adjudicate: return "translation_adjudicate";
    case TaskKind::solution_author: return "solution_author";
  }
  return "?";
}

inline std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::pending: return "pending";
    case TaskStatus::accepted: return "accepted";
    case TaskStatus::rejected: return "rejected";
    case TaskStatus::edited: return "edited";
  }
  return "?";
}

inline TaskKind parse_task_kind(std::string_view s) {
  for (auto k : {TaskKind::sample_triage, TaskKind::prompt_refine, TaskKind::translation_adjudicate,
                 TaskKind::solution_author})
    if (to_string(k) == s) return k;
  throw ArgumentError("unknown task kind '" + std::string(s) + "'");
}

inline TaskStatus parse_task_status(std::string_view s) {
  for (auto st : {TaskStatus::pending, TaskStatus::accepted, TaskStatus::rejected, TaskStatus::edited})
    if (to_string(st) == s) return st;
  throw ArgumentError("unknown task status '" + std::string(s) + "'");
}

// Raised for a transition outside the allowed set.
class IllegalTransition : public Error {
 public:
  using Error::Error;
};

class QueueIntegrityError : public Error {
 public:
  using Error::Error;
};

inline bool is_terminal(TaskStatus s) { return s == TaskStatus::accepted || s == TaskStatus::rejected; }

// pending -> {accepted, rejected, edited}; edited -> {accepted, rejected}.
inline bool transition_allowed(TaskStatus from, TaskStatus to) {
  switch (from) {
    case TaskStatus::pending:
      return to == TaskStatus::accepted || to == TaskStatus::rejected || to == TaskStatus::edited;
    case TaskStatus::edited:
      return to == TaskStatus::accepted || to == TaskStatus::rejected;
    default:
      return false;
  }
}

struct ReviewTask {
  std::string id;
  TaskKind kind = TaskKind::sample_triage;
  json payload = json::object();
  TaskStatus status = TaskStatus::pending;
  std::string verdict_note;

  json to_json() const {
    return {{"id", id},
            {"kind", to_string(kind)},
            {"payload", payload},
            {"status", to_string(status)},
            {"verdict_note", verdict_note}};
  }

  static ReviewTask from_json(const json& j) {
    ReviewTask t;
    t.id = j.at("id").get<std::string>();
    t.kind = parse_task_kind(j.at("kind").get<std::string>());
    t.payload = j.value("payload", json::object());
    t.status = parse_task_status(j.value("status", std::string("pending")));
    t.verdict_note = j.value("verdict_note", std::string());
    return t;
  }
};

enum class Verdict { accept, reject };

inline Verdict parse_verdict(std::string_view s) {
  if (s == "accept" || s == "accepted") return Verdict::accept;
  if (s == "reject" || s == "rejected") return Verdict::reject;
  throw ArgumentError("verdict must be accept or reject, got '" + std::string(s) + "'");
}

inline ReviewTask apply_verdict(ReviewTask task, Verdict v, std::string note = {}) {
  auto to = v == Verdict::accept ? TaskStatus::accepted : TaskStatus::rejected;
  if (!transition_allowed(task.status, to))
    throw IllegalTransition("task " + task.id + " is " + std::string(to_string(task.status)) + ", cannot become " +
                            std::string(to_string(to)));
  task.status = to;
  task.verdict_note = std::move(note);
  return task;
}

// Normalization used to decide whether two prompt variants are the same.
inline std::string normalize_prompt(std::string_view s) { return to_lower(collapse_whitespace(s)); }

// prompt_refine payloads carry {"variants": [4 strings]}: all non-empty and
// pairwise distinct after normalization.
inline std::vector<std::string> variant_problems(const json& variants) {
  std::vector<std::string> problems;
  if (!variants.is_array()) return {"variants must be an array"};
  if (variants.size() != 4) problems.push_back("expected 4 variants, got " + std::to_string(variants.size()));
  std::vector<std::string> seen;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    if (!variants[i].is_string()) {
      problems.push_back("variant " + std::to_string(i + 1) + " is not a string");
      continue;
    }
    auto norm = normalize_prompt(variants[i].get<std::string>());
    if (norm.empty()) problems.push_back("variant " + std::to_string(i + 1) + " is empty");
    for (std::size_t j = 0; j < seen.size(); ++j)
      if (!norm.empty() && seen[j] == norm)
        problems.push_back("variant " + std::to_string(i + 1) + " duplicates variant " + std::to_string(j + 1));
    seen.push_back(norm);
  }
  return problems;
}

inline void validate_edit_payload(const ReviewTask& task, const json& payload) {
  if (task.kind != TaskKind::prompt_refine) return;
  if (!payload.is_object() || !payload.contains("variants"))
    throw ArgumentError("prompt_refine edit needs a variants array");
  auto problems = variant_problems(payload["variants"]);
  if (!problems.empty()) throw ArgumentError("invalid variants: " + join(problems, "; "));
}

// Replaces the payload and moves the task to `edited`.
inline ReviewTask apply_edit(ReviewTask task, json payload, std::string note = {}) {
  if (!transition_allowed(task.status, TaskStatus::edited))
    throw IllegalTransition("task " + task.id + " is " + std::string(to_string(task.status)) + ", cannot be edited");
  validate_edit_payload(task, payload);
  task.payload = std::move(payload);
  task.status = TaskStatus::edited;
  task.verdict_note = std::move(note);
  return task;
}

// Accepting a triage task opens the paraphrase refinement step for the same
// snippet. Returns nullopt for every other transition.
inline std::optional<ReviewTask> downstream_task(const ReviewTask& task) {
  if (task.kind != TaskKind::sample_triage || task.status != TaskStatus::accepted) return std::nullopt;
  ReviewTask next;
  next.kind = TaskKind::prompt_refine;
  auto snippet = task.payload.value("snippet_id", task.id);
  next.id = "refine:" + snippet;
  next.payload = {{"snippet_id", snippet},
                  {"code", task.payload.value("code", std::string())},
                  {"seed_prompt", task.payload.value("seed_prompt", std::string())},
                  {"variants", json::array()}};
  return next;
}

}  // namespace plforge::sft
