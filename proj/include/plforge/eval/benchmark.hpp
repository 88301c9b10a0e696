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

// HumanEval-style benchmark records.

#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "plforge/common.hpp"

namespace plforge::eval {

struct BenchmarkTask {
  std::string task_id;
  std::string prompt;  // signature and docstring
  std::string canonical_solution;
  std::string test;  // test program text
  std::string entry_point;

  json to_json() const {
    return {{"task_id", task_id},
            {"prompt", prompt},
            {"canonical_solution", canonical_solution},
            {"test", test},
            {"entry_point", entry_point}};
  }

  static BenchmarkTask from_json(const json& j) {
    if (!j.is_object()) throw ArgumentError("benchmark record must be an object");
    BenchmarkTask t;
    auto field = [&](const char* key) {
      auto it = j.find(key);
      if (it == j.end() || !it->is_string()) throw ArgumentError(std::string("missing string field '") + key + "'");
      return it->get<std::string>();
    };
    t.task_id = field("task_id");
    t.prompt = field("prompt");
    t.canonical_solution = field("canonical_solution");
    t.test = field("test");
    t.entry_point = field("entry_point");
    if (is_blank(t.task_id)) throw ArgumentError("empty task_id");
    if (is_blank(t.entry_point)) throw ArgumentError("empty entry_point");
    if (t.prompt.find(t.entry_point) == std::string::npos)
      throw ArgumentError("prompt of " + t.task_id + " does not mention entry point '" + t.entry_point + "'");
    return t;
  }
};

inline std::vector<BenchmarkTask> parse_benchmark(std::string_view text) {
  std::vector<BenchmarkTask> tasks;
  std::set<std::string> seen;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::exception& e) {
      throw LoadError(std::string("malformed record: ") + e.what(), i + 1);
    }
    BenchmarkTask t;
    try {
      t = BenchmarkTask::from_json(j);
    } catch (const ArgumentError& e) {
      throw LoadError(std::string("malformed record: ") + e.what(), i + 1);
    }
    if (!seen.insert(t.task_id).second) throw LoadError("duplicate task_id '" + t.task_id + "'", i + 1);
    tasks.push_back(std::move(t));
  }
  if (tasks.empty()) throw LoadError("no tasks");
  return tasks;
}

inline std::vector<BenchmarkTask> load_benchmark(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw LoadError("benchmark file not found: " + path.string());
  return parse_benchmark(read_file(path));
}

inline std::string benchmark_to_jsonl(const std::vector<BenchmarkTask>& tasks) {
  std::string out;
  for (const auto& t : tasks) out += t.to_json().dump() + "\n";
  return out;
}

}  // namespace plforge::eval
