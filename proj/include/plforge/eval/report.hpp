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

// Model evaluation over a benchmark and the pass@1 leaderboard.

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plforge/eval/harness.hpp"
#include "plforge/eval/metrics.hpp"

namespace plforge::eval {

class GeneratorError : public Error {
 public:
  using Error::Error;
};

// Produces completions. Must be safe to call from several threads.
class CompletionGenerator {
 public:
  virtual ~CompletionGenerator() = default;
  virtual std::string complete(const BenchmarkTask& task, int sample_index) const = 0;
  // Decoding settings recorded in the report (temperature, greedy, ...).
  virtual json decoding() const { return json::object(); }
};

// Returns each task's canonical solution.
class CanonicalGenerator final : public CompletionGenerator {
 public:
  std::string complete(const BenchmarkTask& task, int) const override { return task.canonical_solution; }
  json decoding() const override { return {{"generator", "canonical"}}; }
};

// Returns the same text for every task.
class FixedGenerator final : public CompletionGenerator {
 public:
  explicit FixedGenerator(std::string text) : text_(std::move(text)) {}
  std::string complete(const BenchmarkTask&, int) const override { return text_; }
  json decoding() const override { return {{"generator", "fixed"}}; }

 private:
  std::string text_;
};

// Runs an external command per sample: the prompt on stdin, the completion
// on stdout. {task_id}, {sample} and {entry_point} are substituted in the
// arguments.
class CommandGenerator final : public CompletionGenerator {
 public:
  CommandGenerator(std::string command, std::chrono::milliseconds timeout = std::chrono::seconds(120),
                   json decoding = json::object())
      : command_(std::move(command)), timeout_(timeout), decoding_(std::move(decoding)) {
    if (split_command(command_).empty()) throw ConfigError("empty generator command");
  }

  std::string complete(const BenchmarkTask& task, int sample_index) const override {
    auto argv = split_command(command_);
    for (auto& a : argv) {
      a = RunnerAdapter::substitute(a, "{task_id}", task.task_id);
      a = RunnerAdapter::substitute(a, "{sample}", std::to_string(sample_index));
      a = RunnerAdapter::substitute(a, "{entry_point}", task.entry_point);
    }
    ProcessResult r;
    try {
      r = run_command(argv, task.prompt, timeout_);
    } catch (const std::exception& e) {
      throw GeneratorError(e.what());
    }
    if (r.timed_out) throw GeneratorError("generator timed out");
    if (!r.success())
      throw GeneratorError("generator exited with " + std::to_string(r.exit_code) +
                           (r.err.empty() ? "" : ": " + trim(r.err)));
    return r.out;
  }

  json decoding() const override {
    json d = decoding_;
    d["generator"] = "command";
    d["command"] = command_;
    return d;
  }

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
  json decoding_;
};

struct TaskResult {
  std::string task_id;
  std::vector<EvalVerdict> samples;
  std::string generator_error;  // non-empty: the task counts as c = 0

  int correct() const {
    if (!generator_error.empty()) return 0;
    return static_cast<int>(std::count_if(samples.begin(), samples.end(), [](const auto& v) { return v.passed(); }));
  }

  json to_json() const {
    json j = {{"task_id", task_id}, {"correct", correct()}, {"samples", json::array()}};
    for (const auto& v : samples) j["samples"].push_back(v.to_json());
    if (!generator_error.empty()) j["generator_error"] = generator_error;
    return j;
  }
};

// Mean of per-task pass@k. Summed in sorted order so the result does not
// depend on task order.
inline double aggregate_pass_at(const std::vector<TaskResult>& tasks, int n, int k) {
  if (tasks.empty()) throw ArgumentError("no tasks to aggregate");
  std::vector<double> values;
  values.reserve(tasks.size());
  for (const auto& t : tasks) values.push_back(pass_at_k(n, t.correct(), k));
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

struct EvalReport {
  std::string model;
  std::string model_type = "Open";
  std::string params = "--";
  int n = 1;
  std::vector<int> ks{1};
  std::vector<TaskResult> tasks;
  std::map<int, double> pass_at;
  std::vector<std::string> flags;
  json adapter = json::object();
  json policy = json::object();
  json decoding = json::object();
  std::string timestamp;

  // pass@1, falling back to the mean fraction of passing samples.
  double pass1() const {
    if (auto it = pass_at.find(1); it != pass_at.end()) return it->second;
    if (tasks.empty()) return 0.0;
    return aggregate_pass_at(tasks, n, 1);
  }

  std::map<std::string, int> class_counts() const {
    std::map<std::string, int> counts;
    for (const auto& t : tasks)
      for (const auto& s : t.samples) ++counts[to_string(s.verdict)];
    return counts;
  }

  json to_json() const {
    json j = {{"model", model}, {"type", model_type}, {"params", params}, {"n", n}, {"k", ks}};
    j["pass_at"] = json::object();
    for (const auto& [k, v] : pass_at) j["pass_at"][std::to_string(k)] = v;
    j["classes"] = class_counts();
    j["flags"] = flags;
    j["tasks"] = json::array();
    for (const auto& t : tasks) j["tasks"].push_back(t.to_json());
    j["metadata"] = {{"adapter", adapter}, {"policy", policy}, {"decoding", decoding}, {"timestamp", timestamp}};
    return j;
  }

  static EvalReport from_json(const json& j) {
    EvalReport r;
    r.model = j.at("model").get<std::string>();
    r.model_type = j.value("type", "Open");
    r.params = j.value("params", "--");
    r.n = j.value("n", 1);
    if (j.contains("k")) r.ks = j["k"].get<std::vector<int>>();
    if (j.contains("pass_at"))
      for (const auto& [k, v] : j["pass_at"].items()) r.pass_at[std::stoi(k)] = v.get<double>();
    if (j.contains("flags")) r.flags = j["flags"].get<std::vector<std::string>>();
    if (j.contains("tasks")) {
      for (const auto& t : j["tasks"]) {
        TaskResult tr;
        tr.task_id = t.at("task_id").get<std::string>();
        tr.generator_error = t.value("generator_error", "");
        for (const auto& s : t.value("samples", json::array())) {
          EvalVerdict v;
          v.task_id = tr.task_id;
          v.sample_index = s.value("sample_index", 0);
          v.verdict = parse_verdict_class(s.at("class").get<std::string>());
          v.output = s.value("output", "");
          v.wall_seconds = s.value("wall_seconds", 0.0);
          tr.samples.push_back(std::move(v));
        }
        r.tasks.push_back(std::move(tr));
      }
    }
    if (j.contains("metadata")) {
      const auto& m = j["metadata"];
      r.adapter = m.value("adapter", json::object());
      r.policy = m.value("policy", json::object());
      r.decoding = m.value("decoding", json::object());
      r.timestamp = m.value("timestamp", "");
    }
    return r;
  }
};

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct EvalOptions {
  std::string model = "model";
  std::string model_type = "Open";
  std::string params = "--";
  int n = 1;
  std::vector<int> ks{1};
  std::size_t workers = 1;
  bool strict = false;  // a generator failure aborts the run
};

// n completions per task, each executed in its own sandbox; pass@k is the
// mean over tasks of pass_at_k(n, c_task, k).
inline EvalReport evaluate_model(const CompletionGenerator& generator, const std::vector<BenchmarkTask>& tasks,
                                 const EvalOptions& options, const RunnerAdapter& adapter,
                                 const SandboxPolicy& policy) {
  if (tasks.empty()) throw ArgumentError("no tasks to evaluate");
  if (options.n < 1) throw ArgumentError("samples per task must be >= 1");
  if (options.ks.empty()) throw ArgumentError("at least one k is required");
  for (int k : options.ks)
    if (k < 1 || k > options.n)
      throw ArgumentError("k=" + std::to_string(k) + " outside [1, n=" + std::to_string(options.n) + "]");
  adapter.validate();
  policy.validate();
  check_toolchain(adapter);

  const auto n = static_cast<std::size_t>(options.n);
  std::vector<std::optional<EvalVerdict>> verdicts(tasks.size() * n);
  std::vector<std::string> gen_errors(tasks.size() * n);
  parallel_for(verdicts.size(), options.workers, [&](std::size_t j) {
    const auto& task = tasks[j / n];
    const int sample = static_cast<int>(j % n);
    std::string completion;
    try {
      completion = generator.complete(task, sample);
    } catch (const std::exception& e) {
      if (options.strict) throw GeneratorError("generator failed on " + task.task_id + ": " + e.what());
      gen_errors[j] = e.what();
      return;
    }
    verdicts[j] = execute(completion, task, adapter, policy, sample);
  });

  EvalReport report;
  report.model = options.model;
  report.model_type = options.model_type;
  report.params = options.params;
  report.n = options.n;
  report.ks = options.ks;
  report.adapter = adapter.to_json();
  report.policy = policy.to_json();
  report.decoding = generator.decoding();
  report.timestamp = utc_timestamp();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    TaskResult tr;
    tr.task_id = tasks[t].task_id;
    for (std::size_t s = 0; s < n; ++s) {
      const auto j = t * n + s;
      if (verdicts[j]) tr.samples.push_back(std::move(*verdicts[j]));
      if (!gen_errors[j].empty() && tr.generator_error.empty()) tr.generator_error = gen_errors[j];
    }
    if (!tr.generator_error.empty())
      report.flags.push_back("generator failed on " + tr.task_id + ": " + tr.generator_error);
    report.tasks.push_back(std::move(tr));
  }
  for (int k : options.ks) report.pass_at[k] = aggregate_pass_at(report.tasks, options.n, k);
  return report;
}

// ---------------------------------------------------------------------------
// Leaderboard

struct LeaderboardRow {
  std::string model;
  std::string type;
  std::string params;
  double pass1 = 0.0;
};

// "7B" -> 7e9, "350M" -> 3.5e8; nullopt for "--" or anything unparsable.
inline std::optional<double> parse_param_count(std::string_view s) {
  s = trim_view(s);
  if (s.empty()) return std::nullopt;
  double scale = 1.0;
  switch (std::toupper(static_cast<unsigned char>(s.back()))) {
    case 'K': scale = 1e3; break;
    case 'M': scale = 1e6; break;
    case 'B': scale = 1e9; break;
    case 'T': scale = 1e12; break;
    default: break;
  }
  if (scale != 1.0) s.remove_suffix(1);
  try {
    std::size_t used = 0;
    std::string str(s);
    double v = std::stod(str, &used);
    if (used != str.size() || v < 0) return std::nullopt;
    return v * scale;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Ascending pass@1. Equal scores: larger parameter count first (unknown
// counts last), then model name.
inline bool leaderboard_less(const LeaderboardRow& a, const LeaderboardRow& b) {
  if (a.pass1 != b.pass1) return a.pass1 < b.pass1;
  auto pa = parse_param_count(a.params), pb = parse_param_count(b.params);
  if (pa.has_value() != pb.has_value()) return pa.has_value();
  if (pa && *pa != *pb) return *pa > *pb;
  return a.model < b.model;
}

inline std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", v * 100.0);
  return buf;
}

struct Leaderboard {
  std::vector<LeaderboardRow> rows;

  std::string text() const {
    std::vector<std::array<std::string, 4>> cells{{"Model", "Type", "Params", "Pass@1"}};
    for (const auto& r : rows) cells.push_back({r.model, r.type, r.params, format_percent(r.pass1)});
    std::array<std::size_t, 4> width{};
    for (const auto& c : cells)
      for (std::size_t i = 0; i < 4; ++i) width[i] = std::max(width[i], utf8_length(c[i]));
    auto pad = [](const std::string& s, std::size_t w, bool right) {
      std::string fill(w - utf8_length(s), ' ');
      return right ? fill + s : s + fill;
    };
    std::string out;
    for (std::size_t r = 0; r < cells.size(); ++r) {
      out += "|";
      for (std::size_t i = 0; i < 4; ++i) out += " " + pad(cells[r][i], width[i], i == 3) + " |";
      out += "\n";
      if (r == 0) {
        out += "|";
        for (std::size_t i = 0; i < 4; ++i) out += std::string(width[i] + 2, '-') + (i == 3 ? "|" : "|");
        out += "\n";
      }
    }
    return out;
  }

  json to_json() const {
    json j = json::array();
    for (const auto& r : rows) j.push_back({{"model", r.model}, {"type", r.type}, {"params", r.params}, {"pass@1", r.pass1}});
    return j;
  }
};

inline Leaderboard render_leaderboard(std::vector<LeaderboardRow> rows) {
  std::sort(rows.begin(), rows.end(), leaderboard_less);
  return Leaderboard{std::move(rows)};
}

inline Leaderboard render_leaderboard(const std::vector<EvalReport>& reports) {
  std::vector<LeaderboardRow> rows;
  for (const auto& r : reports) rows.push_back({r.model, r.model_type, r.params, r.pass1()});
  return render_leaderboard(std::move(rows));
}

}  // namespace plforge::eval
