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

// Sandboxed execution of one completion against a task's tests, and the
// canonical-solution validation gate.

#pragma once

#include <unistd.h>

#include <string>
#include <vector>

#include "plforge/eval/adapter.hpp"
#include "plforge/eval/benchmark.hpp"
#include "plforge/sandbox.hpp"

namespace plforge::eval {

// The harness could not run the program at all (missing toolchain, sandbox
// setup failure). Never reported as a verdict.
class InfrastructureError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kVerdictOutputLimit = 4096;

struct EvalVerdict {
  std::string task_id;
  int sample_index = 0;
  VerdictClass verdict = VerdictClass::runtime_error;
  std::string output;  // combined stdout and stderr of the deciding step
  double wall_seconds = 0.0;

  bool passed() const { return verdict == VerdictClass::passed; }

  json to_json() const {
    return {{"task_id", task_id},
            {"sample_index", sample_index},
            {"class", to_string(verdict)},
            {"output", output},
            {"wall_seconds", wall_seconds}};
  }
};

namespace detail {

inline std::string clip_output(const ProcessResult& p) {
  std::string s = p.out;
  if (!p.err.empty()) {
    if (!s.empty() && s.back() != '\n') s += '\n';
    s += p.err;
  }
  if (s.size() > kVerdictOutputLimit) s = s.substr(0, kVerdictOutputLimit) + "\n[output truncated]";
  return s;
}

inline SandboxResult run_step(const std::vector<std::string>& argv, const SandboxPolicy& policy,
                              const std::filesystem::path& dir) {
  if (argv.empty()) throw InfrastructureError("empty command template");
  try {
    return run_sandboxed(argv, policy, dir);
  } catch (const SandboxError& e) {
    throw InfrastructureError(std::string("sandbox: ") + e.what());
  }
}

}  // namespace detail

// Throws InfrastructureError naming the first executable that cannot be found.
inline void check_toolchain(const RunnerAdapter& adapter) {
  for (const auto& tool : adapter.toolchain()) {
    auto exe = plforge::detail::resolve_executable(tool);
    if (::access(exe.c_str(), X_OK) != 0)
      throw InfrastructureError("toolchain for '" + adapter.language + "' not available: " + tool + " not found");
  }
}

// Compile step (if any), then run step, each in the same fresh scratch
// directory under `policy`.
inline EvalVerdict execute(const std::string& completion, const BenchmarkTask& task, const RunnerAdapter& adapter,
                           const SandboxPolicy& policy, int sample_index = 0) {
  EvalVerdict v;
  v.task_id = task.task_id;
  v.sample_index = sample_index;

  std::optional<EphemeralDir> dir;
  try {
    dir.emplace(policy.scratch_root);
  } catch (const std::exception& e) {
    throw InfrastructureError(std::string("scratch directory: ") + e.what());
  }
  const auto file = dir->path() / ("main" + adapter.extension);
  try {
    write_file(file, adapter.assemble(task.prompt, completion, task.test, task.entry_point));
  } catch (const std::exception& e) {
    throw InfrastructureError(e.what());
  }

  auto decide = [&](const SandboxResult& r, Stage stage) -> std::optional<VerdictClass> {
    v.wall_seconds += r.process.wall_seconds;
    v.output = detail::clip_output(r.process);
    if (r.timed_out()) return VerdictClass::timeout;
    if (r.memory_exceeded) return VerdictClass::resource_limit;
    if (r.process.success()) return std::nullopt;
    if (auto c = adapter.classify(stage, v.output)) return c;
    return stage == Stage::compile ? VerdictClass::compile_error : VerdictClass::runtime_error;
  };

  if (adapter.compile_cmd) {
    auto r = detail::run_step(RunnerAdapter::expand(*adapter.compile_cmd, file), policy, dir->path());
    if (auto c = decide(r, Stage::compile)) {
      v.verdict = *c;
      return v;
    }
  }
  auto r = detail::run_step(RunnerAdapter::expand(adapter.run_cmd, file), policy, dir->path());
  auto c = decide(r, Stage::run);
  v.verdict = c.value_or(VerdictClass::passed);
  return v;
}

struct ValidationReport {
  std::size_t total = 0;
  std::vector<EvalVerdict> failures;

  std::size_t valid() const { return total - failures.size(); }
  bool ok() const { return failures.empty(); }

  std::string summary() const {
    std::string s = std::to_string(valid()) + "/" + std::to_string(total) + " valid";
    for (const auto& f : failures) s += "\n  invalid: " + f.task_id + " (" + to_string(f.verdict) + ")";
    return s;
  }

  json to_json() const {
    json j = {{"total", total}, {"valid", valid()}, {"failures", json::array()}};
    for (const auto& f : failures) j["failures"].push_back(f.to_json());
    return j;
  }
};

// Runs every canonical solution against its own tests.
inline ValidationReport validate_benchmark(const std::vector<BenchmarkTask>& tasks, const RunnerAdapter& adapter,
                                           const SandboxPolicy& policy, std::size_t workers = 1) {
  check_toolchain(adapter);
  std::vector<EvalVerdict> verdicts(tasks.size());
  parallel_for(tasks.size(), workers,
               [&](std::size_t i) { verdicts[i] = execute(tasks[i].canonical_solution, tasks[i], adapter, policy); });
  ValidationReport report;
  report.total = tasks.size();
  for (auto& v : verdicts)
    if (!v.passed()) report.failures.push_back(std::move(v));
  return report;
}

}  // namespace plforge::eval
