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

// Shared fixtures for the evaluation suites: the stub adapter, the sample
// benchmark, a brute-force pass@k oracle and the published leaderboard rows.

#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include "plforge/eval/report.hpp"

#ifndef PLFORGE_SOURCE_DIR
#error "PLFORGE_SOURCE_DIR must be defined"
#endif
#ifndef PLFORGE_TOOLS_DIR
#error "PLFORGE_TOOLS_DIR must be defined"
#endif

namespace plforge::eval::testing {

// Puts the freshly built plforge-stubrun first on PATH.
inline void use_built_tools() {
  static const bool done = [] {
    const char* old = std::getenv("PATH");
    std::string path = std::string(PLFORGE_TOOLS_DIR) + ":" + (old ? old : "/usr/bin:/bin");
    ::setenv("PATH", path.c_str(), 1);
    return true;
  }();
  (void)done;
}

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(PLFORGE_SOURCE_DIR) / rel;
}

inline RunnerAdapter stub_adapter() {
  use_built_tools();
  return RunnerAdapter::load(source_path("samples/adapters/stub.toml"));
}

inline std::vector<BenchmarkTask> stub_tasks() { return load_benchmark(source_path("samples/bench/stub_bench.jsonl")); }

inline SandboxPolicy test_policy(std::chrono::milliseconds timeout = std::chrono::seconds(5)) {
  SandboxPolicy p;
  p.timeout = timeout;
  p.memory_bytes = 256ULL << 20;
  return p;
}

// Counts k-subsets of n samples (the first c correct) that hold at least
// one correct sample, by direct enumeration of bitmasks.
inline double brute_force_pass_at_k(int n, int c, int k) {
  long hit = 0, total = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    ++total;
    if (mask & ((1u << c) - 1)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

struct PublishedRow {
  const char* model;
  const char* type;
  const char* params;
  double pass1;
};

// Published pass@1 leaderboard, in its printed order.
inline const std::vector<PublishedRow>& published_leaderboard() {
  static const std::vector<PublishedRow> rows = {
      {"Mistral", "Open", "7B", 0.013},           {"CodeLLaMA", "Open", "7B", 0.047},
      {"CodeGemma", "Open", "7B", 0.051},         {"MagiCoder", "Open", "7B", 0.073},
      {"WizardCoder", "Open", "34B", 0.092},      {"Codestral", "Open", "23B", 0.092},
      {"Code-Qwen", "Open", "7B", 0.099},         {"DeepSeek-Coder", "Open", "33B", 0.102},
      {"GPT-4o", "Close", "--", 0.255},           {"Mojo-Coder", "Open", "7B", 0.367},
      {"Claude-3.5-Sonnet", "Close", "--", 0.398}, {"Mojo-Coder-it-m", "Open", "7B", 0.615},
      {"Mojo-Coder-it", "Open", "7B", 0.664},
  };
  return rows;
}

inline EvalReport synthetic_report(const PublishedRow& row) {
  EvalReport r;
  r.model = row.model;
  r.model_type = row.type;
  r.params = row.params;
  r.pass_at[1] = row.pass1;
  return r;
}

}  // namespace plforge::eval::testing
