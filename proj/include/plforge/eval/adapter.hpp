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

// Toolchain adapters: how to compile and run an assembled program, and how
// to map toolchain output onto verdict classes.
//
// Adapter file (TOML or JSON):
//
//   language = "stub"
//   extension = ".stub"
//   compile_cmd = "plforge-stubrun --check {file}"   # optional
//   run_cmd = "plforge-stubrun {file}"
//   test_call = "check({entry_point})"               # optional
//
//   [[classifiers]]
//   stage = "compile"          # compile | run | any
//   pattern = "^parse error"   # ECMAScript regex, matched per output line
//   verdict = "PARSE_ERROR"
//
// Command templates are split on whitespace (quotes group) and never pass
// through a shell. Placeholders: {file} is the program path, {dir} the
// scratch directory.

#pragma once

#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "plforge/common.hpp"
#include "plforge/process.hpp"
#include "toml.hpp"

namespace plforge::eval {

enum class VerdictClass { passed, parse_error, compile_error, runtime_error, test_failure, timeout, resource_limit };

inline constexpr VerdictClass kVerdictClasses[] = {
    VerdictClass::passed,        VerdictClass::parse_error,  VerdictClass::compile_error,
    VerdictClass::runtime_error, VerdictClass::test_failure, VerdictClass::timeout,
    VerdictClass::resource_limit};

inline const char* to_string(VerdictClass v) {
  switch (v) {
    case VerdictClass::passed: return "PASSED";
    case VerdictClass::parse_error: return "PARSE_ERROR";
    case VerdictClass::compile_error: return "COMPILE_ERROR";
    case VerdictClass::runtime_error: return "RUNTIME_ERROR";
    case VerdictClass::test_failure: return "TEST_FAILURE";
    case VerdictClass::timeout: return "TIMEOUT";
    case VerdictClass::resource_limit: return "RESOURCE_LIMIT";
  }
  return "?";
}

inline VerdictClass parse_verdict_class(std::string_view s) {
  for (auto v : kVerdictClasses)
    if (s == to_string(v)) return v;
  throw ConfigError("unknown verdict class '" + std::string(s) + "'");
}

enum class Stage { compile, run, any };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::compile: return "compile";
    case Stage::run: return "run";
    case Stage::any: return "any";
  }
  return "?";
}

inline Stage parse_stage(std::string_view s) {
  if (s == "compile") return Stage::compile;
  if (s == "run") return Stage::run;
  if (s == "any") return Stage::any;
  throw ConfigError("unknown classifier stage '" + std::string(s) + "'");
}

struct Classifier {
  std::string pattern;
  VerdictClass verdict = VerdictClass::runtime_error;
  Stage stage = Stage::any;
  std::regex re;

  Classifier() = default;
  Classifier(std::string p, VerdictClass v, Stage s) : pattern(std::move(p)), verdict(v), stage(s) { compile(); }

  void compile() {
    try {
      re = std::regex(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw ConfigError("invalid classifier pattern '" + pattern + "': " + e.what());
    }
  }

  bool matches(std::string_view output) const {
    for (const auto& line : split_lines(output))
      if (std::regex_search(line, re)) return true;
    return false;
  }
};

struct RunnerAdapter {
  std::string language;
  std::string extension = ".txt";
  std::optional<std::string> compile_cmd;
  std::string run_cmd;
  std::string test_call;  // appended after the tests; {entry_point} is substituted
  std::vector<Classifier> classifiers;

  void validate() const {
    if (is_blank(language)) throw ConfigError("adapter: language is required");
    if (is_blank(run_cmd)) throw ConfigError("adapter: run_cmd is required");
    if (run_cmd.find("{file}") == std::string::npos)
      throw ConfigError("adapter: run_cmd must reference the {file} placeholder");
    if (compile_cmd && is_blank(*compile_cmd)) throw ConfigError("adapter: compile_cmd is empty");
    if (extension.empty() || extension.front() != '.' || extension.find('/') != std::string::npos)
      throw ConfigError("adapter: extension must look like '.ext'");
  }

  // First classifier for `stage` (or `any`) matching the output.
  std::optional<VerdictClass> classify(Stage stage, std::string_view output) const {
    for (const auto& c : classifiers)
      if ((c.stage == stage || c.stage == Stage::any) && c.matches(output)) return c.verdict;
    return std::nullopt;
  }

  json to_json() const {
    json j = {{"language", language}, {"extension", extension}, {"run_cmd", run_cmd}};
    if (compile_cmd) j["compile_cmd"] = *compile_cmd;
    if (!test_call.empty()) j["test_call"] = test_call;
    j["classifiers"] = json::array();
    for (const auto& c : classifiers)
      j["classifiers"].push_back({{"stage", to_string(c.stage)}, {"pattern", c.pattern}, {"verdict", to_string(c.verdict)}});
    return j;
  }

  static RunnerAdapter from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("adapter must be an object");
    RunnerAdapter a;
    auto str = [&](const char* key, bool required) -> std::optional<std::string> {
      auto it = j.find(key);
      if (it == j.end()) {
        if (required) throw ConfigError(std::string("adapter: missing '") + key + "'");
        return std::nullopt;
      }
      if (!it->is_string()) throw ConfigError(std::string("adapter: '") + key + "' must be a string");
      return it->get<std::string>();
    };
    a.language = *str("language", true);
    a.run_cmd = *str("run_cmd", true);
    a.compile_cmd = str("compile_cmd", false);
    if (auto e = str("extension", false)) a.extension = *e;
    if (auto t = str("test_call", false)) a.test_call = *t;
    if (auto it = j.find("classifiers"); it != j.end()) {
      if (!it->is_array()) throw ConfigError("adapter: classifiers must be an array");
      for (const auto& c : *it) {
        if (!c.is_object() || !c.contains("pattern") || !c.contains("verdict") || !c["pattern"].is_string() ||
            !c["verdict"].is_string())
          throw ConfigError("adapter: each classifier needs string 'pattern' and 'verdict'");
        Stage stage = c.contains("stage") ? parse_stage(c["stage"].get<std::string>()) : Stage::any;
        a.classifiers.emplace_back(c["pattern"].get<std::string>(),
                                   parse_verdict_class(c["verdict"].get<std::string>()), stage);
      }
    }
    a.validate();
    return a;
  }

  static RunnerAdapter from_toml(std::string_view text, const std::string& source = "adapter") {
    toml::table tbl;
    try {
      tbl = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
      throw ConfigError(source + ": " + std::string(e.description()) + " (line " +
                        std::to_string(e.source().begin.line) + ")");
    }
    json j = json::object();
    for (const char* key : {"language", "extension", "compile_cmd", "run_cmd", "test_call"}) {
      if (auto node = tbl.get(key)) {
        auto v = node->value<std::string>();
        if (!v) throw ConfigError(source + ": '" + key + "' must be a string");
        j[key] = *v;
      }
    }
    if (auto node = tbl.get("classifiers")) {
      auto* arr = node->as_array();
      if (!arr) throw ConfigError(source + ": classifiers must be an array of tables");
      j["classifiers"] = json::array();
      for (const auto& item : *arr) {
        auto* t = item.as_table();
        if (!t) throw ConfigError(source + ": classifiers must be an array of tables");
        json c = json::object();
        for (const char* key : {"stage", "pattern", "verdict"})
          if (auto v = (*t)[key].value<std::string>()) c[key] = *v;
        j["classifiers"].push_back(c);
      }
    }
    return from_json(j);
  }

  static RunnerAdapter load(const std::filesystem::path& path) {
    auto text = read_file(path);
    if (path.extension() == ".json") {
      try {
        return from_json(json::parse(text));
      } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
      }
    }
    return from_toml(text, path.string());
  }

  // The program the toolchain sees: prompt and completion spliced, then the
  // tests, then the optional call that invokes them.
  std::string assemble(const std::string& prompt, const std::string& completion, const std::string& tests,
                       const std::string& entry_point) const {
    std::string program = prompt + completion;
    if (!program.empty() && program.back() != '\n') program += '\n';
    program += "\n" + tests;
    if (!program.empty() && program.back() != '\n') program += '\n';
    if (!test_call.empty()) program += "\n" + substitute(test_call, "{entry_point}", entry_point) + "\n";
    return program;
  }

  static std::string substitute(std::string s, std::string_view key, std::string_view value) {
    for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size()))
      s.replace(pos, key.size(), value);
    return s;
  }

  static std::vector<std::string> expand(const std::string& templ, const std::filesystem::path& file) {
    auto argv = split_command(templ);
    for (auto& a : argv) a = substitute(substitute(a, "{file}", file.string()), "{dir}", file.parent_path().string());
    return argv;
  }

  // Executables the adapter needs before any program exists. Arguments that
  // only appear after compilation ({dir}/..., {file}...) are skipped.
  std::vector<std::string> toolchain() const {
    std::vector<std::string> tools;
    for (const auto* cmd : {compile_cmd ? &*compile_cmd : nullptr, &run_cmd}) {
      if (!cmd) continue;
      auto argv = split_command(*cmd);
      if (!argv.empty() && argv[0].find('{') == std::string::npos) tools.push_back(argv[0]);
    }
    return tools;
  }
};

}  // namespace plforge::eval
