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

#pragma once

#include <cctype>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "plforge/common.hpp"
#include "plforge/process.hpp"

namespace plforge {

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::uint64_t count(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

// Counts maximal runs of non-whitespace bytes.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::uint64_t count(std::string_view text) const override {
    std::uint64_t n = 0;
    bool in_token = false;
    for (unsigned char c : text) {
      bool space = std::isspace(c) != 0;
      if (!space && !in_token) ++n;
      in_token = !space;
    }
    return n;
  }
  std::string name() const override { return "ws"; }
};

// External tokenizer: the command reads the text on stdin and prints a
// single non-negative integer on stdout.
class CommandTokenizer final : public Tokenizer {
 public:
  explicit CommandTokenizer(std::string command)
      : command_(std::move(command)), argv_(split_command(command_)) {
    if (argv_.empty()) throw ConfigError("tokenizer plugin command is empty");
  }

  std::uint64_t count(std::string_view text) const override {
    auto result = run_command(argv_, text);
    if (!result.success())
      throw Error("tokenizer plugin failed: " + trim(result.err));
    auto out = trim(result.out);
    try {
      std::size_t used = 0;
      auto v = std::stoull(out, &used);
      if (used != out.size()) throw std::invalid_argument(out);
      return v;
    } catch (const std::exception&) {
      throw Error("tokenizer plugin printed a non-integer: '" + out + "'");
    }
  }
  std::string name() const override { return "plugin:" + command_; }

 private:
  std::string command_;
  std::vector<std::string> argv_;
};

inline std::uint64_t count_tokens(std::string_view text, const Tokenizer& tokenizer) {
  return tokenizer.count(text);
}

inline std::uint64_t count_tokens(std::string_view text) {
  return WhitespaceTokenizer{}.count(text);
}

// "ws" or "plugin:<cmd>".
inline std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view spec) {
  if (spec.empty() || spec == "ws") return std::make_shared<WhitespaceTokenizer>();
  if (starts_with(spec, "plugin:"))
    return std::make_shared<CommandTokenizer>(std::string(spec.substr(7)));
  throw ConfigError("unknown tokenizer '" + std::string(spec) + "' (expected ws or plugin:<cmd>)");
}

}  // namespace plforge
