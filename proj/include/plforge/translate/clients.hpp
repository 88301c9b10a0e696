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

// Machine translation, quality estimation and token embedding clients.
// Each contract has an HTTP adapter and a deterministic offline stub.

#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "plforge/common.hpp"
#include "plforge/http_client.hpp"

namespace plforge::translate {

enum class Language { en, es, de, fr, bn };

inline constexpr Language kLanguages[] = {Language::en, Language::es, Language::de, Language::fr, Language::bn};

inline std::string_view to_string(Language l) {
  switch (l) {
    case Language::en: return "en";
    case Language::es: return "es";
    case Language::de: return "de";
    case Language::fr: return "fr";
    case Language::bn: return "bn";
  }
  return "?";
}

inline Language parse_language(std::string_view tag) {
  for (auto l : kLanguages)
    if (to_string(l) == tag) return l;
  throw ArgumentError("unsupported language '" + std::string(tag) + "' (expected en, es, de, fr or bn)");
}

inline std::vector<Language> parse_language_list(std::string_view csv) {
  std::vector<Language> out;
  for (const auto& part : split(csv, ',')) {
    auto tag = trim(part);
    if (tag.empty()) continue;
    auto l = parse_language(tag);
    if (std::find(out.begin(), out.end(), l) != out.end()) throw ArgumentError("language listed twice: " + tag);
    out.push_back(l);
  }
  if (out.empty()) throw ArgumentError("no languages given");
  return out;
}

using Vector = std::vector<double>;
using EmbeddingSet = std::vector<Vector>;

class MtClient {
 public:
  virtual ~MtClient() = default;
  virtual std::string name() const = 0;
  virtual bool supports(Language target) const = 0;
  // Up to n candidate translations of `text`.
  virtual std::vector<std::string> translate(const std::string& text, Language source, Language target,
                                             int n) const = 0;
};

class QeClient {
 public:
  virtual ~QeClient() = default;
  virtual bool supports(Language target) const = 0;
  // Reference-free quality of `candidate` as a translation of `source`.
  virtual double score(const std::string& source, const std::string& candidate) const = 0;
};

class EmbeddingClient {
 public:
  virtual ~EmbeddingClient() = default;
  // One vector per token of `text`.
  virtual EmbeddingSet embed(const std::string& text) const = 0;
};

// ---------------------------------------------------------------------------
// HTTP adapters

// POST {base}/translate {text, source_lang, target_lang, n} -> {candidates}
class HttpMtClient final : public MtClient {
 public:
  HttpMtClient(std::string name, HttpEndpoint endpoint, std::set<Language> supported = {})
      : name_(std::move(name)), endpoint_(std::move(endpoint)), supported_(std::move(supported)) {}

  std::string name() const override { return name_; }
  bool supports(Language target) const override { return supported_.empty() || supported_.count(target) > 0; }

  std::vector<std::string> translate(const std::string& text, Language source, Language target,
                                     int n) const override {
    auto res = endpoint_.post("/translate", {{"text", text},
                                             {"source_lang", to_string(source)},
                                             {"target_lang", to_string(target)},
                                             {"n", n}});
    if (!res.contains("candidates") || !res["candidates"].is_array())
      throw ClientError(name_ + ": translate response lacks a candidates array");
    return res["candidates"].get<std::vector<std::string>>();
  }

 private:
  std::string name_;
  HttpEndpoint endpoint_;
  std::set<Language> supported_;
};

// POST {base}/score {source, candidate} -> {score}
class HttpQeClient final : public QeClient {
 public:
  HttpQeClient(HttpEndpoint endpoint, std::set<Language> supported)
      : endpoint_(std::move(endpoint)), supported_(std::move(supported)) {}

  bool supports(Language target) const override { return supported_.count(target) > 0; }

  double score(const std::string& source, const std::string& candidate) const override {
    auto res = endpoint_.post("/score", {{"source", source}, {"candidate", candidate}});
    if (!res.contains("score") || !res["score"].is_number()) throw ClientError("QE response lacks a numeric score");
    return res["score"].get<double>();
  }

 private:
  HttpEndpoint endpoint_;
  std::set<Language> supported_;
};

// POST {base}/embed {text} -> {vectors: [[...], ...]}
class HttpEmbeddingClient final : public EmbeddingClient {
 public:
  explicit HttpEmbeddingClient(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  EmbeddingSet embed(const std::string& text) const override {
    auto res = endpoint_.post("/embed", {{"text", text}});
    if (!res.contains("vectors") || !res["vectors"].is_array())
      throw ClientError("embedding response lacks a vectors array");
    return res["vectors"].get<EmbeddingSet>();
  }

 private:
  HttpEndpoint endpoint_;
};

// ---------------------------------------------------------------------------
// Deterministic stubs

// Forward translation tags the text with "<lang>:" and drops a few words
// chosen by hashing (system, candidate index, word position); translating
// back to English strips the tag. Round trips therefore lose words in a
// reproducible, candidate-specific way.
class StubMtClient final : public MtClient {
 public:
  explicit StubMtClient(std::string name, std::set<Language> supported = {Language::es, Language::de, Language::fr,
                                                                          Language::bn})
      : name_(std::move(name)), supported_(std::move(supported)) {}

  std::string name() const override { return name_; }
  bool supports(Language target) const override { return target == Language::en || supported_.count(target) > 0; }

  std::vector<std::string> translate(const std::string& text, Language source, Language target,
                                     int n) const override {
    std::vector<std::string> out;
    if (target == Language::en) {
      auto body = strip_tag(text);
      for (int i = 0; i < n; ++i) out.push_back(body);
      return out;
    }
    if (source == target) {
      for (int i = 0; i < n; ++i) out.push_back(text);
      return out;
    }
    auto words = split(collapse_whitespace(text), ' ');
    for (int i = 0; i < n; ++i) {
      std::vector<std::string> kept;
      for (std::size_t w = 0; w < words.size(); ++w) {
        auto h = fnv1a(name_ + "/" + std::to_string(i) + "/" + std::to_string(w));
        if (words.size() > 1 && h % 4 == 0) continue;
        kept.push_back(words[w]);
      }
      out.push_back(std::string(to_string(target)) + ": " + join(kept, " "));
    }
    return out;
  }

  static std::string strip_tag(const std::string& text) {
    if (text.size() > 4 && text[2] == ':' && text[3] == ' ') return text.substr(4);
    return text;
  }

 private:
  std::string name_;
  std::set<Language> supported_;
};

// Scores by hashing the pair into [0, 1). Bangla is unsupported by default.
class StubQeClient final : public QeClient {
 public:
  explicit StubQeClient(std::set<Language> supported = {Language::es, Language::de, Language::fr})
      : supported_(std::move(supported)) {}

  bool supports(Language target) const override { return supported_.count(target) > 0; }

  double score(const std::string& source, const std::string& candidate) const override {
    auto h = fnv1a(candidate, fnv1a(source));
    return static_cast<double>(h % 1000) / 1000.0;
  }

 private:
  std::set<Language> supported_;
};

// Lower-cased whitespace tokens, each mapped to a fixed pseudo-random vector
// with components in [-1, 1]. Equal tokens always embed identically.
class HashEmbeddingClient final : public EmbeddingClient {
 public:
  explicit HashEmbeddingClient(std::size_t dim = 16) : dim_(dim) {
    if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
  }

  EmbeddingSet embed(const std::string& text) const override {
    EmbeddingSet out;
    for (const auto& tok : split(collapse_whitespace(to_lower(text)), ' ')) {
      if (tok.empty()) continue;
      out.push_back(token_vector(tok));
    }
    return out;
  }

  Vector token_vector(std::string_view token) const {
    std::uint64_t state = fnv1a(token);
    Vector v(dim_);
    bool nonzero = false;
    for (auto& x : v) {
      x = static_cast<double>(splitmix64(state) >> 11) / 9007199254740992.0 * 2.0 - 1.0;
      nonzero = nonzero || x != 0.0;
    }
    if (!nonzero) v[0] = 1.0;
    return v;
  }

 private:
  std::size_t dim_;
};

}  // namespace plforge::translate
