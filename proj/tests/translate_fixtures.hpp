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

// Test doubles and an independent BERTScore oracle for the translation
// suites.

#pragma once

#include <atomic>
#include <cmath>
#include <random>

#include "plforge/translate/selector.hpp"

namespace plforge::translate::testing {

// Computed outside the library with a separate FNV-1a implementation.
inline constexpr const char* kSpanishCandidate0 = "es: Write a that adds two";

// Cosines computed directly as a.b / (|a||b|), no pre-normalization.
inline BertScore naive_bert(const EmbeddingSet& c, const EmbeddingSet& r) {
  auto cosine = [](const Vector& a, const Vector& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      ab += a[k] * b[k];
      aa += a[k] * a[k];
      bb += b[k] * b[k];
    }
    return ab / std::sqrt(aa * bb);
  };
  BertScore s;
  for (const auto& ci : c) {
    double m = -2;
    for (const auto& rj : r) m = std::max(m, cosine(ci, rj));
    s.precision += m / static_cast<double>(c.size());
  }
  for (const auto& rj : r) {
    double m = -2;
    for (const auto& ci : c) m = std::max(m, cosine(ci, rj));
    s.recall += m / static_cast<double>(r.size());
  }
  s.f1 = s.precision + s.recall == 0 ? 0 : 2 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

inline EmbeddingSet random_set(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> g(0, 1);
  EmbeddingSet s(n, Vector(dim));
  for (auto& v : s) {
    do {
      for (auto& x : v) x = g(rng);
    } while (std::all_of(v.begin(), v.end(), [](double x) { return x == 0; }));
  }
  return s;
}

// Returns `succeed` single candidates, then throws forever.
class FlakyMtClient final : public MtClient {
 public:
  FlakyMtClient(std::string name, int succeed) : name_(std::move(name)), succeed_(succeed) {}
  std::string name() const override { return name_; }
  bool supports(Language) const override { return true; }
  std::vector<std::string> translate(const std::string& text, Language, Language, int) const override {
    int n = calls++;
    if (n >= succeed_) throw ClientError("service unavailable");
    return {text + " #" + std::to_string(n)};
  }
  mutable std::atomic<int> calls{0};

 private:
  std::string name_;
  int succeed_;
};

class EmptyMtClient final : public MtClient {
 public:
  std::string name() const override { return "empty"; }
  bool supports(Language) const override { return true; }
  std::vector<std::string> translate(const std::string&, Language, Language, int) const override { return {""}; }
};

// Delegates, except that forward translation into Spanish of any text
// containing `marker` returns nothing.
class PoisonMtClient final : public MtClient {
 public:
  PoisonMtClient(std::shared_ptr<const MtClient> inner, std::string marker)
      : inner_(std::move(inner)), marker_(std::move(marker)) {}
  std::string name() const override { return inner_->name(); }
  bool supports(Language l) const override { return inner_->supports(l); }
  std::vector<std::string> translate(const std::string& text, Language s, Language t, int n) const override {
    if (t == Language::es && text.find(marker_) != std::string::npos) return {};
    return inner_->translate(text, s, t, n);
  }

 private:
  std::shared_ptr<const MtClient> inner_;
  std::string marker_;
};

class ConstQeClient final : public QeClient {
 public:
  explicit ConstQeClient(double v) : v_(v) {}
  bool supports(Language) const override { return true; }
  double score(const std::string&, const std::string&) const override { return v_; }

 private:
  double v_;
};

inline Clients stub_clients() {
  Clients c;
  for (const char* name : {"a", "b", "c"}) c.systems.push_back(std::make_shared<StubMtClient>(name));
  c.qe = std::make_shared<StubQeClient>();
  c.embedder = std::make_shared<HashEmbeddingClient>();
  return c;
}

inline SelectorConfig fast_config() {
  SelectorConfig cfg;
  cfg.retry.initial_backoff = std::chrono::milliseconds(0);
  return cfg;
}

}  // namespace plforge::translate::testing
