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

// Greedy-matching BERTScore over caller-supplied token embeddings. No idf
// weighting and no baseline rescaling.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "plforge/translate/clients.hpp"

namespace plforge::translate {

class ScoreError : public Error {
 public:
  using Error::Error;
};

struct BertScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

namespace detail {

inline EmbeddingSet normalized(const EmbeddingSet& set, std::string_view which, std::size_t dim) {
  EmbeddingSet out;
  out.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& v = set[i];
    if (v.size() != dim)
      throw ScoreError(std::string(which) + " vector " + std::to_string(i) + " has dimension " +
                       std::to_string(v.size()) + ", expected " + std::to_string(dim));
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0) || !std::isfinite(norm))
      throw ScoreError("cannot normalize " + std::string(which) + " vector " + std::to_string(i));
    Vector u(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) u[k] = v[k] / norm;
    out.push_back(std::move(u));
  }
  return out;
}

inline double dot(const Vector& a, const Vector& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace detail

// P = mean_i max_j cos(c_i, r_j); R = mean_j max_i cos(c_i, r_j);
// F1 = 2PR / (P + R), taken as 0 when P + R = 0.
inline BertScore bert_score(const EmbeddingSet& candidate, const EmbeddingSet& reference) {
  if (candidate.empty() || reference.empty()) throw ScoreError("undefined score: empty embedding set");
  const std::size_t dim = candidate.front().size();
  if (dim == 0) throw ScoreError("embedding vectors have dimension 0");
  auto c = detail::normalized(candidate, "candidate", dim);
  auto r = detail::normalized(reference, "reference", dim);

  std::vector<double> best_c(c.size(), -std::numeric_limits<double>::infinity());
  std::vector<double> best_r(r.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      double s = detail::dot(c[i], r[j]);
      best_c[i] = std::max(best_c[i], s);
      best_r[j] = std::max(best_r[j], s);
    }
  }
  BertScore out;
  for (double s : best_c) out.precision += s;
  for (double s : best_r) out.recall += s;
  out.precision /= static_cast<double>(c.size());
  out.recall /= static_cast<double>(r.size());
  double denom = out.precision + out.recall;
  out.f1 = denom == 0 ? 0.0 : 2 * out.precision * out.recall / denom;
  return out;
}

}  // namespace plforge::translate
