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

// Candidate generation, round-trip scoring and best-candidate selection for
// translating instruction prompts.

#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "plforge/sft/builder.hpp"
#include "plforge/translate/bertscore.hpp"

namespace plforge::translate {

struct Candidate {
  std::string prompt_id;
  std::string system;
  Language language = Language::es;
  int index = 0;  // position within the system's batch
  std::string text;
  std::optional<std::string> back_translation;
  std::optional<BertScore> bert;
  std::optional<double> qe;
  std::optional<double> combined;
  std::string excluded;             // non-empty when not eligible for selection
  std::vector<std::string> notes;   // audit flags that do not exclude

  bool eligible() const { return excluded.empty() && combined.has_value(); }

  json to_json() const {
    json j = json::object();
    j["system"] = system;
    j["index"] = index;
    j["text"] = text;
    j["back_translation"] = back_translation ? json(*back_translation) : json(nullptr);
    if (bert) {
      j["bert_p"] = bert->precision;
      j["bert_r"] = bert->recall;
      j["bert_f1"] = bert->f1;
    } else {
      j["bert_p"] = j["bert_r"] = j["bert_f1"] = nullptr;
    }
    j["qe_score"] = qe ? json(*qe) : json(nullptr);
    j["combined"] = combined ? json(*combined) : json(nullptr);
    j["excluded"] = excluded.empty() ? json(nullptr) : json(excluded);
    j["notes"] = notes;
    return j;
  }
};

struct CandidateBatch {
  std::vector<Candidate> candidates;
  bool exhausted = false;  // fewer than k returned
  bool parked = false;     // nothing returned at all
  std::string error;
};

struct TranslateRetry {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
};

// Asks `client` for k candidates, topping up after short answers. An empty
// answer ends the loop. Errors are retried with doubling backoff, up to
// max_attempts failures in total.
inline CandidateBatch generate_candidates(const std::string& prompt_id, const std::string& prompt,
                                          const MtClient& client, Language language, int k = 5,
                                          const TranslateRetry& retry = {}) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  CandidateBatch batch;
  auto backoff = retry.initial_backoff;
  int failures = 0;
  while (failures < retry.max_attempts && static_cast<int>(batch.candidates.size()) < k) {
    try {
      int want = k - static_cast<int>(batch.candidates.size());
      auto texts = client.translate(prompt, Language::en, language, want);
      if (texts.empty()) break;
      for (auto& t : texts) {
        if (static_cast<int>(batch.candidates.size()) == k) break;
        Candidate c;
        c.prompt_id = prompt_id;
        c.system = client.name();
        c.language = language;
        c.index = static_cast<int>(batch.candidates.size());
        c.text = std::move(t);
        batch.candidates.push_back(std::move(c));
      }
      continue;
    } catch (const std::exception& e) {
      batch.error = e.what();
    }
    if (++failures < retry.max_attempts && backoff.count() > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  batch.parked = batch.candidates.empty();
  batch.exhausted = static_cast<int>(batch.candidates.size()) < k;
  return batch;
}

// Fills candidate.back_translation, or marks the candidate excluded.
inline void back_translate(Candidate& candidate, const MtClient& client) {
  if (candidate.text.empty()) {
    candidate.excluded = "empty candidate";
    return;
  }
  try {
    auto back = client.translate(candidate.text, candidate.language, Language::en, 1);
    if (back.empty() || is_blank(back.front())) {
      candidate.excluded = "empty back-translation";
      return;
    }
    candidate.back_translation = back.front();
  } catch (const std::exception& e) {
    candidate.excluded = std::string("back-translation failed: ") + e.what();
  }
}

// Clamped QE score; nullopt without a client or when the client does not
// cover the language. Failures are noted and yield nullopt.
inline std::optional<double> qe_score(const std::string& source, Candidate& candidate, const QeClient* client) {
  if (!client || !client->supports(candidate.language)) return std::nullopt;
  try {
    double s = client->score(source, candidate.text);
    if (!std::isfinite(s)) {
      candidate.notes.push_back("qe score not finite; ignored");
      return std::nullopt;
    }
    if (s < 0.0 || s > 1.0) {
      candidate.notes.push_back("qe score " + json(s).dump() + " clamped to [0,1]");
      s = std::clamp(s, 0.0, 1.0);
    }
    return s;
  } catch (const std::exception& e) {
    candidate.notes.push_back(std::string("qe failed: ") + e.what());
    return std::nullopt;
  }
}

struct ScoreWeights {
  double bert = 0.5;
  double qe = 0.5;
};

// BERTScore between the English prompt and the round trip, then QE, then the
// combined score.
inline void score_candidate(Candidate& c, const std::string& english_prompt, const EmbeddingSet& reference,
                            const EmbeddingClient& embedder, const QeClient* qe, const ScoreWeights& w = {}) {
  if (!c.excluded.empty()) return;
  if (!c.back_translation) throw ScoreError("candidate scored before back-translation");
  try {
    c.bert = bert_score(embedder.embed(*c.back_translation), reference);
  } catch (const std::exception& e) {
    c.excluded = std::string("bertscore failed: ") + e.what();
    return;
  }
  c.qe = qe_score(english_prompt, c, qe);
  c.combined = c.qe ? (w.bert * c.bert->f1 + w.qe * *c.qe) / (w.bert + w.qe) : c.bert->f1;
}

struct SelectionResult {
  std::string prompt_id;
  Language language = Language::es;
  std::vector<Candidate> pool;  // system order, then candidate index
  std::optional<std::size_t> winner;
  std::vector<std::string> notes;

  bool escalated() const { return !winner.has_value(); }
  const Candidate& winning() const { return pool.at(*winner); }

  json to_json() const {
    json j = json::object();
    j["prompt_id"] = prompt_id;
    j["language"] = to_string(language);
    j["winner"] = winner ? json(*winner) : json(nullptr);
    j["escalated"] = escalated();
    j["notes"] = notes;
    j["candidates"] = json::array();
    for (const auto& c : pool) j["candidates"].push_back(c.to_json());
    return j;
  }
};

// Highest combined score; the earliest candidate wins ties.
inline std::optional<std::size_t> select_best(const std::vector<Candidate>& pool) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!pool[i].eligible()) continue;
    if (!best || *pool[i].combined > *pool[*best].combined) best = i;
  }
  return best;
}

struct SelectorConfig {
  int candidates_per_system = 5;
  TranslateRetry retry;
  ScoreWeights weights;
};

struct Clients {
  std::vector<std::shared_ptr<const MtClient>> systems;
  std::shared_ptr<const QeClient> qe;  // may be null
  std::shared_ptr<const EmbeddingClient> embedder;

  void validate() const {
    if (systems.empty()) throw ConfigError("at least one MT system is required");
    if (!embedder) throw ConfigError("an embedding client is required");
    std::set<std::string> names;
    for (const auto& s : systems) {
      if (!s) throw ConfigError("null MT client");
      if (!names.insert(s->name()).second) throw ConfigError("MT system listed twice: " + s->name());
    }
  }
};

// The full selection for one English prompt and one target language.
inline SelectionResult translate_prompt(const std::string& prompt_id, const std::string& english_prompt,
                                        Language language, const Clients& clients,
                                        const SelectorConfig& config = {}) {
  SelectionResult result;
  result.prompt_id = prompt_id;
  result.language = language;
  EmbeddingSet reference;
  try {
    reference = clients.embedder->embed(english_prompt);
  } catch (const std::exception& e) {
    result.notes.push_back(std::string("reference embedding failed: ") + e.what());
  }
  for (const auto& system : clients.systems) {
    if (!system->supports(language)) result.notes.push_back(system->name() + ": language not supported");
    auto batch = generate_candidates(prompt_id, english_prompt, *system, language, config.candidates_per_system,
                                     config.retry);
    if (batch.parked)
      result.notes.push_back(system->name() + ": no candidates" + (batch.error.empty() ? "" : " (" + batch.error + ")"));
    else if (batch.exhausted)
      result.notes.push_back(system->name() + ": only " + std::to_string(batch.candidates.size()) + " candidates");
    for (auto& c : batch.candidates) {
      back_translate(c, *system);
      if (reference.empty() && c.excluded.empty()) c.excluded = "no reference embedding";
      score_candidate(c, english_prompt, reference, *clients.embedder, clients.qe.get(), config.weights);
      result.pool.push_back(std::move(c));
    }
  }
  result.winner = select_best(result.pool);
  if (!result.winner) result.notes.push_back("all candidates excluded; escalated for review");
  return result;
}

struct Gap {
  std::string prompt_id;
  Language language;
  std::string reason;
};

struct MsftOutput {
  std::vector<sft::InstructionPair> records;  // pair order, then language order
  std::vector<SelectionResult> audit;
  std::vector<Gap> gaps;

  std::string audit_jsonl() const {
    std::string out;
    for (const auto& a : audit) out += a.to_json().dump() + "\n";
    return out;
  }

  json gap_manifest() const {
    json j = json::array();
    for (const auto& g : gaps)
      j.push_back({{"prompt_id", g.prompt_id}, {"language", to_string(g.language)}, {"reason", g.reason}});
    return j;
  }
};

inline std::string prompt_id_of(const sft::InstructionPair& p) {
  return p.snippet_id + "#" + std::to_string(p.variant_index);
}

// Translates every English prompt into each non-English language. Code is
// copied verbatim. Unresolved (prompt, language) pairs go to the gap list.
inline MsftOutput build_msft(const std::vector<sft::InstructionPair>& pairs, const std::vector<Language>& languages,
                             const Clients& clients, const SelectorConfig& config = {}, std::size_t workers = 1) {
  clients.validate();
  std::vector<Language> targets;
  for (auto l : languages)
    if (l != Language::en) targets.push_back(l);
  std::vector<const sft::InstructionPair*> sources;
  for (const auto& p : pairs)
    if (p.language == "en") sources.push_back(&p);

  const std::size_t jobs = sources.size() * targets.size();
  std::vector<SelectionResult> results(jobs);
  parallel_for(jobs, workers, [&](std::size_t j) {
    const auto& p = *sources[j / targets.size()];
    results[j] = translate_prompt(prompt_id_of(p), p.prompt, targets[j % targets.size()], clients, config);
  });

  MsftOutput out;
  for (std::size_t j = 0; j < jobs; ++j) {
    const auto& p = *sources[j / targets.size()];
    auto& r = results[j];
    if (r.escalated()) {
      out.gaps.push_back({r.prompt_id, r.language, r.notes.empty() ? "unresolved" : r.notes.back()});
    } else {
      auto rec = p;
      rec.language = std::string(to_string(r.language));
      rec.prompt = r.winning().text;
      out.records.push_back(std::move(rec));
    }
    out.audit.push_back(std::move(r));
  }
  return out;
}

}  // namespace plforge::translate
