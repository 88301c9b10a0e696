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

#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "plforge/corpus/filters.hpp"

namespace plforge::corpus {

struct PipelineConfig {
  std::shared_ptr<const Tokenizer> tokenizer = std::make_shared<WhitespaceTokenizer>();
  PythonPatternSet patterns = PythonPatternSet::defaults();
  std::shared_ptr<const LanguageScorer> scorer = std::make_shared<HeuristicEnglishScorer>();
  LicensePolicy license;
  RepetitionPolicy repetition;
  NearDupConfig near_dup;
  double english_threshold = kEnglishConfidence;
  std::size_t workers = 1;

  void validate() const {
    if (!tokenizer) throw ConfigError("pipeline needs a tokenizer");
    if (!scorer) throw ConfigError("pipeline needs a language scorer");
    if (repetition.max_duplicate_paragraphs.den == 0 || repetition.max_duplicate_chars.den == 0)
      throw ConfigError("repetition thresholds need a non-zero denominator");
  }
};

struct StageRow {
  std::string label;  // "None" for the input row
  std::string description;
  std::uint64_t tokens = 0;
  std::size_t samples = 0;
};

struct DroppedDocument {
  std::string id;
  FilterOutcome outcome;
};

struct FlaggedDocument {
  std::string id;
  Stage stage;
  std::string note;
};

struct PipelineReport {
  std::string tokenizer;
  std::vector<StageRow> rows;  // input row first, then F1..F6
  std::vector<DroppedDocument> dropped;
  std::vector<FlaggedDocument> flagged;

  const StageRow& input() const { return rows.front(); }

  json to_json() const {
    json j;
    j["tokenizer"] = tokenizer;
    j["f4_formulas"] = {RepetitionPolicy::paragraph_formula, RepetitionPolicy::char_formula};
    j["input"] = {{"tokens", rows.front().tokens}, {"samples", rows.front().samples}};
    j["stages"] = json::array();
    for (std::size_t i = 1; i < rows.size(); ++i)
      j["stages"].push_back({{"stage", rows[i].label},
                             {"description", rows[i].description},
                             {"tokens", rows[i].tokens},
                             {"samples", rows[i].samples}});
    j["dropped"] = json::array();
    for (const auto& d : dropped)
      j["dropped"].push_back({{"id", d.id}, {"stage", to_string(d.outcome.stage)}, {"reason", d.outcome.reason}});
    j["flagged"] = json::array();
    for (const auto& f : flagged)
      j["flagged"].push_back({{"id", f.id}, {"stage", to_string(f.stage)}, {"note", f.note}});
    return j;
  }

  // Filter | Description | # Tokens | # Samples
  std::string render_table() const {
    std::size_t w_desc = std::string_view("Description").size();
    std::size_t w_tok = std::string_view("# Tokens").size();
    for (const auto& r : rows) {
      w_desc = std::max(w_desc, r.description.size());
      w_tok = std::max(w_tok, with_thousands(r.tokens).size());
    }
    std::ostringstream out;
    auto line = [&](std::string_view a, std::string_view b, std::string_view c, std::string_view d) {
      out << std::left << std::setw(6) << a << " | " << std::setw(static_cast<int>(w_desc)) << b << " | "
          << std::right << std::setw(static_cast<int>(w_tok)) << c << " | " << d << "\n";
    };
    line("Filter", "Description", "# Tokens", "# Samples");
    out << std::string(6, '-') << "-+-" << std::string(w_desc, '-') << "-+-" << std::string(w_tok, '-')
        << "-+-" << std::string(9, '-') << "\n";
    for (const auto& r : rows)
      line(r.label, r.description, with_thousands(r.tokens), std::to_string(r.samples));
    return out.str();
  }
};

struct PipelineResult {
  std::vector<RawDocument> refined;
  PipelineReport report;
};

namespace detail {

inline StageRow tally(std::string label, std::string description, const std::vector<RawDocument>& docs) {
  StageRow row{std::move(label), std::move(description), 0, docs.size()};
  for (const auto& d : docs) row.tokens += d.token_count;
  return row;
}

}  // namespace detail

// Applies one per-document stage, in parallel, keeping input order.
template <typename Predicate>
std::vector<RawDocument> apply_stage(const std::vector<RawDocument>& docs, Predicate&& predicate,
                                     std::size_t workers, PipelineReport& report) {
  std::vector<FilterOutcome> outcomes(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t i) { outcomes[i] = predicate(docs[i]); });
  std::vector<RawDocument> kept;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (outcomes[i].kept) {
      if (!outcomes[i].note.empty())
        report.flagged.push_back({docs[i].id, outcomes[i].stage, outcomes[i].note});
      kept.push_back(docs[i]);
    } else {
      report.dropped.push_back({docs[i].id, outcomes[i]});
    }
  }
  return kept;
}

// F1 through F6 in order. Token counts are recomputed with the configured
// tokenizer so every report row sums the surviving documents exactly.
inline PipelineResult run_pipeline(std::vector<RawDocument> corpus, const PipelineConfig& config) {
  config.validate();
  PipelineResult result;
  auto& report = result.report;
  report.tokenizer = config.tokenizer->name();

  parallel_for(corpus.size(), config.workers, [&](std::size_t i) { corpus[i].recount(*config.tokenizer); });
  report.rows.push_back(detail::tally("None", "All collected content", corpus));

  auto row = [&](Stage s, const std::vector<RawDocument>& docs) {
    report.rows.push_back(detail::tally(std::string(to_string(s)), std::string(describe(s)), docs));
  };

  auto docs = apply_stage(corpus, [&](const RawDocument& d) { return f1_license(d, config.license); },
                          config.workers, report);
  row(Stage::F1, docs);
  docs = apply_stage(docs, [&](const RawDocument& d) { return f2_python_exclusion(d, config.patterns); },
                     config.workers, report);
  row(Stage::F2, docs);
  docs = apply_stage(docs, [](const RawDocument& d) { return f3_structure(d); }, config.workers, report);
  row(Stage::F3, docs);
  docs = apply_stage(docs, [&](const RawDocument& d) { return f4_repetition(d, config.repetition); },
                     config.workers, report);
  row(Stage::F4, docs);

  auto dedup = f5_dedup(docs, config.near_dup);
  for (auto& id : dedup.dropped_ids)
    report.dropped.push_back({id, FilterOutcome::drop(Stage::F5, "duplicate of an earlier sample")});
  docs = std::move(dedup.kept);
  row(Stage::F5, docs);

  docs = apply_stage(
      docs, [&](const RawDocument& d) { return f6_language(d, *config.scorer, config.english_threshold); },
      config.workers, report);
  row(Stage::F6, docs);

  result.refined = std::move(docs);
  return result;
}

}  // namespace plforge::corpus
