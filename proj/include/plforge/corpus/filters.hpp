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

// The six corpus cleaning stages. F1-F4 and F6 are pure per-document
// predicates; F5 works on the whole corpus.

#pragma once

#include <array>
#include <memory>
#include <regex>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "plforge/corpus/document.hpp"

namespace plforge::corpus {

enum class Stage { F1, F2, F3, F4, F5, F6 };

inline constexpr std::array<Stage, 6> kStages = {Stage::F1, Stage::F2, Stage::F3,
                                                  Stage::F4, Stage::F5, Stage::F6};

inline std::string_view to_string(Stage s) {
  static constexpr std::array<std::string_view, 6> names = {"F1", "F2", "F3", "F4", "F5", "F6"};
  return names[static_cast<std::size_t>(s)];
}

inline std::string_view describe(Stage s) {
  switch (s) {
    case Stage::F1: return "License gate: keep Apache-2.0 content";
    case Stage::F2: return "Drop Python snippets";
    case Stage::F3: return "Need >= 3 blocks of >= 3 characters";
    case Stage::F4: return "Drop internally repetitive samples";
    case Stage::F5: return "Drop cross-sample duplicates";
    case Stage::F6: return "Keep English text (confidence >= 0.4)";
  }
  return "";
}

struct FilterOutcome {
  Stage stage = Stage::F1;
  bool kept = true;
  std::string reason;  // empty iff kept
  std::string note;    // set when kept but worth flagging

  static FilterOutcome keep(Stage s, std::string note = {}) { return {s, true, {}, std::move(note)}; }
  static FilterOutcome drop(Stage s, std::string reason) { return {s, false, std::move(reason), {}}; }
};

// ---------------------------------------------------------------------------
// F1

struct LicensePolicy {
  bool require_license_for_web = false;
};

inline FilterOutcome f1_license(const RawDocument& doc, const LicensePolicy& policy = {}) {
  if (!doc.license_tag || trim_view(*doc.license_tag).empty()) {
    if (doc.origin_kind != OriginKind::repository && !policy.require_license_for_web)
      return FilterOutcome::keep(Stage::F1);
    return FilterOutcome::drop(Stage::F1, "missing license");
  }
  if (is_apache2(doc.license_tag)) return FilterOutcome::keep(Stage::F1);
  return FilterOutcome::drop(Stage::F1, "non-Apache-2.0");
}

// ---------------------------------------------------------------------------
// F2

struct PythonPattern {
  std::string name;
  std::string source;
  std::regex regex;
  bool outside_mojo_only = false;
};

// Line patterns that mark Python content. Compiled once at construction;
// a bad user pattern is a ConfigError before any document is touched.
class PythonPatternSet {
 public:
  static PythonPatternSet defaults(bool include_bare_def = false) {
    PythonPatternSet set;
    set.add("python-fence", R"(^\s*(```|~~~)\s*(python3?|py)\b)");
    set.add("python-shebang", R"(^#!.*\bpython)");
    set.add("python-import", R"(^import\s+[A-Za-z_][\w.]*(\s*,\s*[\w.]+)*(\s+as\s+\w+)?\s*(#.*)?$)", true);
    if (include_bare_def) set.add("bare-def", R"(^\s*def\s+\w+\s*\()", true);
    return set;
  }

  void add(std::string name, std::string source, bool outside_mojo_only = false) {
    try {
      patterns_.push_back({std::move(name), source, std::regex(source), outside_mojo_only});
    } catch (const std::regex_error& e) {
      throw ConfigError("invalid F2 pattern '" + source + "': " + e.what());
    }
  }

  const std::vector<PythonPattern>& patterns() const { return patterns_; }

  // Name of the first pattern matching any line, or "" when none does.
  // A document without fences from a repository is a Mojo source file and is
  // Mojo context throughout; elsewhere only ```mojo fences are.
  std::string first_match(const RawDocument& doc) const {
    auto lines = split_lines(doc.body);
    bool any_fence = false;
    for (const auto& l : lines) any_fence = any_fence || is_fence_line(l);
    const bool source_file = !any_fence && doc.origin_kind == OriginKind::repository;

    bool in_fence = false;
    bool mojo_fence = false;
    for (const auto& line : lines) {
      const bool fence = is_fence_line(line);
      const bool mojo_context = source_file || (in_fence && mojo_fence);
      for (const auto& p : patterns_) {
        if (p.outside_mojo_only && mojo_context) continue;
        if (std::regex_search(line, p.regex)) return p.name;
      }
      if (fence) {
        if (in_fence) {
          in_fence = false;
        } else {
          in_fence = true;
          mojo_fence = is_mojo_fence_language(fence_language(line));
        }
      }
    }
    return {};
  }

 private:
  std::vector<PythonPattern> patterns_;
};

inline FilterOutcome f2_python_exclusion(const RawDocument& doc, const PythonPatternSet& patterns) {
  auto hit = patterns.first_match(doc);
  if (hit.empty()) return FilterOutcome::keep(Stage::F2);
  return FilterOutcome::drop(Stage::F2, "python pattern: " + hit);
}

// ---------------------------------------------------------------------------
// F3

inline constexpr std::size_t kMinBlocks = 3;
inline constexpr std::size_t kMinBlockChars = 3;

inline FilterOutcome f3_structure(const RawDocument& doc) {
  std::size_t qualifying = 0;
  for (const auto& b : segment_blocks(doc.body))
    if (b.meaningful_chars() >= kMinBlockChars) ++qualifying;
  if (qualifying >= kMinBlocks) return FilterOutcome::keep(Stage::F3);
  return FilterOutcome::drop(Stage::F3, "only " + std::to_string(qualifying) +
                                            " blocks with >= 3 characters");
}

// ---------------------------------------------------------------------------
// F4

struct RepetitionStats {
  std::size_t paragraphs = 0;
  std::size_t distinct = 0;
  std::uint64_t total_chars = 0;      // code points over all paragraphs
  std::uint64_t duplicate_chars = 0;  // code points in repeat occurrences

  double paragraph_fraction() const {
    return paragraphs ? 1.0 - static_cast<double>(distinct) / paragraphs : 0.0;
  }
  double char_fraction() const {
    return total_chars ? static_cast<double>(duplicate_chars) / total_chars : 0.0;
  }
};

inline RepetitionStats repetition_stats(std::string_view body) {
  RepetitionStats st;
  std::unordered_set<std::string> seen;
  for (auto& p : split_paragraphs(body)) {
    const auto len = utf8_length(p);
    ++st.paragraphs;
    st.total_chars += len;
    if (!seen.insert(std::move(p)).second) st.duplicate_chars += len;
  }
  st.distinct = seen.size();
  return st;
}

struct RepetitionPolicy {
  Fraction max_duplicate_paragraphs{30, 100};
  Fraction max_duplicate_chars{20, 100};

  static constexpr std::string_view paragraph_formula =
      "dup_paragraph_fraction = 1 - distinct_paragraphs / total_paragraphs";
  static constexpr std::string_view char_formula =
      "dup_char_fraction = chars_in_repeat_occurrences / chars_in_all_paragraphs";
};

// Drops on strictly greater than either threshold.
inline FilterOutcome f4_repetition(const RawDocument& doc, const RepetitionPolicy& policy = {}) {
  auto st = repetition_stats(doc.body);
  if (st.paragraphs == 0) return FilterOutcome::keep(Stage::F4, "no paragraphs");
  if (policy.max_duplicate_paragraphs.exceeded_by(st.paragraphs - st.distinct, st.paragraphs))
    return FilterOutcome::drop(Stage::F4, "duplicate paragraphs " +
                                              std::to_string(st.paragraphs - st.distinct) + "/" +
                                              std::to_string(st.paragraphs));
  if (policy.max_duplicate_chars.exceeded_by(st.duplicate_chars, st.total_chars))
    return FilterOutcome::drop(Stage::F4, "duplicate characters " +
                                              std::to_string(st.duplicate_chars) + "/" +
                                              std::to_string(st.total_chars));
  return FilterOutcome::keep(Stage::F4);
}

// ---------------------------------------------------------------------------
// F5

inline std::string dedup_key(std::string_view body) { return collapse_whitespace(body); }

struct NearDupConfig {
  bool enabled = false;
  std::size_t shingle_words = 5;
  double jaccard_threshold = 0.8;
  std::size_t bands = 32;
  std::size_t rows = 4;
};

namespace detail {

inline std::vector<std::uint64_t> shingles(std::string_view body, std::size_t width) {
  auto words = split(collapse_whitespace(body), ' ');
  std::set<std::uint64_t> out;
  if (words.size() < width) {
    out.insert(fnv1a(join(words, " ")));
  } else {
    for (std::size_t i = 0; i + width <= words.size(); ++i) {
      std::vector<std::string> w(words.begin() + static_cast<long>(i),
                                 words.begin() + static_cast<long>(i + width));
      out.insert(fnv1a(join(w, " ")));
    }
  }
  return {out.begin(), out.end()};
}

inline double jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter, ++i, ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  std::size_t uni = a.size() + b.size() - inter;
  return uni ? static_cast<double>(inter) / uni : 1.0;
}

inline std::vector<std::uint64_t> minhash(const std::vector<std::uint64_t>& shingle_set,
                                          std::size_t perms) {
  std::vector<std::uint64_t> sig(perms, ~0ULL);
  for (std::uint64_t s : shingle_set) {
    std::uint64_t state = s;
    for (std::size_t p = 0; p < perms; ++p) sig[p] = std::min(sig[p], splitmix64(state));
  }
  return sig;
}

}  // namespace detail

struct DedupResult {
  std::vector<RawDocument> kept;
  std::vector<std::string> dropped_ids;
};

// Exact duplicates after whitespace normalization go first; the first
// occurrence in input order survives. With near-dup enabled, MinHash/LSH
// candidates are confirmed by exact shingle Jaccard against earlier keepers.
inline DedupResult f5_dedup(const std::vector<RawDocument>& corpus, const NearDupConfig& near = {}) {
  DedupResult result;
  std::unordered_set<std::string> seen;
  std::vector<std::vector<std::uint64_t>> kept_shingles;
  std::unordered_map<std::string, std::vector<std::size_t>> buckets;

  for (const auto& doc : corpus) {
    if (!seen.insert(dedup_key(doc.body)).second) {
      result.dropped_ids.push_back(doc.id);
      continue;
    }
    if (near.enabled) {
      auto sh = detail::shingles(doc.body, near.shingle_words);
      auto sig = detail::minhash(sh, near.bands * near.rows);
      std::vector<std::string> keys;
      std::set<std::size_t> candidates;
      for (std::size_t b = 0; b < near.bands; ++b) {
        std::string key = std::to_string(b) + ":";
        for (std::size_t r = 0; r < near.rows; ++r) key += std::to_string(sig[b * near.rows + r]) + ",";
        if (auto it = buckets.find(key); it != buckets.end())
          candidates.insert(it->second.begin(), it->second.end());
        keys.push_back(std::move(key));
      }
      bool duplicate = false;
      for (auto c : candidates) {
        if (detail::jaccard(sh, kept_shingles[c]) >= near.jaccard_threshold) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) {
        result.dropped_ids.push_back(doc.id);
        continue;
      }
      for (auto& k : keys) buckets[k].push_back(kept_shingles.size());
      kept_shingles.push_back(std::move(sh));
    }
    result.kept.push_back(doc);
  }
  return result;
}

// ---------------------------------------------------------------------------
// F6

struct LanguageGuess {
  std::string label;
  double confidence = 0.0;
};

class LanguageScorer {
 public:
  virtual ~LanguageScorer() = default;
  // May throw; the filter fails open.
  virtual LanguageGuess score(std::string_view text) const = 0;
};

// Offline default: ASCII-word share decides the label, English function
// word density the confidence. A fastText-style model can be plugged in via
// CommandLanguageScorer.
class HeuristicEnglishScorer final : public LanguageScorer {
 public:
  LanguageGuess score(std::string_view text) const override {
    static const std::unordered_set<std::string> stop = {
        "the", "a", "an", "and", "or", "of", "to", "in", "is", "are", "was", "be", "it",
        "this", "that", "for", "on", "with", "as", "by", "at", "from", "we", "you", "can",
        "not", "if", "will", "which", "has", "have", "but", "all", "how", "use", "using",
        "its", "your", "our", "these", "when", "then", "there", "also", "into", "more"};
    std::size_t words = 0, ascii_words = 0, stop_words = 0;
    std::string cur;
    bool non_ascii = false;
    auto finish = [&] {
      if (cur.empty() && !non_ascii) return;
      ++words;
      if (!non_ascii) {
        ++ascii_words;
        if (stop.count(to_lower(cur))) ++stop_words;
      }
      cur.clear();
      non_ascii = false;
    };
    for (unsigned char c : text) {
      if (c >= 0x80) {
        non_ascii = true;
      } else if (std::isalpha(c)) {
        cur.push_back(static_cast<char>(c));
      } else {
        finish();
      }
    }
    finish();
    if (words == 0) return {"und", 0.0};
    const double ascii_share = static_cast<double>(ascii_words) / words;
    const double stop_share = ascii_words ? static_cast<double>(stop_words) / ascii_words : 0.0;
    if (ascii_share < 0.8 || stop_share < 0.05) return {"xx", 1.0 - ascii_share * stop_share};
    return {"en", std::min(1.0, 2.5 * stop_share)};
  }
};

// External classifier: text on stdin, "<label> <confidence>" on stdout.
class CommandLanguageScorer final : public LanguageScorer {
 public:
  explicit CommandLanguageScorer(std::string command) : argv_(split_command(command)) {
    if (argv_.empty()) throw ConfigError("language scorer command is empty");
  }
  LanguageGuess score(std::string_view text) const override {
    auto r = run_command(argv_, text);
    if (!r.success()) throw Error("language scorer failed: " + trim(r.err));
    std::istringstream in(r.out);
    LanguageGuess g;
    if (!(in >> g.label >> g.confidence)) throw Error("language scorer output unparsable");
    return g;
  }

 private:
  std::vector<std::string> argv_;
};

inline bool is_english_label(std::string_view label) {
  auto l = to_lower(label);
  return l == "en" || l == "eng" || l == "english" || l == "__label__en";
}

inline constexpr double kEnglishConfidence = 0.4;

inline FilterOutcome f6_language(const RawDocument& doc, const LanguageScorer& scorer,
                                 double threshold = kEnglishConfidence) {
  auto text = text_only(doc.body);
  if (trim_view(text).empty()) return FilterOutcome::keep(Stage::F6, "no text blocks");
  LanguageGuess g;
  try {
    g = scorer.score(text);
  } catch (const std::exception& e) {
    return FilterOutcome::keep(Stage::F6, std::string("scorer failure: ") + e.what());
  }
  if (!is_english_label(g.label))
    return FilterOutcome::drop(Stage::F6, "language " + g.label);
  if (g.confidence < threshold)
    return FilterOutcome::drop(Stage::F6, "low English confidence");
  return FilterOutcome::keep(Stage::F6);
}

}  // namespace plforge::corpus
