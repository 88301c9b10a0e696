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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <regex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "plforge/corpus/ingest.hpp"
#include "plforge/http_client.hpp"
#include "plforge/sft/review.hpp"
#include "plforge/tokenizer.hpp"

namespace plforge::sft {

// ---------------------------------------------------------------------------
// Repository ranking and code-file gating

struct RepoMeta {
  std::string name;
  std::uint64_t stars = 0;
  std::string license_tag;
  std::string path;  // local checkout, optional

  json to_json() const {
    json j{{"name", name}, {"stars", stars}, {"license_tag", license_tag}};
    if (!path.empty()) j["path"] = path;
    return j;
  }

  static RepoMeta from_json(const json& j) {
    RepoMeta r;
    r.name = j.at("name").get<std::string>();
    auto stars = j.at("stars");
    if (!stars.is_number_integer() || stars.get<std::int64_t>() < 0)
      throw ArgumentError("repo " + r.name + ": stars must be a non-negative integer");
    r.stars = stars.get<std::uint64_t>();
    r.license_tag = j.value("license_tag", std::string());
    r.path = j.value("path", std::string());
    return r;
  }
};

// Line-delimited {name, stars, license_tag, path?}. Relative paths resolve
// against the manifest's directory.
inline std::vector<RepoMeta> read_repo_manifest(const std::filesystem::path& file) {
  auto records = read_jsonl(file);
  std::vector<RepoMeta> repos;
  std::set<std::string> names;
  for (std::size_t i = 0; i < records.size(); ++i) {
    RepoMeta r;
    try {
      r = RepoMeta::from_json(records[i]);
    } catch (const json::exception& e) {
      throw LoadError(file.string() + ": " + e.what(), i + 1);
    } catch (const ArgumentError& e) {
      throw LoadError(file.string() + ": " + e.what(), i + 1);
    }
    if (!names.insert(r.name).second) throw LoadError(file.string() + ": duplicate repo " + r.name, i + 1);
    if (!r.path.empty() && std::filesystem::path(r.path).is_relative())
      r.path = (file.parent_path() / r.path).lexically_normal().string();
    repos.push_back(std::move(r));
  }
  return repos;
}

// Stars descending, ties by name ascending; the first min(n, |repos|).
inline std::vector<RepoMeta> rank_repos(std::vector<RepoMeta> repos, std::size_t n) {
  if (n < 1) throw ArgumentError("rank_repos needs n >= 1");
  std::sort(repos.begin(), repos.end(), [](const RepoMeta& a, const RepoMeta& b) {
    if (a.stars != b.stars) return a.stars > b.stars;
    return a.name < b.name;
  });
  if (repos.size() > n) repos.resize(n);
  return repos;
}

enum class CodeExtension { mojo, fire_emoji };

inline std::optional<CodeExtension> code_extension(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  if (ext == ".mojo") return CodeExtension::mojo;
  if (ext == "." "\xF0\x9F\x94\xA5") return CodeExtension::fire_emoji;
  return std::nullopt;
}

struct CodeFile {
  std::string repo;
  std::string path;  // relative to the repository root
  CodeExtension extension = CodeExtension::mojo;
  std::string content;
  std::uint64_t token_count = 0;

  std::string id() const { return repo + "/" + path; }
};

inline constexpr std::uint64_t kMinTokens = 5;
inline constexpr std::uint64_t kMaxTokens = 500;

inline bool token_gate(std::uint64_t token_count) { return token_count >= kMinTokens && token_count <= kMaxTokens; }
inline bool token_gate(const CodeFile& f) { return token_gate(f.token_count); }

// Every .mojo / .🔥 file under a repository checkout, sorted by path.
inline std::vector<CodeFile> collect_code_files(const RepoMeta& repo, const Tokenizer& tokenizer) {
  namespace fs = std::filesystem;
  std::vector<CodeFile> files;
  if (repo.path.empty()) return files;
  fs::path root(repo.path);
  if (!fs::is_directory(root)) throw LoadError("repository checkout not found: " + repo.path);
  for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
    auto name = it->path().filename().string();
    if (it->is_directory() && !name.empty() && name[0] == '.') {
      it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    auto ext = code_extension(it->path());
    if (!ext) continue;
    CodeFile f;
    f.repo = repo.name;
    f.path = fs::relative(it->path(), root).generic_string();
    f.extension = *ext;
    f.content = read_file(it->path());
    if (!corpus::is_valid_utf8(f.content)) continue;
    f.token_count = tokenizer.count(f.content);
    files.push_back(std::move(f));
  }
  std::sort(files.begin(), files.end(), [](const CodeFile& a, const CodeFile& b) { return a.path < b.path; });
  return files;
}

// One pending sample_triage task per file. The payload carries the rendered
// source and its provenance.
inline std::vector<ReviewTask> enqueue_triage(const std::vector<CodeFile>& files) {
  std::vector<ReviewTask> tasks;
  std::set<std::string> seen;
  for (const auto& f : files) {
    if (!seen.insert(f.id()).second) throw QueueIntegrityError("duplicate file id in triage batch: " + f.id());
    ReviewTask t;
    t.id = "triage:" + f.id();
    t.kind = TaskKind::sample_triage;
    t.payload = {{"snippet_id", f.id()},
                 {"repo", f.repo},
                 {"path", f.path},
                 {"token_count", f.token_count},
                 {"code", f.content}};
    tasks.push_back(std::move(t));
  }
  return tasks;
}

// ---------------------------------------------------------------------------
// Paraphrase generation

struct ParaphraseRequest {
  std::string system_hint;
  std::string seed_prompt;
  int k = 3;
};

class ParaphraseProvider {
 public:
  virtual ~ParaphraseProvider() = default;
  // Must be safe to call from several threads at once.
  virtual std::vector<std::string> paraphrase(const ParaphraseRequest& request) const = 0;
};

inline constexpr std::string_view kDefaultParaphraseHint =
    "Rewrite the programming instruction in different words. Keep the meaning and every technical detail.";

// POST {base}/paraphrase with {system_hint, seed_prompt, k}; expects
// {paraphrases: [...]}.
class HttpParaphraseProvider final : public ParaphraseProvider {
 public:
  explicit HttpParaphraseProvider(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  std::vector<std::string> paraphrase(const ParaphraseRequest& request) const override {
    auto res = endpoint_.post("/paraphrase", {{"system_hint", request.system_hint},
                                              {"seed_prompt", request.seed_prompt},
                                              {"k", request.k}});
    if (!res.contains("paraphrases") || !res["paraphrases"].is_array())
      throw ClientError("paraphrase response lacks a paraphrases array");
    return res["paraphrases"].get<std::vector<std::string>>();
  }

 private:
  HttpEndpoint endpoint_;
};

// Deterministic offline provider: rotates the words of the seed and tags
// each rotation with its ordinal.
class StubParaphraseProvider final : public ParaphraseProvider {
 public:
  std::vector<std::string> paraphrase(const ParaphraseRequest& request) const override {
    auto words = split(collapse_whitespace(request.seed_prompt), ' ');
    std::vector<std::string> out;
    for (int i = 1; i <= request.k; ++i) {
      std::vector<std::string> rotated(words.size());
      for (std::size_t w = 0; w < words.size(); ++w)
        rotated[w] = words[(w + static_cast<std::size_t>(i)) % words.size()];
      out.push_back("(" + std::to_string(i) + ") " + join(rotated, " "));
    }
    return out;
  }
};

struct RetryPolicy {
  int max_attempts = 3;  // calls per seed, counting the first
  std::chrono::milliseconds initial_backoff{200};
  double backoff_factor = 2.0;
};

struct ParaphraseOutcome {
  std::vector<std::string> paraphrases;
  bool short_of_k = false;  // duplicate exhaustion warning
  bool parked = false;      // provider unreachable; manual entry needed
  std::string error;
  int attempts = 0;
};

// Asks the provider until k paraphrases distinct from each other and from the
// seed are collected, or the attempt budget runs out.
inline ParaphraseOutcome generate_paraphrases(const std::string& seed_prompt, const ParaphraseProvider& provider,
                                              int k = 3, const RetryPolicy& retry = {},
                                              std::string_view system_hint = kDefaultParaphraseHint) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (retry.max_attempts < 1) throw ConfigError("retry policy needs at least one attempt");
  ParaphraseOutcome out;
  std::set<std::string> seen{normalize_prompt(seed_prompt)};
  auto backoff = retry.initial_backoff;
  bool any_success = false;
  while (out.attempts < retry.max_attempts && static_cast<int>(out.paraphrases.size()) < k) {
    ++out.attempts;
    try {
      auto batch = provider.paraphrase({std::string(system_hint), seed_prompt, k - static_cast<int>(out.paraphrases.size())});
      any_success = true;
      for (auto& p : batch) {
        auto norm = normalize_prompt(p);
        if (norm.empty() || !seen.insert(norm).second) continue;
        out.paraphrases.push_back(trim(p));
        if (static_cast<int>(out.paraphrases.size()) == k) break;
      }
      continue;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    if (out.attempts < retry.max_attempts && backoff.count() > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<std::int64_t>(backoff.count() * retry.backoff_factor));
    }
  }
  if (!any_success) {
    out.parked = true;
    out.paraphrases.clear();
    return out;
  }
  out.short_of_k = static_cast<int>(out.paraphrases.size()) < k;
  return out;
}

// Runs generate_paraphrases for many seeds with at most `max_in_flight`
// concurrent provider calls. Results keep the order of `seeds`.
inline std::vector<ParaphraseOutcome> generate_paraphrases_batch(const std::vector<std::string>& seeds,
                                                                 const ParaphraseProvider& provider, int k = 3,
                                                                 const RetryPolicy& retry = {},
                                                                 std::size_t max_in_flight = 4) {
  std::vector<ParaphraseOutcome> outcomes(seeds.size());
  parallel_for(seeds.size(), std::max<std::size_t>(1, max_in_flight),
               [&](std::size_t i) { outcomes[i] = generate_paraphrases(seeds[i], provider, k, retry); });
  return outcomes;
}

// ---------------------------------------------------------------------------
// Dataset assembly

inline constexpr int kVariantsPerSnippet = 4;

struct InstructionPair {
  std::string snippet_id;
  int variant_index = 1;  // 1..4
  std::string language = "en";
  std::string prompt;
  std::string code;

  json to_json() const {
    // Field order is part of the file format.
    json j = json::object();
    j["snippet_id"] = snippet_id;
    j["variant_index"] = variant_index;
    j["language"] = language;
    j["prompt"] = prompt;
    j["code"] = code;
    return j;
  }

  static InstructionPair from_json(const json& j) {
    InstructionPair p;
    p.snippet_id = j.at("snippet_id").get<std::string>();
    p.variant_index = j.at("variant_index").get<int>();
    p.language = j.value("language", std::string("en"));
    p.prompt = j.at("prompt").get<std::string>();
    p.code = j.at("code").get<std::string>();
    return p;
  }
};

inline std::vector<InstructionPair> read_pairs(const std::filesystem::path& file) {
  auto records = read_jsonl(file);
  std::vector<InstructionPair> pairs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      pairs.push_back(InstructionPair::from_json(records[i]));
    } catch (const json::exception& e) {
      throw LoadError(file.string() + ": " + e.what(), i + 1);
    }
  }
  return pairs;
}

inline std::string pairs_to_jsonl(const std::vector<InstructionPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += p.to_json().dump();
    out.push_back('\n');
  }
  return out;
}

// Per-line classification from a small Mojo scanner that tracks single,
// double and triple-quoted string literals (triple quotes may span lines).
struct MojoLineFeatures {
  std::size_t full_line_comments = 0;
  std::size_t inline_comments = 0;
  std::size_t function_definitions = 0;
  std::size_t struct_declarations = 0;
};

inline MojoLineFeatures scan_mojo(std::string_view source) {
  static const std::regex fn_re(R"(^\s*(@\w+(\([^)]*\))?\s+)*(fn|def)\s+\w+)");
  static const std::regex struct_re(R"(^\s*(@\w+(\([^)]*\))?\s+)*struct\s+\w+)");
  MojoLineFeatures f;
  std::string open_triple;  // "\"\"\"" or "'''" while inside a multi-line literal
  for (const auto& line : split_lines(source)) {
    bool starts_in_string = !open_triple.empty();
    bool code_seen = false;
    bool comment = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
      if (!open_triple.empty()) {
        if (c == '\\') {
          ++i;
        } else if (line.compare(i, 3, open_triple) == 0) {
          open_triple.clear();
          i += 2;
        }
        code_seen = true;
        continue;
      }
      if (c == '#') {
        comment = true;
        break;
      }
      if (c == '"' || c == '\'') {
        std::string triple(3, c);
        if (line.compare(i, 3, triple) == 0) {
          open_triple = triple;
          i += 2;
        } else {
          for (++i; i < line.size() && line[i] != c; ++i)
            if (line[i] == '\\') ++i;
        }
        code_seen = true;
        continue;
      }
      if (!std::isspace(static_cast<unsigned char>(c))) code_seen = true;
    }
    if (comment) {
      if (code_seen) ++f.inline_comments;
      else ++f.full_line_comments;
    }
    if (!starts_in_string) {
      if (std::regex_search(line, fn_re)) ++f.function_definitions;
      if (std::regex_search(line, struct_re)) ++f.struct_declarations;
    }
  }
  return f;
}

struct DatasetCard {
  std::size_t code_blocks = 0;
  double token_mean = 0;
  double token_median = 0;
  double token_stddev = 0;  // sample (n-1) form
  std::uint64_t token_min = 0;
  std::uint64_t token_max = 0;
  MojoLineFeatures features;

  json to_json() const {
    return {{"code_blocks", code_blocks},
            {"tokens",
             {{"mean", token_mean},
              {"median", token_median},
              {"stddev", token_stddev},
              {"min", token_min},
              {"max", token_max}}},
            {"full_line_comments", features.full_line_comments},
            {"inline_comments", features.inline_comments},
            {"function_definitions", features.function_definitions},
            {"struct_declarations", features.struct_declarations}};
  }

  std::string render() const {
    auto fixed = [](double v) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f", v);
      return std::string(buf);
    };
    std::string out;
    out += "Code blocks           " + with_thousands(code_blocks) + "\n";
    out += "Tokens mean           " + fixed(token_mean) + "\n";
    out += "Tokens median         " + fixed(token_median) + "\n";
    out += "Tokens stddev         " + fixed(token_stddev) + "\n";
    out += "Tokens range          " + std::to_string(token_min) + "-" + std::to_string(token_max) + "\n";
    out += "Full-line comments    " + with_thousands(features.full_line_comments) + "\n";
    out += "Inline comments       " + with_thousands(features.inline_comments) + "\n";
    out += "Function definitions  " + with_thousands(features.function_definitions) + "\n";
    out += "Struct declarations   " + with_thousands(features.struct_declarations) + "\n";
    return out;
  }
};

// Tokens of one record: prompt plus code.
inline std::uint64_t pair_tokens(const InstructionPair& p, const Tokenizer& tokenizer) {
  return tokenizer.count(p.prompt) + tokenizer.count(p.code);
}

inline DatasetCard compute_card(const std::vector<InstructionPair>& pairs, const Tokenizer& tokenizer) {
  DatasetCard card;
  card.code_blocks = pairs.size();
  if (pairs.empty()) return card;
  std::vector<std::uint64_t> tokens;
  tokens.reserve(pairs.size());
  for (const auto& p : pairs) {
    tokens.push_back(pair_tokens(p, tokenizer));
    auto f = scan_mojo(p.code);
    card.features.full_line_comments += f.full_line_comments;
    card.features.inline_comments += f.inline_comments;
    card.features.function_definitions += f.function_definitions;
    card.features.struct_declarations += f.struct_declarations;
  }
  std::sort(tokens.begin(), tokens.end());
  const double n = static_cast<double>(tokens.size());
  long double sum = 0;
  for (auto t : tokens) sum += t;
  card.token_mean = static_cast<double>(sum / n);
  std::size_t mid = tokens.size() / 2;
  card.token_median = tokens.size() % 2 ? static_cast<double>(tokens[mid])
                                        : (static_cast<double>(tokens[mid - 1]) + static_cast<double>(tokens[mid])) / 2;
  if (tokens.size() > 1) {
    long double ss = 0;
    for (auto t : tokens) ss += (t - card.token_mean) * (t - card.token_mean);
    card.token_stddev = std::sqrt(static_cast<double>(ss / (n - 1)));
  }
  card.token_min = tokens.front();
  card.token_max = tokens.back();
  return card;
}

class AssemblyError : public Error {
 public:
  AssemblyError(const std::string& what, std::vector<std::string> offenders = {})
      : Error(what), offenders_(std::move(offenders)) {}
  const std::vector<std::string>& offenders() const { return offenders_; }

 private:
  std::vector<std::string> offenders_;
};

struct SftDataset {
  std::vector<InstructionPair> pairs;
  DatasetCard card;
};

// Groups accepted pairs by snippet (first appearance order), requires
// variants 1..4 with non-empty distinct prompts, and computes the card.
inline SftDataset assemble_sft(const std::vector<InstructionPair>& accepted,
                               const Tokenizer& tokenizer = WhitespaceTokenizer{}) {
  if (accepted.empty()) throw AssemblyError("nothing to assemble");
  std::vector<std::string> order;
  std::map<std::string, std::vector<InstructionPair>> groups;
  for (const auto& p : accepted) {
    auto [it, fresh] = groups.try_emplace(p.snippet_id);
    if (fresh) order.push_back(p.snippet_id);
    it->second.push_back(p);
  }
  std::vector<std::string> offenders;
  for (const auto& id : order) {
    auto& g = groups[id];
    std::sort(g.begin(), g.end(),
              [](const InstructionPair& a, const InstructionPair& b) { return a.variant_index < b.variant_index; });
    bool ok = g.size() == static_cast<std::size_t>(kVariantsPerSnippet);
    json prompts = json::array();
    for (std::size_t i = 0; ok && i < g.size(); ++i) {
      ok = g[i].variant_index == static_cast<int>(i + 1) && g[i].code == g[0].code;
      prompts.push_back(g[i].prompt);
    }
    if (ok) ok = variant_problems(prompts).empty();
    if (!ok) offenders.push_back(id + " (" + std::to_string(g.size()) + " variants)");
  }
  if (!offenders.empty())
    throw AssemblyError("snippets without exactly 4 distinct variants: " + join(offenders, ", "), offenders);
  SftDataset ds;
  for (const auto& id : order)
    for (auto& p : groups[id]) ds.pairs.push_back(p);
  ds.card = compute_card(ds.pairs, tokenizer);
  return ds;
}

// Accepted/edited prompt_refine tasks become four pairs each.
inline std::vector<InstructionPair> pairs_from_tasks(const std::vector<ReviewTask>& tasks) {
  std::vector<InstructionPair> pairs;
  for (const auto& t : tasks) {
    if (t.kind != TaskKind::prompt_refine || t.status != TaskStatus::accepted) continue;
    const auto& variants = t.payload.value("variants", json::array());
    for (std::size_t i = 0; i < variants.size(); ++i) {
      InstructionPair p;
      p.snippet_id = t.payload.value("snippet_id", t.id);
      p.variant_index = static_cast<int>(i + 1);
      p.prompt = variants[i].is_string() ? variants[i].get<std::string>() : std::string();
      p.code = t.payload.value("code", std::string());
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

}  // namespace plforge::sft
