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

#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "plforge/common.hpp"
#include "plforge/tokenizer.hpp"

namespace plforge::corpus {

enum class OriginKind { repository, documentation, blog, other };

inline std::string_view to_string(OriginKind k) {
  switch (k) {
    case OriginKind::repository: return "repository";
    case OriginKind::documentation: return "documentation";
    case OriginKind::blog: return "blog";
    case OriginKind::other: return "other";
  }
  return "other";
}

inline OriginKind parse_origin_kind(std::string_view s) {
  if (s == "repository") return OriginKind::repository;
  if (s == "documentation") return OriginKind::documentation;
  if (s == "blog") return OriginKind::blog;
  if (s == "other") return OriginKind::other;
  throw ArgumentError("unknown origin_kind '" + std::string(s) + "'");
}

struct RawDocument {
  std::string id;
  std::string source_ref;
  OriginKind origin_kind = OriginKind::other;
  std::optional<std::string> license_tag;
  std::string body;
  std::uint64_t token_count = 0;

  void recount(const Tokenizer& tokenizer) { token_count = tokenizer.count(body); }

  json to_json() const {
    return {{"id", id},
            {"source_ref", source_ref},
            {"origin_kind", to_string(origin_kind)},
            {"license_tag", license_tag ? json(*license_tag) : json(nullptr)},
            {"body", body},
            {"token_count", token_count}};
  }

  static RawDocument from_json(const json& j) {
    RawDocument d;
    d.id = j.at("id").get<std::string>();
    d.source_ref = j.value("source_ref", std::string{});
    d.origin_kind = parse_origin_kind(j.value("origin_kind", std::string("other")));
    if (j.contains("license_tag") && !j["license_tag"].is_null())
      d.license_tag = j["license_tag"].get<std::string>();
    d.body = j.at("body").get<std::string>();
    d.token_count = j.value("token_count", std::uint64_t{0});
    return d;
  }
};

inline std::vector<RawDocument> read_corpus(const std::filesystem::path& path) {
  std::vector<RawDocument> docs;
  auto records = read_jsonl(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      docs.push_back(RawDocument::from_json(records[i]));
    } catch (const json::exception& e) {
      throw LoadError(std::string("bad corpus record: ") + e.what(), i + 1);
    }
  }
  return docs;
}

inline std::string corpus_to_jsonl(const std::vector<RawDocument>& docs) {
  std::string out;
  for (const auto& d : docs) out += d.to_json().dump() + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Licenses

// Maps free-form license names to SPDX identifiers where recognised;
// otherwise returns the trimmed input.
inline std::string normalize_license(std::string_view raw) {
  std::string s = to_lower(trim_view(raw));
  if (s.empty()) return {};
  auto has = [&](std::string_view needle) { return s.find(needle) != std::string::npos; };
  if (has("apache") || has("asl")) {
    if (has("1.1")) return "Apache-1.1";
    if (has("1.0")) return "Apache-1.0";
    return "Apache-2.0";
  }
  if (s == "mit" || has("mit license") || s == "expat") return "MIT";
  if (has("bsd")) {
    if (has("2")) return "BSD-2-Clause";
    return "BSD-3-Clause";
  }
  if (has("lgpl")) return "LGPL";
  if (has("agpl")) return "AGPL-3.0";
  if (has("gpl")) return has("2") ? "GPL-2.0" : "GPL-3.0";
  if (has("mpl") || has("mozilla")) return "MPL-2.0";
  if (has("unlicense")) return "Unlicense";
  return trim(raw);
}

inline bool is_apache2(const std::optional<std::string>& tag) {
  return tag && normalize_license(*tag) == "Apache-2.0";
}

// Recognises the license from the text of a LICENSE/COPYING file.
inline std::optional<std::string> detect_license_text(std::string_view text) {
  std::string head = to_lower(text.substr(0, 4096));
  auto has = [&](std::string_view n) { return head.find(n) != std::string::npos; };
  if (has("apache license")) {
    if (has("version 2.0") || has("2.0")) return "Apache-2.0";
    return "Apache-1.1";
  }
  if (has("mit license") || has("permission is hereby granted, free of charge")) return "MIT";
  if (has("gnu lesser general public license")) return "LGPL";
  if (has("gnu affero general public license")) return "AGPL-3.0";
  if (has("gnu general public license")) return has("version 2") ? "GPL-2.0" : "GPL-3.0";
  if (has("mozilla public license")) return "MPL-2.0";
  if (has("redistribution and use in source and binary forms")) {
    return has("neither the name") ? "BSD-3-Clause" : "BSD-2-Clause";
  }
  if (has("this is free and unencumbered software")) return "Unlicense";
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Blocks and paragraphs

inline bool is_fence_line(std::string_view line) {
  auto t = trim_view(line);
  return starts_with(t, "```") || starts_with(t, "~~~");
}

struct Block {
  enum class Kind { code, text };
  Kind kind = Kind::text;
  std::string content;  // verbatim lines, fence markers included
  bool fenced = false;

  // Non-whitespace characters excluding fence marker lines.
  std::size_t meaningful_chars() const {
    if (!fenced) return count_non_whitespace(content);
    auto lines = split_lines(content);
    std::size_t n = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      bool marker = i == 0 || (i + 1 == lines.size() && is_fence_line(lines[i]));
      if (!marker) n += count_non_whitespace(lines[i]);
    }
    return n;
  }
};

// Language tag after the fence marker, lowercased ("" when bare).
inline std::string fence_language(std::string_view line) {
  auto t = trim_view(line);
  t.remove_prefix(std::min<std::size_t>(3, t.size()));
  std::string lang;
  for (char c : t) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '{' || c == ',') break;
    lang.push_back(c);
  }
  return to_lower(lang);
}

inline bool is_mojo_fence_language(std::string_view lang) {
  return lang == "mojo" || lang == "\xF0\x9F\x94\xA5";
}

// A line counts as code when it is indented or opens with a Mojo keyword.
inline bool looks_like_code_line(std::string_view line) {
  static const std::regex keyword(R"(^(fn|var|let|from|import)\b)");
  if (!line.empty() && (line.front() == ' ' || line.front() == '\t')) return true;
  return std::regex_search(line.begin(), line.end(), keyword);
}

// Blank-line-delimited segmentation. A fenced region is one code block even
// when it spans blank lines. An unfenced segment is code when at least half
// of its lines look like code.
inline std::vector<Block> segment_blocks(std::string_view body) {
  std::vector<Block> blocks;
  auto lines = split_lines(body);
  std::vector<std::string> current;

  auto flush = [&] {
    if (current.empty()) return;
    std::size_t code_lines = 0;
    for (const auto& l : current)
      if (looks_like_code_line(l)) ++code_lines;
    Block b;
    b.kind = 2 * code_lines >= current.size() ? Block::Kind::code : Block::Kind::text;
    b.content = join(current, "\n");
    blocks.push_back(std::move(b));
    current.clear();
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (is_fence_line(line)) {
      flush();
      std::vector<std::string> fenced{line};
      std::size_t j = i + 1;
      for (; j < lines.size(); ++j) {
        fenced.push_back(lines[j]);
        if (is_fence_line(lines[j])) break;
      }
      blocks.push_back({Block::Kind::code, join(fenced, "\n"), true});
      i = j;
      continue;
    }
    if (is_blank(line)) {
      flush();
    } else {
      current.push_back(line);
    }
  }
  flush();
  return blocks;
}

// Maximal runs of non-blank lines, joined with '\n'.
inline std::vector<std::string> split_paragraphs(std::string_view body) {
  std::vector<std::string> paragraphs;
  std::vector<std::string> current;
  for (const auto& line : split_lines(body)) {
    if (is_blank(line)) {
      if (!current.empty()) paragraphs.push_back(join(current, "\n"));
      current.clear();
    } else {
      current.push_back(line);
    }
  }
  if (!current.empty()) paragraphs.push_back(join(current, "\n"));
  return paragraphs;
}

// Concatenation of the document's text blocks; code blocks are left out.
inline std::string text_only(std::string_view body) {
  std::vector<std::string> parts;
  for (auto& b : segment_blocks(body))
    if (b.kind == Block::Kind::text) parts.push_back(std::move(b.content));
  return join(parts, "\n\n");
}

}  // namespace plforge::corpus
