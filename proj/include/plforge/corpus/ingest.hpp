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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "plforge/corpus/document.hpp"
#include "plforge/http_client.hpp"

namespace plforge::corpus {

struct ManifestEntry {
  std::string ref;  // local path or URL
  OriginKind origin_kind = OriginKind::other;
  std::optional<std::string> license_hint;
};

inline std::vector<ManifestEntry> parse_manifest(const std::vector<json>& records) {
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    try {
      ManifestEntry e;
      e.ref = r.at("ref").get<std::string>();
      e.origin_kind = parse_origin_kind(r.value("origin_kind", std::string("other")));
      if (r.contains("license_hint") && !r["license_hint"].is_null())
        e.license_hint = r["license_hint"].get<std::string>();
      entries.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw LoadError(std::string("bad manifest entry: ") + ex.what(), i + 1);
    }
  }
  return entries;
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_jsonl(path));
}

class Fetcher {
 public:
  virtual ~Fetcher() = default;
  // Throws on any failure.
  virtual std::string fetch(const std::string& url) const = 0;
};

class HttpFetcher final : public Fetcher {
 public:
  std::string fetch(const std::string& url) const override { return http_get(url); }
};

struct SkipRecord {
  std::string ref;
  std::string reason;
};

struct IngestResult {
  std::vector<RawDocument> documents;
  std::vector<SkipRecord> skipped;
};

inline bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c >> 5) == 0x6) {
      extra = 1;
    } else if ((c >> 4) == 0xE) {
      extra = 2;
    } else if ((c >> 3) == 0x1E) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= s.size() && extra > 0) return false;
    for (std::size_t k = 1; k <= extra; ++k)
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    i += extra + 1;
  }
  return true;
}

// Minimal HTML to text: drops script/style, turns block-level tags into
// paragraph breaks and decodes the common entities.
inline std::string html_to_text(std::string_view html) {
  std::string s;
  {
    const std::string lower = to_lower(html);
    std::size_t pos = 0;
    while (pos < html.size()) {
      auto script = lower.find("<script", pos);
      auto style = lower.find("<style", pos);
      auto open = std::min(script, style);
      if (open == std::string::npos) {
        s.append(html.substr(pos));
        break;
      }
      s.append(html.substr(pos, open - pos));
      auto close = lower.find(open == script ? "</script" : "</style", open);
      if (close == std::string::npos) break;
      pos = lower.find('>', close);
      pos = pos == std::string::npos ? html.size() : pos + 1;
    }
  }
  static const std::regex block_tag(R"(</?(p|div|br|h[1-6]|li|ul|ol|pre|tr|table|section|article|blockquote)\b[^>]*>)",
                                    std::regex::icase);
  static const std::regex any_tag(R"(<[^>]*>)");
  s = std::regex_replace(s, block_tag, "\n\n");
  s = std::regex_replace(s, any_tag, "");
  const std::pair<std::string_view, std::string_view> entities[] = {
      {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&#39;", "'"}, {"&nbsp;", " "}, {"&amp;", "&"}};
  for (auto [from, to] : entities) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
      s.replace(pos, from.size(), to);
  }
  std::vector<std::string> kept;
  bool last_blank = true;
  for (auto& line : split_lines(s)) {
    bool blank = is_blank(line);
    if (blank && last_blank) continue;
    kept.push_back(blank ? std::string() : std::string(line));
    last_blank = blank;
  }
  while (!kept.empty() && kept.back().empty()) kept.pop_back();
  return join(kept, "\n");
}

inline bool looks_like_html(const std::string& name, std::string_view body) {
  auto lower = to_lower(name);
  if (ends_with(lower, ".html") || ends_with(lower, ".htm")) return true;
  auto head = to_lower(trim_view(body).substr(0, 64));
  return starts_with(head, "<!doctype html") || starts_with(head, "<html");
}

inline bool is_corpus_file(const std::filesystem::path& p) {
  static const char* exts[] = {".mojo", ".\xF0\x9F\x94\xA5", ".md", ".markdown", ".txt",
                               ".rst", ".html", ".htm"};
  auto name = p.filename().string();
  return std::any_of(std::begin(exts), std::end(exts),
                     [&](const char* e) { return ends_with(to_lower(name), e); });
}

inline std::optional<std::string> repo_license(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> candidates;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    auto upper = entry.path().filename().string();
    std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
    if (entry.is_regular_file() && (starts_with(upper, "LICENSE") || starts_with(upper, "LICENCE") ||
                                    starts_with(upper, "COPYING")))
      candidates.push_back(entry.path());
  }
  std::sort(candidates.begin(), candidates.end());
  for (const auto& c : candidates) {
    if (auto tag = detect_license_text(read_file(c))) return tag;
  }
  return std::nullopt;
}

// One RawDocument per retrievable unit: a file, every corpus file inside a
// repository directory, or a fetched URL. Failures become skip records.
inline IngestResult ingest_sources(const std::vector<ManifestEntry>& manifest, const Tokenizer& tokenizer,
                                   const Fetcher* fetcher = nullptr) {
  IngestResult result;
  std::map<std::string, int> id_uses;

  auto emit = [&](const ManifestEntry& entry, std::string id, std::string body,
                  std::optional<std::string> license) {
    if (!is_valid_utf8(body)) {
      result.skipped.push_back({id, "not valid UTF-8"});
      return;
    }
    if (looks_like_html(id, body)) body = html_to_text(body);
    if (is_blank(body)) {
      result.skipped.push_back({id, "empty body"});
      return;
    }
    if (int n = ++id_uses[id]; n > 1) id += "#" + std::to_string(n);
    RawDocument doc;
    doc.id = std::move(id);
    doc.source_ref = entry.ref;
    doc.origin_kind = entry.origin_kind;
    if (license) doc.license_tag = normalize_license(*license);
    doc.body = std::move(body);
    doc.recount(tokenizer);
    result.documents.push_back(std::move(doc));
  };

  for (const auto& entry : manifest) {
    const bool is_url = entry.ref.find("://") != std::string::npos;
    try {
      if (is_url) {
        if (!fetcher) throw Error("no fetcher configured for URLs");
        emit(entry, entry.ref, fetcher->fetch(entry.ref), entry.license_hint);
        continue;
      }
      std::filesystem::path path(entry.ref);
      if (std::filesystem::is_directory(path)) {
        auto license = repo_license(path);
        if (!license) license = entry.license_hint;
        std::vector<std::filesystem::path> files;
        for (auto it = std::filesystem::recursive_directory_iterator(path);
             it != std::filesystem::recursive_directory_iterator(); ++it) {
          if (it->is_directory() && starts_with(it->path().filename().string(), ".")) {
            it.disable_recursion_pending();
            continue;
          }
          if (it->is_regular_file() && is_corpus_file(it->path())) files.push_back(it->path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
          try {
            emit(entry, entry.ref + ":" + std::filesystem::relative(f, path).string(), read_file(f), license);
          } catch (const std::exception& e) {
            result.skipped.push_back({f.string(), e.what()});
          }
        }
        continue;
      }
      if (!std::filesystem::is_regular_file(path)) throw Error("no such file or directory");
      emit(entry, entry.ref, read_file(path), entry.license_hint);
    } catch (const std::exception& e) {
      result.skipped.push_back({entry.ref, e.what()});
    }
  }
  return result;
}

}  // namespace plforge::corpus
