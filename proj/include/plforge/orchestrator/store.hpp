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

// Embedded transactional record store.
//
// On-disk layout of a store directory:
//
//   FORMAT      one line, "plforge-store 1"
//   LOCK        empty; held with flock() by the owning process
//   log.jsonl   append-only transaction log, one transaction per line:
//                 {"txn": <seq>, "at": "<UTC timestamp>",
//                  "ops": [{"op": "put", "kind": ..., "id": ...,
//                           "version": <v>, "created": ..., "updated": ...,
//                           "payload": {...}}, ...]}
//
// Opening a store replays the log. A final line without its newline is an
// interrupted write and is discarded (and truncated away); any other
// malformed line is corruption and fails the open. Each transaction is one
// write() followed by fsync(), so it is applied entirely or not at all.
//
// Export/import use line-delimited records:
//   {"kind": ..., "id": ..., "version": ..., "created": ..., "updated": ...,
//    "payload": {...}}

#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "plforge/common.hpp"
#include "plforge/eval/report.hpp"
#include "plforge/sft/review.hpp"

namespace plforge::orchestrator {

enum class RecordKind { corpus_doc, sft_pair, review_task, translation_audit, eval_report, plan };

inline constexpr RecordKind kRecordKinds[] = {RecordKind::corpus_doc,        RecordKind::sft_pair,
                                              RecordKind::review_task,       RecordKind::translation_audit,
                                              RecordKind::eval_report,       RecordKind::plan};

inline const char* to_string(RecordKind k) {
  switch (k) {
    case RecordKind::corpus_doc: return "corpus_doc";
    case RecordKind::sft_pair: return "sft_pair";
    case RecordKind::review_task: return "review_task";
    case RecordKind::translation_audit: return "translation_audit";
    case RecordKind::eval_report: return "eval_report";
    case RecordKind::plan: return "plan";
  }
  return "?";
}

inline RecordKind parse_record_kind(std::string_view s) {
  for (auto k : kRecordKinds)
    if (s == to_string(k)) return k;
  throw ArgumentError("unknown record kind '" + std::string(s) + "'");
}

class StoreError : public Error {
 public:
  using Error::Error;
};

// Optimistic-concurrency failure: the caller's version is stale.
class ConflictError : public StoreError {
 public:
  ConflictError(const std::string& what, std::uint64_t current) : StoreError(what), current_(current) {}
  std::uint64_t current_version() const noexcept { return current_; }

 private:
  std::uint64_t current_;
};

class NotFoundError : public StoreError {
 public:
  using StoreError::StoreError;
};

struct StoreRecord {
  RecordKind kind = RecordKind::corpus_doc;
  std::string id;
  json payload;
  std::uint64_t version = 0;  // 1 after creation, +1 per mutation
  std::string created;
  std::string updated;

  json to_json() const {
    return {{"kind", to_string(kind)}, {"id", id},           {"version", version},
            {"created", created},      {"updated", updated}, {"payload", payload}};
  }

  static StoreRecord from_json(const json& j) {
    StoreRecord r;
    r.kind = parse_record_kind(j.at("kind").get<std::string>());
    r.id = j.at("id").get<std::string>();
    r.version = j.at("version").get<std::uint64_t>();
    r.created = j.value("created", "");
    r.updated = j.value("updated", "");
    r.payload = j.at("payload");
    return r;
  }
};

// One write inside a transaction. `expected_version`: nullopt writes
// unconditionally; 0 requires that the record does not exist yet; v > 0
// requires the current version to be exactly v.
struct Mutation {
  RecordKind kind;
  std::string id;
  json payload;
  std::optional<std::uint64_t> expected_version;
};

class Store {
 public:
  // Opens (creating if needed) the store in `dir` and replays its log.
  explicit Store(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw StoreError("cannot create store directory " + dir_.string() + ": " + ec.message());
    const auto format = dir_ / "FORMAT";
    if (std::filesystem::exists(format)) {
      if (trim(read_file(format)) != kFormat) throw StoreError("unsupported store format in " + dir_.string());
    } else {
      write_file(format, std::string(kFormat) + "\n");
    }
    lock_fd_ = ::open((dir_ / "LOCK").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (lock_fd_ < 0) throw StoreError("cannot open lock file: " + std::string(std::strerror(errno)));
    if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(lock_fd_);
      throw StoreError("store " + dir_.string() + " is in use by another process");
    }
    replay();
    log_fd_ = ::open(log_path().c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (log_fd_ < 0) {
      ::close(lock_fd_);
      throw StoreError("cannot open log: " + std::string(std::strerror(errno)));
    }
  }

  ~Store() {
    if (log_fd_ >= 0) ::close(log_fd_);
    if (lock_fd_ >= 0) ::close(lock_fd_);
  }
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::filesystem::path& dir() const { return dir_; }

  std::optional<StoreRecord> get(RecordKind kind, const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = records_.find({kind, id});
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  StoreRecord require(RecordKind kind, const std::string& id) const {
    auto r = get(kind, id);
    if (!r) throw NotFoundError(std::string(to_string(kind)) + " '" + id + "' not found");
    return *r;
  }

  // Records of `kind` in id order, optionally filtered.
  std::vector<StoreRecord> list(RecordKind kind, const std::function<bool(const StoreRecord&)>& keep = {}) const {
    std::lock_guard lock(mu_);
    std::vector<StoreRecord> out;
    for (auto it = records_.lower_bound({kind, ""}); it != records_.end() && it->first.first == kind; ++it)
      if (!keep || keep(it->second)) out.push_back(it->second);
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return records_.size();
  }

  // Applies every mutation or none. Returns the written records.
  std::vector<StoreRecord> commit(const std::vector<Mutation>& mutations) {
    std::lock_guard lock(mu_);
    if (mutations.empty()) return {};
    const auto now = eval::utc_timestamp();
    std::map<std::pair<RecordKind, std::string>, StoreRecord> staged;
    std::vector<StoreRecord> written;
    for (const auto& m : mutations) {
      if (m.id.empty()) throw ArgumentError("record id must not be empty");
      const auto key = std::make_pair(m.kind, m.id);
      const StoreRecord* current = nullptr;
      if (auto s = staged.find(key); s != staged.end()) current = &s->second;
      else if (auto r = records_.find(key); r != records_.end()) current = &r->second;
      const std::uint64_t have = current ? current->version : 0;
      if (m.expected_version && *m.expected_version != have)
        throw ConflictError(std::string(to_string(m.kind)) + " '" + m.id + "' is at version " + std::to_string(have) +
                                ", expected " + std::to_string(*m.expected_version),
                            have);
      if (m.kind == RecordKind::review_task) check_review_transition(current, m);
      StoreRecord next;
      next.kind = m.kind;
      next.id = m.id;
      next.payload = m.payload;
      next.version = have + 1;
      next.created = current ? current->created : now;
      next.updated = now;
      staged[key] = next;
      written.push_back(std::move(next));
    }
    json txn = {{"txn", next_txn_}, {"at", now}, {"ops", json::array()}};
    for (const auto& r : written) {
      json op = r.to_json();
      op["op"] = "put";
      txn["ops"].push_back(std::move(op));
    }
    append_line(txn.dump() + "\n");
    ++next_txn_;
    for (auto& [key, rec] : staged) records_[key] = rec;
    return written;
  }

  StoreRecord put(RecordKind kind, const std::string& id, json payload,
                  std::optional<std::uint64_t> expected_version = std::nullopt) {
    return commit({{kind, id, std::move(payload), expected_version}}).front();
  }

  // Line-delimited snapshot of every record, ordered by kind then id.
  std::string export_jsonl() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& [key, r] : records_) out += r.to_json().dump() + "\n";
    return out;
  }

  // Loads exported records, keeping their versions and timestamps. Fails
  // without writing anything if any record already exists here.
  std::size_t import_jsonl(std::string_view text) {
    std::vector<StoreRecord> incoming;
    for (const auto& j : read_jsonl_text(text)) incoming.push_back(StoreRecord::from_json(j));
    std::lock_guard lock(mu_);
    std::set<std::pair<RecordKind, std::string>> seen;
    for (const auto& r : incoming) {
      if (r.version < 1) throw StoreError("import: record " + r.id + " has version 0");
      if (records_.count({r.kind, r.id}) || !seen.insert({r.kind, r.id}).second)
        throw ConflictError("import: " + std::string(to_string(r.kind)) + " '" + r.id + "' already exists", 0);
    }
    if (incoming.empty()) return 0;
    json txn = {{"txn", next_txn_}, {"at", eval::utc_timestamp()}, {"ops", json::array()}};
    for (const auto& r : incoming) {
      json op = r.to_json();
      op["op"] = "put";
      txn["ops"].push_back(std::move(op));
    }
    append_line(txn.dump() + "\n");
    ++next_txn_;
    for (const auto& r : incoming) records_[{r.kind, r.id}] = r;
    return incoming.size();
  }

 private:
  static constexpr const char* kFormat = "plforge-store 1";

  std::filesystem::path dir_;
  int lock_fd_ = -1;
  int log_fd_ = -1;
  mutable std::mutex mu_;
  std::map<std::pair<RecordKind, std::string>, StoreRecord> records_;
  std::uint64_t next_txn_ = 1;

  std::filesystem::path log_path() const { return dir_ / "log.jsonl"; }

  static void check_review_transition(const StoreRecord* current, const Mutation& m) {
    auto next = sft::ReviewTask::from_json(m.payload);
    if (next.id != m.id) throw ArgumentError("review task payload id '" + next.id + "' does not match '" + m.id + "'");
    if (!current) return;
    auto prev = sft::ReviewTask::from_json(current->payload);
    if (prev.status != next.status && !sft::transition_allowed(prev.status, next.status))
      throw sft::IllegalTransition("review task '" + m.id + "': " + std::string(sft::to_string(prev.status)) +
                                   " -> " + std::string(sft::to_string(next.status)) + " is not allowed");
  }

  // A failed write is cut back off so the log never holds a torn line.
  void append_line(const std::string& line) {
    const off_t before = ::lseek(log_fd_, 0, SEEK_END);
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
      ssize_t n = ::write(log_fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        const std::string why = std::strerror(errno);
        if (before >= 0 && ::ftruncate(log_fd_, before) != 0) errno = 0;  // best effort
        throw StoreError("log write failed: " + why);
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    if (::fsync(log_fd_) != 0) throw StoreError("log fsync failed: " + std::string(std::strerror(errno)));
  }

  void replay() {
    const auto path = log_path();
    if (!std::filesystem::exists(path)) return;
    const auto text = read_file(path);
    std::size_t pos = 0, line_no = 0, good_bytes = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      ++line_no;
      if (nl == std::string::npos) break;  // interrupted final write
      std::string_view line(text.data() + pos, nl - pos);
      pos = nl + 1;
      if (is_blank(line)) {
        good_bytes = pos;
        continue;
      }
      try {
        auto txn = json::parse(line);
        for (const auto& op : txn.at("ops")) {
          auto r = StoreRecord::from_json(op);
          records_[{r.kind, r.id}] = std::move(r);
        }
        next_txn_ = std::max(next_txn_, txn.at("txn").get<std::uint64_t>() + 1);
      } catch (const std::exception& e) {
        throw StoreError("corrupt store log " + path.string() + " line " + std::to_string(line_no) + ": " + e.what());
      }
      good_bytes = pos;
    }
    if (good_bytes < text.size()) std::filesystem::resize_file(path, good_bytes);
  }
};

}  // namespace plforge::orchestrator
