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

// Resource-limited execution of untrusted programs.
//
// Each run gets a fresh ephemeral directory. The child is confined by:
//   - rlimits on address space, CPU time, open files, processes, file size;
//   - a Landlock ruleset that denies every filesystem mutation outside the
//     ephemeral directory (and TCP bind/connect where the kernel supports it);
//   - a seccomp filter that fails socket() for every family but AF_UNIX.
// The wall-clock deadline is enforced by the parent with SIGKILL on the whole
// process group.

#pragma once

#include <linux/audit.h>
#include <linux/landlock.h>
#include <linux/seccomp.h>
#include <stddef.h>
#include <sys/socket.h>
#include <sys/syscall.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <system_error>
#include <vector>

#include "plforge/process.hpp"

namespace plforge {

class SandboxError : public Error {
 public:
  using Error::Error;
};

struct SandboxPolicy {
  std::chrono::milliseconds timeout{10'000};
  std::uint64_t memory_bytes = 512ULL << 20;
  rlim_t max_processes = 64;
  rlim_t max_open_files = 64;
  std::uint64_t max_file_bytes = 64ULL << 20;
  std::size_t max_output_bytes = 64 << 10;
  // Fail closed when the kernel cannot confine filesystem writes.
  bool require_fs_isolation = true;
  std::filesystem::path scratch_root;  // empty: system temp directory

  // Network access is never granted; there is no switch for it.
  static constexpr bool network_enabled = false;

  void validate() const {
    if (timeout.count() <= 0) throw ConfigError("sandbox timeout must be positive");
    if (memory_bytes == 0) throw ConfigError("sandbox memory cap must be positive");
  }

  json to_json() const {
    return {{"timeout_ms", timeout.count()},
            {"memory_bytes", memory_bytes},
            {"max_processes", max_processes},
            {"max_open_files", max_open_files},
            {"max_file_bytes", max_file_bytes},
            {"network", "disabled"}};
  }
};

// Owns a private scratch directory; removed recursively on destruction.
class EphemeralDir {
 public:
  explicit EphemeralDir(const std::filesystem::path& root = {}) {
    auto base = root.empty() ? std::filesystem::temp_directory_path() : root;
    std::filesystem::create_directories(base);
    std::string tmpl = (base / "plforge-XXXXXX").string();
    if (!::mkdtemp(tmpl.data()))
      throw SandboxError("cannot create scratch directory under " + base.string());
    path_ = std::filesystem::canonical(tmpl);
  }
  ~EphemeralDir() {
    std::error_code ec;
    if (!path_.empty()) std::filesystem::remove_all(path_, ec);
  }
  EphemeralDir(const EphemeralDir&) = delete;
  EphemeralDir& operator=(const EphemeralDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct SandboxResult {
  ProcessResult process;
  bool memory_exceeded = false;
  bool cpu_exceeded = false;

  bool timed_out() const { return process.timed_out || cpu_exceeded; }
};

namespace detail {

// Newer ABI bits; the system header may predate them.
inline constexpr std::uint64_t kLandlockRefer = 1ULL << 13;
inline constexpr std::uint64_t kLandlockTruncate = 1ULL << 14;
inline constexpr std::uint64_t kLandlockNetBindTcp = 1ULL << 0;
inline constexpr std::uint64_t kLandlockNetConnectTcp = 1ULL << 1;

struct LandlockRulesetAttr {
  std::uint64_t handled_access_fs;
  std::uint64_t handled_access_net;
};

inline int landlock_abi() {
  static const int abi = [] {
    long v = ::syscall(__NR_landlock_create_ruleset, nullptr, 0,
                       LANDLOCK_CREATE_RULESET_VERSION);
    return v < 0 ? 0 : static_cast<int>(v);
  }();
  return abi;
}

class FdGuard {
 public:
  explicit FdGuard(int fd = -1) : fd_(fd) {}
  ~FdGuard() {
    if (fd_ >= 0) ::close(fd_);
  }
  FdGuard(const FdGuard&) = delete;
  FdGuard& operator=(const FdGuard&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

// Ruleset allowing mutation only beneath `writable`; reads and execution are
// left unhandled and therefore permitted everywhere.
inline int build_landlock_ruleset(const std::filesystem::path& writable) {
  const int abi = landlock_abi();
  if (abi < 1) return -1;
  std::uint64_t write_rights =
      LANDLOCK_ACCESS_FS_WRITE_FILE | LANDLOCK_ACCESS_FS_REMOVE_DIR |
      LANDLOCK_ACCESS_FS_REMOVE_FILE | LANDLOCK_ACCESS_FS_MAKE_CHAR |
      LANDLOCK_ACCESS_FS_MAKE_DIR | LANDLOCK_ACCESS_FS_MAKE_REG |
      LANDLOCK_ACCESS_FS_MAKE_SOCK | LANDLOCK_ACCESS_FS_MAKE_FIFO |
      LANDLOCK_ACCESS_FS_MAKE_BLOCK | LANDLOCK_ACCESS_FS_MAKE_SYM;
  if (abi >= 2) write_rights |= kLandlockRefer;
  if (abi >= 3) write_rights |= kLandlockTruncate;

  LandlockRulesetAttr attr{write_rights, 0};
  std::size_t attr_size = sizeof(std::uint64_t);
  if (abi >= 4) {
    attr.handled_access_net = kLandlockNetBindTcp | kLandlockNetConnectTcp;
    attr_size = sizeof attr;
  }
  int fd = static_cast<int>(::syscall(__NR_landlock_create_ruleset, &attr, attr_size, 0));
  if (fd < 0) return -1;

  auto allow = [&](const std::filesystem::path& p, std::uint64_t rights) {
    FdGuard target(::open(p.c_str(), O_PATH | O_CLOEXEC));
    if (target.get() < 0) return false;
    landlock_path_beneath_attr rule{};
    rule.allowed_access = rights;
    rule.parent_fd = target.get();
    return ::syscall(__NR_landlock_add_rule, fd, LANDLOCK_RULE_PATH_BENEATH, &rule, 0) == 0;
  };
  if (!allow(writable, write_rights)) {
    ::close(fd);
    return -1;
  }
  const std::uint64_t file_rights =
      LANDLOCK_ACCESS_FS_WRITE_FILE | (abi >= 3 ? kLandlockTruncate : 0);
  allow("/dev/null", file_rights);
  return fd;
}

inline const sock_fprog& socket_filter() {
  static sock_filter code[] = {
      BPF_STMT(BPF_LD | BPF_W | BPF_ABS, offsetof(seccomp_data, arch)),
#if defined(__x86_64__)
      BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, AUDIT_ARCH_X86_64, 1, 0),
#elif defined(__aarch64__)
      BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, AUDIT_ARCH_AARCH64, 1, 0),
#else
#error "unsupported architecture for the seccomp socket filter"
#endif
      BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_KILL_PROCESS),
      BPF_STMT(BPF_LD | BPF_W | BPF_ABS, offsetof(seccomp_data, nr)),
      BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, __NR_io_uring_setup, 4, 0),
      BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, __NR_socket, 0, 2),
      BPF_STMT(BPF_LD | BPF_W | BPF_ABS, offsetof(seccomp_data, args[0])),
      BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, AF_UNIX, 0, 1),
      BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_ALLOW),
      BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_ERRNO | (EACCES & SECCOMP_RET_DATA)),
  };
  static const sock_fprog prog{static_cast<unsigned short>(sizeof code / sizeof code[0]),
                               code};
  return prog;
}

}  // namespace detail

inline bool fs_isolation_available() { return detail::landlock_abi() >= 1; }

// Runs argv inside `workdir` under `policy`. `workdir` must already exist
// and is the only place the child may write.
inline SandboxResult run_sandboxed(const std::vector<std::string>& argv,
                                   const SandboxPolicy& policy,
                                   const std::filesystem::path& workdir,
                                   std::string_view stdin_data = {}) {
  policy.validate();
  ChildRestrictions restrict;
  const auto cpu_seconds =
      static_cast<rlim_t>(std::chrono::ceil<std::chrono::seconds>(policy.timeout).count() + 1);
  restrict.limits = {
      {RLIMIT_AS, static_cast<rlim_t>(policy.memory_bytes)},
      {RLIMIT_CPU, cpu_seconds},
      {RLIMIT_NOFILE, policy.max_open_files},
      {RLIMIT_NPROC, policy.max_processes},
      {RLIMIT_FSIZE, static_cast<rlim_t>(policy.max_file_bytes)},
      {RLIMIT_CORE, 0},
  };
  int ruleset = detail::build_landlock_ruleset(workdir);
  detail::FdGuard ruleset_guard(ruleset);
  if (ruleset < 0 && policy.require_fs_isolation)
    throw SandboxError("filesystem isolation unavailable (Landlock not supported by kernel)");
  restrict.landlock_ruleset_fd = ruleset;
  restrict.seccomp = detail::socket_filter();

  ProcessSpec spec;
  spec.argv = argv;
  spec.stdin_data = std::string(stdin_data);
  spec.working_dir = workdir;
  spec.timeout = policy.timeout;
  spec.output_limit = policy.max_output_bytes;
  spec.env = {"PATH=/usr/local/bin:/usr/bin:/bin", "HOME=" + workdir.string(),
              "TMPDIR=" + workdir.string(), "LANG=C.UTF-8"};

  SandboxResult result;
  try {
    result.process = run_process(spec, restrict);
  } catch (const ProcessError& e) {
    throw SandboxError(e.what());
  }
  const auto& p = result.process;
  result.cpu_exceeded = p.term_signal == SIGXCPU;
  // A SIGKILL we did not send is the kernel's OOM killer.
  result.memory_exceeded =
      (p.term_signal == SIGKILL && !p.timed_out) ||
      static_cast<std::uint64_t>(p.max_rss_kib) * 1024 >= policy.memory_bytes;
  return result;
}

}  // namespace plforge
