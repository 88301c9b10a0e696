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

// fork/exec with captured output, a wall-clock deadline and optional
// pre-exec restrictions. Only async-signal-safe calls run between fork and
// exec; every allocation happens in the parent.

#pragma once

#include <fcntl.h>
#include <linux/filter.h>
#include <poll.h>
#include <pthread.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/resource.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "plforge/common.hpp"

#ifndef __NR_landlock_restrict_self
#define __NR_landlock_restrict_self 446
#endif

namespace plforge {

// The child could not be started (missing executable, pipe failure...).
// Distinct from anything the child itself does.
class ProcessError : public Error {
 public:
  using Error::Error;
};

struct ResourceLimit {
  int resource;
  rlim_t value;
};

// Applied in the child right before exec, in this order: process group,
// working directory, rlimits, no_new_privs, landlock, seccomp.
struct ChildRestrictions {
  std::vector<ResourceLimit> limits;
  int landlock_ruleset_fd = -1;
  std::optional<sock_fprog> seccomp;
};

struct ProcessSpec {
  std::vector<std::string> argv;
  std::string stdin_data;
  std::filesystem::path working_dir;
  std::chrono::milliseconds timeout{0};  // 0 disables the deadline
  std::size_t output_limit = 1 << 20;    // per stream
  std::vector<std::string> env;          // empty inherits the parent's
};

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal
  int term_signal = 0;
  bool timed_out = false;
  bool output_truncated = false;
  std::string out;
  std::string err;
  double wall_seconds = 0.0;
  long max_rss_kib = 0;

  bool success() const { return !timed_out && term_signal == 0 && exit_code == 0; }
};

namespace detail {

inline std::string resolve_executable(const std::string& name) {
  if (name.find('/') != std::string::npos) return name;
  const char* path = std::getenv("PATH");
  for (const auto& dir : split(path ? path : "/usr/bin:/bin", ':')) {
    if (dir.empty()) continue;
    auto candidate = std::filesystem::path(dir) / name;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate.string();
  }
  return name;
}

// A child that exits without reading its input must not kill the parent.
// SIGPIPE is blocked on this thread for the write and any pending instance
// is consumed before the mask is restored.
inline ssize_t write_no_sigpipe(int fd, const char* data, std::size_t len) {
  sigset_t pipe_set, old;
  sigemptyset(&pipe_set);
  sigaddset(&pipe_set, SIGPIPE);
  ::pthread_sigmask(SIG_BLOCK, &pipe_set, &old);
  ssize_t n = ::write(fd, data, len);
  const int saved = errno;
  if (n < 0 && saved == EPIPE) {
    timespec zero{0, 0};
    while (::sigtimedwait(&pipe_set, nullptr, &zero) == SIGPIPE) {
    }
  }
  ::pthread_sigmask(SIG_SETMASK, &old, nullptr);
  errno = saved;
  return n;
}

inline void set_cloexec_nonblock(int fd) {
  ::fcntl(fd, F_SETFD, FD_CLOEXEC);
  ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);
}

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0)
      throw ProcessError(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() { close_both(); }
  void close_read() { close_one(0); }
  void close_write() { close_one(1); }
  void close_both() { close_one(0), close_one(1); }
  void close_one(int i) {
    if (fd[i] >= 0) ::close(fd[i]);
    fd[i] = -1;
  }
  Pipe(const Pipe&) = delete;
  Pipe& operator=(const Pipe&) = delete;
};

[[noreturn]] inline void child_fail(int report_fd, int err) {
  (void)!::write(report_fd, &err, sizeof err);
  ::_exit(127);
}

}  // namespace detail

inline ProcessResult run_process(const ProcessSpec& spec,
                                 const ChildRestrictions& restrict = {}) {
  using Clock = std::chrono::steady_clock;
  if (spec.argv.empty()) throw ProcessError("empty command line");

  const std::string exe = detail::resolve_executable(spec.argv.front());
  std::vector<char*> argv;
  for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  std::vector<char*> envp;
  for (const auto& e : spec.env) envp.push_back(const_cast<char*>(e.c_str()));
  envp.push_back(nullptr);
  const std::string workdir = spec.working_dir.string();

  detail::Pipe in, out, err, report;
  const auto started = Clock::now();
  pid_t pid = ::fork();
  if (pid < 0) throw ProcessError(std::string("fork: ") + std::strerror(errno));

  if (pid == 0) {
    const int rep = report.fd[1];
    ::setpgid(0, 0);
    if (::dup2(in.fd[0], STDIN_FILENO) < 0 || ::dup2(out.fd[1], STDOUT_FILENO) < 0 ||
        ::dup2(err.fd[1], STDERR_FILENO) < 0)
      detail::child_fail(rep, errno);
    if (!workdir.empty() && ::chdir(workdir.c_str()) != 0) detail::child_fail(rep, errno);
    for (const auto& lim : restrict.limits) {
      rlimit rl{lim.value, lim.value};
      if (::setrlimit(lim.resource, &rl) != 0) detail::child_fail(rep, errno);
    }
    if (restrict.landlock_ruleset_fd >= 0 || restrict.seccomp) {
      if (::prctl(PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0) != 0) detail::child_fail(rep, errno);
    }
    if (restrict.landlock_ruleset_fd >= 0 &&
        ::syscall(__NR_landlock_restrict_self, restrict.landlock_ruleset_fd, 0) != 0)
      detail::child_fail(rep, errno);
    if (restrict.seccomp &&
        ::prctl(PR_SET_SECCOMP, 2 /* SECCOMP_MODE_FILTER */, &*restrict.seccomp) != 0)
      detail::child_fail(rep, errno);
    if (spec.env.empty())
      ::execv(exe.c_str(), argv.data());
    else
      ::execve(exe.c_str(), argv.data(), envp.data());
    detail::child_fail(rep, errno);
  }

  ::setpgid(pid, pid);
  in.close_read();
  out.close_write();
  err.close_write();
  report.close_write();

  int exec_errno = 0;
  if (::read(report.fd[0], &exec_errno, sizeof exec_errno) == sizeof exec_errno) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    throw ProcessError("cannot execute '" + spec.argv.front() +
                       "': " + std::strerror(exec_errno));
  }

  ProcessResult result;
  detail::set_cloexec_nonblock(out.fd[0]);
  detail::set_cloexec_nonblock(err.fd[0]);
  detail::set_cloexec_nonblock(in.fd[1]);
  std::size_t written = 0;
  if (spec.stdin_data.empty()) in.close_write();

  auto drain = [&](int fd, std::string& sink) {
    char buf[8192];
    while (true) {
      ssize_t n = ::read(fd, buf, sizeof buf);
      if (n > 0) {
        std::size_t room = spec.output_limit > sink.size() ? spec.output_limit - sink.size() : 0;
        if (static_cast<std::size_t>(n) > room) result.output_truncated = true;
        sink.append(buf, std::min<std::size_t>(room, static_cast<std::size_t>(n)));
        continue;
      }
      return n == 0;  // EOF
    }
  };

  const auto deadline = started + spec.timeout;
  int status = 0;
  rusage usage{};
  bool reaped = false;
  while (!reaped) {
    std::vector<pollfd> fds;
    if (out.fd[0] >= 0) fds.push_back({out.fd[0], POLLIN, 0});
    if (err.fd[0] >= 0) fds.push_back({err.fd[0], POLLIN, 0});
    if (in.fd[1] >= 0) fds.push_back({in.fd[1], POLLOUT, 0});
    int wait_ms = 20;
    if (spec.timeout.count() > 0) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      wait_ms = static_cast<int>(std::clamp<long>(left.count(), 0, 20));
    }
    if (!fds.empty()) {
      ::poll(fds.data(), fds.size(), wait_ms);
    } else {
      ::usleep(static_cast<useconds_t>(std::max(wait_ms, 1)) * 1000);
    }
    for (const auto& p : fds) {
      if (p.fd == in.fd[1] && (p.revents & (POLLOUT | POLLERR | POLLHUP))) {
        ssize_t n = detail::write_no_sigpipe(in.fd[1], spec.stdin_data.data() + written,
                                             spec.stdin_data.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if (n < 0 && errno != EAGAIN) written = spec.stdin_data.size();
        if (written >= spec.stdin_data.size()) in.close_write();
      } else if (p.fd == out.fd[0] && p.revents) {
        if (drain(out.fd[0], result.out)) out.close_read();
      } else if (p.fd == err.fd[0] && p.revents) {
        if (drain(err.fd[0], result.err)) err.close_read();
      }
    }
    pid_t r = ::wait4(pid, &status, WNOHANG, &usage);
    if (r == pid) {
      reaped = true;
      break;
    }
    if (spec.timeout.count() > 0 && Clock::now() >= deadline) {
      ::killpg(pid, SIGKILL);
      ::wait4(pid, &status, 0, &usage);
      result.timed_out = true;
      reaped = true;
    }
  }
  // Stray grandchildren must not outlive the run or hold the pipes open.
  ::killpg(pid, SIGKILL);
  if (out.fd[0] >= 0) drain(out.fd[0], result.out);
  if (err.fd[0] >= 0) drain(err.fd[0], result.err);

  result.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  result.max_rss_kib = usage.ru_maxrss;
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.term_signal = WTERMSIG(status);
  }
  return result;
}

// Convenience for trusted helper commands (tokenizer plugins, generators):
// no restrictions, stdin in, stdout out.
inline ProcessResult run_command(const std::vector<std::string>& argv,
                                 std::string_view input,
                                 std::chrono::milliseconds timeout = std::chrono::seconds(60)) {
  ProcessSpec spec;
  spec.argv = argv;
  spec.stdin_data = std::string(input);
  spec.timeout = timeout;
  spec.output_limit = 64 << 20;
  return run_process(spec);
}

// Splits a command template on whitespace, honouring single and double
// quotes. No shell expansion happens.
inline std::vector<std::string> split_command(std::string_view cmd) {
  std::vector<std::string> args;
  std::string cur;
  bool have = false;
  char quote = 0;
  for (char c : cmd) {
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        cur.push_back(c);
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      have = true;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (have) args.push_back(std::move(cur));
      cur.clear();
      have = false;
    } else {
      cur.push_back(c);
      have = true;
    }
  }
  if (quote) throw ConfigError("unterminated quote in command: " + std::string(cmd));
  if (have) args.push_back(std::move(cur));
  return args;
}

}  // namespace plforge
