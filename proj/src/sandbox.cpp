// Copyright 2026 The iterlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "iterlab/errors.hpp"
#include "iterlab/evaluators.hpp"

namespace iterlab {

namespace {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd_ = std::exchange(o.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

SandboxVerdict infra(std::string why, long long ms) {
  if (why.size() > 2000) why = why.substr(why.size() - 2000);
  return SandboxVerdict{0, ErrorType::kInfra, std::move(why), ms};
}

}  // namespace

SubprocessSandbox::SubprocessSandbox(std::vector<std::string> argv,
                                     std::chrono::seconds grace)
    : argv_(std::move(argv)), grace_(grace) {
  if (argv_.empty()) throw PreconditionError("sandbox command is empty");
}

SandboxVerdict SubprocessSandbox::execute(const SandboxJob& job) {
  using Steady = std::chrono::steady_clock;
  const auto start = Steady::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Steady::now() - start)
        .count();
  };

  int in_pair[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, in_pair) != 0) {
    return infra(std::string("socketpair: ") + std::strerror(errno), 0);
  }
  Fd in_parent(in_pair[0]), in_child(in_pair[1]);
  int out_pipe[2], err_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    return infra(std::string("pipe: ") + std::strerror(errno), 0);
  }
  Fd out_read(out_pipe[0]), out_write(out_pipe[1]);
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    return infra(std::string("pipe: ") + std::strerror(errno), 0);
  }
  Fd err_read(err_pipe[0]), err_write(err_pipe[1]);

  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) return infra(std::string("fork: ") + std::strerror(errno), 0);
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_child.get(), STDIN_FILENO);
    ::dup2(out_write.get(), STDOUT_FILENO);
    ::dup2(err_write.get(), STDERR_FILENO);
    ::execvp(args[0], args.data());
    _exit(127);
  }
  in_child.reset();
  out_write.reset();
  err_write.reset();

  const std::string input = to_json_value(job).dump();
  std::size_t written = 0;
  std::string out, err;
  const auto deadline =
      start + std::chrono::seconds(std::max(job.timeout_s, 1)) + grace_;
  bool killed = false;

  ::fcntl(in_parent.get(), F_SETFL, O_NONBLOCK);
  while (out_read.get() >= 0 || err_read.get() >= 0) {
    std::vector<pollfd> fds;
    if (in_parent.get() >= 0) fds.push_back({in_parent.get(), POLLOUT, 0});
    if (out_read.get() >= 0) fds.push_back({out_read.get(), POLLIN, 0});
    if (err_read.get() >= 0) fds.push_back({err_read.get(), POLLIN, 0});
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - Steady::now());
    if (left.count() <= 0) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      killed = true;
      break;
    }
    int rc = ::poll(fds.data(), fds.size(), static_cast<int>(left.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc < 0) break;
    for (const auto& p : fds) {
      if (p.revents == 0) continue;
      if (p.fd == in_parent.get()) {
        ssize_t n = ::send(p.fd, input.data() + written, input.size() - written,
                           MSG_NOSIGNAL);
        if (n > 0) written += static_cast<std::size_t>(n);
        if (n < 0 && errno != EAGAIN) written = input.size();
        if (written >= input.size()) {
          ::shutdown(p.fd, SHUT_WR);
          in_parent.reset();
        }
      } else {
        char buf[8192];
        ssize_t n = ::read(p.fd, buf, sizeof buf);
        std::string& sink = p.fd == out_read.get() ? out : err;
        if (n > 0) {
          sink.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0 || errno != EAGAIN) {
          (p.fd == out_read.get() ? out_read : err_read).reset();
        }
      }
    }
  }

  int status = 0;
  ::waitpid(pid, &status, 0);
  const long long ms = elapsed_ms();
  if (killed) return infra("sandbox shim exceeded its deadline", ms);
  if (!WIFEXITED(status)) return infra("sandbox shim died by signal", ms);
  if (WEXITSTATUS(status) != 0) {
    return infra("sandbox shim exited " + std::to_string(WEXITSTATUS(status)) +
                     ": " + err,
                 ms);
  }
  auto j = Json::parse(out, nullptr, false);
  if (j.is_discarded()) return infra("sandbox shim wrote invalid JSON", ms);
  try {
    return parse_verdict(j);
  } catch (const Error& e) {
    return infra(std::string("bad verdict: ") + e.what(), ms);
  }
}

}  // namespace iterlab
