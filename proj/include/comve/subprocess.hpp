#pragma once

// Line-oriented external process contract: the child reads UTF-8 text lines
// from stdin and writes exactly one output line per input line, in order,
// then exits 0. Input is fed from a writer thread in flushed batches while
// the parent drains stdout, so arbitrarily large inputs cannot deadlock on
// pipe buffers regardless of how the child schedules its output.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "comve/errors.hpp"

namespace comve {

struct TranslatorHandle {
  std::vector<std::string> argv;  // program + arguments, exec'd directly
  std::size_t batch_size = 64;

  // Runs `command` through /bin/sh so quoting and pipes work.
  static TranslatorHandle shell(std::string command,
                                std::size_t batch_size = 64) {
    return {{"/bin/sh", "-c", std::move(command)}, batch_size};
  }
};

namespace detail {

inline void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

struct Pipe {
  int fds[2] = {-1, -1};
  Pipe() {
    if (::pipe(fds) != 0)
      throw contract_error("pipe() failed: " +
                           std::string(std::strerror(errno)));
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (fds[0] >= 0) ::close(fds[0]);
    fds[0] = -1;
  }
  void close_write() {
    if (fds[1] >= 0) ::close(fds[1]);
    fds[1] = -1;
  }
};

inline bool write_all(int fd, const std::string& buf) {
  std::size_t off = 0;
  while (off < buf.size()) {
    const ssize_t n = ::write(fd, buf.data() + off, buf.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;  // EPIPE etc.; the exit status check reports it
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace detail

// Feeds input_lines to the process and returns its output lines. Throws
// contract_error naming `stage` when the process cannot be spawned, exits
// non-zero, or produces the wrong number of lines.
inline std::vector<std::string> run_line_process(
    const TranslatorHandle& handle, std::span<const std::string> input_lines,
    std::string_view stage) {
  const std::string who = std::string(stage) + " translator";
  if (handle.argv.empty())
    throw validation_error(who + ": empty command");
  for (const auto& line : input_lines)
    if (line.find('\n') != std::string::npos)
      throw validation_error(who + ": input sentence contains a newline");

  detail::ignore_sigpipe_once();
  detail::Pipe to_child, from_child;
  const pid_t pid = ::fork();
  if (pid < 0)
    throw contract_error(who + ": fork() failed: " +
                         std::string(std::strerror(errno)));
  if (pid == 0) {
    ::dup2(to_child.fds[0], STDIN_FILENO);
    ::dup2(from_child.fds[1], STDOUT_FILENO);
    to_child.close_read();
    to_child.close_write();
    from_child.close_read();
    from_child.close_write();
    std::vector<char*> argv;
    for (const auto& a : handle.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }
  to_child.close_read();
  from_child.close_write();

  // writer thread streams batches of batch_size lines
  const int write_fd = to_child.fds[1];
  const std::size_t batch_size = handle.batch_size ? handle.batch_size : 64;
  std::thread writer([&] {
    std::string batch;
    std::size_t pending = 0;
    for (const auto& line : input_lines) {
      batch += line;
      batch += '\n';
      if (++pending == batch_size) {
        if (!detail::write_all(write_fd, batch)) break;
        batch.clear();
        pending = 0;
      }
    }
    if (pending) detail::write_all(write_fd, batch);
    ::close(to_child.fds[1]);
    to_child.fds[1] = -1;
  });

  std::vector<std::string> output;
  std::string tail;
  char buf[1 << 16];
  while (true) {
    const ssize_t n = ::read(from_child.fds[0], buf, sizeof(buf));
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (n == 0) break;
    std::size_t start = 0;
    for (ssize_t i = 0; i < n; ++i) {
      if (buf[i] == '\n') {
        tail.append(buf + start, buf + i);
        output.push_back(std::move(tail));
        tail.clear();
        start = static_cast<std::size_t>(i) + 1;
      }
    }
    tail.append(buf + start, buf + n);
  }
  if (!tail.empty()) output.push_back(std::move(tail));

  writer.join();
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const std::string detail =
        WIFEXITED(status)
            ? "exited with status " + std::to_string(WEXITSTATUS(status))
            : "terminated by signal " + std::to_string(WTERMSIG(status));
    throw contract_error(who + " " + detail);
  }
  if (output.size() != input_lines.size())
    throw contract_error(who + " produced " + std::to_string(output.size()) +
                         " lines for " + std::to_string(input_lines.size()) +
                         " inputs");
  return output;
}

}  // namespace comve
