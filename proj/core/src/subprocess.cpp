#include "mev/subprocess.hpp"

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "mev/errors.hpp"

namespace mev {

namespace {

struct Pipe {
  int fds[2] = {-1, -1};
  ~Pipe() {
    for (int& fd : fds) {
      if (fd >= 0) ::close(fd);
    }
  }
};

}  // namespace

std::string shell_quote(std::string_view arg) {
  std::string out = "'";
  for (const char ch : arg) {
    if (ch == '\'') {
      out += "'\\''";
    } else {
      out.push_back(ch);
    }
  }
  out.push_back('\'');
  return out;
}

std::string command_program(std::string_view tmpl) {
  std::size_t i = 0;
  for (;;) {
    while (i < tmpl.size() && (tmpl[i] == ' ' || tmpl[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < tmpl.size() && tmpl[i] != ' ' && tmpl[i] != '\t') ++i;
    std::string word(tmpl.substr(start, i - start));
    if (word.empty()) return {};
    if (word.find('{') != std::string::npos) return {};
    // skip leading VAR=value assignments
    if (word.find('=') != std::string::npos && word.find('/') == std::string::npos) continue;
    if (word.size() >= 2 && (word.front() == '\'' || word.front() == '"') && word.back() == word.front()) {
      word = word.substr(1, word.size() - 2);
    }
    return word;
  }
}

bool program_exists(const std::string& program) {
  if (program.empty()) return false;
  if (program.find('/') != std::string::npos) return ::access(program.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::string_view dirs(path);
  while (!dirs.empty()) {
    const std::size_t colon = dirs.find(':');
    const std::string dir(dirs.substr(0, colon));
    const std::string candidate = (dir.empty() ? "." : dir) + "/" + program;
    if (::access(candidate.c_str(), X_OK) == 0) return true;
    if (colon == std::string_view::npos) break;
    dirs.remove_prefix(colon + 1);
  }
  return false;
}

ProcessResult run_shell(const std::string& command, const std::filesystem::path& cwd,
                        std::chrono::milliseconds timeout, std::size_t output_cap) {
  Pipe out;
  if (::pipe2(out.fds, O_CLOEXEC) != 0) throw IoError(std::string("pipe: ") + std::strerror(errno));

  const std::string cwd_str = cwd.string();
  const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
  const auto start = std::chrono::steady_clock::now();

  const pid_t pid = ::fork();
  if (pid < 0) throw IoError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    if (::chdir(cwd_str.c_str()) != 0) ::_exit(126);
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::dup2(out.fds[1], STDOUT_FILENO);
    ::dup2(out.fds[1], STDERR_FILENO);
    ::execv("/bin/sh", const_cast<char* const*>(argv));
    ::_exit(127);
  }
  ::setpgid(pid, pid);  // race-free either way
  ::close(out.fds[1]);
  out.fds[1] = -1;

  ProcessResult result;
  const auto deadline = start + timeout;
  char buf[4096];
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      break;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
    pollfd pfd{out.fds[0], POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(std::max<long long>(1, remaining.count())));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (rc == 0) continue;
    const ssize_t n = ::read(out.fds[0], buf, sizeof(buf));
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      break;
    }
    if (n == 0) break;  // every writer closed
    const std::size_t room = output_cap > result.output.size() ? output_cap - result.output.size() : 0;
    const std::size_t take = std::min<std::size_t>(room, static_cast<std::size_t>(n));
    result.output.append(buf, take);
    if (take < static_cast<std::size_t>(n)) result.output_truncated = true;
  }

  if (result.timed_out) ::kill(-pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  // reap anything the shell left behind in the group
  ::kill(-pid, SIGKILL);

  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.signal = WTERMSIG(status);
  }
  result.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  return result;
}

}  // namespace mev
