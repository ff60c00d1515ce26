#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mev {

struct ProcessResult {
  int exit_code = -1;    // -1 when killed by a signal
  int signal = 0;
  bool timed_out = false;
  std::string output;    // stdout and stderr interleaved, capped
  bool output_truncated = false;
  std::chrono::milliseconds elapsed{0};
};

// Runs `/bin/sh -c command` in its own process group with cwd set. On
// timeout the whole group is killed.
ProcessResult run_shell(const std::string& command, const std::filesystem::path& cwd,
                        std::chrono::milliseconds timeout, std::size_t output_cap = 1 << 20);

std::string shell_quote(std::string_view arg);

// First program word of a command template; empty if it is a placeholder.
std::string command_program(std::string_view command_template);

// PATH lookup (or direct check for names containing '/').
bool program_exists(const std::string& program);

}  // namespace mev
