#pragma once

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mev/types.hpp"
#include "mev/verify.hpp"

namespace mev::test {

namespace fs = std::filesystem;

inline const fs::path kDataDir = MEV_DATA_DIR;
inline const fs::path kFixtureDir = MEV_FIXTURE_DIR;
inline const fs::path kVstub = MEV_VSTUB;
inline const fs::path kCli = MEV_CLI;

// Unique directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("mev-test-" + std::to_string(::getpid()) + "-" + std::to_string(stamp) + "-" +
             std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, std::string_view text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SimulatorConfig stub_config(const fs::path& workdir, std::chrono::milliseconds run_timeout = std::chrono::milliseconds(10000)) {
  SimulatorConfig c = stub_simulator_config(kVstub);
  c.workdir_root = workdir;
  c.run_timeout = run_timeout;
  return c;
}

// ---- hand-rolled generators ----

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::uint64_t u64() { return rng_(); }
  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(range(0, static_cast<int>(v.size()) - 1))];
  }
  std::mt19937_64& engine() { return rng_; }

  std::string ident(int max_len = 8) {
    static const std::string kFirst = "abcdefghijklmnopqrstuvwxyz_";
    static const std::string kRest = "abcdefghijklmnopqrstuvwxyz_0123456789";
    std::string s(1, kFirst[static_cast<std::size_t>(range(0, static_cast<int>(kFirst.size()) - 1))]);
    const int n = range(0, max_len - 1);
    for (int i = 0; i < n; ++i) s.push_back(kRest[static_cast<std::size_t>(range(0, static_cast<int>(kRest.size()) - 1))]);
    return s;
  }

  // Printable text plus the occasional multi-byte code point, tab, or newline.
  std::string text(int max_len = 40) {
    static const std::vector<std::string> kExtra = {"\t", "\n", "\xC3\xA9", "\xE2\x86\x92", "\"", "\\"};
    std::string s;
    const int n = range(0, max_len);
    for (int i = 0; i < n; ++i) {
      if (coin(0.1)) {
        s += pick(kExtra);
      } else {
        s.push_back(static_cast<char>(range(0x20, 0x7E)));
      }
    }
    return s;
  }

  // Small Verilog-looking module; `pool` > 0 limits the body variety so
  // duplicates appear.
  std::string verilog(int pool = 0) {
    const int variant = pool > 0 ? range(0, pool - 1) : range(0, 1 << 20);
    std::string code = "module m" + std::to_string(variant) + "(input a, output y);\n";
    code += "  assign y = " + std::string(variant % 2 ? "~a" : "a") + ";";
    if (coin(0.3)) code += "   ";  // trailing whitespace, removed by normalization
    code += coin(0.3) ? "\r\n" : "\n";
    code += "endmodule\n";
    return code;
  }

  ComplexityCategory category() { return kAllCategories[static_cast<std::size_t>(range(0, 3))]; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace mev::test
