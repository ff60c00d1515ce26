#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "mev/types.hpp"

namespace mev {

using Millis = std::chrono::milliseconds;

inline constexpr std::size_t kDiagnosticLimit = 8 * 1024;

struct PrecheckResult {
  bool ok = false;
  std::string diagnostic;
};

// Cheap structural filter: non-empty, has a module, balanced
// module/endmodule, parentheses, and begin/end. Passing proves nothing
// about syntax.
PrecheckResult precheck(std::string_view code);

// Text from the first line-leading `module` keyword through the last
// `endmodule`; prose around the code is dropped. Returns the input when no
// module keyword is found.
std::string extract_verilog(std::string_view generated);

struct SimulatorConfig {
  // {files}: space-separated source files; {out}: compiled artifact.
  std::string compile_cmd = "iverilog -g2012 -o {out} {files}";
  std::string run_cmd = "vvp -n {out}";
  std::string pass_marker = "ALL_TESTS_PASSED";
  Millis compile_timeout{30000};
  Millis run_timeout{60000};
  std::filesystem::path workdir_root = std::filesystem::temp_directory_path() / "mev-work";
  bool keep_artifacts = false;
  // Run the structural precheck before spending a compiler invocation.
  bool use_precheck = true;
  // Verify identical (problem, code) pairs once per batch.
  bool reuse_identical_samples = true;

  void validate() const;
};

void to_json(json& j, const SimulatorConfig& c);
void from_json(const json& j, SimulatorConfig& c);

// Command templates for the bundled vstub simulator at `vstub_path`.
SimulatorConfig stub_simulator_config(const std::filesystem::path& vstub_path);

// Throws SimulatorMissing when a template's program cannot be found.
void require_simulator(const SimulatorConfig& config);
bool simulator_available(const SimulatorConfig& config) noexcept;

// Identifies the sample a check belongs to; names its work directory.
struct CheckContext {
  std::string problem_id = "adhoc";
  int sample_index = 0;
};

// Compile only. functional_ok is always false.
// Throws SimulatorMissing, WorkdirFailure.
VerifyOutcome syntax_check(std::string_view code, const SimulatorConfig& config,
                           const CheckContext& ctx = {});

// Compile design + testbench, run, look for the pass marker.
// Throws SimulatorMissing, WorkdirFailure.
VerifyOutcome functional_check(std::string_view code, std::string_view testbench,
                               const SimulatorConfig& config, const CheckContext& ctx = {});

struct SampleKey {
  std::string problem_id;
  int sample_index = 0;

  auto operator<=>(const SampleKey&) const = default;
};

struct BatchStats {
  std::size_t simulations = 0;     // functional checks actually executed
  std::size_t peak_concurrent = 0; // max simultaneous checks
};

// Verifies every sample; per-sample failures become failed outcomes.
std::map<SampleKey, VerifyOutcome> verify_batch(std::span<const GenerationSample> samples,
                                                const std::map<std::string, Problem>& problems,
                                                const SimulatorConfig& config,
                                                std::size_t parallelism, BatchStats* stats = nullptr);

// {problem_id, sample_index, syntax_ok, functional_ok, timed_out, detail}
ordered_json outcome_line(const SampleKey& key, const VerifyOutcome& outcome);

}  // namespace mev
