#include "mev/verify.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <random>

#include "mev/errors.hpp"
#include "mev/hashing.hpp"
#include "mev/parallel.hpp"
#include "mev/subprocess.hpp"

namespace fs = std::filesystem;

namespace mev {

namespace {

constexpr std::string_view kDesignFile = "design.v";
constexpr std::string_view kTestbenchFile = "tb.v";
constexpr std::string_view kOutFile = "sim.out";

std::string replace_all(std::string text, std::string_view needle, const std::string& with) {
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + with.size())) {
    text.replace(pos, needle.size(), with);
  }
  return text;
}

std::string expand(const std::string& tmpl, const std::vector<std::string_view>& files) {
  std::string joined;
  for (const auto f : files) {
    if (!joined.empty()) joined.push_back(' ');
    joined += shell_quote(f);
  }
  return replace_all(replace_all(tmpl, "{files}", joined), "{out}", shell_quote(kOutFile));
}

std::string truncate_diagnostic(std::string text) {
  if (text.size() > kDiagnosticLimit) {
    text.resize(kDiagnosticLimit);
    text += "\n[... output truncated]";
  }
  return text;
}

std::string sanitize(std::string_view id) {
  std::string out;
  for (const char ch : id) {
    out.push_back(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ? ch : '_');
  }
  return out.empty() ? "problem" : out;
}

std::string run_nonce() {
  static std::atomic<std::uint64_t> counter{0};
  static const std::uint64_t base = [] {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }();
  const std::uint64_t v = splitmix64(base ^ counter.fetch_add(1));
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(12, '0');
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = kHex[(v >> (4 * i)) & 0xF];
  return out;
}

// Work directory that removes itself unless artifacts are kept.
class WorkDir {
 public:
  WorkDir(const SimulatorConfig& config, const CheckContext& ctx) : keep_(config.keep_artifacts) {
    path_ = config.workdir_root /
            (sanitize(ctx.problem_id) + "-s" + std::to_string(ctx.sample_index) + "-" + run_nonce());
    std::error_code ec;
    fs::create_directories(path_, ec);
    if (ec) throw WorkdirFailure("cannot create work directory " + path_.string() + ": " + ec.message());
  }
  ~WorkDir() {
    if (!keep_) {
      std::error_code ec;
      fs::remove_all(path_, ec);
    }
  }
  WorkDir(const WorkDir&) = delete;
  WorkDir& operator=(const WorkDir&) = delete;

  const fs::path& path() const noexcept { return path_; }

  void write(std::string_view name, std::string_view content) const {
    std::ofstream out(path_ / name, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw WorkdirFailure("cannot write " + (path_ / name).string());
  }

 private:
  fs::path path_;
  bool keep_;
};

ProcessResult compile(const SimulatorConfig& config, const WorkDir& dir,
                      const std::vector<std::string_view>& files) {
  auto result = run_shell(expand(config.compile_cmd, files), dir.path(), config.compile_timeout);
  if (result.exit_code == 127 && !result.timed_out) {
    throw SimulatorMissing("compile command not found: " + command_program(config.compile_cmd));
  }
  return result;
}

std::string describe_failure(std::string_view phase, const ProcessResult& r) {
  std::string head(phase);
  if (r.timed_out) {
    head += " timed out";
  } else if (r.signal != 0) {
    head += " killed by signal " + std::to_string(r.signal);
  } else {
    head += " exit " + std::to_string(r.exit_code);
  }
  return truncate_diagnostic(head + "\n" + r.output);
}

}  // namespace

void SimulatorConfig::validate() const {
  if (compile_cmd.find("{out}") == std::string::npos || compile_cmd.find("{files}") == std::string::npos) {
    throw ConfigError("compile_cmd must contain {out} and {files}");
  }
  if (run_cmd.find("{out}") == std::string::npos) throw ConfigError("run_cmd must contain {out}");
  if (compile_timeout <= Millis::zero() || run_timeout <= Millis::zero()) {
    throw ConfigError("simulator timeouts must be positive");
  }
  if (pass_marker.empty()) throw ConfigError("pass_marker must be non-empty");
}

void to_json(json& j, const SimulatorConfig& c) {
  j = json{{"compile_cmd", c.compile_cmd},
           {"run_cmd", c.run_cmd},
           {"pass_marker", c.pass_marker},
           {"compile_timeout_ms", c.compile_timeout.count()},
           {"run_timeout_ms", c.run_timeout.count()},
           {"workdir_root", c.workdir_root.string()},
           {"keep_artifacts", c.keep_artifacts},
           {"use_precheck", c.use_precheck},
           {"reuse_identical_samples", c.reuse_identical_samples}};
}

void from_json(const json& j, SimulatorConfig& c) {
  SimulatorConfig out;
  out.compile_cmd = j.value("compile_cmd", out.compile_cmd);
  out.run_cmd = j.value("run_cmd", out.run_cmd);
  out.pass_marker = j.value("pass_marker", out.pass_marker);
  out.compile_timeout = Millis(j.value("compile_timeout_ms", out.compile_timeout.count()));
  out.run_timeout = Millis(j.value("run_timeout_ms", out.run_timeout.count()));
  if (j.contains("workdir_root")) out.workdir_root = j.at("workdir_root").get<std::string>();
  out.keep_artifacts = j.value("keep_artifacts", out.keep_artifacts);
  out.use_precheck = j.value("use_precheck", out.use_precheck);
  out.reuse_identical_samples = j.value("reuse_identical_samples", out.reuse_identical_samples);
  out.validate();
  c = std::move(out);
}

SimulatorConfig stub_simulator_config(const fs::path& vstub_path) {
  SimulatorConfig c;
  c.compile_cmd = shell_quote(vstub_path.string()) + " compile -o {out} {files}";
  c.run_cmd = shell_quote(vstub_path.string()) + " run {out}";
  return c;
}

bool simulator_available(const SimulatorConfig& config) noexcept {
  for (const auto* tmpl : {&config.compile_cmd, &config.run_cmd}) {
    const std::string program = command_program(*tmpl);
    if (!program.empty() && !program_exists(program)) return false;
  }
  return true;
}

void require_simulator(const SimulatorConfig& config) {
  for (const auto* tmpl : {&config.compile_cmd, &config.run_cmd}) {
    const std::string program = command_program(*tmpl);
    if (!program.empty() && !program_exists(program)) {
      throw SimulatorMissing("simulator program '" + program + "' not found");
    }
  }
}

VerifyOutcome syntax_check(std::string_view code, const SimulatorConfig& config, const CheckContext& ctx) {
  config.validate();
  require_simulator(config);
  WorkDir dir(config, ctx);
  dir.write(kDesignFile, code);
  const auto r = compile(config, dir, {kDesignFile});
  if (r.timed_out) return VerifyOutcome::syntax_failure(describe_failure("compile", r), true);
  if (r.exit_code != 0) return VerifyOutcome::syntax_failure(describe_failure("compile", r));
  return VerifyOutcome::functional_failure(truncate_diagnostic("compile ok\n" + r.output));
}

VerifyOutcome functional_check(std::string_view code, std::string_view testbench,
                               const SimulatorConfig& config, const CheckContext& ctx) {
  config.validate();
  if (testbench.empty()) throw PreconditionError("testbench is empty");
  require_simulator(config);
  WorkDir dir(config, ctx);
  dir.write(kDesignFile, code);
  dir.write(kTestbenchFile, testbench);

  const auto c = compile(config, dir, {kDesignFile, kTestbenchFile});
  if (c.timed_out) return VerifyOutcome::syntax_failure(describe_failure("compile", c), true);
  if (c.exit_code != 0) return VerifyOutcome::syntax_failure(describe_failure("compile", c));

  const auto r = run_shell(expand(config.run_cmd, {}), dir.path(), config.run_timeout);
  if (r.timed_out) return VerifyOutcome::functional_failure(describe_failure("simulation", r), true);
  const bool marker = r.output.find(config.pass_marker) != std::string::npos;
  if (r.exit_code == 0 && marker) return VerifyOutcome::passed(truncate_diagnostic(r.output));
  std::string why = r.exit_code != 0 ? "simulation" : "simulation finished without pass marker;";
  return VerifyOutcome::functional_failure(describe_failure(why, r));
}

ordered_json outcome_line(const SampleKey& key, const VerifyOutcome& outcome) {
  ordered_json j;
  j["problem_id"] = key.problem_id;
  j["sample_index"] = key.sample_index;
  j["syntax_ok"] = outcome.syntax_ok();
  j["functional_ok"] = outcome.functional_ok();
  j["timed_out"] = outcome.timed_out();
  j["detail"] = outcome.detail();
  return j;
}

std::map<SampleKey, VerifyOutcome> verify_batch(std::span<const GenerationSample> samples,
                                                const std::map<std::string, Problem>& problems,
                                                const SimulatorConfig& config, std::size_t parallelism,
                                                BatchStats* stats) {
  if (parallelism == 0) throw ConfigError("verify parallelism must be positive");
  config.validate();
  require_simulator(config);

  // Group identical work so each distinct (problem, code) runs once.
  struct Job {
    std::string problem_id;
    std::string code;
    int first_index = 0;
    std::vector<std::size_t> members;
  };
  std::vector<Job> jobs;
  std::map<std::pair<std::string, std::string>, std::size_t> job_of;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::string code = extract_verilog(samples[i].code);
    if (config.reuse_identical_samples) {
      const auto key = std::make_pair(samples[i].problem_id, sha256_hex(code));
      if (const auto it = job_of.find(key); it != job_of.end()) {
        jobs[it->second].members.push_back(i);
        continue;
      }
      job_of.emplace(key, jobs.size());
    }
    jobs.push_back(Job{samples[i].problem_id, std::move(code), samples[i].sample_index, {i}});
  }

  std::vector<std::optional<VerifyOutcome>> results(jobs.size());
  std::atomic<std::size_t> running{0};
  std::atomic<std::size_t> peak{0};
  std::atomic<std::size_t> simulations{0};

  parallel_for(jobs.size(), parallelism, [&](std::size_t j) {
    const Job& job = jobs[j];
    try {
      const auto it = problems.find(job.problem_id);
      if (it == problems.end()) {
        results[j] = VerifyOutcome::syntax_failure("unknown problem id " + job.problem_id);
        return;
      }
      if (config.use_precheck) {
        const auto pre = precheck(job.code);
        if (!pre.ok) {
          results[j] = VerifyOutcome::syntax_failure("precheck: " + pre.diagnostic);
          return;
        }
      }
      const std::size_t now = ++running;
      for (std::size_t seen = peak.load(); now > seen && !peak.compare_exchange_weak(seen, now);) {
      }
      ++simulations;
      try {
        results[j] = functional_check(job.code, it->second.testbench, config,
                                      CheckContext{job.problem_id, job.first_index});
      } catch (...) {
        --running;
        throw;
      }
      --running;
    } catch (const SimulatorMissing&) {
      throw;
    } catch (const Error& e) {
      results[j] = VerifyOutcome::syntax_failure(std::string("verification error: ") + e.what());
    }
  });

  std::map<SampleKey, VerifyOutcome> out;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (const std::size_t i : jobs[j].members) {
      out.emplace(SampleKey{samples[i].problem_id, samples[i].sample_index}, *results[j]);
    }
  }
  if (stats) {
    stats->simulations = simulations.load();
    stats->peak_concurrent = peak.load();
  }
  return out;
}

}  // namespace mev
