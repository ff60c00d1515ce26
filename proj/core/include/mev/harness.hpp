#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mev/backends.hpp"
#include "mev/gateway.hpp"
#include "mev/passk.hpp"
#include "mev/registry.hpp"
#include "mev/router.hpp"
#include "mev/suite.hpp"
#include "mev/verify.hpp"

namespace mev {

struct EvalConfig {
  PassKParams params;
  std::uint64_t seed = 0;
  std::string model_label = "MEV-LLM";
  Estimator estimator = Estimator::Unbiased;
  std::size_t problem_parallelism = 2;
  std::size_t verify_parallelism = 4;
  std::filesystem::path runs_dir = "runs";
  // Defaults to a name derived from the run parameters.
  std::optional<std::string> run_id;
  // Continue an existing run directory instead of refusing to touch it.
  bool resume = false;
  // Stop checkpointing after this many problems, as if the process died.
  std::optional<std::size_t> stop_after;
};

// Everything one run needs besides its configuration.
struct EvalServices {
  const ExpertRegistry& registry;
  BackendPool& backends;
  const ClassifierConfig& classifier;
  const SimulatorConfig& simulator;
  Gateway& gateway;
};

struct RunResult {
  std::string run_id;
  std::filesystem::path dir;
  // Suite order; only finished problems when the run was interrupted.
  std::vector<EvalRecord> records;
  bool complete = false;
  std::size_t resumed = 0;  // problems skipped because a checkpoint existed
  std::optional<PassKTable> table;
};

// params.json content that decides whether a run may be resumed.
json run_params(const ProblemSet& suite, const EvalServices& services, const EvalConfig& config);
std::string default_run_id(const json& params);

// Routes, generates, verifies, and checkpoints every problem. Per-problem
// failures become c = 0 records carrying an error. Throws ConfigError when
// a resumed run's parameters differ, SimulatorMissing.
RunResult run_eval(const ProblemSet& suite, const EvalServices& services, const EvalConfig& config);

// Records of a persisted run, tolerating a torn final line.
// Throws UnknownRun, SchemaError.
std::vector<EvalRecord> load_run_records(const std::filesystem::path& runs_dir, const std::string& run_id);

struct RunReport {
  PassKTable table;
  std::size_t problems = 0;
  std::size_t failed_problems = 0;  // records carrying an error
};

// Throws UnknownRun.
RunReport report(const std::filesystem::path& runs_dir, const std::string& run_id,
                 Estimator estimator = Estimator::Unbiased);

struct MisrouteResult {
  PassKTable ground_truth;
  PassKTable random;
};

// Same suite twice: ground-truth routing, then seeded uniform routing.
// Throws MissingGroundTruth.
MisrouteResult misroute_experiment(const ProblemSet& suite, const EvalServices& services,
                                   const EvalConfig& config);

// Oracle answers (reference + ground-truth tier) for OracleExpertBackend.
std::shared_ptr<const std::map<std::string, OracleExpertBackend::Answer>> oracle_answers(
    const ProblemSet& suite);

}  // namespace mev
