#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mev {

// Broad failure classes. The CLI maps each to a distinct exit status.
enum class ErrorKind {
  Config,            // bad configuration, violated precondition, stage order
  Io,                // filesystem or subprocess plumbing
  Labeling,          // dataset labeling aborted
  Schema,            // malformed persisted data
  SimulatorMissing,  // compiler/simulator binary not found
  Backend,           // generation backend failures
  Domain,            // invalid arguments to pure functions
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define MEV_DEFINE_ERROR(Name, Kind)                                      \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

// core-model
MEV_DEFINE_ERROR(MissingCategory, Config)
MEV_DEFINE_ERROR(DuplicateCategory, Config)
MEV_DEFINE_ERROR(MalformedEndpoint, Config)
MEV_DEFINE_ERROR(InvariantViolation, Domain)
MEV_DEFINE_ERROR(PreconditionError, Config)
MEV_DEFINE_ERROR(ConfigError, Config)
MEV_DEFINE_ERROR(IoError, Io)

// model-gateway
MEV_DEFINE_ERROR(TokenLimitExceeded, Config)
MEV_DEFINE_ERROR(BackendUnreachable, Backend)
MEV_DEFINE_ERROR(MalformedResponse, Backend)
MEV_DEFINE_ERROR(BackendRejected, Backend)

// dataset-pipeline
MEV_DEFINE_ERROR(EmptyCorpus, Io)
MEV_DEFINE_ERROR(UncategorizedEntry, Config)
MEV_DEFINE_ERROR(TooSmall, Config)
MEV_DEFINE_ERROR(NoDerangement, Config)
MEV_DEFINE_ERROR(UnknownBaseModelFamily, Config)
MEV_DEFINE_ERROR(StageOrderError, Config)

// complexity-router
MEV_DEFINE_ERROR(EmptyDescription, Config)

// verilog-verify
MEV_DEFINE_ERROR(SimulatorMissing, SimulatorMissing)
MEV_DEFINE_ERROR(WorkdirFailure, Io)

// passk-metrics
MEV_DEFINE_ERROR(DomainError, Domain)
MEV_DEFINE_ERROR(EmptyRecords, Domain)
MEV_DEFINE_ERROR(ShapeMismatch, Domain)

// eval-harness
MEV_DEFINE_ERROR(DuplicateId, Config)
MEV_DEFINE_ERROR(UnknownRun, Io)
MEV_DEFINE_ERROR(MissingGroundTruth, Config)

#undef MEV_DEFINE_ERROR

class LabelingFailed : public Error {
 public:
  LabelingFailed(std::size_t failed, std::size_t total);
  std::size_t failed() const noexcept { return failed_; }

 private:
  std::size_t failed_;
};

class SchemaError : public Error {
 public:
  // line is 1-based; 0 means "whole document".
  SchemaError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class KExceedsN : public Error {
 public:
  KExceedsN(const std::string& problem_id, int k, int n);
  const std::string& problem_id() const noexcept { return problem_id_; }

 private:
  std::string problem_id_;
};

class MissingTestbench : public Error {
 public:
  explicit MissingTestbench(const std::string& problem_id);
  const std::string& problem_id() const noexcept { return problem_id_; }

 private:
  std::string problem_id_;
};

}  // namespace mev
