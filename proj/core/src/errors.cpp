#include "mev/errors.hpp"

namespace mev {

LabelingFailed::LabelingFailed(std::size_t failed, std::size_t total)
    : Error(ErrorKind::Labeling, "labeling failed for " + std::to_string(failed) + " of " +
                                     std::to_string(total) + " entries"),
      failed_(failed) {}

SchemaError::SchemaError(std::size_t line, const std::string& what)
    : Error(ErrorKind::Schema, line == 0 ? what : "line " + std::to_string(line) + ": " + what),
      line_(line) {}

KExceedsN::KExceedsN(const std::string& problem_id, int k, int n)
    : Error(ErrorKind::Domain, "k=" + std::to_string(k) + " exceeds n=" + std::to_string(n) +
                                   " for problem " + problem_id),
      problem_id_(problem_id) {}

MissingTestbench::MissingTestbench(const std::string& problem_id)
    : Error(ErrorKind::Io, "problem " + problem_id + " has no tb.v"), problem_id_(problem_id) {}

}  // namespace mev
