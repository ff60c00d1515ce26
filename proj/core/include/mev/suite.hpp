#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mev/types.hpp"

namespace mev {

// Problems of one evaluation run, ordered by id.
struct ProblemSet {
  std::vector<Problem> problems;

  std::size_t size() const noexcept { return problems.size(); }
  const Problem* find(std::string_view id) const noexcept;
  std::map<std::string, Problem> by_id() const;
};

// Layout: <root>/<dir>/{prompt.txt, tb.v, ref.v?, meta.json} where meta.json
// is {"id", "suite": "human"|"machine", "category"?}.
// Throws MissingTestbench, DuplicateId, IoError, SchemaError.
ProblemSet load_suite(const std::filesystem::path& root);

}  // namespace mev
