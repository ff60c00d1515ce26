#include "mev/suite.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mev/errors.hpp"

namespace fs = std::filesystem;

namespace mev {

namespace {

std::optional<std::string> read_optional(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Problem load_problem(const fs::path& dir) {
  const auto meta_text = read_optional(dir / "meta.json");
  if (!meta_text) throw SchemaError(0, dir.string() + ": missing meta.json");
  json meta;
  try {
    meta = json::parse(*meta_text);
  } catch (const json::exception& e) {
    throw SchemaError(0, (dir / "meta.json").string() + ": " + e.what());
  }
  if (!meta.is_object() || !meta.contains("id") || !meta["id"].is_string() || !meta.contains("suite")) {
    throw SchemaError(0, (dir / "meta.json").string() + ": needs string \"id\" and \"suite\"");
  }

  Problem p;
  p.id = meta["id"].get<std::string>();
  try {
    p.suite = meta["suite"].get<Suite>();
    if (meta.contains("category") && !meta["category"].is_null()) {
      p.category = meta["category"].get<ComplexityCategory>();
    }
  } catch (const json::exception& e) {
    throw SchemaError(0, (dir / "meta.json").string() + ": " + e.what());
  }

  const auto prompt = read_optional(dir / "prompt.txt");
  if (!prompt) throw SchemaError(0, dir.string() + ": missing prompt.txt");
  p.prompt = *prompt;
  const auto tb = read_optional(dir / "tb.v");
  if (!tb) throw MissingTestbench(p.id);
  p.testbench = *tb;
  p.reference_solution = read_optional(dir / "ref.v");
  p.validate();
  return p;
}

}  // namespace

const Problem* ProblemSet::find(std::string_view id) const noexcept {
  for (const auto& p : problems) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

std::map<std::string, Problem> ProblemSet::by_id() const {
  std::map<std::string, Problem> out;
  for (const auto& p : problems) out.emplace(p.id, p);
  return out;
}

ProblemSet load_suite(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("suite root " + root.string() + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  ProblemSet set;
  std::map<std::string, fs::path> seen;
  for (const auto& dir : dirs) {
    Problem p = load_problem(dir);
    if (const auto [it, fresh] = seen.emplace(p.id, dir); !fresh) {
      throw DuplicateId("problem id " + p.id + " declared by " + it->second.string() + " and " +
                        dir.string());
    }
    set.problems.push_back(std::move(p));
  }
  if (set.problems.empty()) throw IoError("suite root " + root.string() + " holds no problems");
  std::sort(set.problems.begin(), set.problems.end(),
            [](const Problem& a, const Problem& b) { return a.id < b.id; });
  return set;
}

}  // namespace mev
