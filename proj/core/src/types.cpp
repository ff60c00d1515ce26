#include "mev/types.hpp"

#include <algorithm>

#include "mev/errors.hpp"
#include "mev/text.hpp"

namespace mev {

std::string_view to_string(ComplexityCategory c) noexcept {
  switch (c) {
    case ComplexityCategory::Basic: return "Basic";
    case ComplexityCategory::Intermediate: return "Intermediate";
    case ComplexityCategory::Advanced: return "Advanced";
    case ComplexityCategory::Expert: return "Expert";
  }
  return "Basic";
}

std::optional<ComplexityCategory> parse_category(std::string_view name) {
  const std::string lowered = to_lower(trim(name));
  for (const auto c : kAllCategories) {
    if (lowered == to_lower(to_string(c))) return c;
  }
  return std::nullopt;
}

ComplexityCategory category_from_string(std::string_view name) {
  if (auto c = parse_category(name)) return *c;
  throw SchemaError(0, "unknown complexity category '" + std::string(name) + "'");
}

std::string_view to_string(Suite s) noexcept {
  return s == Suite::VerilogMachine ? "Verilog-Machine" : "Verilog-Human";
}

std::string_view suite_key(Suite s) noexcept {
  return s == Suite::VerilogMachine ? "machine" : "human";
}

std::optional<Suite> parse_suite(std::string_view name) {
  const std::string lowered = to_lower(trim(name));
  for (const auto s : kAllSuites) {
    if (lowered == suite_key(s) || lowered == to_lower(to_string(s))) return s;
  }
  return std::nullopt;
}

bool DatasetEntry::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

void DatasetEntry::add_flag(std::string_view flag) {
  if (!has_flag(flag)) flags.emplace_back(flag);
}

void DatasetEntry::validate() const {
  if (category && !description) {
    throw InvariantViolation("entry " + id + " has a category but no description");
  }
}

void Problem::validate() const {
  if (id.empty()) throw InvariantViolation("problem id is empty");
  if (trim(prompt).empty()) throw InvariantViolation("problem " + id + " has an empty prompt");
  if (trim(testbench).empty()) throw InvariantViolation("problem " + id + " has an empty testbench");
}

void SamplingParams::validate() const {
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

VerifyOutcome VerifyOutcome::make(bool syntax_ok, bool functional_ok, std::string detail,
                                  bool timed_out) {
  if (functional_ok && !syntax_ok) {
    throw InvariantViolation("functional_ok requires syntax_ok");
  }
  if (functional_ok && timed_out) {
    throw InvariantViolation("a timed-out check cannot be functionally correct");
  }
  return VerifyOutcome(syntax_ok, functional_ok, std::move(detail), timed_out);
}

VerifyOutcome VerifyOutcome::syntax_failure(std::string detail, bool timed_out) {
  return make(false, false, std::move(detail), timed_out);
}

VerifyOutcome VerifyOutcome::functional_failure(std::string detail, bool timed_out) {
  return make(true, false, std::move(detail), timed_out);
}

VerifyOutcome VerifyOutcome::passed(std::string detail) {
  return make(true, true, std::move(detail), false);
}

void EvalRecord::validate() const {
  if (n < 1) throw DomainError("record " + problem_id + ": n must be >= 1");
  if (c < 0 || c > n) throw DomainError("record " + problem_id + ": c must lie in [0, n]");
  if (!sample_passes.empty()) {
    if (sample_passes.size() != static_cast<std::size_t>(n)) {
      throw DomainError("record " + problem_id + ": sample_passes length differs from n");
    }
    if (std::count(sample_passes.begin(), sample_passes.end(), true) != c) {
      throw DomainError("record " + problem_id + ": sample_passes disagrees with c");
    }
  }
}

// JSON

void to_json(json& j, ComplexityCategory c) { j = std::string(to_string(c)); }

void from_json(const json& j, ComplexityCategory& c) {
  c = category_from_string(j.get<std::string>());
}

void to_json(json& j, Suite s) { j = std::string(suite_key(s)); }

void from_json(const json& j, Suite& s) {
  const auto text = j.get<std::string>();
  const auto parsed = parse_suite(text);
  if (!parsed) throw SchemaError(0, "unknown suite '" + text + "'");
  s = *parsed;
}

void to_json(json& j, const SamplingParams& p) {
  j = json{{"temperature", p.temperature}, {"top_p", p.top_p}, {"max_tokens", p.max_tokens}};
}

void from_json(const json& j, SamplingParams& p) {
  SamplingParams out;
  out.temperature = j.value("temperature", out.temperature);
  out.top_p = j.value("top_p", out.top_p);
  out.max_tokens = j.value("max_tokens", out.max_tokens);
  out.validate();
  p = out;
}

ordered_json dataset_entry_to_ordered_json(const DatasetEntry& e) {
  ordered_json j;
  j["id"] = e.id;
  j["source"] = e.source;
  j["code"] = e.code;
  j["description"] = e.description ? ordered_json(*e.description) : ordered_json(nullptr);
  j["category"] =
      e.category ? ordered_json(std::string(to_string(*e.category))) : ordered_json(nullptr);
  j["token_estimate"] = e.token_estimate;
  j["content_hash"] = e.content_hash;
  j["flags"] = e.flags;
  return j;
}

void to_json(json& j, const DatasetEntry& e) {
  j = json{{"id", e.id},
           {"source", e.source},
           {"code", e.code},
           {"token_estimate", e.token_estimate},
           {"content_hash", e.content_hash},
           {"flags", e.flags}};
  j["description"] = e.description ? json(*e.description) : json(nullptr);
  j["category"] = e.category ? json(*e.category) : json(nullptr);
}

void from_json(const json& j, DatasetEntry& e) {
  DatasetEntry out;
  out.id = j.at("id").get<std::string>();
  out.source = j.at("source").get<std::string>();
  out.code = j.at("code").get<std::string>();
  if (j.contains("description") && !j.at("description").is_null()) {
    out.description = j.at("description").get<std::string>();
  }
  if (j.contains("category") && !j.at("category").is_null()) {
    out.category = j.at("category").get<ComplexityCategory>();
  }
  out.token_estimate = j.at("token_estimate").get<std::size_t>();
  out.content_hash = j.at("content_hash").get<std::string>();
  if (j.contains("flags")) out.flags = j.at("flags").get<std::vector<std::string>>();
  out.validate();
  e = std::move(out);
}

void to_json(json& j, const Problem& p) {
  j = json{{"id", p.id}, {"suite", p.suite}, {"prompt", p.prompt}, {"testbench", p.testbench}};
  j["reference_solution"] = p.reference_solution ? json(*p.reference_solution) : json(nullptr);
  j["category"] = p.category ? json(*p.category) : json(nullptr);
}

void from_json(const json& j, Problem& p) {
  Problem out;
  out.id = j.at("id").get<std::string>();
  out.suite = j.at("suite").get<Suite>();
  out.prompt = j.at("prompt").get<std::string>();
  out.testbench = j.at("testbench").get<std::string>();
  if (j.contains("reference_solution") && !j.at("reference_solution").is_null()) {
    out.reference_solution = j.at("reference_solution").get<std::string>();
  }
  if (j.contains("category") && !j.at("category").is_null()) {
    out.category = j.at("category").get<ComplexityCategory>();
  }
  out.validate();
  p = std::move(out);
}

void to_json(json& j, const GenerationSample& s) {
  j = json{{"problem_id", s.problem_id}, {"sample_index", s.sample_index},
           {"expert_id", s.expert_id},   {"category", s.category},
           {"code", s.code},             {"latency_ms", s.latency_ms}};
}

void from_json(const json& j, GenerationSample& s) {
  GenerationSample out;
  out.problem_id = j.at("problem_id").get<std::string>();
  out.sample_index = j.at("sample_index").get<int>();
  out.expert_id = j.at("expert_id").get<std::string>();
  out.category = j.at("category").get<ComplexityCategory>();
  out.code = j.at("code").get<std::string>();
  out.latency_ms = j.value("latency_ms", 0.0);
  if (out.sample_index < 0) throw SchemaError(0, "sample_index must be >= 0");
  s = std::move(out);
}

void to_json(json& j, const EvalRecord& r) {
  j = json{{"problem_id", r.problem_id}, {"n", r.n}, {"c", r.c}};
  if (r.suite) j["suite"] = *r.suite;
  if (!r.sample_passes.empty()) {
    std::string mask;
    for (const bool p : r.sample_passes) mask.push_back(p ? '1' : '0');
    j["sample_passes"] = mask;
  }
  if (r.error) j["error"] = *r.error;
}

void from_json(const json& j, EvalRecord& r) {
  EvalRecord out;
  out.problem_id = j.at("problem_id").get<std::string>();
  out.n = j.at("n").get<int>();
  out.c = j.at("c").get<int>();
  if (j.contains("suite")) out.suite = j.at("suite").get<Suite>();
  if (j.contains("sample_passes")) {
    for (const char ch : j.at("sample_passes").get<std::string>()) {
      if (ch != '0' && ch != '1') throw SchemaError(0, "sample_passes must be a 0/1 string");
      out.sample_passes.push_back(ch == '1');
    }
  }
  if (j.contains("error")) out.error = j.at("error").get<std::string>();
  out.validate();
  r = std::move(out);
}

void to_json(json& j, const PassKTable& t) {
  json rows = json::object();
  for (const auto& [suite, cells] : t.rows) {
    json row = json::object();
    for (const auto& [k, v] : cells) row[std::to_string(k)] = v;
    rows[std::string(suite_key(suite))] = row;
  }
  j = json{{"model_label", t.model_label}, {"rows", rows}};
}

void from_json(const json& j, PassKTable& t) {
  PassKTable out;
  out.model_label = j.at("model_label").get<std::string>();
  for (const auto& [suite_name, cells] : j.at("rows").items()) {
    const auto suite = parse_suite(suite_name);
    if (!suite) throw SchemaError(0, "unknown suite '" + suite_name + "'");
    auto& row = out.rows[*suite];
    for (const auto& [k, v] : cells.items()) row[std::stoi(k)] = v.get<double>();
  }
  t = std::move(out);
}

void to_json(json& j, const ExpertSpec& e) {
  j = json{{"expert_id", e.expert_id}, {"category", e.category},  {"endpoint", e.endpoint},
           {"model_name", e.model_name}, {"sampling", e.sampling}, {"supports_n", e.supports_n}};
}

void from_json(const json& j, ExpertSpec& e) {
  ExpertSpec out;
  out.expert_id = j.at("expert_id").get<std::string>();
  out.category = j.at("category").get<ComplexityCategory>();
  out.endpoint = j.at("endpoint").get<std::string>();
  out.model_name = j.value("model_name", std::string{});
  if (j.contains("sampling")) out.sampling = j.at("sampling").get<SamplingParams>();
  out.supports_n = j.value("supports_n", true);
  e = std::move(out);
}

}  // namespace mev

namespace nlohmann {

void adl_serializer<mev::VerifyOutcome>::to_json(json& j, const mev::VerifyOutcome& o) {
  j = json{{"syntax_ok", o.syntax_ok()},
           {"functional_ok", o.functional_ok()},
           {"timed_out", o.timed_out()},
           {"detail", o.detail()}};
}

mev::VerifyOutcome adl_serializer<mev::VerifyOutcome>::from_json(const json& j) {
  return mev::VerifyOutcome::make(j.at("syntax_ok").get<bool>(), j.at("functional_ok").get<bool>(),
                                  j.value("detail", std::string{}), j.value("timed_out", false));
}

}  // namespace nlohmann
