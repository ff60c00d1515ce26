#include "mev/backends.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "mev/errors.hpp"
#include "mev/hashing.hpp"
#include "mev/prompts.hpp"
#include "mev/router.hpp"
#include "mev/text.hpp"

namespace mev {

namespace {

std::string hex64(std::uint64_t v) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = kHex[v & 0xF];
  return out;
}

// Text after the labeling preamble separator.
std::string_view content_after_preamble(std::string_view prompt, std::string_view preamble) {
  prompt.remove_prefix(std::min(prompt.size(), preamble.size()));
  while (!prompt.empty() && prompt.front() == '\n') prompt.remove_prefix(1);
  return prompt;
}

std::string describe_code(std::string_view code) {
  const std::string lower = to_lower(code);
  std::string module_name = "design";
  static const std::regex kModule(R"(\bmodule\s+([A-Za-z_][A-Za-z0-9_$]*))");
  std::smatch m;
  const std::string code_str(code);
  if (std::regex_search(code_str, m, kModule)) module_name = m[1].str();

  std::vector<std::string> features;
  const auto has = [&](std::string_view needle) { return lower.find(needle) != std::string::npos; };
  if (has("fsm") || has("state")) features.emplace_back("a finite state machine");
  if (has("posedge") || has("negedge")) features.emplace_back("clocked sequential logic");
  if (has("count")) features.emplace_back("a counter");
  if (has("mux") || has(" ? ") || has("case")) features.emplace_back("multiplexer selection logic");
  if (has(" + ") || has("adder") || has("sum")) features.emplace_back("an adder");
  if (has(" & ") || has(" | ") || has(" ^ ") || has("~")) features.emplace_back("gate-level logic");

  std::string text = "The module " + module_name + " implements ";
  if (features.empty()) {
    text += "simple signal wiring between its ports.";
    return text;
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (i > 0) text += i + 1 == features.size() ? " combined with " : ", ";
    text += features[i];
  }
  text += ".";
  return text;
}

}  // namespace

std::vector<std::string> EchoBackend::complete_once(const CompletionRequest& req) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(req.n));
  const std::uint64_t prompt_hash = fnv1a64(req.prompt);
  const std::uint64_t seed = req.seed.value_or(0);
  for (int i = 0; i < req.n; ++i) {
    const std::uint64_t tag = splitmix64(prompt_hash ^ splitmix64(seed) ^ static_cast<std::uint64_t>(i));
    out.push_back("// echo " + hex64(tag) + " sample " + std::to_string(i) + "\n" + req.prompt);
  }
  return out;
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scripted fixture " + path.string());
  ScriptedBackend backend;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      Script script;
      if (j.contains("responses")) script.responses = j.at("responses").get<std::vector<std::string>>();
      script.fail = j.value("fail", false);
      if (script.responses.empty() && !script.fail) {
        throw SchemaError(line_no, "scripted entry has no responses");
      }
      backend.scripts_[j.at("prompt_sha256").get<std::string>()] = std::move(script);
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      throw SchemaError(line_no, std::string("bad scripted fixture line: ") + e.what());
    }
  }
  return backend;
}

void ScriptedBackend::add(std::string_view prompt, std::vector<std::string> responses) {
  scripts_[sha256_hex(prompt)] = Script{std::move(responses), false};
}

void ScriptedBackend::add_failure(std::string_view prompt) {
  scripts_[sha256_hex(prompt)] = Script{{}, true};
}

void ScriptedBackend::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scripted fixture " + path.string());
  for (const auto& [hash, script] : scripts_) {
    ordered_json j;
    j["prompt_sha256"] = hash;
    j["responses"] = script.responses;
    if (script.fail) j["fail"] = true;
    out << j.dump() << '\n';
  }
}

std::vector<std::string> ScriptedBackend::complete_once(const CompletionRequest& req) {
  const std::string hash = sha256_hex(req.prompt);
  const auto it = scripts_.find(hash);
  if (it == scripts_.end()) {
    throw MalformedResponse("no scripted response for prompt " + hash.substr(0, 12));
  }
  if (it->second.fail) throw BackendUnreachable("scripted failure for prompt " + hash.substr(0, 12));
  const auto& responses = it->second.responses;
  std::vector<std::string> out;
  for (int i = 0; i < req.n; ++i) out.push_back(responses[static_cast<std::size_t>(i) % responses.size()]);
  return out;
}

std::string OracleExpertBackend::name() const {
  return "mock:oracle:" + to_lower(to_string(own_));
}

std::vector<std::string> OracleExpertBackend::complete_once(const CompletionRequest& req) {
  if (!req.problem_id) throw MalformedResponse("oracle expert needs a problem id");
  std::string text(kBrokenStub);
  if (answers_) {
    const auto it = answers_->find(*req.problem_id);
    if (it != answers_->end()) {
      const auto truth = it->second.category ? it->second.category : req.routed_category;
      if (truth && *truth == own_ && !it->second.reference.empty()) text = it->second.reference;
    }
  }
  return std::vector<std::string>(static_cast<std::size_t>(req.n), text);
}

std::vector<std::string> BrokenBackend::complete_once(const CompletionRequest& req) {
  return std::vector<std::string>(static_cast<std::size_t>(req.n), std::string(kBrokenStub));
}

std::vector<std::string> KeywordLabelerBackend::complete_once(const CompletionRequest& req) {
  std::string reply;
  const std::string_view prompt = req.prompt;
  if (prompt.starts_with(prompts::kDescribePreamble)) {
    reply = describe_code(content_after_preamble(prompt, prompts::kDescribePreamble));
  } else if (prompt.starts_with(prompts::kCategorizePreamble)) {
    std::string_view content = content_after_preamble(prompt, prompts::kCategorizePreamble);
    if (content.starts_with(prompts::kDescriptionHeader)) content.remove_prefix(prompts::kDescriptionHeader.size());
    const std::size_t code_at = content.find(prompts::kCodeHeader);
    const std::string_view description = content.substr(0, code_at);
    reply = trim(description).empty() ? "Basic" : std::string(to_string(classify_heuristic(description)));
  } else if (prompt.starts_with(prompts::kClassifierPreamble)) {
    const auto content = content_after_preamble(prompt, prompts::kClassifierPreamble);
    reply = trim(content).empty() ? "Basic" : std::string(to_string(classify_heuristic(content)));
  } else {
    throw MalformedResponse("labeler mock does not recognise the prompt");
  }
  return std::vector<std::string>(static_cast<std::size_t>(req.n), reply);
}

std::shared_ptr<Backend> make_backend(const std::string& endpoint, const BackendContext& ctx,
                                      std::optional<ComplexityCategory> tier, bool supports_n) {
  if (!is_valid_endpoint(endpoint)) throw MalformedEndpoint("malformed endpoint '" + endpoint + "'");
  if (endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
    auto opts = ctx.http;
    opts.supports_n = supports_n;
    return std::make_shared<HttpBackend>(endpoint, opts);
  }
  const std::string rest = endpoint.substr(std::string_view("mock://").size());
  const std::string kind = rest.substr(0, rest.find('/'));
  const std::string arg = rest.find('/') == std::string::npos ? "" : rest.substr(rest.find('/') + 1);
  if (kind == "echo") return std::make_shared<EchoBackend>();
  if (kind == "broken") return std::make_shared<BrokenBackend>();
  if (kind == "labeler") return std::make_shared<KeywordLabelerBackend>();
  if (kind == "scripted") {
    if (!ctx.scripted_fixture) throw ConfigError("scripted mock needs a fixture file");
    return std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(*ctx.scripted_fixture));
  }
  if (kind == "oracle") {
    std::optional<ComplexityCategory> own = tier;
    if (!arg.empty()) {
      if (auto parsed = parse_category(arg)) own = parsed;
    }
    if (!own) throw ConfigError("oracle mock endpoint needs a tier: " + endpoint);
    return std::make_shared<OracleExpertBackend>(*own, ctx.oracle_answers);
  }
  throw ConfigError("unknown mock backend '" + kind + "'");
}

BackendPool make_backend_pool(const ExpertRegistry& registry, const BackendContext& ctx) {
  BackendPool pool;
  std::shared_ptr<Backend> scripted;  // one fixture load shared by all tiers
  for (const auto& spec : registry.experts()) {
    if (spec.endpoint.starts_with("mock://scripted")) {
      if (!scripted) scripted = make_backend(spec.endpoint, ctx, spec.category, spec.supports_n);
      pool[spec.expert_id] = scripted;
    } else {
      pool[spec.expert_id] = make_backend(spec.endpoint, ctx, spec.category, spec.supports_n);
    }
  }
  return pool;
}

}  // namespace mev
