#include "mev/router.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <random>

#include "mev/errors.hpp"
#include "mev/hashing.hpp"
#include "mev/prompts.hpp"
#include "mev/text.hpp"

namespace mev {

namespace {

struct Keyword {
  std::string_view text;
  // Whole-word keywords must not be followed by a letter or digit; the rest
  // only need to start at a word boundary ("counters" matches "counter").
  bool whole_word;
};

struct TierKeywords {
  ComplexityCategory tier;
  std::vector<Keyword> keywords;
};

const std::vector<TierKeywords>& keyword_table() {
  static const std::vector<TierKeywords> kTable = {
      {ComplexityCategory::Basic,
       {{"wire", false},  {"wiring", false},  {"gate", false},   {"and", true},
        {"or", true},     {"not", true},      {"xor", true},     {"nand", true},
        {"nor", true},    {"xnor", true},     {"buffer", false}, {"inverter", false}}},
      {ComplexityCategory::Intermediate,
       {{"mux", false},         {"multiplexer", false}, {"demux", false},
        {"demultiplexer", false}, {"adder", false},     {"subtractor", false},
        {"comparator", false},  {"decoder", false},     {"encoder", false},
        {"alu", true},          {"arithmetic", false}}},
      {ComplexityCategory::Advanced,
       {{"fsm", false},      {"finite state machine", false}, {"state machine", false},
        {"counter", false},  {"register", false},             {"flip-flop", false},
        {"flipflop", false}, {"sequential", false},           {"clock", false}}},
  };
  return kTable;
}

bool is_word_char(char ch) { return std::isalnum(static_cast<unsigned char>(ch)) != 0; }

bool contains_keyword(std::string_view haystack, const Keyword& kw) {
  for (std::size_t pos = haystack.find(kw.text); pos != std::string_view::npos;
       pos = haystack.find(kw.text, pos + 1)) {
    const bool starts_word = pos == 0 || !is_word_char(haystack[pos - 1]);
    const std::size_t end = pos + kw.text.size();
    const bool ends_word = end >= haystack.size() || !is_word_char(haystack[end]);
    if (starts_word && (!kw.whole_word || ends_word)) return true;
  }
  return false;
}

template <typename Fn>
decltype(auto) with_problem_context(const std::string& problem_id, Fn&& fn) {
  try {
    return fn();
  } catch (const BackendUnreachable& e) {
    throw BackendUnreachable("problem " + problem_id + ": " + e.what());
  } catch (const MalformedResponse& e) {
    throw MalformedResponse("problem " + problem_id + ": " + e.what());
  } catch (const BackendRejected& e) {
    throw BackendRejected("problem " + problem_id + ": " + e.what());
  } catch (const TokenLimitExceeded& e) {
    throw TokenLimitExceeded("problem " + problem_id + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(ClassifierKind k) noexcept {
  switch (k) {
    case ClassifierKind::Heuristic: return "Heuristic";
    case ClassifierKind::ModelBacked: return "ModelBacked";
    case ClassifierKind::Forced: return "Forced";
  }
  return "Heuristic";
}

HeuristicResult classify_heuristic_detailed(std::string_view description) {
  if (trim(description).empty()) throw EmptyDescription("description is empty");
  const std::string text = to_lower(description);
  HeuristicResult result;
  for (const auto& group : keyword_table()) {
    bool tier_hit = false;
    for (const auto& kw : group.keywords) {
      if (contains_keyword(text, kw)) {
        tier_hit = true;
        result.matched_keywords.emplace_back(kw.text);
      }
    }
    if (tier_hit) result.matched_tiers.push_back(group.tier);
  }
  if (result.matched_tiers.empty()) {
    result.category = ComplexityCategory::Basic;
    result.note = "no keyword matched; defaulted to Basic";
  } else if (result.matched_tiers.size() == 1) {
    result.category = result.matched_tiers.front();
    result.note = "keywords from one tier";
  } else {
    result.category = ComplexityCategory::Expert;
    result.note = "keywords from " + std::to_string(result.matched_tiers.size()) + " tiers";
  }
  return result;
}

ComplexityCategory classify_heuristic(std::string_view description) {
  return classify_heuristic_detailed(description).category;
}

std::optional<ComplexityCategory> parse_tier_response(std::string_view response) {
  const std::string text = to_lower(response);
  std::optional<ComplexityCategory> best;
  std::size_t best_pos = std::string::npos;
  for (const auto c : kAllCategories) {
    const std::size_t pos = text.find(to_lower(to_string(c)));
    if (pos != std::string::npos && pos < best_pos) {
      best_pos = pos;
      best = c;
    }
  }
  return best;
}

ClassifierResult classify_model(std::string_view description, Gateway& gateway,
                                Backend& classifier, const std::string& model_name) {
  if (trim(description).empty()) throw EmptyDescription("description is empty");
  std::string failure;
  try {
    for (int attempt = 0; attempt < 2; ++attempt) {
      const std::string reply =
          gateway.label_query(classifier, prompts::kClassifierPreamble, description, model_name);
      if (auto tier = parse_tier_response(reply)) {
        return {*tier, ClassifierKind::ModelBacked,
                attempt == 0 ? "classifier answered" : "classifier answered on re-query"};
      }
    }
    failure = "classifier reply unparsable twice";
  } catch (const Error& e) {
    failure = std::string("classifier unavailable: ") + e.what();
  }
  const auto fallback = classify_heuristic_detailed(description);
  return {fallback.category, ClassifierKind::Heuristic,
          failure + "; keyword fallback (" + fallback.note + ")"};
}

std::string ClassifierConfig::describe() const {
  switch (mode) {
    case Mode::Heuristic: return "heuristic";
    case Mode::Model: return "model:" + model_name;
    case Mode::Forced: return "forced:" + std::string(forced ? to_string(*forced) : "?");
    case Mode::GroundTruth: return "ground-truth";
    case Mode::Random: return "random:" + std::to_string(random_seed);
  }
  return "heuristic";
}

void to_json(json& j, const RoutingDecision& d) {
  j = json{{"problem_id", d.problem_id},
           {"category", d.category},
           {"classifier_kind", std::string(to_string(d.classifier_kind))},
           {"expert_id", d.expert_id},
           {"confidence_note", d.confidence_note}};
}

RoutingDecision route(const Problem& problem, const ExpertRegistry& registry,
                      const ClassifierConfig& classifier) {
  RoutingDecision decision;
  decision.problem_id = problem.id;
  using Mode = ClassifierConfig::Mode;
  switch (classifier.mode) {
    case Mode::Heuristic: {
      const auto result = classify_heuristic_detailed(problem.prompt);
      decision.category = result.category;
      decision.classifier_kind = ClassifierKind::Heuristic;
      decision.confidence_note = result.note;
      break;
    }
    case Mode::Model: {
      if (!classifier.backend || !classifier.gateway) {
        throw ConfigError("model-backed classifier needs a backend and a gateway");
      }
      const auto result =
          classify_model(problem.prompt, *classifier.gateway, *classifier.backend, classifier.model_name);
      decision.category = result.category;
      decision.classifier_kind = result.kind;
      decision.confidence_note = result.note;
      break;
    }
    case Mode::Forced:
      if (!classifier.forced) throw ConfigError("forced routing without a category");
      decision.category = *classifier.forced;
      decision.classifier_kind = ClassifierKind::Forced;
      decision.confidence_note = "forced category";
      break;
    case Mode::GroundTruth:
      if (!problem.category) throw MissingGroundTruth("problem " + problem.id + " has no category");
      decision.category = *problem.category;
      decision.classifier_kind = ClassifierKind::Forced;
      decision.confidence_note = "ground-truth category";
      break;
    case Mode::Random: {
      std::mt19937_64 rng(derive_seed(classifier.random_seed, "route:" + problem.id));
      decision.category = kAllCategories[rng() % kAllCategories.size()];
      decision.classifier_kind = ClassifierKind::Forced;
      decision.confidence_note = "random routing";
      break;
    }
  }
  decision.expert_id = registry.expert_for(decision.category).expert_id;
  return decision;
}

std::string build_generation_prompt(const Problem& problem) {
  std::string prompt(prompts::kGenerationPreamble);
  prompt.push_back('\n');
  prompt.append(problem.prompt);
  if (!prompt.empty() && prompt.back() != '\n') prompt.push_back('\n');
  return prompt;
}

std::vector<GenerationSample> generate(const Problem& problem, const RoutingDecision& decision,
                                       const ExpertRegistry& registry, Gateway& gateway,
                                       Backend& expert, int n, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("generate needs n >= 1");
  const ExpertSpec& spec = registry.expert_for(decision.category);
  if (spec.expert_id != decision.expert_id || decision.problem_id != problem.id) {
    throw PreconditionError("routing decision for " + decision.problem_id +
                            " is inconsistent with the registry");
  }
  CompletionRequest req;
  req.model_name = spec.model_name;
  req.prompt = build_generation_prompt(problem);
  req.n = n;
  req.sampling = spec.sampling;
  req.seed = seed;
  req.problem_id = problem.id;
  req.routed_category = decision.category;

  const CompletionResult result =
      with_problem_context(problem.id, [&] { return gateway.complete(expert, req); });

  std::vector<GenerationSample> samples;
  samples.reserve(result.texts.size());
  for (std::size_t i = 0; i < result.texts.size(); ++i) {
    GenerationSample s;
    s.problem_id = problem.id;
    s.sample_index = static_cast<int>(i);
    s.expert_id = decision.expert_id;
    s.category = decision.category;
    s.code = result.texts[i];
    s.latency_ms = static_cast<double>(result.backend_latency.count());
    samples.push_back(std::move(s));
  }
  return samples;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RoutingAuditLog::RoutingAuditLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw IoError("cannot open routing log " + path.string());
}

void RoutingAuditLog::append(const RoutingDecision& decision) {
  ordered_json line;
  line["problem_id"] = decision.problem_id;
  line["category"] = std::string(to_string(decision.category));
  line["classifier_kind"] = std::string(to_string(decision.classifier_kind));
  line["expert_id"] = decision.expert_id;
  line["timestamp"] = utc_timestamp();
  std::lock_guard lock(mu_);
  out_ << line.dump() << '\n';
  out_.flush();
}

}  // namespace mev
