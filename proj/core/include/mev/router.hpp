#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mev/gateway.hpp"
#include "mev/registry.hpp"
#include "mev/types.hpp"

namespace mev {

enum class ClassifierKind : std::uint8_t { Heuristic, ModelBacked, Forced };

std::string_view to_string(ClassifierKind k) noexcept;

struct HeuristicResult {
  ComplexityCategory category = ComplexityCategory::Basic;
  std::vector<ComplexityCategory> matched_tiers;  // ascending, unique
  std::vector<std::string> matched_keywords;
  std::string note;
};

// Keyword classifier. Throws EmptyDescription.
HeuristicResult classify_heuristic_detailed(std::string_view description);
ComplexityCategory classify_heuristic(std::string_view description);

// Earliest tier name appearing anywhere in the text, case-insensitive.
std::optional<ComplexityCategory> parse_tier_response(std::string_view response);

struct ClassifierResult {
  ComplexityCategory category = ComplexityCategory::Basic;
  ClassifierKind kind = ClassifierKind::Heuristic;
  std::string note;
};

// Asks the classifier backend; one re-query on an unparsable answer, then the
// keyword classifier. Backend failures also fall back and are noted.
ClassifierResult classify_model(std::string_view description, Gateway& gateway, Backend& classifier,
                                const std::string& model_name = {});

struct ClassifierConfig {
  enum class Mode : std::uint8_t {
    Heuristic,    // keyword table
    Model,        // served classifier with heuristic fallback
    Forced,       // fixed tier for every problem
    GroundTruth,  // problem's declared tier
    Random,       // uniform tier from (seed, problem id)
  };
  Mode mode = Mode::Heuristic;
  std::optional<ComplexityCategory> forced;
  std::shared_ptr<Backend> backend;
  std::string model_name;
  Gateway* gateway = nullptr;
  std::uint64_t random_seed = 0;

  std::string describe() const;
};

struct RoutingDecision {
  std::string problem_id;
  ComplexityCategory category = ComplexityCategory::Basic;
  ClassifierKind classifier_kind = ClassifierKind::Heuristic;
  std::string expert_id;
  std::string confidence_note;

  bool operator==(const RoutingDecision&) const = default;
};

void to_json(json& j, const RoutingDecision& d);

RoutingDecision route(const Problem& problem, const ExpertRegistry& registry,
                      const ClassifierConfig& classifier);

// Generation preamble followed by the problem prompt. Depends on nothing but
// the problem, so every expert sees the same bytes.
std::string build_generation_prompt(const Problem& problem);

// One request for n completions to the routed expert.
std::vector<GenerationSample> generate(const Problem& problem, const RoutingDecision& decision,
                                       const ExpertRegistry& registry, Gateway& gateway,
                                       Backend& expert, int n, std::uint64_t seed);

// Append-only JSONL log of routing decisions.
class RoutingAuditLog {
 public:
  explicit RoutingAuditLog(const std::filesystem::path& path);
  void append(const RoutingDecision& decision);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

std::string utc_timestamp();

}  // namespace mev
