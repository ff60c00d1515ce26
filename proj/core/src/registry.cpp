#include "mev/registry.hpp"

#include <optional>
#include <regex>

#include "mev/errors.hpp"
#include "mev/hashing.hpp"
#include "mev/text.hpp"

namespace mev {

const ExpertSpec* ExpertRegistry::find(std::string_view expert_id) const noexcept {
  for (const auto& e : experts_) {
    if (e.expert_id == expert_id) return &e;
  }
  return nullptr;
}

std::string ExpertRegistry::digest() const {
  json j = json::array();
  for (const auto& e : experts_) j.push_back(e);
  return sha256_hex(j.dump());
}

bool is_valid_endpoint(std::string_view url) {
  static const std::regex kPattern(
      R"(^(https?|mock)://([A-Za-z0-9](?:[A-Za-z0-9._-]*[A-Za-z0-9])?|\[[0-9A-Fa-f:.]+\])(?::([0-9]{1,5}))?(/[^\s]*)?$)");
  std::cmatch m;
  if (!std::regex_match(url.begin(), url.end(), m, kPattern)) return false;
  if (m[3].matched) {
    const int port = std::stoi(m[3].str());
    if (port < 1 || port > 65535) return false;
  }
  return true;
}

ExpertRegistry validate_registry(std::span<const ExpertSpec> specs) {
  if (specs.empty()) throw PreconditionError("expert registry is empty");
  std::array<std::optional<ExpertSpec>, 4> slots;
  for (const auto& spec : specs) {
    if (trim(spec.expert_id).empty()) throw ConfigError("expert_id must be non-empty");
    if (!is_valid_endpoint(spec.endpoint)) {
      throw MalformedEndpoint("expert " + spec.expert_id + " has malformed endpoint '" +
                              spec.endpoint + "'");
    }
    spec.sampling.validate();
    auto& slot = slots[static_cast<std::size_t>(spec.category)];
    if (slot) throw DuplicateCategory(std::string(to_string(spec.category)));
    slot = spec;
  }
  for (const auto c : kAllCategories) {
    if (!slots[static_cast<std::size_t>(c)]) throw MissingCategory(std::string(to_string(c)));
  }
  std::array<ExpertSpec, 4> experts;
  for (std::size_t i = 0; i < experts.size(); ++i) experts[i] = *slots[i];
  for (std::size_t i = 0; i < experts.size(); ++i) {
    for (std::size_t j = i + 1; j < experts.size(); ++j) {
      if (experts[i].expert_id == experts[j].expert_id) {
        throw ConfigError("expert_id '" + experts[i].expert_id + "' used for two tiers");
      }
    }
  }
  return ExpertRegistry(std::move(experts));
}

std::vector<ExpertSpec> default_mock_registry_specs(std::string_view mock_kind) {
  std::vector<ExpertSpec> specs;
  for (const auto c : kAllCategories) {
    const std::string tier = to_lower(to_string(c));
    ExpertSpec spec;
    spec.expert_id = tier + "-expert";
    spec.category = c;
    spec.endpoint = "mock://" + std::string(mock_kind) + "/" + tier;
    spec.model_name = "mock-" + std::string(mock_kind) + "-" + tier;
    specs.push_back(std::move(spec));
  }
  return specs;
}

}  // namespace mev
