#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "mev/types.hpp"

namespace mev {

// Exact cover of the four tiers by expert specs.
class ExpertRegistry {
 public:
  const ExpertSpec& expert_for(ComplexityCategory c) const {
    return experts_[static_cast<std::size_t>(c)];
  }
  const std::array<ExpertSpec, 4>& experts() const noexcept { return experts_; }
  const ExpertSpec* find(std::string_view expert_id) const noexcept;

  // sha256 over the canonical JSON of the experts, tier order.
  std::string digest() const;

  friend ExpertRegistry validate_registry(std::span<const ExpertSpec> specs);

 private:
  explicit ExpertRegistry(std::array<ExpertSpec, 4> experts) : experts_(std::move(experts)) {}
  std::array<ExpertSpec, 4> experts_;
};

// Throws MissingCategory, DuplicateCategory, MalformedEndpoint, ConfigError.
ExpertRegistry validate_registry(std::span<const ExpertSpec> specs);

// scheme://host[:port][/path] with scheme http, https, or mock.
bool is_valid_endpoint(std::string_view url);

// Four mock:// experts, used when no registry is configured.
std::vector<ExpertSpec> default_mock_registry_specs(std::string_view mock_kind);

}  // namespace mev
