#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mev/gateway.hpp"
#include "mev/passk.hpp"
#include "mev/types.hpp"
#include "mev/verify.hpp"

namespace mev {

// One JSON document; every key optional. Relative paths resolve against the
// file's directory.
struct AppConfig {
  GatewayConfig gateway;
  std::string api_key_env = "MEV_API_KEY";
  // Empty means four mock experts chosen on the command line.
  std::vector<ExpertSpec> registry;

  std::string classifier = "heuristic";  // heuristic | model | ground-truth | random | forced:<tier>
  std::string classifier_endpoint;
  std::string classifier_model;

  std::string labeler_endpoint = "mock://labeler/default";
  std::string labeler_model;

  SimulatorConfig simulator;

  PassKParams eval;
  std::size_t problem_parallelism = 2;
  std::size_t verify_parallelism = 4;

  std::filesystem::path runs_dir = "runs";
  std::optional<std::filesystem::path> suite;
  std::optional<std::filesystem::path> scripted_fixture;

  // Throws ConfigError (bad values, missing referenced paths) and registry errors.
  void validate() const;
};

// Throws ConfigError, IoError.
AppConfig app_config_from_json(const json& doc, const std::filesystem::path& base_dir = {});
AppConfig load_app_config(const std::filesystem::path& path);

inline constexpr std::string_view kDefaultConfigFile = "mev.json";

}  // namespace mev
