#include "mev/config.hpp"

#include <fstream>

#include "mev/errors.hpp"
#include "mev/registry.hpp"

namespace fs = std::filesystem;

namespace mev {

namespace {

const std::vector<std::string_view> kTopLevelKeys = {"gateway", "api_key_env", "registry", "classifier",
                                                     "labeler", "simulator", "eval", "paths"};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
void read(const json& obj, std::string_view key, T& out) {
  if (const auto it = obj.find(key); it != obj.end()) out = it->template get<T>();
}

GatewayConfig gateway_from_json(const json& j) {
  GatewayConfig g;
  read(j, "prompt_token_limit", g.prompt_token_limit);
  read(j, "token_divisor", g.token_divisor);
  read(j, "max_retries", g.max_retries);
  read(j, "backoff_multiplier", g.backoff_multiplier);
  read(j, "rate_per_second", g.rate_per_second);
  read(j, "burst", g.burst);
  read(j, "max_in_flight", g.max_in_flight);
  if (j.contains("initial_backoff_ms")) g.initial_backoff = Millis(j["initial_backoff_ms"].get<long>());
  if (j.contains("max_backoff_ms")) g.max_backoff = Millis(j["max_backoff_ms"].get<long>());
  return g;
}

}  // namespace

void AppConfig::validate() const {
  gateway.validate();
  simulator.validate();
  eval.validate();
  if (!registry.empty()) validate_registry(registry);
  if (problem_parallelism == 0 || verify_parallelism == 0) throw ConfigError("parallelism must be positive");
  if (classifier == "model" && classifier_endpoint.empty()) {
    throw ConfigError("model classifier needs classifier.endpoint");
  }
  if (!classifier_endpoint.empty() && !is_valid_endpoint(classifier_endpoint)) {
    throw MalformedEndpoint("bad classifier endpoint: " + classifier_endpoint);
  }
  if (!is_valid_endpoint(labeler_endpoint)) throw MalformedEndpoint("bad labeler endpoint: " + labeler_endpoint);
  std::error_code ec;
  if (suite && !fs::is_directory(*suite, ec)) throw ConfigError("suite path does not exist: " + suite->string());
  if (scripted_fixture && !fs::is_regular_file(*scripted_fixture, ec)) {
    throw ConfigError("scripted fixture does not exist: " + scripted_fixture->string());
  }
}

AppConfig app_config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (std::find(kTopLevelKeys.begin(), kTopLevelKeys.end(), key) == kTopLevelKeys.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  AppConfig c;
  try {
    if (doc.contains("gateway")) c.gateway = gateway_from_json(doc["gateway"]);
    read(doc, "api_key_env", c.api_key_env);
    read(doc, "registry", c.registry);
    if (const auto it = doc.find("classifier"); it != doc.end()) {
      read(*it, "kind", c.classifier);
      read(*it, "endpoint", c.classifier_endpoint);
      read(*it, "model", c.classifier_model);
    }
    if (const auto it = doc.find("labeler"); it != doc.end()) {
      read(*it, "endpoint", c.labeler_endpoint);
      read(*it, "model", c.labeler_model);
    }
    if (doc.contains("simulator")) {
      c.simulator = doc["simulator"].get<SimulatorConfig>();
      if (doc["simulator"].contains("workdir_root")) {
        c.simulator.workdir_root = resolve(base_dir, doc["simulator"]["workdir_root"].get<std::string>());
      }
    }
    if (const auto it = doc.find("eval"); it != doc.end()) {
      c.eval = it->get<PassKParams>();
      read(*it, "problem_parallelism", c.problem_parallelism);
      read(*it, "verify_parallelism", c.verify_parallelism);
    }
    if (const auto it = doc.find("paths"); it != doc.end()) {
      if (it->contains("runs_dir")) c.runs_dir = resolve(base_dir, (*it)["runs_dir"].get<std::string>());
      if (it->contains("suite")) c.suite = resolve(base_dir, (*it)["suite"].get<std::string>());
      if (it->contains("scripted_fixture")) {
        c.scripted_fixture = resolve(base_dir, (*it)["scripted_fixture"].get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

AppConfig load_app_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return app_config_from_json(doc, path.parent_path());
}

}  // namespace mev
