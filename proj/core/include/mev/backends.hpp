#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mev/gateway.hpp"
#include "mev/registry.hpp"
#include "mev/types.hpp"

namespace mev {

// Text returned by mock experts that must not compile: no endmodule.
inline constexpr std::string_view kBrokenStub =
    "module broken_stub(input a, output y);\n  assign y = a\n";

// Prompt-derived deterministic text: a function of (prompt, seed, index).
class EchoBackend final : public Backend {
 public:
  std::string name() const override { return "mock:echo"; }
  std::vector<std::string> complete_once(const CompletionRequest& req) override;
};

// Replays responses keyed by sha256(prompt). Fixture JSONL lines:
//   {"prompt_sha256": "...", "responses": ["...", ...]}
// An optional "fail": true makes every attempt for that prompt transiently fail.
class ScriptedBackend final : public Backend {
 public:
  ScriptedBackend() = default;
  static ScriptedBackend from_file(const std::filesystem::path& path);

  void add(std::string_view prompt, std::vector<std::string> responses);
  void add_failure(std::string_view prompt);
  void write(const std::filesystem::path& path) const;

  std::string name() const override { return "mock:scripted"; }
  std::vector<std::string> complete_once(const CompletionRequest& req) override;

 private:
  struct Script {
    std::vector<std::string> responses;
    bool fail = false;
  };
  std::map<std::string, Script> scripts_;  // sha256 -> script
};

// Knows every problem's reference solution. Returns it when the problem's
// ground-truth tier equals this expert's tier (falling back to the routed
// tier when the problem declares none); otherwise returns kBrokenStub.
class OracleExpertBackend final : public Backend {
 public:
  struct Answer {
    std::string reference;
    std::optional<ComplexityCategory> category;
  };
  OracleExpertBackend(ComplexityCategory own, std::shared_ptr<const std::map<std::string, Answer>> answers)
      : own_(own), answers_(std::move(answers)) {}

  std::string name() const override;
  std::vector<std::string> complete_once(const CompletionRequest& req) override;

 private:
  ComplexityCategory own_;
  std::shared_ptr<const std::map<std::string, Answer>> answers_;
};

// Always answers with kBrokenStub.
class BrokenBackend final : public Backend {
 public:
  std::string name() const override { return "mock:broken"; }
  std::vector<std::string> complete_once(const CompletionRequest& req) override;
};

// Rule-based stand-in for the hosted labeling model: describes code from
// keywords and answers tier questions with the keyword classifier.
class KeywordLabelerBackend final : public Backend {
 public:
  std::string name() const override { return "mock:labeler"; }
  std::vector<std::string> complete_once(const CompletionRequest& req) override;
};

// Completions-style HTTP client: POST {model, prompt, n, temperature, top_p,
// max_tokens, seed} and read {choices: [{text}, ...]}.
class HttpBackend final : public Backend {
 public:
  struct Options {
    std::string api_key_env = "MEV_API_KEY";
    Millis connect_timeout{5000};
    Millis read_timeout{120000};
    bool supports_n = true;
  };
  HttpBackend(std::string endpoint, Options options);

  std::string name() const override { return "http:" + endpoint_; }
  std::vector<std::string> complete_once(const CompletionRequest& req) override;
  bool supports_n() const override { return options_.supports_n; }

 private:
  std::string endpoint_;
  std::string base_;  // scheme://host:port
  std::string path_;
  Options options_;
};

struct BackendContext {
  std::optional<std::filesystem::path> scripted_fixture;
  std::shared_ptr<const std::map<std::string, OracleExpertBackend::Answer>> oracle_answers;
  HttpBackend::Options http;
};

// mock://echo/..., mock://scripted/..., mock://oracle/<tier>,
// mock://broken/..., mock://labeler/..., or http(s):// endpoints.
std::shared_ptr<Backend> make_backend(const std::string& endpoint, const BackendContext& ctx,
                                      std::optional<ComplexityCategory> tier = std::nullopt,
                                      bool supports_n = true);

// expert_id -> backend for every expert in the registry.
using BackendPool = std::unordered_map<std::string, std::shared_ptr<Backend>>;
BackendPool make_backend_pool(const ExpertRegistry& registry, const BackendContext& ctx);

// Body sent by HttpBackend; exposed for wire-format tests.
json completion_request_body(const CompletionRequest& req);
// Throws MalformedResponse.
std::vector<std::string> parse_completion_response(std::string_view body);

}  // namespace mev
