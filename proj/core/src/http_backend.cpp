#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "mev/backends.hpp"
#include "mev/errors.hpp"

namespace mev {

json completion_request_body(const CompletionRequest& req) {
  json body{{"model", req.model_name},
            {"prompt", req.prompt},
            {"n", req.n},
            {"temperature", req.sampling.temperature},
            {"top_p", req.sampling.top_p},
            {"max_tokens", req.sampling.max_tokens}};
  body["seed"] = req.seed ? json(*req.seed) : json(nullptr);
  return body;
}

std::vector<std::string> parse_completion_response(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("choices") || !j.at("choices").is_array()) {
    throw MalformedResponse("response has no choices array");
  }
  std::vector<std::string> texts;
  for (const auto& choice : j.at("choices")) {
    if (!choice.is_object() || !choice.contains("text") || !choice.at("text").is_string()) {
      throw MalformedResponse("choice without a text field");
    }
    texts.push_back(choice.at("text").get<std::string>());
  }
  return texts;
}

HttpBackend::HttpBackend(std::string endpoint, Options options)
    : endpoint_(std::move(endpoint)), options_(std::move(options)) {
  static const std::regex kSplit(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint_, m, kSplit)) {
    throw MalformedEndpoint("malformed endpoint '" + endpoint_ + "'");
  }
  base_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/completions";
}

std::vector<std::string> HttpBackend::complete_once(const CompletionRequest& req) {
  httplib::Client client(base_);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.connect_timeout).count(),
                                static_cast<time_t>(options_.connect_timeout.count() % 1000) * 1000);
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.read_timeout).count(),
                          static_cast<time_t>(options_.read_timeout.count() % 1000) * 1000);

  httplib::Headers headers;
  if (!options_.api_key_env.empty()) {
    if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  const std::string body = completion_request_body(req).dump();
  const auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    throw BackendUnreachable(endpoint_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw BackendUnreachable(endpoint_ + ": HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendRejected(endpoint_ + ": HTTP " + std::to_string(res->status));
  }
  return parse_completion_response(res->body);
}

}  // namespace mev
