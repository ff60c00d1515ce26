#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mev/text.hpp"
#include "mev/types.hpp"

namespace mev {

using Millis = std::chrono::milliseconds;

struct CompletionRequest {
  std::string model_name;
  std::string prompt;
  int n = 1;
  SamplingParams sampling;
  std::optional<std::uint64_t> seed;

  // Routing context for in-process mocks. Never sent on the wire.
  std::optional<std::string> problem_id;
  std::optional<ComplexityCategory> routed_category;
};

struct CompletionResult {
  std::vector<std::string> texts;
  Millis backend_latency{0};
};

// A text-generation backend. complete_once performs a single attempt:
// transient failures throw BackendUnreachable (the gateway retries those),
// anything else throws MalformedResponse or BackendRejected.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual std::vector<std::string> complete_once(const CompletionRequest& req) = 0;
  // False when the backend ignores n and must be asked once per completion.
  virtual bool supports_n() const { return true; }
};

// GCRA token bucket. acquire() reserves a slot and returns how long the
// caller must wait before using it.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  // rate <= 0 disables limiting.
  TokenBucket(double rate_per_second, double burst);
  Clock::duration acquire(Clock::time_point now = Clock::now());

 private:
  std::mutex mu_;
  Clock::duration interval_{};
  Clock::duration tolerance_{};
  Clock::time_point tat_{};
  bool enabled_;
};

struct GatewayConfig {
  std::size_t prompt_token_limit = kDefaultPromptTokenLimit;
  std::size_t token_divisor = kDefaultTokenDivisor;
  int max_retries = 2;
  Millis initial_backoff{200};
  double backoff_multiplier = 2.0;
  Millis max_backoff{5000};
  double rate_per_second = 5.0;
  double burst = 5.0;
  std::size_t max_in_flight = 4;

  void validate() const;
};

struct GatewayCounters {
  std::size_t requests = 0;   // complete() calls
  std::size_t attempts = 0;   // backend calls, retries included
  std::size_t retries = 0;
  std::size_t failures = 0;   // complete() calls that ended in an error
  std::size_t in_flight = 0;
  std::size_t peak_in_flight = 0;
};

// Shared, thread-safe front door to every backend.
class Gateway {
 public:
  using Sleeper = std::function<void(Millis)>;

  explicit Gateway(GatewayConfig config = {}, Sleeper sleeper = {});

  // Throws TokenLimitExceeded, PreconditionError, BackendUnreachable (after
  // max_retries + 1 attempts), MalformedResponse, BackendRejected.
  CompletionResult complete(Backend& backend, const CompletionRequest& req);

  // Single-response query: system preamble followed by content.
  std::string label_query(Backend& backend, std::string_view system_preamble,
                          std::string_view content, const std::string& model_name = {},
                          std::optional<std::uint64_t> seed = std::nullopt);

  std::size_t estimate(std::string_view text) const {
    return token_estimate(text, config_.token_divisor);
  }
  const GatewayConfig& config() const noexcept { return config_; }

  GatewayCounters counters() const;
  // Every backoff delay slept so far, in order.
  std::vector<Millis> backoff_history() const;

 private:
  class InFlightSlot;

  std::vector<std::string> attempt_with_retries(Backend& backend, const CompletionRequest& req);

  GatewayConfig config_;
  Sleeper sleeper_;
  TokenBucket bucket_;

  mutable std::mutex mu_;
  std::condition_variable slot_cv_;
  GatewayCounters counters_;
  std::vector<Millis> backoffs_;
};

// Joins preamble and content the way label_query sends them.
std::string compose_labeling_prompt(std::string_view system_preamble, std::string_view content);

}  // namespace mev
