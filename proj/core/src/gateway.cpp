#include "mev/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "mev/errors.hpp"

namespace mev {

TokenBucket::TokenBucket(double rate_per_second, double burst) : enabled_(rate_per_second > 0.0) {
  if (!enabled_) return;
  interval_ = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(1.0 / rate_per_second));
  const double extra = std::max(0.0, burst - 1.0);
  tolerance_ = std::chrono::duration_cast<Clock::duration>(interval_ * extra);
}

TokenBucket::Clock::duration TokenBucket::acquire(Clock::time_point now) {
  if (!enabled_) return Clock::duration::zero();
  std::lock_guard lock(mu_);
  const auto tat = std::max(tat_, now);
  const auto allowed_at = tat - tolerance_;
  const auto wait = allowed_at > now ? allowed_at - now : Clock::duration::zero();
  tat_ = tat + interval_;
  return wait;
}

void GatewayConfig::validate() const {
  if (prompt_token_limit == 0) throw ConfigError("prompt_token_limit must be positive");
  if (token_divisor == 0) throw ConfigError("token_divisor must be positive");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (backoff_multiplier < 1.0) throw ConfigError("backoff_multiplier must be >= 1");
  if (max_in_flight == 0) throw ConfigError("max_in_flight must be positive");
}

class Gateway::InFlightSlot {
 public:
  explicit InFlightSlot(Gateway& gw) : gw_(gw) {
    std::unique_lock lock(gw_.mu_);
    gw_.slot_cv_.wait(lock, [&] { return gw_.counters_.in_flight < gw_.config_.max_in_flight; });
    ++gw_.counters_.in_flight;
    gw_.counters_.peak_in_flight = std::max(gw_.counters_.peak_in_flight, gw_.counters_.in_flight);
  }
  ~InFlightSlot() {
    {
      std::lock_guard lock(gw_.mu_);
      --gw_.counters_.in_flight;
    }
    gw_.slot_cv_.notify_one();
  }
  InFlightSlot(const InFlightSlot&) = delete;
  InFlightSlot& operator=(const InFlightSlot&) = delete;

 private:
  Gateway& gw_;
};

Gateway::Gateway(GatewayConfig config, Sleeper sleeper)
    : config_(config),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](Millis d) { std::this_thread::sleep_for(d); })),
      bucket_(config.rate_per_second, config.burst) {
  config_.validate();
}

CompletionResult Gateway::complete(Backend& backend, const CompletionRequest& req) {
  {
    std::lock_guard lock(mu_);
    ++counters_.requests;
  }
  try {
    if (req.n < 1) throw PreconditionError("completion request needs n >= 1");
    if (trim(req.prompt).empty()) throw PreconditionError("completion prompt is empty");
    req.sampling.validate();
    const std::size_t tokens = estimate(req.prompt);
    if (tokens > config_.prompt_token_limit) {
      throw TokenLimitExceeded("prompt estimate " + std::to_string(tokens) + " tokens exceeds limit " +
                               std::to_string(config_.prompt_token_limit));
    }

    const auto start = std::chrono::steady_clock::now();
    CompletionResult result;
    if (req.n == 1 || backend.supports_n()) {
      result.texts = attempt_with_retries(backend, req);
    } else {
      // One request per completion, seed offset by index.
      for (int i = 0; i < req.n; ++i) {
        CompletionRequest single = req;
        single.n = 1;
        if (req.seed) single.seed = *req.seed + static_cast<std::uint64_t>(i);
        auto texts = attempt_with_retries(backend, single);
        result.texts.push_back(std::move(texts.front()));
      }
    }
    result.backend_latency =
        std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - start);
    return result;
  } catch (...) {
    std::lock_guard lock(mu_);
    ++counters_.failures;
    throw;
  }
}

std::vector<std::string> Gateway::attempt_with_retries(Backend& backend,
                                                       const CompletionRequest& req) {
  double delay_ms = static_cast<double>(config_.initial_backoff.count());
  for (int attempt = 0;; ++attempt) {
    const auto wait = bucket_.acquire();
    if (wait > TokenBucket::Clock::duration::zero()) {
      sleeper_(std::chrono::ceil<Millis>(wait));
    }
    try {
      std::vector<std::string> texts;
      {
        InFlightSlot slot(*this);
        {
          std::lock_guard lock(mu_);
          ++counters_.attempts;
        }
        texts = backend.complete_once(req);
      }
      if (texts.size() != static_cast<std::size_t>(req.n)) {
        throw MalformedResponse(backend.name() + " returned " + std::to_string(texts.size()) +
                                " completions, expected " + std::to_string(req.n));
      }
      return texts;
    } catch (const BackendUnreachable& e) {
      if (attempt >= config_.max_retries) {
        throw BackendUnreachable(backend.name() + " unreachable after " +
                                 std::to_string(attempt + 1) + " attempts: " + e.what());
      }
    }
    const Millis backoff{static_cast<Millis::rep>(
        std::min(delay_ms, static_cast<double>(config_.max_backoff.count())))};
    {
      std::lock_guard lock(mu_);
      ++counters_.retries;
      backoffs_.push_back(backoff);
    }
    sleeper_(backoff);
    delay_ms *= config_.backoff_multiplier;
  }
}

std::string compose_labeling_prompt(std::string_view system_preamble, std::string_view content) {
  std::string prompt(system_preamble);
  if (!prompt.empty() && prompt.back() != '\n') prompt.push_back('\n');
  prompt.push_back('\n');
  prompt.append(content);
  return prompt;
}

std::string Gateway::label_query(Backend& backend, std::string_view system_preamble,
                                 std::string_view content, const std::string& model_name,
                                 std::optional<std::uint64_t> seed) {
  if (trim(content).empty()) throw PreconditionError("label query content is empty");
  CompletionRequest req;
  req.model_name = model_name;
  req.prompt = compose_labeling_prompt(system_preamble, content);
  req.n = 1;
  req.seed = seed;
  auto result = complete(backend, req);
  return std::move(result.texts.front());
}

GatewayCounters Gateway::counters() const {
  std::lock_guard lock(mu_);
  return counters_;
}

std::vector<Millis> Gateway::backoff_history() const {
  std::lock_guard lock(mu_);
  return backoffs_;
}

}  // namespace mev
