#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "oracleloom/canonical_json.hpp"
#include "oracleloom/time.hpp"

namespace oracleloom {

struct CompletionRequest {
  std::string system_prompt;
  std::string user_prompt;
  int max_output_tokens = 1024;
  double temperature = 0.0;
  std::string provider_id = "stub";
};

struct CompletionResponse {
  std::string text;
  int tokens_in = 0;
  int tokens_out = 0;
  int64_t latency_ms = 0;
  std::string provider_id;
  int attempt = 1;

  Json to_json() const;
};

enum class ProviderKind { Cloud, Edge, Stub };
std::string_view to_string(ProviderKind k);
ProviderKind provider_kind_from_string(std::string_view s);

struct ProviderConfig {
  std::string id;
  ProviderKind kind = ProviderKind::Stub;
  /// Base URL of an OpenAI-compatible API; `/chat/completions` is appended
  /// unless already present.
  std::string endpoint;
  std::string model;
  /// Name of the environment variable holding the API key. Required for
  /// cloud providers, optional for edge ones.
  std::string credential_env;
  int timeout_ms = 60'000;
  /// Stub only: the first N calls fail with a transient upstream error.
  int inject_failures = 0;

  Json to_json() const;
  static ProviderConfig from_json(const Json& j);
};

struct BenchStats {
  std::string provider_id;
  int trials = 0;
  double cold_start_ms = 0.0;
  double warm_mean_ms = 0.0;
  double warm_stddev_ms = 0.0;
  std::vector<int> token_counts;
  std::vector<int64_t> latencies_ms;

  Json to_json() const;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base{500};
  double factor = 2.0;
};

/// Upper bound of the full-jitter delay before retry number `retry` (1-based).
std::chrono::milliseconds backoff_cap(const RetryPolicy& policy, int retry);

/// Number of whitespace-separated tokens.
int count_whitespace_tokens(std::string_view text);

/// Deterministic offline completion honoring the section-marker envelope.
std::string stub_completion(std::string_view system_prompt, std::string_view user_prompt);

/// Per-run token allowance shared by concurrent callers. Unlimited unless a
/// limit is given.
class TokenBudget {
 public:
  explicit TokenBudget(std::optional<int64_t> limit = std::nullopt);

  /// Reserves `tokens`; returns the remaining allowance (nullopt when
  /// unlimited). Throws BudgetExceeded without reserving anything.
  std::optional<int64_t> spend(int64_t tokens);
  void refund(int64_t tokens);
  std::optional<int64_t> remaining() const;
  std::optional<int64_t> limit() const { return limit_; }

 private:
  std::optional<int64_t> limit_;
  std::atomic<int64_t> remaining_;
};

/// Uniform completion front over configured providers. `complete` is safe to
/// call concurrently.
class LlmGateway {
 public:
  /// A stub provider with id "stub" is always registered.
  explicit LlmGateway(std::vector<ProviderConfig> providers, std::optional<int64_t> token_budget = std::nullopt,
                      Sleeper sleep = real_sleeper(), uint64_t jitter_seed = 0x5eed, RetryPolicy retry = {});

  /// Retries transient upstream failures with full-jitter exponential backoff.
  /// The provider timeout bounds the whole call, retries included. Throws
  /// ProviderUnknown, LiveDisabled, Timeout, UpstreamError, BudgetExceeded.
  CompletionResponse complete(const CompletionRequest& request);

  /// Runs `trials` sequential completions; the first is the cold start.
  /// Throws BadArgument when trials < 2.
  BenchStats bench(const std::string& provider_id, const std::string& prompt, int trials);

  /// Decrements the run budget directly; see TokenBudget::spend.
  std::optional<int64_t> spend_budget(int64_t tokens) { return budget_.spend(tokens); }
  std::optional<int64_t> remaining_budget() const { return budget_.remaining(); }

  const ProviderConfig* find(std::string_view id) const;
  std::vector<std::string> provider_ids() const;

  /// Delays slept between attempts of the most recent complete() call on
  /// this thread; for tests.
  static const std::vector<std::chrono::milliseconds>& last_backoffs();

 private:
  CompletionResponse attempt_once(const ProviderConfig& provider, const CompletionRequest& request,
                                  std::chrono::milliseconds timeout);
  std::chrono::milliseconds jitter(std::chrono::milliseconds cap);

  std::map<std::string, ProviderConfig, std::less<>> providers_;
  std::map<std::string, std::unique_ptr<std::atomic<int>>, std::less<>> stub_calls_;
  TokenBudget budget_;
  Sleeper sleep_;
  RetryPolicy retry_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

}  // namespace oracleloom
