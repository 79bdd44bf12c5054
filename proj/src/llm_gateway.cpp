#include "oracleloom/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <span>

#include "oracleloom/error.hpp"
#include "oracleloom/http_client.hpp"

namespace oracleloom {

namespace {

using std::chrono::milliseconds;

thread_local std::vector<milliseconds> t_backoffs;

std::string chat_completions_url(const std::string& endpoint) {
  std::string base = endpoint;
  while (!base.empty() && base.back() == '/') base.pop_back();
  const std::string suffix = "/chat/completions";
  if (base.size() >= suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return base;
  }
  return base + suffix;
}

}  // namespace

Json CompletionResponse::to_json() const {
  return {{"text", text},
          {"tokens_in", tokens_in},
          {"tokens_out", tokens_out},
          {"latency_ms", latency_ms},
          {"provider_id", provider_id},
          {"attempt", attempt}};
}

std::string_view to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::Cloud: return "cloud";
    case ProviderKind::Edge: return "edge";
    case ProviderKind::Stub: return "stub";
  }
  return "stub";
}

ProviderKind provider_kind_from_string(std::string_view s) {
  if (s == "cloud") return ProviderKind::Cloud;
  if (s == "edge") return ProviderKind::Edge;
  if (s == "stub") return ProviderKind::Stub;
  throw Error(ErrorCode::BadConfig, "unknown provider kind '" + std::string(s) + "'");
}

Json ProviderConfig::to_json() const {
  Json j = {{"id", id}, {"kind", std::string(to_string(kind))}, {"timeout_ms", timeout_ms}};
  if (!endpoint.empty()) j["endpoint"] = endpoint;
  if (!model.empty()) j["model"] = model;
  if (!credential_env.empty()) j["credential_env"] = credential_env;
  if (inject_failures > 0) j["inject_failures"] = inject_failures;
  return j;
}

ProviderConfig ProviderConfig::from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, "provider entry must be an object");
  ProviderConfig p;
  try {
    p.id = j.at("id").get<std::string>();
    p.kind = provider_kind_from_string(j.value("kind", std::string("stub")));
    p.endpoint = j.value("endpoint", std::string{});
    p.model = j.value("model", std::string{});
    p.credential_env = j.value("credential_env", std::string{});
    p.timeout_ms = j.value("timeout_ms", 60'000);
    p.inject_failures = j.value("inject_failures", 0);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("malformed provider entry: ") + e.what());
  }
  if (p.id.empty()) throw Error(ErrorCode::BadConfig, "provider id must be non-empty");
  if (p.kind != ProviderKind::Stub && p.endpoint.empty()) {
    throw Error(ErrorCode::BadConfig, "provider '" + p.id + "' needs an endpoint");
  }
  if (p.kind == ProviderKind::Cloud && p.credential_env.empty()) {
    throw Error(ErrorCode::BadConfig, "cloud provider '" + p.id + "' needs credential_env");
  }
  if (p.timeout_ms <= 0) throw Error(ErrorCode::BadConfig, "provider '" + p.id + "' timeout_ms must be positive");
  return p;
}

Json BenchStats::to_json() const {
  return {{"provider_id", provider_id},     {"trials", trials},
          {"cold_start_ms", cold_start_ms}, {"warm_mean_ms", warm_mean_ms},
          {"warm_stddev_ms", warm_stddev_ms}, {"token_counts", token_counts},
          {"latencies_ms", latencies_ms}};
}

milliseconds backoff_cap(const RetryPolicy& policy, int retry) {
  const double ms = static_cast<double>(policy.base.count()) * std::pow(policy.factor, retry - 1);
  return milliseconds{static_cast<int64_t>(ms)};
}

int count_whitespace_tokens(std::string_view text) {
  int n = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

TokenBudget::TokenBudget(std::optional<int64_t> limit) : limit_(limit), remaining_(limit.value_or(0)) {
  if (limit_ && *limit_ < 0) throw Error(ErrorCode::BadConfig, "token budget must be non-negative");
}

std::optional<int64_t> TokenBudget::spend(int64_t tokens) {
  if (tokens < 0) throw Error(ErrorCode::BadArgument, "cannot spend a negative token count");
  if (!limit_) return std::nullopt;
  int64_t current = remaining_.load();
  while (true) {
    if (tokens > current) {
      throw Error(ErrorCode::BudgetExceeded, "request needs an estimated " + std::to_string(tokens) +
                                                 " tokens but only " + std::to_string(current) + " remain");
    }
    if (remaining_.compare_exchange_weak(current, current - tokens)) return current - tokens;
  }
}

void TokenBudget::refund(int64_t tokens) {
  if (limit_ && tokens > 0) remaining_.fetch_add(tokens);
}

std::optional<int64_t> TokenBudget::remaining() const {
  if (!limit_) return std::nullopt;
  return remaining_.load();
}

LlmGateway::LlmGateway(std::vector<ProviderConfig> providers, std::optional<int64_t> token_budget, Sleeper sleep,
                       uint64_t jitter_seed, RetryPolicy retry)
    : budget_(token_budget), sleep_(std::move(sleep)), retry_(retry), rng_(jitter_seed) {
  for (auto& p : providers) {
    if (!providers_.emplace(p.id, p).second) {
      throw Error(ErrorCode::BadConfig, "duplicate provider id '" + p.id + "'");
    }
  }
  if (!providers_.contains("stub")) {
    ProviderConfig stub;
    stub.id = "stub";
    providers_.emplace(stub.id, stub);
  }
  for (const auto& [id, p] : providers_) {
    if (p.kind == ProviderKind::Stub) stub_calls_.emplace(id, std::make_unique<std::atomic<int>>(0));
  }
}

const ProviderConfig* LlmGateway::find(std::string_view id) const {
  auto it = providers_.find(id);
  return it == providers_.end() ? nullptr : &it->second;
}

std::vector<std::string> LlmGateway::provider_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, p] : providers_) ids.push_back(id);
  return ids;
}

const std::vector<milliseconds>& LlmGateway::last_backoffs() { return t_backoffs; }

milliseconds LlmGateway::jitter(milliseconds cap) {
  if (cap.count() <= 0) return milliseconds{0};
  std::lock_guard lock(rng_mutex_);
  std::uniform_int_distribution<int64_t> dist(0, cap.count());
  return milliseconds{dist(rng_)};
}

CompletionResponse LlmGateway::attempt_once(const ProviderConfig& provider, const CompletionRequest& request,
                                            milliseconds timeout) {
  CompletionResponse out;
  out.provider_id = provider.id;

  if (provider.kind == ProviderKind::Stub) {
    auto& calls = *stub_calls_.at(provider.id);
    if (calls.fetch_add(1) < provider.inject_failures) {
      throw UpstreamFailure("stub provider '" + provider.id + "' injected failure", 503, true);
    }
    out.text = stub_completion(request.system_prompt, request.user_prompt);
    out.tokens_in = count_whitespace_tokens(request.system_prompt) + count_whitespace_tokens(request.user_prompt);
    out.tokens_out = count_whitespace_tokens(out.text);
    out.latency_ms = 1;
    return out;
  }

  HttpOptions options;
  options.timeout = timeout;
  if (!provider.credential_env.empty()) {
    const char* key = std::getenv(provider.credential_env.c_str());
    if (key == nullptr || *key == '\0') {
      if (provider.kind == ProviderKind::Cloud) {
        throw Error(ErrorCode::LiveDisabled,
                    "provider '" + provider.id + "' needs environment variable " + provider.credential_env);
      }
    } else {
      options.headers["Authorization"] = std::string("Bearer ") + key;
    }
  }
  const Json body = {{"model", provider.model},
                     {"messages",
                      Json::array({Json{{"role", "system"}, {"content", request.system_prompt}},
                                   Json{{"role", "user"}, {"content", request.user_prompt}}})},
                     {"max_tokens", request.max_output_tokens},
                     {"temperature", request.temperature},
                     {"stream", false}};

  const auto started = std::chrono::steady_clock::now();
  const HttpResponse res = http_post(chat_completions_url(provider.endpoint), body.dump(), "application/json", options);
  out.latency_ms =
      std::chrono::duration_cast<milliseconds>(std::chrono::steady_clock::now() - started).count();

  if (res.status < 200 || res.status >= 300) {
    int retry_after_ms = 0;
    if (auto it = res.headers.find("retry-after"); it != res.headers.end()) {
      retry_after_ms = std::atoi(it->second.c_str()) * 1000;
    }
    throw UpstreamFailure("provider '" + provider.id + "' returned HTTP " + std::to_string(res.status), res.status,
                          res.status == 429 || res.status >= 500, retry_after_ms);
  }
  try {
    const Json reply = Json::parse(res.body);
    out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    if (reply.contains("usage") && reply["usage"].is_object()) {
      out.tokens_in = reply["usage"].value("prompt_tokens", 0);
      out.tokens_out = reply["usage"].value("completion_tokens", 0);
    } else {
      out.tokens_in = count_whitespace_tokens(request.system_prompt) + count_whitespace_tokens(request.user_prompt);
      out.tokens_out = count_whitespace_tokens(out.text);
    }
  } catch (const Json::exception& e) {
    throw UpstreamFailure("provider '" + provider.id + "' sent an unreadable reply: " + e.what(), res.status, false);
  }
  return out;
}

CompletionResponse LlmGateway::complete(const CompletionRequest& request) {
  t_backoffs.clear();
  const ProviderConfig* provider = find(request.provider_id);
  if (provider == nullptr) throw Error(ErrorCode::ProviderUnknown, "unknown provider '" + request.provider_id + "'");
  if (request.system_prompt.empty() || request.user_prompt.empty()) {
    throw Error(ErrorCode::BadArgument, "completion prompts must be non-empty");
  }
  if (request.max_output_tokens < 1) throw Error(ErrorCode::BadArgument, "max_output_tokens must be >= 1");
  if (!(request.temperature >= 0.0)) throw Error(ErrorCode::BadArgument, "temperature must be >= 0");

  const int64_t estimate = count_whitespace_tokens(request.system_prompt) +
                           count_whitespace_tokens(request.user_prompt) + request.max_output_tokens;
  budget_.spend(estimate);

  const auto deadline = std::chrono::steady_clock::now() + milliseconds{provider->timeout_ms};
  for (int attempt = 1;; ++attempt) {
    const auto left = std::chrono::duration_cast<milliseconds>(deadline - std::chrono::steady_clock::now());
    try {
      if (left.count() <= 0) {
        throw Error(ErrorCode::Timeout, "provider '" + provider->id + "' exceeded its " +
                                            std::to_string(provider->timeout_ms) + " ms deadline");
      }
      CompletionResponse res = attempt_once(*provider, request, left);
      res.attempt = attempt;
      const int64_t used = res.tokens_in + res.tokens_out;
      if (used < estimate) budget_.refund(estimate - used);
      return res;
    } catch (const UpstreamFailure& e) {
      if (!e.transient() || attempt > retry_.max_retries) {
        budget_.refund(estimate);
        if (attempt > 1) {
          throw UpstreamFailure(std::string(e.what()) + " (after " + std::to_string(attempt) + " attempts)",
                                e.status(), e.transient(), e.retry_after_ms());
        }
        throw;
      }
      milliseconds delay = jitter(backoff_cap(retry_, attempt));
      delay = std::max(delay, milliseconds{e.retry_after_ms()});
      t_backoffs.push_back(delay);
      sleep_(delay);
    } catch (...) {
      budget_.refund(estimate);
      throw;
    }
  }
}

BenchStats LlmGateway::bench(const std::string& provider_id, const std::string& prompt, int trials) {
  if (trials < 2) throw Error(ErrorCode::BadArgument, "bench needs at least 2 trials (one cold, one warm)");
  if (find(provider_id) == nullptr) throw Error(ErrorCode::ProviderUnknown, "unknown provider '" + provider_id + "'");
  BenchStats stats;
  stats.provider_id = provider_id;
  stats.trials = trials;
  CompletionRequest req;
  req.provider_id = provider_id;
  req.system_prompt = "You are a helpful assistant.";
  req.user_prompt = prompt;
  for (int i = 0; i < trials; ++i) {
    const CompletionResponse res = complete(req);
    stats.latencies_ms.push_back(res.latency_ms);
    stats.token_counts.push_back(res.tokens_out);
  }
  stats.cold_start_ms = static_cast<double>(stats.latencies_ms.front());
  const std::span<const int64_t> warm(stats.latencies_ms.begin() + 1, stats.latencies_ms.end());
  double sum = 0.0;
  for (auto v : warm) sum += static_cast<double>(v);
  stats.warm_mean_ms = sum / static_cast<double>(warm.size());
  double ss = 0.0;
  for (auto v : warm) ss += (static_cast<double>(v) - stats.warm_mean_ms) * (static_cast<double>(v) - stats.warm_mean_ms);
  stats.warm_stddev_ms = std::sqrt(ss / static_cast<double>(warm.size()));
  return stats;
}

}  // namespace oracleloom
