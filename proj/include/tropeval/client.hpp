#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tropeval/prompting.hpp"
#include "tropeval/types.hpp"

namespace tropeval {

struct ClientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-retryable: bad or missing credentials.
struct AuthError : ClientError {
    using ClientError::ClientError;
};

// Retryable: timeouts, HTTP 429/5xx. status 0 = transport-level failure.
struct TransientError : ClientError {
    TransientError(int status_code, const std::string& what)
        : ClientError(what), status(status_code) {}
    int status;
};

struct ExhaustedRetries : ClientError {
    ExhaustedRetries(int attempts_made, const std::string& last_cause)
        : ClientError("exhausted retries after " + std::to_string(attempts_made) +
                      " attempts; last cause: " + last_cause),
          attempts(attempts_made),
          cause(last_cause) {}
    int attempts;
    std::string cause;
};

struct UnmatchedRequest : ClientError {
    using ClientError::ClientError;
};

struct CacheError : ClientError {
    using ClientError::ClientError;
};

struct TokenUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;

    bool operator==(const TokenUsage&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::optional<int> max_output_tokens;
    std::string template_version;

    // Sorted-key compact JSON; equal requests serialize identically.
    std::string canonical_json() const;
    // sha256 of canonical_json(); doubles as the cache key.
    std::string fingerprint() const;
    std::string joined_content() const;
};

ChatRequest make_request(const PromptSpec& prompt, const std::string& model);

struct ChatResponse {
    std::string content;
    std::string finish_reason = "stop";
    std::optional<TokenUsage> usage;
    int latency_ms = 0;
    std::string provider_id;
};

// `auth_env` holds the NAME of the environment variable carrying the secret;
// the secret itself must never be stored or serialized.
struct ProviderConfig {
    std::string base_url;
    std::string auth_env;
    int timeout_s = 60;
    int max_retries = 3;
    int max_parallel = 4;
};

// A provider performs exactly one attempt per send(); retry policy lives in
// complete(). Implementations must be safe to call from multiple threads.
class Provider {
  public:
    virtual ~Provider() = default;
    virtual ChatResponse send(const ChatRequest& request) = 0;
    virtual std::string id() const = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

Sleeper real_sleeper();

// Deterministic exponential backoff: base 1s, factor 2, jitter +/-20% derived
// from the request fingerprint, capped at 60s.
std::chrono::milliseconds backoff_delay(int attempt, const std::string& fingerprint);

// Retries TransientError up to max_retries times (max_retries + 1 attempts).
ChatResponse complete(const ChatRequest& request, Provider& provider, int max_retries = 0,
                      const Sleeper& sleep = real_sleeper());

// Append-only directory of JSON files keyed by request fingerprint.
class ResponseCache {
  public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<ChatResponse> get(const std::string& key) const;
    void put(const std::string& key, const ChatResponse& response);
    std::size_t size() const;
    const std::filesystem::path& dir() const { return dir_; }

    // Per-key mutex so concurrent misses on one key collapse to one fetch.
    std::shared_ptr<std::mutex> key_lock(const std::string& key);

  private:
    std::filesystem::path dir_;
    std::filesystem::path entry_path(const std::string& key) const;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

struct CompletionResult {
    ChatResponse response;
    bool cache_hit = false;
};

CompletionResult cached_complete(const ChatRequest& request, Provider& provider,
                                 ResponseCache& cache, int max_retries = 0,
                                 const Sleeper& sleep = real_sleeper());

struct ScriptRule {
    // Match: exactly one of fingerprint / contains(+all) / any.
    std::optional<std::string> fingerprint;
    std::vector<std::string> contains;
    bool match_any = false;

    // Response, or an error for the first error_times matching calls
    // (error_times < 0 = always error).
    std::string content;
    std::string finish_reason = "stop";
    int error_status = 0;
    int error_times = -1;
};

// Offline provider replaying canned contents from match rules; unmatched
// requests fail loudly. Keeps a call log for tests.
class ScriptedProvider : public Provider {
  public:
    ScriptedProvider() = default;
    static std::unique_ptr<ScriptedProvider> from_file(const std::filesystem::path& fixture_path);

    void add_rule(ScriptRule rule);
    void add_fingerprint_rule(const std::string& fingerprint, const std::string& content);
    void add_contains_rule(const std::string& needle, const std::string& content);
    void add_any_rule(const std::string& content);

    ChatResponse send(const ChatRequest& request) override;
    std::string id() const override { return "scripted"; }

    int call_count() const;
    std::vector<std::string> call_fingerprints() const;

  private:
    std::vector<ScriptRule> rules_;
    std::vector<int> error_budget_used_;
    mutable std::mutex mu_;
    std::vector<std::string> calls_;
};

// Answers "yes" with probability yes_probability, keyed off the request
// fingerprint so results are independent of call order and thread timing.
class RandomProvider : public Provider {
  public:
    RandomProvider(double yes_probability, std::uint64_t seed);

    ChatResponse send(const ChatRequest& request) override;
    std::string id() const override { return "random"; }

  private:
    double p_;
    std::uint64_t seed_;
};

// Speaks the common JSON-over-HTTP chat protocol:
// POST {base_url}/chat/completions, bearer auth from the configured env var.
class HttpProvider : public Provider {
  public:
    explicit HttpProvider(ProviderConfig config);

    ChatResponse send(const ChatRequest& request) override;
    std::string id() const override { return "http:" + config_.base_url; }

  private:
    ProviderConfig config_;
};

}  // namespace tropeval
