#include "tropeval/client.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "tropeval/hash.hpp"

namespace tropeval {

using nlohmann::json;

namespace {

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json response_to_json(const ChatResponse& response) {
    json j;
    j["content"] = response.content;
    j["finish_reason"] = response.finish_reason;
    if (response.usage) {
        j["usage"] = {{"prompt_tokens", response.usage->prompt_tokens},
                      {"completion_tokens", response.usage->completion_tokens}};
    }
    j["latency_ms"] = response.latency_ms;
    j["provider_id"] = response.provider_id;
    return j;
}

ChatResponse response_from_json(const json& j) {
    ChatResponse r;
    r.content = j.at("content").get<std::string>();
    r.finish_reason = j.value("finish_reason", "stop");
    if (j.contains("usage")) {
        TokenUsage usage;
        usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
        usage.completion_tokens = j["usage"].value("completion_tokens", 0);
        r.usage = usage;
    }
    r.latency_ms = j.value("latency_ms", 0);
    r.provider_id = j.value("provider_id", "");
    return r;
}

}  // namespace

std::string ChatRequest::canonical_json() const {
    // nlohmann::json objects iterate in sorted key order; dump() emits
    // compact, whitespace-free JSON, so equal requests serialize identically.
    json j;
    j["model"] = model;
    j["temperature"] = temperature;
    if (max_output_tokens) j["max_output_tokens"] = *max_output_tokens;
    j["template_version"] = template_version;
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"content", m.content}, {"role", m.role}});
    j["messages"] = std::move(msgs);
    return j.dump();
}

std::string ChatRequest::fingerprint() const { return sha256_hex(canonical_json()); }

std::string ChatRequest::joined_content() const {
    std::string out;
    for (const auto& m : messages) {
        if (!out.empty()) out += "\n";
        out += m.content;
    }
    return out;
}

ChatRequest make_request(const PromptSpec& prompt, const std::string& model) {
    ChatRequest req;
    req.model = model;
    req.messages = prompt.messages;
    req.temperature = prompt.decoding.temperature;
    req.max_output_tokens = prompt.decoding.max_output_tokens;
    req.template_version = prompt.template_version;
    return req;
}

Sleeper real_sleeper() {
    return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::chrono::milliseconds backoff_delay(int attempt, const std::string& fingerprint) {
    double base_ms = 1000.0 * std::pow(2.0, attempt - 1);
    base_ms = std::min(base_ms, 60000.0);
    std::uint64_t h = sha256_prefix_u64(fingerprint + ":attempt:" + std::to_string(attempt));
    double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
    double jittered = base_ms * (0.8 + 0.4 * unit);
    return std::chrono::milliseconds(static_cast<long long>(jittered));
}

ChatResponse complete(const ChatRequest& request, Provider& provider, int max_retries,
                      const Sleeper& sleep) {
    const int attempts = max_retries + 1;
    std::string last_cause;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        try {
            return provider.send(request);
        } catch (const TransientError& e) {
            last_cause = e.what();
            if (attempt == attempts) break;
            sleep(backoff_delay(attempt, request.fingerprint()));
        }
    }
    throw ExhaustedRetries(attempts, last_cause);
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw CacheError("cannot create cache dir " + dir_.string() + ": " + ec.message());
}

std::filesystem::path ResponseCache::entry_path(const std::string& key) const {
    return dir_ / (key + ".json");
}

std::optional<ChatResponse> ResponseCache::get(const std::string& key) const {
    std::ifstream in(entry_path(key));
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("response")) {
        throw CacheError("corrupt cache entry: " + entry_path(key).string());
    }
    return response_from_json(j["response"]);
}

void ResponseCache::put(const std::string& key, const ChatResponse& response) {
    json j;
    j["key"] = key;
    j["created_at"] = iso_now();
    j["response"] = response_to_json(response);

    std::filesystem::path tmp = entry_path(key);
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CacheError("cannot write cache entry: " + tmp.string());
        out << j.dump(2) << "\n";
    }
    std::error_code ec;
    std::filesystem::rename(tmp, entry_path(key), ec);
    if (ec) throw CacheError("cannot finalize cache entry: " + ec.message());
}

std::size_t ResponseCache::size() const {
    std::size_t n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() == ".json") ++n;
    }
    return n;
}

std::shared_ptr<std::mutex> ResponseCache::key_lock(const std::string& key) {
    std::lock_guard<std::mutex> guard(mu_);
    auto& slot = locks_[key];
    if (!slot) slot = std::make_shared<std::mutex>();
    return slot;
}

CompletionResult cached_complete(const ChatRequest& request, Provider& provider,
                                 ResponseCache& cache, int max_retries, const Sleeper& sleep) {
    const std::string key = request.fingerprint();
    auto lock = cache.key_lock(key);
    std::lock_guard<std::mutex> guard(*lock);
    if (auto hit = cache.get(key)) return {*hit, true};
    ChatResponse fresh = complete(request, provider, max_retries, sleep);
    cache.put(key, fresh);
    return {fresh, false};
}

std::unique_ptr<ScriptedProvider> ScriptedProvider::from_file(
    const std::filesystem::path& fixture_path) {
    std::ifstream in(fixture_path);
    if (!in) throw ClientError("cannot open fixture: " + fixture_path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("rules") || !j["rules"].is_array()) {
        throw ClientError("fixture must be a JSON object with a \"rules\" array: " +
                          fixture_path.string());
    }
    auto provider = std::make_unique<ScriptedProvider>();
    for (const auto& jr : j["rules"]) {
        ScriptRule rule;
        const json& match = jr.value("match", json::object());
        if (match.contains("fingerprint")) {
            rule.fingerprint = match["fingerprint"].get<std::string>();
        } else if (match.contains("contains")) {
            rule.contains.push_back(match["contains"].get<std::string>());
        } else if (match.contains("contains_all")) {
            for (const auto& needle : match["contains_all"]) {
                rule.contains.push_back(needle.get<std::string>());
            }
        } else if (match.value("any", false)) {
            rule.match_any = true;
        } else {
            throw ClientError("fixture rule without a usable match clause: " +
                              fixture_path.string());
        }
        rule.content = jr.value("content", "");
        rule.finish_reason = jr.value("finish_reason", "stop");
        rule.error_status = jr.value("error_status", 0);
        rule.error_times = jr.value("error_times", -1);
        provider->add_rule(std::move(rule));
    }
    return provider;
}

void ScriptedProvider::add_rule(ScriptRule rule) {
    std::lock_guard<std::mutex> guard(mu_);
    rules_.push_back(std::move(rule));
    error_budget_used_.push_back(0);
}

void ScriptedProvider::add_fingerprint_rule(const std::string& fingerprint,
                                            const std::string& content) {
    ScriptRule rule;
    rule.fingerprint = fingerprint;
    rule.content = content;
    add_rule(std::move(rule));
}

void ScriptedProvider::add_contains_rule(const std::string& needle, const std::string& content) {
    ScriptRule rule;
    rule.contains.push_back(needle);
    rule.content = content;
    add_rule(std::move(rule));
}

void ScriptedProvider::add_any_rule(const std::string& content) {
    ScriptRule rule;
    rule.match_any = true;
    rule.content = content;
    add_rule(std::move(rule));
}

ChatResponse ScriptedProvider::send(const ChatRequest& request) {
    const std::string fp = request.fingerprint();
    const std::string joined = request.joined_content();
    std::lock_guard<std::mutex> guard(mu_);
    calls_.push_back(fp);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const ScriptRule& rule = rules_[i];
        bool matched = false;
        if (rule.fingerprint) {
            matched = *rule.fingerprint == fp;
        } else if (!rule.contains.empty()) {
            matched = true;
            for (const auto& needle : rule.contains) {
                if (joined.find(needle) == std::string::npos) {
                    matched = false;
                    break;
                }
            }
        } else if (rule.match_any) {
            matched = true;
        }
        if (!matched) continue;

        if (rule.error_status != 0 &&
            (rule.error_times < 0 || error_budget_used_[i] < rule.error_times)) {
            ++error_budget_used_[i];
            std::string what = "scripted error status " + std::to_string(rule.error_status);
            if (rule.error_status == 401 || rule.error_status == 403) throw AuthError(what);
            throw TransientError(rule.error_status, what);
        }
        ChatResponse response;
        response.content = rule.content;
        response.finish_reason = rule.finish_reason;
        response.provider_id = id();
        return response;
    }
    std::string preview = joined.substr(0, 120);
    throw UnmatchedRequest("no fixture rule matches request " + fp + " (content starts: \"" +
                           preview + "\")");
}

int ScriptedProvider::call_count() const {
    std::lock_guard<std::mutex> guard(mu_);
    return static_cast<int>(calls_.size());
}

std::vector<std::string> ScriptedProvider::call_fingerprints() const {
    std::lock_guard<std::mutex> guard(mu_);
    return calls_;
}

RandomProvider::RandomProvider(double yes_probability, std::uint64_t seed)
    : p_(yes_probability), seed_(seed) {
    if (p_ < 0.0 || p_ > 1.0) throw std::invalid_argument("yes_probability must be in [0, 1]");
}

ChatResponse RandomProvider::send(const ChatRequest& request) {
    // Keyed off (seed, fingerprint): the answer for a given request never
    // depends on call order, so parallel runs stay deterministic.
    std::uint64_t h = sha256_prefix_u64("random:" + std::to_string(seed_) + ":" +
                                        request.fingerprint());
    double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
    ChatResponse response;
    response.content = unit < p_ ? "yes" : "no";
    response.provider_id = id();
    return response;
}

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw std::invalid_argument("base_url required");
}

ChatResponse HttpProvider::send(const ChatRequest& request) {
    const char* token = config_.auth_env.empty() ? nullptr : std::getenv(config_.auth_env.c_str());
    if (!token || !*token) {
        throw AuthError("environment variable " + config_.auth_env + " is unset or empty");
    }

    // Split base_url into origin (scheme://host[:port]) and path prefix.
    std::string origin = config_.base_url;
    std::string prefix;
    std::size_t scheme_end = origin.find("://");
    std::size_t path_start =
        origin.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start != std::string::npos) {
        prefix = origin.substr(path_start);
        origin = origin.substr(0, path_start);
    }
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    json body;
    body["model"] = request.model;
    json msgs = json::array();
    for (const auto& m : request.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = std::move(msgs);
    body["temperature"] = request.temperature;
    if (request.max_output_tokens) body["max_tokens"] = *request.max_output_tokens;

    httplib::Client client(origin);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    client.set_bearer_token_auth(token);

    auto started = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(prefix + "/chat/completions", body.dump(),
                                      "application/json");
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    if (!res) {
        throw TransientError(0, "transport failure: " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
        throw AuthError("authentication rejected (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransientError(res->status, "HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw ClientError("unexpected HTTP " + std::to_string(res->status) + ": " +
                          res->body.substr(0, 200));
    }

    json j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
        throw ClientError("response body missing choices[0]: " + res->body.substr(0, 200));
    }
    const json& choice = j["choices"][0];
    ChatResponse response;
    response.content = choice.at("message").at("content").get<std::string>();
    response.finish_reason = choice.value("finish_reason", "stop");
    if (j.contains("usage")) {
        TokenUsage usage;
        usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
        usage.completion_tokens = j["usage"].value("completion_tokens", 0);
        response.usage = usage;
    }
    response.latency_ms = static_cast<int>(elapsed.count());
    response.provider_id = id();
    return response;
}

}  // namespace tropeval
