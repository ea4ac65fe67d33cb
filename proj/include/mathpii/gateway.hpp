#pragma once

// Provider-neutral chat-completion client layer. A ChatClient performs exactly
// one attempt per call; retries, pacing, recording, and replay are layered on
// top so the same detection code runs against a live gateway or a log.

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

namespace mathpii {

struct GatewayRequest {
    std::string model_id;
    std::string system_text;
    std::string user_text;
    int max_attempts = 3;
    double temperature = 0.0;
};

struct GatewayResponse {
    std::string raw_text;
    int attempts = 1;
    double latency_ms = 0.0;
    nlohmann::json usage = nlohmann::json::object();
};

// Chat-completions wire body: {"model", "temperature", "messages": [...]}.
nlohmann::json request_body(const GatewayRequest& request);
// SHA-256 hex of the compact dump of request_body(); max_attempts is excluded.
std::string request_hash(const GatewayRequest& request);

std::string sha256_hex(std::string_view data);

enum class GatewayErrorKind { Transient, Auth, Config, Permanent };

class GatewayError : public std::runtime_error {
public:
    GatewayError(GatewayErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    GatewayErrorKind kind() const { return kind_; }
    // Auth and config failures stop a whole run instead of one message.
    bool fatal() const { return kind_ == GatewayErrorKind::Auth || kind_ == GatewayErrorKind::Config; }

private:
    GatewayErrorKind kind_;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string client_id() const = 0;
    // One attempt. Throws GatewayError on failure. Must be callable from
    // several threads at once.
    virtual GatewayResponse complete(const GatewayRequest& request) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;
    double jitter = 0.25;  // backoff scaled by a factor drawn from [1 - jitter, 1 + jitter]
    std::uint64_t seed = 7;
    std::function<void(std::chrono::milliseconds)> sleeper;  // defaults to this_thread::sleep_for
};

// Transient failures are retried up to min(policy, request) attempts with
// exponential backoff; fatal and permanent errors are rethrown at once. The
// returned response carries the attempt count that succeeded. Exhaustion
// rethrows the last error.
GatewayResponse complete_with_retry(ChatClient& client, const GatewayRequest& request, const RetryPolicy& policy);

// Live client for a chat-completions endpoint. `url` is the full endpoint;
// a bare origin gets "/v1/chat/completions" appended.
class HttpGatewayClient final : public ChatClient {
public:
    HttpGatewayClient(std::string url, std::string api_key, std::chrono::seconds timeout = std::chrono::seconds(120));
    // Reads LLM_GATEWAY_URL and LLM_API_KEY; throws GatewayError(Config) if unset.
    static std::unique_ptr<HttpGatewayClient> from_env();

    std::string client_id() const override { return "http:" + origin_; }
    GatewayResponse complete(const GatewayRequest& request) override;

private:
    std::string origin_;
    std::string path_;
    std::string api_key_;
    std::chrono::seconds timeout_;
};

// Serves responses from a JSONL archive of {request_hash, raw_text, status}.
// Entries for one hash are served in file order and the last one repeats.
// A status other than "ok" replays as a transient failure.
class ReplayClient final : public ChatClient {
public:
    struct Entry {
        std::string raw_text;
        std::string status = "ok";
    };

    static std::unique_ptr<ReplayClient> load(const std::filesystem::path& path);
    void add(const std::string& hash, Entry entry);

    std::string client_id() const override { return "replay"; }
    GatewayResponse complete(const GatewayRequest& request) override;

private:
    std::mutex mutex_;
    std::unordered_map<std::string, std::deque<Entry>> entries_;
};

// Forwards to `inner` and appends every attempt's outcome to a JSONL archive
// readable by ReplayClient.
class RecordingClient final : public ChatClient {
public:
    RecordingClient(ChatClient& inner, const std::filesystem::path& path);

    std::string client_id() const override { return "record:" + inner_.client_id(); }
    GatewayResponse complete(const GatewayRequest& request) override;

private:
    ChatClient& inner_;
    std::mutex mutex_;
    std::ofstream out_;
};

// Spaces calls to `inner` at least 1/requests_per_second apart.
class RateLimitedClient final : public ChatClient {
public:
    RateLimitedClient(ChatClient& inner, double requests_per_second);

    std::string client_id() const override { return inner_.client_id(); }
    GatewayResponse complete(const GatewayRequest& request) override;

private:
    ChatClient& inner_;
    std::chrono::nanoseconds interval_;
    std::mutex mutex_;
    std::chrono::steady_clock::time_point next_slot_{};
};

}  // namespace mathpii
