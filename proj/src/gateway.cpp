#include "mathpii/gateway.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/text.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <random>
#include <thread>

namespace mathpii {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    std::string hex;
    hex.reserve(len * 2);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

nlohmann::json request_body(const GatewayRequest& request) {
    nlohmann::ordered_json j;
    j["model"] = request.model_id;
    j["temperature"] = request.temperature;
    j["messages"] = nlohmann::ordered_json::array({
        {{"role", "system"}, {"content", request.system_text}},
        {{"role", "user"}, {"content", request.user_text}},
    });
    return nlohmann::json::parse(j.dump());
}

std::string request_hash(const GatewayRequest& request) { return sha256_hex(request_body(request).dump()); }

GatewayResponse complete_with_retry(ChatClient& client, const GatewayRequest& request, const RetryPolicy& policy) {
    const int max_attempts = std::max(1, std::min(policy.max_attempts, std::max(1, request.max_attempts)));
    std::mt19937_64 rng(policy.seed ^ std::hash<std::string>{}(request.user_text));
    std::uniform_real_distribution<double> jitter(1.0 - policy.jitter, 1.0 + policy.jitter);
    double backoff_ms = static_cast<double>(policy.initial_backoff.count());
    for (int attempt = 1;; ++attempt) {
        try {
            auto resp = client.complete(request);
            resp.attempts = attempt;
            return resp;
        } catch (const GatewayError& e) {
            if (e.kind() != GatewayErrorKind::Transient || attempt >= max_attempts) throw;
        }
        const auto wait = std::chrono::milliseconds(static_cast<long long>(backoff_ms * jitter(rng)));
        if (policy.sleeper)
            policy.sleeper(wait);
        else
            std::this_thread::sleep_for(wait);
        backoff_ms *= policy.multiplier;
    }
}

HttpGatewayClient::HttpGatewayClient(std::string url, std::string api_key, std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw GatewayError(GatewayErrorKind::Config, "gateway URL '" + url + "' has no scheme");
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? std::string() : url.substr(path_start);
    if (path_.empty() || path_ == "/") path_ = "/v1/chat/completions";
}

std::unique_ptr<HttpGatewayClient> HttpGatewayClient::from_env() {
    const char* url = std::getenv("LLM_GATEWAY_URL");
    const char* key = std::getenv("LLM_API_KEY");
    if (!url || !*url) throw GatewayError(GatewayErrorKind::Config, "LLM_GATEWAY_URL is not set");
    if (!key || !*key) throw GatewayError(GatewayErrorKind::Config, "LLM_API_KEY is not set");
    return std::make_unique<HttpGatewayClient>(url, key);
}

GatewayResponse HttpGatewayClient::complete(const GatewayRequest& request) {
    httplib::Client cli(origin_);
    cli.set_connection_timeout(std::chrono::seconds(30));
    cli.set_read_timeout(timeout_);
    cli.set_write_timeout(timeout_);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    const auto started = std::chrono::steady_clock::now();
    auto res = cli.Post(path_, headers, request_body(request).dump(), "application/json");
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started);
    if (!res)
        throw GatewayError(GatewayErrorKind::Transient, "gateway request failed: " + httplib::to_string(res.error()));
    const int status = res->status;
    if (status == 401 || status == 403)
        throw GatewayError(GatewayErrorKind::Auth, "gateway rejected credentials (HTTP " + std::to_string(status) + ")");
    if (status == 404)
        throw GatewayError(GatewayErrorKind::Config, "gateway endpoint not found: " + origin_ + path_);
    if (status == 408 || status == 429 || status >= 500)
        throw GatewayError(GatewayErrorKind::Transient, "gateway HTTP " + std::to_string(status));
    if (status >= 400)
        throw GatewayError(GatewayErrorKind::Permanent, "gateway HTTP " + std::to_string(status) + ": " + res->body);
    GatewayResponse out;
    out.latency_ms = elapsed.count();
    try {
        const auto body = nlohmann::json::parse(res->body);
        const auto& content = body.at("choices").at(0).at("message").at("content");
        out.raw_text = content.is_string() ? content.get<std::string>() : std::string();
        if (body.contains("usage")) out.usage = body["usage"];
    } catch (const std::exception& e) {
        throw GatewayError(GatewayErrorKind::Transient, std::string("unreadable gateway response: ") + e.what());
    }
    return out;
}

std::unique_ptr<ReplayClient> ReplayClient::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open response log '" + path.string() + "'");
    auto client = std::make_unique<ReplayClient>();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_whitespace(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            client->add(j.at("request_hash").get<std::string>(),
                        Entry{j.value("raw_text", std::string()), j.value("status", std::string("ok"))});
        } catch (const std::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return client;
}

void ReplayClient::add(const std::string& hash, Entry entry) {
    std::lock_guard lock(mutex_);
    entries_[hash].push_back(std::move(entry));
}

GatewayResponse ReplayClient::complete(const GatewayRequest& request) {
    const auto hash = request_hash(request);
    Entry entry;
    {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(hash);
        if (it == entries_.end() || it->second.empty())
            throw GatewayError(GatewayErrorKind::Config, "no recorded response for request " + hash);
        entry = it->second.front();
        if (it->second.size() > 1) it->second.pop_front();
    }
    if (entry.status != "ok")
        throw GatewayError(GatewayErrorKind::Transient, "recorded failure (" + entry.status + ")");
    GatewayResponse out;
    out.raw_text = std::move(entry.raw_text);
    return out;
}

RecordingClient::RecordingClient(ChatClient& inner, const std::filesystem::path& path)
    : inner_(inner), out_(path, std::ios::app) {
    if (!out_) throw IoError("cannot write response log '" + path.string() + "'");
}

GatewayResponse RecordingClient::complete(const GatewayRequest& request) {
    const auto hash = request_hash(request);
    auto record = [&](const std::string& raw, const std::string& status) {
        nlohmann::ordered_json j;
        j["request_hash"] = hash;
        j["raw_text"] = raw;
        j["status"] = status;
        std::lock_guard lock(mutex_);
        out_ << j.dump() << '\n';
        out_.flush();
    };
    try {
        auto resp = inner_.complete(request);
        record(resp.raw_text, "ok");
        return resp;
    } catch (const GatewayError& e) {
        // Fatal errors are not archived: a replay should fail the same way
        // only because the entry is missing.
        if (!e.fatal()) record("", "error");
        throw;
    }
}

RateLimitedClient::RateLimitedClient(ChatClient& inner, double requests_per_second) : inner_(inner) {
    if (!(requests_per_second > 0)) throw ConfigError("rate limit must be positive");
    interval_ = std::chrono::nanoseconds(static_cast<long long>(1e9 / requests_per_second));
}

GatewayResponse RateLimitedClient::complete(const GatewayRequest& request) {
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mutex_);
        const auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_slot_);
        next_slot_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
    return inner_.complete(request);
}

}  // namespace mathpii
