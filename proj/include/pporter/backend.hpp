#pragma once

// Text-completion backends: an HTTP JSON client for open inference servers
// and a deterministic mock used by tests and dry runs.

#include <chrono>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "pporter/diffing.hpp"
#include "pporter/prompt.hpp"

namespace pporter {

struct BackendConfig {
    std::string endpoint = "http://127.0.0.1:8080/v1/completions";
    // Optional token counting endpoint; the byte estimate is used without it.
    std::string tokenize_endpoint;
    std::string model = "starcoder";
    std::size_t length_limit = 8192;
    // Unset means min(2048, length_limit - prompt estimate).
    std::optional<std::size_t> max_new_tokens;
    double temperature = 0.0;
    std::vector<std::string> stop;
    // Name of the environment variable holding the bearer token.
    std::string auth_env = "PPORTER_API_TOKEN";
    int retries = 3;
    int backoff_ms = 500;
    int timeout_s = 600;
    std::size_t concurrency = 4;

    void validate() const
    {
        if (length_limit != 2048 && length_limit != 4096 && length_limit != 8192)
            throw std::invalid_argument("length_limit must be one of 2048, 4096, 8192");
        if (temperature < 0.0)
            throw std::invalid_argument("temperature must be non-negative");
        if (retries < 0 || backoff_ms < 0)
            throw std::invalid_argument("retries and backoff must be non-negative");
        if (concurrency == 0)
            throw std::invalid_argument("concurrency must be at least 1");
    }
};

struct CompletionRequest {
    std::string model;
    std::string prompt;
    std::size_t max_tokens = 0;
    double temperature = 0.0;
    std::vector<std::string> stop;
};

struct CompletionResponse {
    std::string text;
    // The server stopped because it ran out of tokens.
    bool length_exhausted = false;
    int attempts = 1;
};

class BackendError : public std::runtime_error {
public:
    BackendError(const std::string& what, int attempts)
        : std::runtime_error(what)
        , attempts_(attempts)
    {
    }

    int attempts() const { return attempts_; }

private:
    int attempts_;
};

// Implementations must be safe to call from several threads at once.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual std::optional<std::size_t> count_tokens(std::string_view) { return std::nullopt; }
};

namespace detail {

    struct Url {
        std::string origin;
        std::string path;
    };

    inline Url split_url(const std::string& url)
    {
        std::size_t scheme = url.find("://");
        if (scheme == std::string::npos)
            throw std::invalid_argument("endpoint must be an absolute URL: " + url);
        std::size_t slash = url.find('/', scheme + 3);
        if (slash == std::string::npos)
            return Url { url, "/" };
        return Url { url.substr(0, slash), url.substr(slash) };
    }

} // namespace detail

// POSTs {model, prompt, max_tokens, temperature, stop} and reads either
// {text} or an OpenAI-style {choices: [{text, finish_reason}]}.
class HttpBackend : public CompletionBackend {
public:
    explicit HttpBackend(BackendConfig config)
        : config_(std::move(config))
    {
        if (config_.endpoint.rfind("https://", 0) == 0) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
            throw std::invalid_argument("https endpoints need a build with OpenSSL support");
#endif
        }
    }

    CompletionResponse complete(const CompletionRequest& request) override
    {
        nlohmann::json body {
            { "model", request.model },
            { "prompt", request.prompt },
            { "max_tokens", request.max_tokens },
            { "temperature", request.temperature },
            { "stop", request.stop },
        };
        auto [json, attempts] = post(config_.endpoint, body.dump());
        CompletionResponse out;
        out.attempts = attempts;
        if (json.contains("text") && json["text"].is_string()) {
            out.text = json["text"].get<std::string>();
            out.length_exhausted = json.value("finish_reason", "") == "length";
        } else if (json.contains("choices") && json["choices"].is_array() && !json["choices"].empty()) {
            const auto& choice = json["choices"][0];
            out.text = choice.value("text", "");
            if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
                out.length_exhausted = choice["finish_reason"] == "length";
        } else {
            throw BackendError("completion response has no text field", attempts);
        }
        return out;
    }

    std::optional<std::size_t> count_tokens(std::string_view text) override
    {
        if (config_.tokenize_endpoint.empty())
            return std::nullopt;
        nlohmann::json body { { "model", config_.model }, { "prompt", text } };
        auto [json, attempts] = post(config_.tokenize_endpoint, body.dump());
        (void)attempts;
        if (json.contains("count"))
            return json["count"].get<std::size_t>();
        if (json.contains("tokens") && json["tokens"].is_array())
            return json["tokens"].size();
        throw BackendError("tokenize response has neither count nor tokens", attempts);
    }

private:
    BackendConfig config_;

    std::pair<nlohmann::json, int> post(const std::string& url, const std::string& body)
    {
        detail::Url parts = detail::split_url(url);
        httplib::Headers headers;
        if (const char* token = std::getenv(config_.auth_env.c_str()); token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);

        std::string last_error;
        const int max_attempts = config_.retries + 1;
        for (int attempt = 1; attempt <= max_attempts; ++attempt) {
            httplib::Client client(parts.origin);
            client.set_connection_timeout(10);
            client.set_read_timeout(config_.timeout_s);
            auto res = client.Post(parts.path, headers, body, "application/json");
            if (res && res->status >= 200 && res->status < 300) {
                try {
                    return { nlohmann::json::parse(res->body), attempt };
                } catch (const nlohmann::json::parse_error& e) {
                    throw BackendError(std::string("malformed JSON from backend: ") + e.what(), attempt);
                }
            }
            if (res) {
                last_error = "HTTP " + std::to_string(res->status);
                bool transient = res->status == 429 || res->status >= 500;
                if (!transient)
                    throw BackendError(last_error + ": " + res->body, attempt);
            } else {
                last_error = "transport error: " + httplib::to_string(res.error());
            }
            if (attempt < max_attempts && config_.backoff_ms > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms << (attempt - 1)));
        }
        throw BackendError(last_error + " after " + std::to_string(max_attempts) + " attempts", max_attempts);
    }
};

enum class MockMode {
    // Returns the fork function from the prompt unchanged.
    echo,
    // Replays the source change onto the fork function when it applies
    // cleanly, echoing otherwise.
    replay,
};

class MockBackend : public CompletionBackend {
public:
    explicit MockBackend(MockMode mode, PromptTemplate tpl = {})
        : mode_(mode)
        , tpl_(std::move(tpl))
    {
    }

    CompletionResponse complete(const CompletionRequest& request) override
    {
        auto parts = parse_port_prompt(request.prompt, tpl_);
        if (!parts)
            throw BackendError("mock backend cannot parse prompt", 1);
        std::string body = parts->ff;
        if (mode_ == MockMode::replay) {
            diffing::StatementDiff diff = diffing::line_diff(parts->fs, parts->fs_post);
            for (std::size_t context : { 3, 1, 0 }) {
                diffing::ApplyResult r = diffing::naive_apply(diff, parts->ff, context);
                if (r.ok()) {
                    body = *r.text;
                    break;
                }
            }
        }
        return CompletionResponse { body + "\n" + tpl_.end_sentinel + "\n", false, 1 };
    }

private:
    MockMode mode_;
    PromptTemplate tpl_;
};

} // namespace pporter
