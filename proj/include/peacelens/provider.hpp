#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace peacelens {

// Connection settings for an OpenAI-compatible HTTP provider. Used for both
// the embedding endpoint and the chat-completions endpoint.
struct ProviderConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model_id = "text-embedding-3-small";
    std::string api_key_env = "EMBEDDING_API_KEY";
    std::size_t max_batch = 64;
    std::size_t max_retries = 3;
    std::chrono::milliseconds timeout{30000};
    std::chrono::milliseconds backoff_base{500};

    void validate() const;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
    int status = 0;  // 0 when the request never produced a response
    std::string body;

    bool ok() const noexcept { return status >= 200 && status < 300; }
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& url, const std::string& body,
                              const HttpHeaders& headers, std::chrono::milliseconds timeout) = 0;
};

// cpp-httplib backed transport; handles http:// and https:// URLs.
std::shared_ptr<HttpTransport> make_http_transport();

// Transport failures, 408, 429 and 5xx are retried; other statuses are final.
bool is_retryable(const HttpResponse& response) noexcept;

// Delay before retry number `attempt` (0-based): base * 2^attempt scaled by a
// jitter factor in [0.5, 1.0).
std::chrono::milliseconds backoff_delay(std::chrono::milliseconds base, std::size_t attempt);

// Posts JSON with Bearer auth from cfg.api_key_env (omitted when unset) and
// retries up to cfg.max_retries times. Returns the last response either way.
HttpResponse post_json_with_retries(HttpTransport& transport, const ProviderConfig& cfg,
                                    const std::string& endpoint, const std::string& body,
                                    std::string_view purpose);

std::string excerpt(std::string_view text, std::size_t max_bytes = 200);

// Longest prefix of at most max_bytes that does not split a UTF-8 sequence.
std::string_view utf8_prefix(std::string_view text, std::size_t max_bytes) noexcept;

}  // namespace peacelens
