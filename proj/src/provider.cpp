#include "peacelens/provider.hpp"

#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "peacelens/errors.hpp"

namespace peacelens {

void ProviderConfig::validate() const {
    if (base_url.empty()) throw Error("provider base_url must not be empty");
    if (model_id.empty()) throw Error("provider model_id must not be empty");
    if (max_batch < 1) throw Error("provider max_batch must be at least 1");
}

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post(const std::string& url, const std::string& body, const HttpHeaders& headers,
                      std::chrono::milliseconds timeout) override {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw Error("invalid URL '" + url + "'");
        const auto path_start = url.find('/', scheme_end + 3);
        const std::string origin = url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(origin);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);

        auto res = client.Post(path, h, body, "application/json");
        if (!res) return {0, "transport error: " + httplib::to_string(res.error())};
        return {res->status, res->body};
    }
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

bool is_retryable(const HttpResponse& response) noexcept {
    return response.status == 0 || response.status == 408 || response.status == 429 ||
           response.status >= 500;
}

std::chrono::milliseconds backoff_delay(std::chrono::milliseconds base, std::size_t attempt) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    std::uniform_real_distribution<double> jitter(0.5, 1.0);
    const double scaled = static_cast<double>(base.count()) *
                          static_cast<double>(std::uint64_t{1} << std::min<std::size_t>(attempt, 20)) *
                          jitter(rng);
    return std::chrono::milliseconds(static_cast<long long>(scaled));
}

HttpResponse post_json_with_retries(HttpTransport& transport, const ProviderConfig& cfg,
                                    const std::string& endpoint, const std::string& body,
                                    std::string_view purpose) {
    HttpHeaders headers = {{"Content-Type", "application/json"}};
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key)
        headers.emplace_back("Authorization", std::string("Bearer ") + key);

    const std::string url = cfg.base_url + endpoint;
    HttpResponse res;
    for (std::size_t attempt = 0;; ++attempt) {
        res = transport.post(url, body, headers, cfg.timeout);
        if (res.ok() || !is_retryable(res) || attempt >= cfg.max_retries) break;
        const auto delay = backoff_delay(cfg.backoff_base, attempt);
        spdlog::warn("{}: attempt {} failed with status {}, retrying in {} ms", purpose, attempt + 1,
                     res.status, delay.count());
        std::this_thread::sleep_for(delay);
    }
    return res;
}

std::string_view utf8_prefix(std::string_view text, std::size_t max_bytes) noexcept {
    if (text.size() <= max_bytes) return text;
    std::size_t end = max_bytes;
    // back off over continuation bytes so the cut lands on a sequence start
    while (end > 0 && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) --end;
    return text.substr(0, end);
}

std::string excerpt(std::string_view text, std::size_t max_bytes) {
    auto head = utf8_prefix(text, max_bytes);
    std::string out(head);
    if (head.size() < text.size()) out += "...";
    return out;
}

}  // namespace peacelens
