#include <doctest.h>

#include <thread>

#include <httplib.h>

#include "peacelens/embedding.hpp"
#include "peacelens/rag.hpp"
#include "test_support.hpp"

using namespace peacelens;
using namespace peacelens::testing;

namespace {

// A local OpenAI-compatible server on an ephemeral port.
class LoopbackServer {
public:
    LoopbackServer() {
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            auth_ = req.get_header_value("Authorization");
            const auto body = nlohmann::json::parse(req.body);
            nlohmann::json data = nlohmann::json::array();
            LocalEmbedder local(12, 1);
            std::size_t i = 0;
            for (const auto& t : body["input"])
                data.push_back({{"index", i++}, {"embedding", local.bucket_counts(t.get<std::string>())}});
            res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
        });
        server_.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            const auto prompt = body["messages"][0]["content"].get<std::string>();
            res.set_content(chat_reply("echo:" + std::to_string(prompt.size())).body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LoopbackServer() {
        server_.stop();
        thread_.join();
    }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    std::string auth() const { return auth_; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::string auth_;
};

}  // namespace

TEST_CASE("embeddings over real HTTP") {
    LoopbackServer server;
    auto cfg = fast_provider(server.base_url());
    cfg.api_key_env = "PEACELENS_LOOPBACK_KEY";
    ::setenv("PEACELENS_LOOPBACK_KEY", "k-123", 1);
    RemoteEmbedder remote(cfg, 12);
    const std::vector<std::string> texts = {"intergroup tolerance and respect", "political aggression", "help"};
    const auto out = remote.embed_batch(texts, 2);
    REQUIRE(out.size() == 3);
    LocalEmbedder local(12, 1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(out[i].components == local.embed(texts[i]).components);
    CHECK(server.auth() == "Bearer k-123");
    ::unsetenv("PEACELENS_LOOPBACK_KEY");
}

TEST_CASE("chat completion over real HTTP") {
    LoopbackServer server;
    RagConfig cfg;
    auto llm = fast_provider(server.base_url());
    llm.model_id = "chat-model";
    cfg.llm = llm;
    const auto g = generate("hello", {}, cfg);
    CHECK(g.generator == Generator::Llm);
    CHECK(g.text == "echo:5");
}

TEST_CASE("unreachable endpoint surfaces as status 0") {
    auto transport = make_http_transport();
    // port 9 (discard) on loopback is closed in the sandbox
    const auto res = transport->post("http://127.0.0.1:9/v1/embeddings", "{}", {}, std::chrono::milliseconds(300));
    CHECK(res.status == 0);
    CHECK_FALSE(res.ok());
    CHECK(is_retryable(res));
}
