#include <doctest.h>

#include <cstdlib>
#include <random>

#include "peacelens/embedding.hpp"
#include "peacelens/errors.hpp"
#include "peacelens/hash.hpp"
#include "test_support.hpp"

using namespace peacelens;
using namespace peacelens::testing;

TEST_CASE("murmur64a matches reference values") {
    // frozen from an independent implementation of the reference C code
    CHECK(murmur64a("", 0) == 0x0ULL);
    CHECK(murmur64a("a", 0) == 0x071717d2d36b6b11ULL);
    CHECK(murmur64a("hello", 0) == 0x1e68d17c457bf117ULL);
    CHECK(murmur64a("hello, world!", 42) == 0x6faff9159b825a45ULL);
    CHECK(murmur64a("tolerance,", 7) == 0xe9fe87eef667fb9aULL);
    CHECK(murmur64a("intergroup", 42) == 0x1429d59d4ac065c0ULL);
}

TEST_CASE("local embedder follows the hashing definition") {
    LocalEmbedder e16(16, 7);
    // frozen: "help" -> bucket 1 (+1, twice), "support" -> bucket 0 (+1)
    std::vector<double> expected(16, 0.0);
    expected[0] = 1.0;
    expected[1] = 2.0;
    CHECK(e16.bucket_counts("Help help SUPPORT") == expected);

    const auto v = e16.embed("Help help SUPPORT");
    CHECK(v.normalized);
    CHECK(v.dim() == 16);
    CHECK(v.components[0] == doctest::Approx(1.0 / std::sqrt(5.0)));
    CHECK(v.components[1] == doctest::Approx(2.0 / std::sqrt(5.0)));
    CHECK(v.model_id == e16.model_id());
}

TEST_CASE("local embedder determinism and scaling collapse") {
    LocalEmbedder e(64, 7);
    CHECK(e.embed("peace and tolerance") == e.embed("peace and tolerance"));

    const auto once = e.bucket_counts("aa");
    const auto twice = e.bucket_counts("aa aa");
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == 2 * once[i]);
    CHECK(e.embed("aa aa") == e.embed("aa"));
}

TEST_CASE("local embedder is a bag of words") {
    LocalEmbedder e(128, 3);
    std::mt19937_64 rng(4);
    std::vector<std::string> words = {"tolerance", "respect", "kindness", "aggression", "hindrance", "or", "the"};
    for (int t = 0; t < 100; ++t) {
        std::vector<std::string> doc;
        for (int i = 0; i < 12; ++i) doc.push_back(words[rng() % words.size()]);
        auto join = [](const std::vector<std::string>& ws) {
            std::string s;
            for (const auto& w : ws) s += w + " ";
            return s;
        };
        const auto base = e.embed(join(doc));
        std::shuffle(doc.begin(), doc.end(), rng);
        CHECK(e.embed(join(doc)) == base);
    }
}

TEST_CASE("embedding edge cases") {
    LocalEmbedder e(32, 1);
    CHECK_THROWS_AS(e.embed(""), Error);
    CHECK_THROWS_AS(e.embed(" \n\t"), Error);
    // two tokens that land in the same bucket with opposite signs cancel
    std::string plus, minus;
    for (int i = 0; i < 100000 && (plus.empty() || minus.empty()); ++i) {
        const auto tok = "t" + std::to_string(i);
        const auto h = murmur64a(tok, 1);
        if (h % 32 != 5) continue;
        ((h >> 63) ? minus : plus) = tok;
    }
    REQUIRE_FALSE(plus.empty());
    REQUIRE_FALSE(minus.empty());
    CHECK_THROWS_AS(e.embed(plus + " " + minus), EmbeddingError);
    CHECK_THROWS_AS(LocalEmbedder(0, 1), Error);
    CHECK_THROWS_AS(EmbeddingVector::from_raw({1.0, NAN}), EmbeddingError);
    CHECK_THROWS_AS(EmbeddingVector::unit({0.0, 0.0}), EmbeddingError);
}

TEST_CASE("cosine_similarity") {
    auto v = [](std::vector<double> c) { return EmbeddingVector::from_raw(std::move(c)); };
    CHECK(cosine_similarity(v({1, 0}), v({0, 1})) == 0.0);
    CHECK(cosine_similarity(v({1, 0}), v({-1, 0})) == -1.0);
    CHECK(cosine_similarity(v({3, 4}), v({3, 4})) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(cosine_similarity(v({1, 0}), v({1, 0, 0})), DimensionMismatchError);
    CHECK_THROWS_AS(cosine_similarity(v({0, 0}), v({1, 0})), EmbeddingError);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    for (int t = 0; t < 1000; ++t) {
        auto a = random_vector(rng, 24);
        auto b = random_vector(rng, 24);
        const double ab = cosine_similarity(a, b);
        CHECK(std::abs(ab - cosine_similarity(b, a)) <= 1e-12);
        CHECK(ab >= -1.0);
        CHECK(ab <= 1.0);
        const double lambda = scale(rng);
        for (auto& x : a) x *= lambda;
        CHECK(std::abs(cosine_similarity(a, b) - ab) <= 1e-9);
    }
}

TEST_CASE("embed_batch with the local embedder") {
    LocalEmbedder e(48, 2);
    std::vector<std::string> texts;
    for (int i = 0; i < 200; ++i) texts.push_back("doc " + std::to_string(i) + " peace " + std::to_string(i % 7));
    for (std::size_t limit : {1u, 3u, 16u}) {
        const auto out = e.embed_batch(texts, limit);
        REQUIRE(out.size() == texts.size());
        for (std::size_t i = 0; i < texts.size(); ++i) CHECK(out[i] == e.embed(texts[i]));
    }
    const std::vector<std::string> one = {"single"};
    CHECK(e.embed_batch(one).front() == e.embed("single"));
    CHECK_THROWS_AS(e.embed_batch(std::vector<std::string>{}), Error);

    const std::vector<std::string> with_blank = {"a", " ", "c"};
    try {
        e.embed_batch(with_blank);
        FAIL("expected BatchError");
    } catch (const BatchError& err) {
        CHECK(err.failed_indices() == std::vector<std::size_t>{1});
    }
}

TEST_CASE("remote embedder speaks the embeddings wire contract") {
    auto stub = std::make_shared<StubTransport>(embeddings_handler(8));
    auto cfg = fast_provider("http://stub.invalid/v1");
    cfg.model_id = "test-model";
    cfg.api_key_env = "PEACELENS_TEST_KEY";
    ::setenv("PEACELENS_TEST_KEY", "sekret", 1);
    RemoteEmbedder remote(cfg, 8, stub);

    const auto v = remote.embed("tolerance respect");
    CHECK(v.dim() == 8);
    CHECK(v.normalized);
    CHECK(v.model_id == "test-model");
    // stub answers with local bucket counts, so the normalised result must agree
    CHECK(v.components == LocalEmbedder(8, 1).embed("tolerance respect").components);

    const auto reqs = stub->requests();
    REQUIRE(reqs.size() == 1);
    CHECK(reqs[0].url == "http://stub.invalid/v1/embeddings");
    CHECK(reqs[0].body["model"] == "test-model");
    CHECK(reqs[0].body["input"] == nlohmann::json::array({"tolerance respect"}));
    CHECK(std::find(reqs[0].headers.begin(), reqs[0].headers.end(),
                    std::pair<std::string, std::string>{"Authorization", "Bearer sekret"}) != reqs[0].headers.end());
    ::unsetenv("PEACELENS_TEST_KEY");
}

TEST_CASE("remote embedder returns a 1536-dimensional vector") {
    auto stub = std::make_shared<StubTransport>(embeddings_handler(1536));
    RemoteEmbedder remote(fast_provider(), 1536, stub);
    CHECK(remote.embed("article text").dim() == 1536);
}

TEST_CASE("remote embedder errors") {
    SUBCASE("dimension mismatch") {
        auto stub = std::make_shared<StubTransport>(embeddings_handler(16));
        RemoteEmbedder remote(fast_provider(), 32, stub);
        CHECK_THROWS_AS(remote.embed("x"), DimensionMismatchError);
    }
    SUBCASE("non-2xx after retries carries status and body") {
        auto stub = std::make_shared<StubTransport>([](const auto&) { return HttpResponse{503, "overloaded"}; });
        auto cfg = fast_provider();
        cfg.max_retries = 2;
        RemoteEmbedder remote(cfg, 8, stub);
        try {
            remote.embed("x");
            FAIL("expected HttpError");
        } catch (const HttpError& e) {
            CHECK(e.status() == 503);
            CHECK(e.body_excerpt() == "overloaded");
        }
        CHECK(stub->calls() == 3);
    }
    SUBCASE("4xx is not retried") {
        auto stub = std::make_shared<StubTransport>([](const auto&) { return HttpResponse{401, "bad key"}; });
        RemoteEmbedder remote(fast_provider(), 8, stub);
        CHECK_THROWS_AS(remote.embed("x"), HttpError);
        CHECK(stub->calls() == 1);
    }
    SUBCASE("transient failure then success") {
        std::atomic<int> n{0};
        auto ok = embeddings_handler(8);
        auto stub = std::make_shared<StubTransport>([&](const auto& req) {
            return n++ < 2 ? HttpResponse{429, "slow down"} : ok(req);
        });
        RemoteEmbedder remote(fast_provider(), 8, stub);
        CHECK(remote.embed("x").dim() == 8);
        CHECK(stub->calls() == 3);
    }
    SUBCASE("malformed body") {
        auto stub = std::make_shared<StubTransport>([](const auto&) { return HttpResponse{200, "{\"nope\":1}"}; });
        RemoteEmbedder remote(fast_provider(), 8, stub);
        CHECK_THROWS_AS(remote.embed("x"), EmbeddingError);
    }
    SUBCASE("out-of-order indices are reassembled") {
        auto stub = std::make_shared<StubTransport>([](const StubTransport::Request& req) {
            nlohmann::json data = nlohmann::json::array();
            const auto n = req.body["input"].size();
            for (std::size_t i = n; i-- > 0;) {
                std::vector<double> v(4, 0.0);
                v[i % 4] = 1.0;
                data.push_back({{"index", i}, {"embedding", v}});
            }
            return HttpResponse{200, nlohmann::json{{"data", data}}.dump()};
        });
        auto cfg = fast_provider();
        cfg.max_batch = 4;
        RemoteEmbedder remote(cfg, 4, stub);
        const std::vector<std::string> texts = {"a", "b", "c", "d"};
        const auto out = remote.embed_batch(texts, 1);
        for (std::size_t i = 0; i < 4; ++i) CHECK(out[i].components[i] == 1.0);
    }
}

TEST_CASE("remote embedder truncates to the character budget") {
    auto stub = std::make_shared<StubTransport>(embeddings_handler(8));
    RemoteEmbedder remote(fast_provider(), 8, stub, 10);
    remote.embed("abcdefghijklmnop");
    CHECK(stub->requests()[0].body["input"][0] == "abcdefghij");
    // never splits a multi-byte sequence
    remote.embed("aaaaaaaaa\xc3\xa9zz");
    CHECK(stub->requests()[1].body["input"][0] == "aaaaaaaaa");
}

TEST_CASE("embed_batch failure attribution and concurrency bound") {
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) texts.push_back(i == 4 ? "item POISON" : "item " + std::to_string(i));

    for (std::size_t max_batch : {1u, 3u, 10u}) {
        auto stub = std::make_shared<StubTransport>(embeddings_handler(16, "POISON"));
        auto cfg = fast_provider();
        cfg.max_batch = max_batch;
        cfg.max_retries = 1;
        RemoteEmbedder remote(cfg, 16, stub);
        try {
            remote.embed_batch(texts, 4);
            FAIL("expected BatchError");
        } catch (const BatchError& e) {
            CHECK(e.failed_indices() == std::vector<std::size_t>{4});
        }
    }

    std::vector<std::string> many(40, "peace");
    for (std::size_t i = 0; i < many.size(); ++i) many[i] += std::to_string(i);
    auto stub = std::make_shared<StubTransport>(embeddings_handler(8), std::chrono::milliseconds(5));
    auto cfg = fast_provider();
    cfg.max_batch = 2;
    RemoteEmbedder remote(cfg, 8, stub);
    const auto out = remote.embed_batch(many, 3);
    CHECK(out.size() == 40);
    CHECK(stub->calls() == 20);
    CHECK(stub->peak_in_flight() <= 3);
    CHECK(stub->peak_in_flight() >= 2);
    LocalEmbedder local(8, 1);
    for (std::size_t i = 0; i < many.size(); ++i) CHECK(out[i].components == local.embed(many[i]).components);
}

TEST_CASE("backoff delay grows exponentially within jitter bounds") {
    using std::chrono::milliseconds;
    for (std::size_t attempt = 0; attempt < 5; ++attempt) {
        const auto d = backoff_delay(milliseconds(500), attempt);
        const long long nominal = 500LL << attempt;
        CHECK(d.count() >= nominal / 2);
        CHECK(d.count() <= nominal);
    }
}
