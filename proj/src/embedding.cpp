#include "peacelens/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <optional>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "peacelens/errors.hpp"
#include "peacelens/hash.hpp"

namespace peacelens {

using nlohmann::json;

EmbeddingVector EmbeddingVector::from_raw(std::vector<double> components, std::string model_id) {
    if (components.empty()) throw EmbeddingError("embedding must have at least one component");
    for (double c : components)
        if (!std::isfinite(c)) throw EmbeddingError("embedding has a non-finite component");
    return {std::move(components), std::move(model_id), false};
}

EmbeddingVector EmbeddingVector::unit(std::vector<double> components, std::string model_id) {
    auto v = from_raw(std::move(components), std::move(model_id));
    const double norm = l2_norm(v.components);
    if (norm == 0.0) throw EmbeddingError("cannot normalise a zero vector");
    for (double& c : v.components) c /= norm;
    v.normalized = true;
    return v;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(std::span<const double> v) noexcept { return std::sqrt(dot(v, v)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionMismatchError(a.size(), b.size());
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) throw EmbeddingError("cosine similarity of a zero vector");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine_similarity(std::span<const double>(a.components), std::span<const double>(b.components));
}

namespace {

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

EmbeddingVector Embedder::embed(std::string_view text) const {
    if (is_blank(text)) throw Error("cannot embed empty text");
    std::string owned(text);
    auto out = embed_chunk(std::span<const std::string>(&owned, 1));
    if (out.size() != 1) throw EmbeddingError("embedder returned " + std::to_string(out.size()) + " vectors for 1 text");
    return std::move(out.front());
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts,
                                                   std::size_t concurrency_limit) const {
    if (texts.empty()) throw Error("embed_batch needs at least one text");
    concurrency_limit = std::max<std::size_t>(concurrency_limit, 1);

    const std::size_t n = texts.size();
    std::vector<std::optional<EmbeddingVector>> results(n);
    std::vector<std::string> errors(n);

    auto embed_one = [&](std::size_t i) {
        try {
            results[i] = embed(texts[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };

    // Chunks never include blank texts; those fail on their own.
    struct Chunk {
        std::vector<std::size_t> members;
    };
    std::vector<Chunk> chunks;
    const std::size_t per_chunk = std::max<std::size_t>(max_batch(), 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (is_blank(texts[i])) {
            errors[i] = "cannot embed empty text";
            continue;
        }
        if (chunks.empty() || chunks.back().members.size() >= per_chunk) chunks.emplace_back();
        chunks.back().members.push_back(i);
    }

    auto run_chunk = [&](const Chunk& chunk) {
        if (chunk.members.size() == 1) {
            embed_one(chunk.members.front());
            return;
        }
        std::vector<std::string> batch;
        batch.reserve(chunk.members.size());
        for (auto i : chunk.members) batch.push_back(texts[i]);
        try {
            auto vecs = embed_chunk(batch);
            if (vecs.size() != batch.size()) throw EmbeddingError("embedder returned wrong vector count");
            for (std::size_t j = 0; j < vecs.size(); ++j) results[chunk.members[j]] = std::move(vecs[j]);
        } catch (const std::exception& e) {
            spdlog::warn("embedding chunk of {} failed ({}); retrying items individually", batch.size(), e.what());
            for (auto i : chunk.members) embed_one(i);
        }
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c; (c = next.fetch_add(1)) < chunks.size();) run_chunk(chunks[c]);
    };
    const std::size_t workers = std::min(concurrency_limit, chunks.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    std::vector<std::size_t> failed;
    for (std::size_t i = 0; i < n; ++i)
        if (!results[i]) failed.push_back(i);
    if (!failed.empty()) throw BatchError(failed, errors[failed.front()]);

    std::vector<EmbeddingVector> out;
    out.reserve(n);
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

// ---------------------------------------------------------------------------

LocalEmbedder::LocalEmbedder(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed),
      model_id_("local-hash-d" + std::to_string(dim) + "-s" + std::to_string(seed)) {
    if (dim_ == 0) throw Error("local embedder dimension must be positive");
}

std::vector<double> LocalEmbedder::bucket_counts(std::string_view text) const {
    std::vector<double> v(dim_, 0.0);
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        const std::uint64_t h = murmur64a(token, seed_);
        v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else {
            token += (c < 0x80) ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
        }
    }
    flush();
    return v;
}

std::vector<EmbeddingVector> LocalEmbedder::embed_chunk(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto counts = bucket_counts(t);
        if (l2_norm(counts) == 0.0)
            throw EmbeddingError("local embedding cancelled to the zero vector");
        out.push_back(EmbeddingVector::unit(std::move(counts), model_id_));
    }
    return out;
}

// ---------------------------------------------------------------------------

RemoteEmbedder::RemoteEmbedder(ProviderConfig cfg, std::size_t dim, std::shared_ptr<HttpTransport> transport,
                               std::size_t char_budget)
    : cfg_(std::move(cfg)), dim_(dim), transport_(std::move(transport)), char_budget_(char_budget) {
    cfg_.validate();
    if (dim_ == 0) throw Error("remote embedder dimension must be positive");
    if (!transport_) throw Error("remote embedder needs a transport");
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_chunk(std::span<const std::string> texts) const {
    json input = json::array();
    for (const auto& t : texts) {
        auto head = utf8_prefix(t, char_budget_);
        if (head.size() < t.size())
            spdlog::warn("truncating text of {} bytes to the {}-byte budget", t.size(), head.size());
        input.push_back(std::string(head));
    }
    const json request = {{"model", cfg_.model_id}, {"input", input}};

    const auto res = post_json_with_retries(*transport_, cfg_, "/embeddings", request.dump(), "embeddings");
    if (!res.ok()) throw HttpError(res.status, excerpt(res.body));

    json body;
    try {
        body = json::parse(res.body);
    } catch (const json::parse_error&) {
        throw EmbeddingError("malformed embeddings response: " + excerpt(res.body));
    }
    const auto data = body.find("data");
    if (data == body.end() || !data->is_array() || data->size() != texts.size())
        throw EmbeddingError("embeddings response does not carry one item per input: " + excerpt(res.body));

    std::vector<std::optional<EmbeddingVector>> slots(texts.size());
    for (std::size_t pos = 0; pos < data->size(); ++pos) {
        const auto& item = (*data)[pos];
        std::size_t index = pos;
        if (item.contains("index")) {
            if (!item["index"].is_number_unsigned()) throw EmbeddingError("embedding index is not an unsigned integer");
            index = item["index"].get<std::size_t>();
        }
        if (index >= slots.size() || slots[index]) throw EmbeddingError("embedding index out of range or repeated");
        const auto emb = item.find("embedding");
        if (emb == item.end() || !emb->is_array()) throw EmbeddingError("embedding item has no 'embedding' array");
        if (emb->size() != dim_) throw DimensionMismatchError(dim_, emb->size());
        std::vector<double> comps;
        comps.reserve(dim_);
        for (const auto& x : *emb) {
            if (!x.is_number()) throw EmbeddingError("embedding component is not a number");
            comps.push_back(x.get<double>());
        }
        slots[index] = EmbeddingVector::unit(std::move(comps), cfg_.model_id);
    }

    std::vector<EmbeddingVector> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace peacelens
